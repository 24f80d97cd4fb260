// Copyright 2026 The proknow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proknow/error.hpp"
#include "proknow/text.hpp"

namespace proknow {

using Vector = std::vector<double>;

// Token -> embedding, all of one dimension.
class VectorTable {
 public:
  explicit VectorTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw DataError("vector table dimension must be positive");
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  void insert(std::string token, Vector v) {
    if (v.size() != dimension_)
      throw DataError("vector for '" + token + "' has dimension " + std::to_string(v.size()) + ", expected " +
                      std::to_string(dimension_));
    entries_.insert_or_assign(std::move(token), std::move(v));
  }

  const Vector* find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, Vector>& entries() const { return entries_; }

 private:
  std::size_t dimension_;
  std::map<std::string, Vector> entries_;
};

// Text format: first line "count dimension", then "token v1 ... vd" rows.
inline VectorTable parse_vectors(std::istream& in, std::string_view origin = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos)
    throw DataError(std::string(origin) + ": empty vector file");

  std::istringstream header(line);
  long long count = -1, dimension = -1;
  if (!(header >> count >> dimension) || count < 0 || dimension <= 0) fail("bad header, expected 'count dimension'");
  VectorTable table(static_cast<std::size_t>(dimension));

  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) continue;
    Vector v;
    std::string field;
    while (row >> field) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(field, &used));
        if (used != field.size()) fail("non-numeric component '" + field + "'");
      } catch (const std::logic_error&) {
        fail("non-numeric component '" + field + "'");
      }
    }
    if (v.size() != table.dimension())
      fail("dimension mismatch for '" + token + "': " + std::to_string(v.size()) + " != " +
           std::to_string(table.dimension()));
    table.insert(normalize_phrase(token), std::move(v));
    ++rows;
  }
  if (rows == 0) throw DataError(std::string(origin) + ": vector file has no rows");
  if (rows != static_cast<std::size_t>(count))
    throw DataError(std::string(origin) + ": header declares " + std::to_string(count) + " rows, found " +
                    std::to_string(rows));
  return table;
}

inline VectorTable load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vector file " + path.string());
  return parse_vectors(in, path.string());
}

inline double norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

// Standard cosine; 0 when either vector is all-zero.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DataError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  const double denom = norm(u) * norm(v);
  if (denom == 0.0) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

// Mean of in-vocabulary token vectors; zero vector when nothing is known.
inline Vector embed(std::span<const std::string> tokens, const VectorTable& table) {
  Vector sum(table.dimension(), 0.0);
  std::size_t known = 0;
  for (const auto& token : tokens) {
    if (const Vector* v = table.find(token)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
      ++known;
    }
  }
  if (known > 0)
    for (double& x : sum) x /= static_cast<double>(known);
  return sum;
}

inline Vector embed(std::string_view text, const VectorTable& table) {
  const Tokens tokens = tokenize(text);
  return embed(std::span<const std::string>(tokens), table);
}

// 1 - cosine, with identical tokens at distance 0 and unknown tokens treated
// as the zero vector (distance 1 to anything).
inline double token_distance(const std::string& a, const std::string& b, const VectorTable& table) {
  if (a == b) return 0.0;
  const Vector* u = table.find(a);
  const Vector* v = table.find(b);
  if (!u || !v) return 1.0;
  return 1.0 - cosine(*u, *v);
}

// Symmetric relaxed word mover's distance: each token moves all of its mass
// to its nearest counterpart; the two directions are averaged.
inline double relaxed_wmd(std::span<const std::string> a, std::span<const std::string> b,
                          const VectorTable& table) {
  if (a.empty() || b.empty()) throw DomainError("relaxed_wmd: empty token list");
  auto directed = [&](std::span<const std::string> from, std::span<const std::string> to) {
    double total = 0.0;
    for (const auto& x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : to) best = std::min(best, token_distance(x, y, table));
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

}  // namespace proknow
