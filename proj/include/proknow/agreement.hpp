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
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "proknow/error.hpp"

namespace proknow {

// Cohen's kappa for two annotators over the same items.
template <typename Label>
double cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw DomainError("cohen_kappa: length mismatch");
  if (a.empty()) throw DomainError("cohen_kappa: empty label sequences");
  const double n = static_cast<double>(a.size());
  std::map<Label, double> freq_a, freq_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    freq_a[a[i]] += 1.0;
    freq_b[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : freq_a) {
    auto it = freq_b.find(label);
    if (it != freq_b.end()) p_e += (count / n) * (it->second / n);
  }
  if (std::abs(1.0 - p_e) < 1e-12) throw DomainError("cohen_kappa: undefined, chance agreement is 1");
  return (p_o - p_e) / (1.0 - p_e);
}

template <typename Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

enum class AlphaLevel { kNominal, kOrdinal };

// Rows are raters, columns are units; nullopt marks a missing rating.
using RatingTable = std::vector<std::vector<std::optional<double>>>;

// Krippendorff's alpha via the coincidence matrix.
inline double krippendorff_alpha(const RatingTable& ratings, AlphaLevel level = AlphaLevel::kOrdinal) {
  if (ratings.size() < 2) throw DomainError("krippendorff_alpha: need at least two raters");
  std::size_t units = 0;
  for (const auto& row : ratings) units = std::max(units, row.size());

  // Distinct values, ordered.
  std::map<double, std::size_t> index;
  for (const auto& row : ratings)
    for (const auto& v : row)
      if (v) index.emplace(*v, 0);
  std::size_t k = 0;
  for (auto& [value, i] : index) i = k++;

  std::vector<std::vector<double>> coincidence(k, std::vector<double>(k, 0.0));
  for (std::size_t u = 0; u < units; ++u) {
    std::vector<std::size_t> values;
    for (const auto& row : ratings)
      if (u < row.size() && row[u]) values.push_back(index.at(*row[u]));
    const std::size_t m = values.size();
    if (m < 2) continue;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) coincidence[values[i]][values[j]] += 1.0 / static_cast<double>(m - 1);
  }

  std::vector<double> marginal(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) marginal[c] += coincidence[c][d];
  for (double m : marginal) n += m;
  if (n < 2.0) throw DomainError("krippendorff_alpha: no pairable values");

  auto delta = [&](std::size_t c, std::size_t d) -> double {
    if (c == d) return 0.0;
    if (level == AlphaLevel::kNominal) return 1.0;
    const std::size_t lo = std::min(c, d), hi = std::max(c, d);
    double sum = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) sum += marginal[g];
    sum -= 0.5 * (marginal[lo] + marginal[hi]);
    return sum * sum;
  };

  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < k; ++d) {
      const double dl = delta(c, d);
      observed += coincidence[c][d] * dl;
      expected += marginal[c] * marginal[d] * dl;
    }
  if (expected <= 0.0) throw DomainError("krippendorff_alpha: undefined, expected disagreement is 0");
  return 1.0 - (n - 1.0) * observed / expected;
}

}  // namespace proknow
