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

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "proknow/bundled_lists.hpp"

namespace proknow {

using Tokens = std::vector<std::string>;
using WordSet = std::unordered_set<std::string>;

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

inline WordSet parse_word_list(std::string_view text) {
  WordSet words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string word = line.substr(first, last - first + 1);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(word));
  }
  return words;
}

}  // namespace detail

// Lowercase, trim, collapse internal whitespace. No stemming.
inline std::string normalize_phrase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Lowercases, strips punctuation (keeping hyphens and apostrophes that sit
// between two word characters) and splits on whitespace.
inline Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_word_byte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if ((c == '-' || c == '\'') && !current.empty() && i + 1 < text.size() &&
               detail::is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      current.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

inline std::string join(std::span<const std::string> tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = (x == b[j - 1]) ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = above;
    }
  }
  return row[b.size()];
}

// LCS length over the longer sequence's length; 0 when either side is empty.
inline double lcs_ratio(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0.0;
  return static_cast<double>(lcs_length(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

// True when `needle` occurs as a contiguous run inside `haystack`.
inline bool contains_run(std::span<const std::string> haystack, std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

inline const WordSet& default_stopwords() {
  static const WordSet words = detail::parse_word_list(bundled::kStopwords);
  return words;
}

inline const WordSet& default_verbs() {
  static const WordSet words = detail::parse_word_list(bundled::kVerbs);
  return words;
}

struct ConceptSpan {
  Tokens tokens;
  std::size_t start = 0;

  std::size_t length() const { return tokens.size(); }
  std::string text() const { return join(tokens); }
};

inline constexpr std::size_t kMaxSpanLength = 3;

inline bool is_boundary_clean(std::span<const std::string> span, const WordSet& stopwords) {
  return !span.empty() && !stopwords.contains(span.front()) && !stopwords.contains(span.back());
}

// Contiguous spans of 1..3 tokens whose first and last tokens are not
// stopwords. Emitted unigrams first, then bigrams, then trigrams, each in
// positional order; later duplicates of an already emitted text are dropped.
inline std::vector<ConceptSpan> concept_spans(std::span<const std::string> tokens,
                                              const WordSet& stopwords = default_stopwords()) {
  std::vector<ConceptSpan> spans;
  std::unordered_set<std::string> seen;
  for (std::size_t len = 1; len <= kMaxSpanLength; ++len) {
    for (std::size_t start = 0; start + len <= tokens.size(); ++start) {
      auto window = tokens.subspan(start, len);
      if (!is_boundary_clean(window, stopwords)) continue;
      ConceptSpan span{Tokens(window.begin(), window.end()), start};
      if (seen.insert(span.text()).second) spans.push_back(std::move(span));
    }
  }
  return spans;
}

struct TokenRange {
  std::size_t start = 0;
  Tokens tokens;

  std::size_t end() const { return start + tokens.size(); }
  std::string text() const { return join(tokens); }
};

// Subject-predicate-object reading of a question; absent parts are nullopt.
struct Triple {
  std::optional<TokenRange> subject;
  std::optional<TokenRange> predicate;
  std::optional<TokenRange> object;

  std::size_t present_count() const {
    return static_cast<std::size_t>(subject.has_value()) + predicate.has_value() + object.has_value();
  }
};

inline bool is_second_person(std::string_view token) {
  return token == "you" || token == "your" || token == "yours" || token == "yourself";
}

inline Triple extract_triple(std::span<const std::string> tokens,
                             const WordSet& stopwords = default_stopwords(),
                             const WordSet& verbs = default_verbs()) {
  Triple triple;
  auto content = [&](std::size_t i) { return !stopwords.contains(tokens[i]); };
  if (std::none_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return !stopwords.contains(t); }))
    return triple;

  auto single = [&](std::size_t i) { return TokenRange{i, Tokens{tokens[i]}}; };

  std::optional<std::size_t> subject;
  for (std::size_t i = 0; i < tokens.size() && !subject; ++i)
    if (is_second_person(tokens[i])) subject = i;
  for (std::size_t i = 0; i < tokens.size() && !subject; ++i)
    if (content(i)) subject = i;
  triple.subject = single(*subject);

  std::optional<std::size_t> predicate;
  for (std::size_t i = *subject + 1; i < tokens.size() && !predicate; ++i)
    if (verbs.contains(tokens[i])) predicate = i;
  for (std::size_t i = *subject + 1; i < tokens.size() && !predicate; ++i)
    if (content(i)) predicate = i;
  if (!predicate) return triple;
  triple.predicate = single(*predicate);

  // Object: the remainder after the predicate, trimmed of boundary stopwords.
  std::size_t first = *predicate + 1;
  std::size_t last = tokens.size();
  while (first < last && !content(first)) ++first;
  while (last > first && !content(last - 1)) --last;
  if (first < last) triple.object = TokenRange{first, Tokens(tokens.begin() + first, tokens.begin() + last)};
  return triple;
}

}  // namespace proknow
