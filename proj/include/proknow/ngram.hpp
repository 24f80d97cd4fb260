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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/text.hpp"

namespace proknow {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";

// splitmix64; fixed arithmetic so sampled candidates are identical on every
// platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double gumbel() { return -std::log(-std::log(uniform())); }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt, std::uint64_t counter) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : salt) h = (h ^ c) * 0x100000001b3ull;
  SplitMix64 g(seed ^ h ^ (counter * 0xD1B54A32D192ED03ull));
  return g.next();
}

struct ScoredText {
  std::string text;
  double logprob = 0.0;
};

// Word n-gram model with add-one smoothing over the full vocabulary.
class NgramLM {
 public:
  static constexpr int kMinOrder = 2;
  static constexpr int kMaxOrder = 4;

  NgramLM(int order, std::uint64_t seed) : order_(order), seed_(seed) {
    if (order < kMinOrder || order > kMaxOrder) throw DomainError("unsupported order " + std::to_string(order));
    vocabulary_.insert(std::string(kSentenceEnd));
  }

  int order() const { return order_; }
  std::uint64_t seed() const { return seed_; }
  // Predictable words: every training token plus the end marker.
  const std::set<std::string>& vocabulary() const { return vocabulary_; }

  void add_sentence(std::span<const std::string> tokens) {
    Tokens padded(static_cast<std::size_t>(order_ - 1), std::string(kSentenceStart));
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.emplace_back(kSentenceEnd);
    for (const auto& t : tokens) vocabulary_.insert(t);
    for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
      const std::string ctx = context_key(std::span<const std::string>(padded).subspan(i - (order_ - 1), order_ - 1));
      auto& row = counts_[ctx];
      ++row.words[padded[i]];
      ++row.total;
    }
    ++sentences_;
  }

  std::size_t sentence_count() const { return sentences_; }

  // P(word | context) where context holds the previous order-1 tokens.
  double prob(std::span<const std::string> context, const std::string& word) const {
    const double v = static_cast<double>(vocabulary_.size());
    if (!vocabulary_.contains(word)) return 0.0;
    auto it = counts_.find(context_key(context));
    if (it == counts_.end()) return 1.0 / v;
    auto w = it->second.words.find(word);
    const double c = w == it->second.words.end() ? 0.0 : static_cast<double>(w->second);
    return (c + 1.0) / (static_cast<double>(it->second.total) + v);
  }

  // Total log-probability of a sentence including the end marker.
  double logprob(std::span<const std::string> tokens) const {
    Tokens padded(static_cast<std::size_t>(order_ - 1), std::string(kSentenceStart));
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.emplace_back(kSentenceEnd);
    double total = 0.0;
    for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
      const double p = prob(std::span<const std::string>(padded).subspan(i - (order_ - 1), order_ - 1), padded[i]);
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      total += std::log(p);
    }
    return total;
  }

  std::vector<Tokens> observed_contexts() const {
    std::vector<Tokens> out;
    for (const auto& [key, row] : counts_) out.push_back(split_key(key));
    return out;
  }

  // Up to `width` distinct sentences sampled without replacement (stochastic
  // beam search with Gumbel-top-k perturbations), expanding only continuations
  // seen in training. Sorted by log-probability, then text.
  std::vector<ScoredText> sample(std::size_t width, std::uint64_t seed, std::size_t max_tokens = 24) const {
    if (width == 0) throw DomainError("sample: width must be >= 1");
    SplitMix64 rng(seed);
    struct Node {
      Tokens tokens;  // includes start padding
      double logp = 0.0;
      double perturbed = 0.0;
      bool finished = false;
    };
    std::vector<Node> beam{Node{Tokens(static_cast<std::size_t>(order_ - 1), std::string(kSentenceStart)), 0.0, 0.0, false}};

    for (std::size_t step = 0; step <= max_tokens; ++step) {
      std::vector<Node> expansions;
      bool any_open = false;
      for (const auto& node : beam) {
        if (node.finished) {
          expansions.push_back(node);
          continue;
        }
        const std::span<const std::string> ctx =
            std::span<const std::string>(node.tokens).last(static_cast<std::size_t>(order_ - 1));
        auto it = counts_.find(context_key(ctx));
        if (it == counts_.end()) continue;
        any_open = true;
        std::vector<Node> children;
        double z = -std::numeric_limits<double>::infinity();
        for (const auto& [word, count] : it->second.words) {
          Node child{node.tokens, node.logp + std::log(prob(ctx, word)), 0.0, word == kSentenceEnd};
          child.tokens.push_back(word);
          if (step == max_tokens && !child.finished) continue;
          child.perturbed = child.logp + rng.gumbel();
          z = std::max(z, child.perturbed);
          children.push_back(std::move(child));
        }
        for (auto& child : children) {
          child.perturbed = truncated_gumbel(node.perturbed, z, child.perturbed);
          expansions.push_back(std::move(child));
        }
      }
      if (!any_open) break;
      std::sort(expansions.begin(), expansions.end(), [](const Node& a, const Node& b) {
        if (a.perturbed != b.perturbed) return a.perturbed > b.perturbed;
        return a.tokens < b.tokens;
      });
      if (expansions.size() > width) expansions.resize(width);
      beam = std::move(expansions);
    }

    std::vector<ScoredText> out;
    std::set<std::string> seen;
    for (const auto& node : beam) {
      if (!node.finished) continue;
      const auto first = node.tokens.begin() + (order_ - 1);
      const auto last = node.tokens.end() - 1;  // drop </s>
      if (first >= last) continue;
      std::string text = join(std::span<const std::string>(&*first, static_cast<std::size_t>(last - first)));
      if (seen.insert(text).second) out.push_back({std::move(text), node.logp});
    }
    std::sort(out.begin(), out.end(), [](const ScoredText& a, const ScoredText& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      return a.text < b.text;
    });
    return out;
  }

 private:
  struct Row {
    std::map<std::string, std::size_t> words;
    std::size_t total = 0;
  };

  static std::string context_key(std::span<const std::string> ctx) { return join(ctx, "\x1f"); }

  static Tokens split_key(const std::string& key) {
    Tokens out;
    std::string cur;
    for (char c : key) {
      if (c == '\x1f') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }

  // Conditions a child's perturbed score on its siblings' maximum `z` not
  // exceeding the parent's perturbed score `bound`.
  static double truncated_gumbel(double bound, double z, double sampled) {
    const double v = bound - sampled + std::log1p(-std::exp(std::min(sampled - z, -1e-300)));
    return bound - std::max(0.0, v) - std::log1p(std::exp(-std::abs(v)));
  }

  int order_;
  std::uint64_t seed_;
  std::set<std::string> vocabulary_;
  std::map<std::string, Row> counts_;
  std::size_t sentences_ = 0;
};

// Counts every elaboration plus each item's end sentinel.
inline NgramLM train_ngram_lm(const Dataset& dataset, int order, std::uint64_t seed) {
  NgramLM lm(order, seed);
  for (const auto& item : dataset.items) {
    for (const auto& e : item.elaborations) {
      const Tokens t = tokenize(e.text);
      if (!t.empty()) lm.add_sentence(t);
    }
    const Tokens s = tokenize(item.end_sentinel);
    if (!s.empty()) lm.add_sentence(s);
  }
  if (lm.sentence_count() == 0) throw DomainError("train_ngram_lm: empty corpus");
  return lm;
}

}  // namespace proknow
