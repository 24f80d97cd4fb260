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
#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/text.hpp"
#include "proknow/vectors.hpp"

namespace proknow {

// The four additive score components, numbered as in the selection rule.
enum class Point : int { kLanguageModel = 1, kTagRank = 2, kKnowledge = 3, kSafety = 4 };

class PointSet {
 public:
  constexpr PointSet() = default;
  constexpr PointSet(std::initializer_list<Point> points) {
    for (Point p : points) insert(p);
  }
  static constexpr PointSet all() { return {Point::kLanguageModel, Point::kTagRank, Point::kKnowledge, Point::kSafety}; }

  constexpr void insert(Point p) { bits_ |= bit(p); }
  constexpr void erase(Point p) { bits_ &= ~bit(p); }
  constexpr bool contains(Point p) const { return bits_ & bit(p); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr friend bool operator==(PointSet, PointSet) = default;

  std::vector<int> numbers() const {
    std::vector<int> out;
    for (int i = 1; i <= 4; ++i)
      if (contains(static_cast<Point>(i))) out.push_back(i);
    return out;
  }

  // Ablation label over the heuristic points (2-4): "none", "P2", "P2+P3", ...
  std::string heuristic_label() const {
    std::string out;
    for (int i = 2; i <= 4; ++i)
      if (contains(static_cast<Point>(i))) out += (out.empty() ? "P" : "+P") + std::to_string(i);
    return out.empty() ? "none" : out;
  }

 private:
  static constexpr unsigned bit(Point p) { return 1u << static_cast<int>(p); }
  unsigned bits_ = 0;
};

struct Weights {
  double lm = 1.0;
  double tr = 1.0;
  double kb = 1.0;
  double safety = 1.0;
};

// Whether lexicon matches mark a span as safe (default) or as unsafe.
enum class SafetyPolarity { kSafeLexicon, kUnsafeLexicon };

struct ScoreConfig {
  Weights weights;
  std::optional<double> threshold;  // defaults to half the enabled weight mass
  double tau_match = 0.8;
  double tau_kb = 0.3;
  PointSet points = PointSet::all();
  SafetyPolarity polarity = SafetyPolarity::kSafeLexicon;

  double weight(Point p) const {
    if (!points.contains(p)) return 0.0;
    switch (p) {
      case Point::kLanguageModel: return weights.lm;
      case Point::kTagRank: return weights.tr;
      case Point::kKnowledge: return weights.kb;
      case Point::kSafety: return weights.safety;
    }
    return 0.0;
  }

  double enabled_weight() const {
    return weight(Point::kLanguageModel) + weight(Point::kTagRank) + weight(Point::kKnowledge) + weight(Point::kSafety);
  }

  double effective_threshold() const { return threshold.value_or(0.5 * enabled_weight()); }

  void validate() const {
    if (points.empty()) throw ConfigError("score config: at least one point must be enabled");
    for (double w : {weights.lm, weights.tr, weights.kb, weights.safety})
      if (!(w >= 0.0)) throw ConfigError("score config: weights must be >= 0");
    if (tau_match < 0.0 || tau_match > 1.0) throw ConfigError("score config: tau_match must lie in [0,1]");
  }
};

struct Breakdown {
  double lm = 0.0;
  double tr = 0.0;
  double kb = 0.0;
  double safety = 0.0;
};

struct Candidate {
  std::string text;
  double lm_logprob = 0.0;
  std::optional<std::string> tag;
  std::optional<int> rank;
  double confidence = 0.0;
  bool sentinel = false;
  Breakdown breakdown;
  double total = 0.0;
};

// Position in an item's question sequence.
struct ProcessState {
  const ProKnowTriple* item = nullptr;
  std::optional<QuestionRecord> last_question;
  std::optional<std::string> last_answer;
  int expected_next_rank = 1;
  std::vector<QuestionRecord> history;

  explicit ProcessState(const ProKnowTriple& triple) : item(&triple) {}

  int max_rank() const { return item->max_rank(); }
  bool expects_sentinel() const { return expected_next_rank > max_rank(); }

  bool asked(std::string_view text) const {
    const std::string norm = normalize_phrase(text);
    return std::any_of(history.begin(), history.end(), [&](const QuestionRecord& q) { return normalize_phrase(q.text) == norm; });
  }

  void advance(QuestionRecord emitted) {
    expected_next_rank = emitted.rank + 1;
    history.push_back(emitted);
    last_question = std::move(emitted);
  }
};

// ---------------------------------------------------------------------------
// Lexicon matching shared by the safety heuristic and the AUM metric.

// A span matches a phrase exactly, partially (token LCS ratio >= tau), or by
// lying inside the phrase as a contiguous run.
inline bool span_matches(std::span<const std::string> span, const SafetyLexicon& lexicon, double tau_match) {
  for (const auto& phrase : lexicon.phrases()) {
    if (std::equal(span.begin(), span.end(), phrase.tokens.begin(), phrase.tokens.end())) return true;
    if (lcs_ratio(span, phrase.tokens) >= tau_match) return true;
    if (contains_run(phrase.tokens, span)) return true;
  }
  return false;
}

struct SpanMatchCounts {
  std::size_t spans = 0;
  std::size_t matched = 0;
};

inline SpanMatchCounts count_span_matches(std::string_view text, const SafetyLexicon& lexicon, double tau_match) {
  const Tokens tokens = tokenize(text);
  SpanMatchCounts counts;
  for (const auto& span : concept_spans(tokens)) {
    ++counts.spans;
    if (span_matches(span.tokens, lexicon, tau_match)) ++counts.matched;
  }
  return counts;
}

inline std::vector<std::string> unmatched_spans(std::string_view text, const SafetyLexicon& lexicon, double tau_match) {
  std::vector<std::string> out;
  const Tokens tokens = tokenize(text);
  for (const auto& span : concept_spans(tokens))
    if (!span_matches(span.tokens, lexicon, tau_match)) out.push_back(span.text());
  return out;
}

// ---------------------------------------------------------------------------
// Tag and rank classification

struct TagPattern {
  std::string tag;
  std::vector<std::string> phrases;
};

// Checked in order; the first tag with a phrase present wins. Yes/No is the
// fallback for questions opening with an auxiliary verb.
inline const std::vector<TagPattern>& default_tag_patterns() {
  static const std::vector<TagPattern> patterns{
      {"Causes", {"what may be causing", "may be causing", "causing", "cause", "causes", "caused", "why", "reason",
                  "trigger", "triggers", "what brings"}},
      {"Remedies", {"tried any", "remedies", "remedy", "helped", "helping", "help", "treatment", "medication",
                    "coping", "cope", "therapy"}},
      {"OSI", {"other symptoms", "anything else", "any other", "also feeling", "also noticed", "else"}},
      {"Degree/frequency", {"how likely", "how often", "how many", "how much", "how long", "how bad", "often",
                            "frequently", "a lot", "every day", "most days"}},
  };
  return patterns;
}

inline const std::vector<std::string>& leading_auxiliaries() {
  static const std::vector<std::string> words{"do",  "does", "did",  "are",   "is",    "am",     "have", "has",
                                              "had", "were", "was",  "can",   "could", "would",  "will", "should"};
  return words;
}

inline constexpr std::string_view kYesNoTag = "Yes/No";

struct Classification {
  std::string tag;
  int rank = 0;
  double confidence = 0.0;
};

// Two-stage classifier: phrase patterns per tag, then the nearest annotated
// exemplar by cosine of mean-pooled embeddings.
class TagClassifier {
 public:
  TagClassifier(const Dataset& dataset, const VectorTable& vectors,
                std::vector<TagPattern> patterns = default_tag_patterns())
      : vectors_(&vectors) {
    std::map<std::string, std::map<int, int>> rank_votes;
    for (const auto& item : dataset.items)
      for (const auto& e : item.elaborations) {
        exemplars_.push_back({e, embed(e.text, vectors)});
        ++rank_votes[e.tag][e.rank];
      }
    for (const auto& [tag, votes] : rank_votes) {
      int best_rank = 0, best_votes = -1;
      for (const auto& [rank, n] : votes)
        if (n > best_votes) best_rank = rank, best_votes = n;
      tag_rank_[tag] = best_rank;
    }
    for (auto& p : patterns) {
      if (!tag_rank_.contains(p.tag)) continue;
      CompiledPattern compiled{p.tag, {}};
      for (const auto& phrase : p.phrases) compiled.phrases.push_back(tokenize(phrase));
      patterns_.push_back(std::move(compiled));
    }
  }

  // Modal annotated rank for `tag`, if the dataset uses it.
  std::optional<int> rank_of(std::string_view tag) const {
    auto it = tag_rank_.find(std::string(tag));
    if (it == tag_rank_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> pattern_tag(std::span<const std::string> tokens) const {
    for (const auto& p : patterns_)
      for (const auto& phrase : p.phrases)
        if (contains_run(tokens, phrase)) return p.tag;
    if (!tokens.empty() && tag_rank_.contains(std::string(kYesNoTag)) &&
        std::find(leading_auxiliaries().begin(), leading_auxiliaries().end(), tokens.front()) !=
            leading_auxiliaries().end())
      return std::string(kYesNoTag);
    return std::nullopt;
  }

  Classification classify(std::string_view question) const {
    const Tokens tokens = tokenize(question);
    if (tokens.empty()) throw DomainError("classify_tag_rank: empty question");
    if (auto tag = pattern_tag(tokens)) return {*tag, tag_rank_.at(*tag), 1.0};
    if (exemplars_.empty()) throw DomainError("classify_tag_rank: no annotated exemplars");

    const Vector query = embed(std::span<const std::string>(tokens), *vectors_);
    const Exemplar* best = nullptr;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (const auto& ex : exemplars_) {
      const double c = cosine(query, ex.embedding);
      if (c > best_cos) best = &ex, best_cos = c;
    }
    return {best->record.tag, best->record.rank, best_cos};
  }

 private:
  struct Exemplar {
    QuestionRecord record;
    Vector embedding;
  };
  struct CompiledPattern {
    std::string tag;
    std::vector<Tokens> phrases;
  };

  const VectorTable* vectors_;
  std::vector<Exemplar> exemplars_;
  std::map<std::string, int> tag_rank_;
  std::vector<CompiledPattern> patterns_;
};

// ---------------------------------------------------------------------------
// Components

// 1 - |rank - expected| / max(1, R_max - 1), clamped to [0, 1].
inline double tr_score(int assigned_rank, int expected_next_rank, int max_rank) {
  const double spread = std::max(1, max_rank - 1);
  const double score = 1.0 - std::abs(assigned_rank - expected_next_rank) / spread;
  return std::clamp(score, 0.0, 1.0);
}

inline double tr_score(const Candidate& candidate, const ProcessState& state) {
  if (!candidate.rank) throw DomainError("tr_score: candidate has no assigned rank");
  return tr_score(*candidate.rank, state.expected_next_rank, state.max_rank());
}

inline Vector concept_embedding(const Phrase& concept_phrase, const KnowledgeBase& kb, const VectorTable& vectors) {
  if (const Vector* v = kb.concept_vector(concept_phrase.text); v && v->size() == vectors.dimension()) return *v;
  return embed(std::span<const std::string>(concept_phrase.tokens), vectors);
}

// Best cosine between the question and any KB concept, negatives clamped to 0.
inline double kb_score(std::string_view text, const KnowledgeBase& kb, const VectorTable& vectors) {
  if (kb.concepts().empty()) throw DomainError("kb_score: empty knowledge base");
  const Vector q = embed(text, vectors);
  double best = 0.0;
  for (const auto& c : kb.concepts()) best = std::max(best, cosine(q, concept_embedding(c, kb, vectors)));
  return best;
}

// Fraction of the question's concept spans matched by the lexicon (1 when the
// question has no spans). With an unsafe-term lexicon the fraction is inverted.
inline double safety_score(std::string_view text, const SafetyLexicon& lexicon, double tau_match = 0.8,
                           SafetyPolarity polarity = SafetyPolarity::kSafeLexicon) {
  const auto counts = count_span_matches(text, lexicon, tau_match);
  if (counts.spans == 0) return 1.0;
  const double fraction = static_cast<double>(counts.matched) / static_cast<double>(counts.spans);
  return polarity == SafetyPolarity::kSafeLexicon ? fraction : 1.0 - fraction;
}

inline double length_normalized_logprob(const Candidate& c) {
  const auto n = tokenize(c.text).size();
  return c.lm_logprob / static_cast<double>(std::max<std::size_t>(1, n));
}

// Read-only bundle of everything the scorer consults.
class Scorer {
 public:
  Scorer(const Dataset& dataset, const SafetyLexicon& lexicon, const KnowledgeBase& kb, const VectorTable& vectors)
      : dataset_(&dataset), lexicon_(&lexicon), kb_(&kb), vectors_(&vectors), classifier_(dataset, vectors) {}

  const TagClassifier& classifier() const { return classifier_; }
  const Dataset& dataset() const { return *dataset_; }
  const SafetyLexicon& lexicon() const { return *lexicon_; }
  const KnowledgeBase& kb() const { return *kb_; }
  const VectorTable& vectors() const { return *vectors_; }

  // Fills tag/rank unless the source already supplied an annotation. The
  // item's end sentinel is ranked one past the last question.
  void classify(Candidate& c, const ProcessState& state) const {
    if (normalize_phrase(c.text) == normalize_phrase(state.item->end_sentinel)) {
      c.sentinel = true;
      c.tag.reset();
      c.rank = state.max_rank() + 1;
      c.confidence = 1.0;
      return;
    }
    if (c.rank && c.tag) return;
    const auto cls = classifier_.classify(c.text);
    c.tag = cls.tag;
    c.rank = cls.rank;
    c.confidence = cls.confidence;
  }

  // Scores a batch and returns it sorted by total (descending), ties broken
  // by text.
  std::vector<Candidate> score(std::vector<Candidate> batch, const ProcessState& state, const ScoreConfig& config) const {
    if (batch.empty()) throw DomainError("combined_score: empty batch");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<double> normalized(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      normalized[i] = length_normalized_logprob(batch[i]);
      lo = std::min(lo, normalized[i]);
      hi = std::max(hi, normalized[i]);
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto& c = batch[i];
      classify(c, state);
      c.breakdown.lm = (hi - lo) > 1e-12 ? (normalized[i] - lo) / (hi - lo) : 1.0;
      c.breakdown.tr = tr_score(c, state);
      c.breakdown.kb = kb_score(c.text, *kb_, *vectors_);
      c.breakdown.safety = safety_score(c.text, *lexicon_, config.tau_match, config.polarity);
      c.total = combine(c.breakdown, config);
    }
    std::sort(batch.begin(), batch.end(), [](const Candidate& a, const Candidate& b) {
      if (a.total != b.total) return a.total > b.total;
      return a.text < b.text;
    });
    return batch;
  }

  static double combine(const Breakdown& b, const ScoreConfig& config) {
    return config.weight(Point::kLanguageModel) * b.lm + config.weight(Point::kTagRank) * b.tr +
           config.weight(Point::kKnowledge) * b.kb + config.weight(Point::kSafety) * b.safety;
  }

 private:
  const Dataset* dataset_;
  const SafetyLexicon* lexicon_;
  const KnowledgeBase* kb_;
  const VectorTable* vectors_;
  TagClassifier classifier_;
};

}  // namespace proknow
