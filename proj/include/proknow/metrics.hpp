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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/generator.hpp"
#include "proknow/scoring.hpp"
#include "proknow/stats.hpp"
#include "proknow/text.hpp"
#include "proknow/vectors.hpp"

namespace proknow {

inline constexpr double kSignificanceLevel = 0.05;

// ---------------------------------------------------------------------------
// AUM: concept spans with no exact or partial lexicon match.

inline std::size_t unsafe_match_count(std::string_view question, const SafetyLexicon& lexicon, double tau_match) {
  const auto counts = count_span_matches(question, lexicon, tau_match);
  return counts.spans - counts.matched;
}

inline double aum(std::span<const std::string> questions, const SafetyLexicon& lexicon, double tau_match = 0.8) {
  if (questions.empty()) throw DomainError("aum: empty question list");
  double total = 0.0;
  for (const auto& q : questions) total += static_cast<double>(unsafe_match_count(q, lexicon, tau_match));
  return total / static_cast<double>(questions.size());
}

// ---------------------------------------------------------------------------
// AKCM: subject/predicate/object components within relaxed-WMD reach of a KB
// concept, mapped onto [1, 3].

inline bool component_matches_kb(std::span<const std::string> component, const KnowledgeBase& kb,
                                 const VectorTable& vectors, double tau_kb) {
  for (const auto& c : kb.concepts())
    if (relaxed_wmd(component, c.tokens, vectors) <= 1.0 - tau_kb) return true;
  return false;
}

inline std::size_t kb_component_matches(std::string_view question, const KnowledgeBase& kb, const VectorTable& vectors,
                                        double tau_kb) {
  const Tokens tokens = tokenize(question);
  const Triple triple = extract_triple(tokens);
  std::size_t matched = 0;
  for (const auto* part : {&triple.subject, &triple.predicate, &triple.object})
    if (*part && component_matches_kb((*part)->tokens, kb, vectors, tau_kb)) ++matched;
  return matched;
}

inline double akcm_score(std::size_t matched_components) {
  return 1.0 + 2.0 * static_cast<double>(matched_components) / 3.0;
}

inline double akcm(std::span<const std::string> questions, const KnowledgeBase& kb, const VectorTable& vectors,
                   double tau_kb = 0.3) {
  if (questions.empty()) throw DomainError("akcm: empty question list");
  if (kb.concepts().empty()) throw DomainError("akcm: empty knowledge base");
  double total = 0.0;
  for (const auto& q : questions) total += akcm_score(kb_component_matches(q, kb, vectors, tau_kb));
  return total / static_cast<double>(questions.size());
}

// ---------------------------------------------------------------------------
// ASRE: squared positional rank error over the full-reversal worst case.

// nullopt for sequences shorter than two. Sequences that are not
// permutations of 1..n can exceed the reversal bound and are capped at 1.
inline std::optional<double> rank_sequence_error(std::span<const int> ranks) {
  const std::size_t n = ranks.size();
  if (n < 2) return std::nullopt;
  double err = 0.0, worst = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double d = static_cast<double>(ranks[i - 1]) - static_cast<double>(i);
    const double w = static_cast<double>(n + 1 - i) - static_cast<double>(i);
    err += d * d;
    worst += w * w;
  }
  return std::min(1.0, err / worst);
}

inline double asre(const std::vector<std::vector<int>>& rank_sequences) {
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& ranks : rank_sequences)
    if (auto e = rank_sequence_error(ranks)) {
      total += *e;
      ++used;
    }
  if (used == 0) throw DomainError("asre: no transcript with at least two questions");
  return total / static_cast<double>(used);
}

inline double asre(std::span<const Transcript> transcripts) {
  std::vector<std::vector<int>> seqs;
  for (const auto& t : transcripts) seqs.push_back(t.ranks());
  return asre(seqs);
}

// ---------------------------------------------------------------------------
// Generation metrics

inline double rouge_l(std::string_view candidate, std::string_view reference) {
  const Tokens ref = tokenize(reference);
  if (ref.empty()) throw DomainError("rouge_l: empty reference");
  const Tokens cand = tokenize(candidate);
  if (cand.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

// Clipped unigram precision times the brevity penalty against the closest
// reference length (shorter wins ties).
inline double bleu_1(std::string_view candidate, std::span<const std::string> references) {
  const Tokens cand = tokenize(candidate);
  if (cand.empty()) throw DomainError("bleu_1: empty candidate");
  if (references.empty()) throw DomainError("bleu_1: no references");
  std::map<std::string, std::size_t> cand_counts, max_ref_counts;
  for (const auto& t : cand) ++cand_counts[t];
  std::size_t closest = 0;
  bool have_closest = false;
  for (const auto& r : references) {
    const Tokens ref = tokenize(r);
    std::map<std::string, std::size_t> counts;
    for (const auto& t : ref) ++counts[t];
    for (const auto& [t, n] : counts) max_ref_counts[t] = std::max(max_ref_counts[t], n);
    const auto dist = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
    if (!have_closest || dist(ref.size()) < dist(closest) || (dist(ref.size()) == dist(closest) && ref.size() < closest)) {
      closest = ref.size();
      have_closest = true;
    }
  }
  std::size_t clipped = 0;
  for (const auto& [t, n] : cand_counts) {
    auto it = max_ref_counts.find(t);
    if (it != max_ref_counts.end()) clipped += std::min(n, it->second);
  }
  const double c = static_cast<double>(cand.size());
  const double precision = static_cast<double>(clipped) / c;
  const double bp = closest > cand.size() ? std::exp(1.0 - static_cast<double>(closest) / c) : 1.0;
  return precision * bp;
}

// ---------------------------------------------------------------------------
// Reports

struct MetricResources {
  const SafetyLexicon* lexicon = nullptr;
  const KnowledgeBase* kb = nullptr;
  const VectorTable* vectors = nullptr;
  double tau_match = 0.8;
  double tau_kb = 0.3;
};

using References = std::map<std::string, std::vector<std::string>>;

inline References references_from_dataset(const Dataset& dataset) {
  References refs;
  for (const auto& item : dataset.items)
    for (const auto& e : item.elaborations) refs[item.item_id].push_back(e.text);
  return refs;
}

// Per-transcript values, used for paired significance tests.
struct SessionMetrics {
  double aum = 0.0;
  double akcm = 1.0;
  std::optional<double> asre;
  std::optional<double> rouge_l;
  std::optional<double> bleu_1;
  std::size_t questions = 0;
};

struct SignificanceResult {
  std::string test;
  std::optional<double> stat;
  std::optional<double> p;
  bool significant = false;
  std::size_t n = 0;
  std::string note;
};

struct ReportMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string dataset_id;
};

struct EvaluationReport {
  double aum = 0.0;
  double akcm = 1.0;
  double asre = 0.0;
  std::optional<double> rouge_l;
  std::optional<double> bleu_1;
  std::map<std::string, SignificanceResult> tests;
  ReportMeta meta;
  std::vector<SessionMetrics> sessions;
};

inline SessionMetrics session_metrics(const Transcript& t, const MetricResources& res, const References* refs) {
  SessionMetrics m;
  const auto questions = t.questions();
  m.questions = questions.size();
  if (!questions.empty()) {
    m.aum = aum(questions, *res.lexicon, res.tau_match);
    m.akcm = akcm(questions, *res.kb, *res.vectors, res.tau_kb);
  }
  const auto ranks = t.ranks();
  m.asre = rank_sequence_error(ranks);
  if (refs && !questions.empty()) {
    auto it = refs->find(t.item_id);
    if (it == refs->end() || it->second.empty()) throw DataError("no references for item " + t.item_id);
    double rouge = 0.0, bleu = 0.0;
    for (const auto& q : questions) {
      double best = 0.0;
      for (const auto& r : it->second) best = std::max(best, rouge_l(q, r));
      rouge += best;
      bleu += bleu_1(q, it->second);
    }
    m.rouge_l = rouge / static_cast<double>(questions.size());
    m.bleu_1 = bleu / static_cast<double>(questions.size());
  }
  return m;
}

// Paired comparison of `current` against `baseline`, session by session.
// AUM, AKCM, ROUGE-L and BLEU-1 use the paired t-test; ASRE uses Wilcoxon.
inline std::map<std::string, SignificanceResult> compare_sessions(const std::vector<SessionMetrics>& baseline,
                                                                  const std::vector<SessionMetrics>& current) {
  if (baseline.size() != current.size()) throw ConfigError("paired comparison needs runs of equal length");
  std::map<std::string, SignificanceResult> out;
  auto run = [&](const std::string& name, bool wilcoxon, auto getter) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < current.size(); ++i) {
      const std::optional<double> x = getter(current[i]);
      const std::optional<double> y = getter(baseline[i]);
      if (x && y) {
        a.push_back(*x);
        b.push_back(*y);
      }
    }
    SignificanceResult r;
    r.test = wilcoxon ? "wilcoxon" : "paired_t";
    r.n = a.size();
    try {
      if (wilcoxon) {
        const auto w = wilcoxon_signed_rank(a, b);
        r.stat = w.w;
        r.p = w.p;
      } else {
        const auto t = paired_t_test(a, b);
        r.stat = t.t;
        r.p = t.p;
      }
      r.significant = *r.p < kSignificanceLevel;
    } catch (const DomainError& e) {
      r.note = e.what();
    }
    out.emplace(name, std::move(r));
  };
  run("aum", false, [](const SessionMetrics& m) -> std::optional<double> { return m.questions ? std::optional(m.aum) : std::nullopt; });
  run("akcm", false, [](const SessionMetrics& m) -> std::optional<double> { return m.questions ? std::optional(m.akcm) : std::nullopt; });
  run("asre", true, [](const SessionMetrics& m) { return m.asre; });
  if (!current.empty() && current.front().rouge_l) {
    run("rouge_l", false, [](const SessionMetrics& m) { return m.rouge_l; });
    run("bleu_1", false, [](const SessionMetrics& m) { return m.bleu_1; });
  }
  return out;
}

// Pools AUM/AKCM/ROUGE-L/BLEU-1 over every emitted question and averages ASRE
// over transcripts with at least two questions.
inline EvaluationReport evaluate(const std::vector<Transcript>& transcripts, const MetricResources& res,
                                 const References* refs, ReportMeta meta,
                                 const std::vector<SessionMetrics>* baseline = nullptr) {
  if (!res.lexicon || !res.kb || !res.vectors) throw ConfigError("evaluate: lexicon, kb and vectors are required");
  EvaluationReport report;
  report.meta = std::move(meta);
  std::vector<std::string> questions;
  std::vector<std::vector<int>> rank_seqs;
  double rouge = 0.0, bleu = 0.0;
  for (const auto& t : transcripts) {
    auto m = session_metrics(t, res, refs);
    for (auto& q : t.questions()) questions.push_back(std::move(q));
    rank_seqs.push_back(t.ranks());
    if (m.rouge_l) {
      rouge += *m.rouge_l * static_cast<double>(m.questions);
      bleu += *m.bleu_1 * static_cast<double>(m.questions);
    }
    report.sessions.push_back(std::move(m));
  }
  if (questions.empty()) throw DomainError("evaluate: transcripts contain no questions");
  report.aum = aum(questions, *res.lexicon, res.tau_match);
  report.akcm = akcm(questions, *res.kb, *res.vectors, res.tau_kb);
  report.asre = asre(rank_seqs);
  if (refs) {
    report.rouge_l = rouge / static_cast<double>(questions.size());
    report.bleu_1 = bleu / static_cast<double>(questions.size());
  }
  if (baseline) report.tests = compare_sessions(*baseline, report.sessions);
  return report;
}

inline json to_json(const EvaluationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json tests = json::object();
  for (const auto& [metric, t] : r.tests) {
    json jt = {{"test", t.test}, {"stat", opt(t.stat)}, {"p", opt(t.p)}, {"significant", t.significant}, {"n", t.n}};
    if (!t.note.empty()) jt["note"] = t.note;
    tests[metric] = std::move(jt);
  }
  return {{"aum", r.aum},
          {"akcm", r.akcm},
          {"asre", r.asre},
          {"rouge_l", opt(r.rouge_l)},
          {"bleu_1", opt(r.bleu_1)},
          {"tests", std::move(tests)},
          {"meta", {{"config_hash", r.meta.config_hash}, {"seed", r.meta.seed}, {"dataset_id", r.meta.dataset_id}}}};
}

}  // namespace proknow
