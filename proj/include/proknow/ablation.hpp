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

#include <array>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "proknow/config.hpp"
#include "proknow/generator.hpp"
#include "proknow/metrics.hpp"
#include "proknow/ngram.hpp"
#include "proknow/scoring.hpp"

namespace proknow {

// LM-only baseline, then the heuristic points added one at a time.
inline std::array<PointSet, 4> ablation_point_sets() {
  return {PointSet{Point::kLanguageModel}, PointSet{Point::kLanguageModel, Point::kTagRank},
          PointSet{Point::kLanguageModel, Point::kTagRank, Point::kKnowledge}, PointSet::all()};
}

struct AblationRow {
  std::string label;
  PointSet points;
  EvaluationReport report;
  std::vector<Transcript> transcripts;
};

struct AblationOptions {
  std::size_t rounds = 1;
};

// One session per (round, item). Round r uses mix_seed(seed, "round", r) so
// every row sees the same seeds.
inline std::vector<Transcript> run_suite(const Resources& res, CandidateSource& source, const ScoreConfig& score,
                                         std::size_t width, std::uint64_t seed, std::size_t rounds) {
  const Scorer scorer(res.dataset, res.lexicon, res.kb, res.vectors);
  std::vector<Transcript> out;
  for (std::size_t r = 0; r < rounds; ++r) {
    SessionOptions opts;
    opts.score = score;
    opts.width = width;
    opts.seed = rounds == 1 ? seed : mix_seed(seed, "round", r);
    for (const auto& item : res.dataset.items) out.push_back(run_session(item, source, scorer, nullptr, opts));
  }
  return out;
}

inline std::vector<AblationRow> run_ablation(const EngineConfig& config, const Resources& res, CandidateSource& source,
                                             const AblationOptions& options = {}) {
  if (options.rounds == 0) throw ConfigError("ablation: rounds must be >= 1");
  const MetricResources metric_res{&res.lexicon, &res.kb, &res.vectors, config.score.tau_match, config.score.tau_kb};
  const References refs = references_from_dataset(res.dataset);
  std::vector<AblationRow> rows;
  for (const PointSet& points : ablation_point_sets()) {
    ScoreConfig score = config.score;
    score.points = points;
    AblationRow row;
    row.label = points.heuristic_label();
    row.points = points;
    row.transcripts = run_suite(res, source, score, config.width, config.seed, options.rounds);
    const std::vector<SessionMetrics>* baseline = rows.empty() ? nullptr : &rows.back().report.sessions;
    row.report = evaluate(row.transcripts, metric_res, &refs, {config_hash(config), config.seed, res.dataset.id}, baseline);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Columns keep the table order: label, aum, akcm, asre, rouge_l, bleu_1, tests, meta.
inline nlohmann::ordered_json ablation_to_json(const std::vector<AblationRow>& rows) {
  using ordered = nlohmann::ordered_json;
  ordered out = ordered::array();
  for (const auto& row : rows) {
    const json r = to_json(row.report);
    ordered o = ordered::object();
    o["label"] = row.label;
    for (const char* key : {"aum", "akcm", "asre", "rouge_l", "bleu_1", "tests", "meta"}) o[key] = ordered::parse(r[key].dump());
    out.push_back(std::move(o));
  }
  return {{"rows", std::move(out)}};
}

inline void print_ablation_table(std::ostream& os, const std::vector<AblationRow>& rows) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  os << std::left << std::setw(10) << "config" << std::setw(10) << "AUM" << std::setw(10) << "AKCM" << std::setw(10)
     << "ASRE" << std::setw(10) << "ROUGE-L" << "BLEU-1\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    os << std::setw(10) << row.label << std::setw(10) << cell(r.aum) << std::setw(10) << cell(r.akcm) << std::setw(10)
       << cell(r.asre) << std::setw(10) << cell(r.rouge_l) << cell(r.bleu_1) << '\n';
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    os << rows[i].label << " vs " << rows[i - 1].label << ':';
    for (const auto& [metric, t] : rows[i].report.tests)
      os << ' ' << metric << "(p=" << cell(t.p) << (t.significant ? "*" : "") << ')';
    os << '\n';
  }
}

}  // namespace proknow
