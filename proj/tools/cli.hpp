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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "proknow/proknow.hpp"

namespace proknow::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3 };

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

inline std::string breakdown_text(const Breakdown& b, double total) {
  return "lm=" + fixed(b.lm) + " tr=" + fixed(b.tr) + " kb=" + fixed(b.kb) + " safety=" + fixed(b.safety) +
         " total=" + fixed(total);
}

inline std::string entry_text(const TranscriptEntry& e) {
  if (e.sentinel) return "[end] " + e.text;
  std::string line = "[" + std::to_string(e.rank) + " " + e.tag.value_or("?") + "] " + e.text + "\n    " +
                     breakdown_text(e.breakdown, e.total);
  if (e.fallback) line += " fallback(best=" + fixed(e.best_rejected_total.value_or(0.0)) + ")";
  return line;
}

inline References load_references(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return references_from_dataset(load_dataset(path));
  const json j = read_json_file(path);
  if (!j.is_object()) throw DataError(path.string() + ": expected {item_id: [reference, ...]}");
  References refs;
  for (const auto& [item, list] : j.items()) refs[item] = list.get<std::vector<std::string>>();
  return refs;
}

inline std::vector<Transcript> read_run(const std::filesystem::path& dir) {
  const auto file = dir / "transcripts.jsonl";
  if (!std::filesystem::is_regular_file(file)) throw ConfigError("no transcripts.jsonl in run directory " + dir.string());
  std::ifstream in(file);
  return read_transcripts(in, file.string());
}

}  // namespace detail

// Parses argv, dispatches one subcommand and maps error classes to exit
// statuses: usage 2, configuration 3, anything else 1.
inline int run_command(int argc, const char* const* argv, Streams io) {
  CLI::App app{"Process-knowledge guided question generation", "proknow"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  app.add_option("--config", config_path, "Engine config file");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));

  auto* stats = app.add_subcommand("stats", "Dataset summary");
  auto* validate = app.add_subcommand("validate", "Check dataset invariants");
  std::string validate_dataset_path;
  validate->add_option("--dataset", validate_dataset_path, "Dataset file (defaults to the config's)");

  auto* generate = app.add_subcommand("generate", "Run question sessions");
  std::vector<std::string> items;
  std::optional<std::size_t> steps;
  std::string run_dir;
  generate->add_option("--item", items, "Item id (repeatable; default all)");
  generate->add_option("--steps", steps, "Stop after this many questions")->check(CLI::PositiveNumber);
  generate->add_option("--run", run_dir, "Write transcripts.jsonl into this directory");

  auto* converse = app.add_subcommand("converse", "Interactive session reading answers from stdin");
  std::string converse_item;
  converse->add_option("--item", converse_item, "Item id")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a run directory");
  std::string eval_dir, baseline_dir, references_path;
  eval->add_option("--run", eval_dir, "Run directory holding transcripts.jsonl")->required();
  eval->add_option("--baseline", baseline_dir, "Run directory for paired significance tests");
  eval->add_option("--references", references_path, "References: dataset .jsonl or {item: [text]} JSON");

  auto* bridge_check = app.add_subcommand("bridge-check", "Send one request to a candidate bridge");
  std::string endpoint;
  bridge_check->add_option("--endpoint", endpoint, "exec:<command> or tcp://host:port (defaults to the config's)");

  auto* ablate = app.add_subcommand("ablate", "Heuristic ablation: none, P2, P2+P3, P2+P3+P4");
  std::size_t rounds = 1;
  ablate->add_option("--rounds", rounds, "Sessions per item")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << '\n';
    return kUsage;
  }
  const bool as_json = format == "json";

  auto need_config = [&]() {
    if (config_path.empty()) throw ConfigError("--config is required");
    EngineConfig c = load_config(config_path);
    if (seed) {
      c.seed = *seed;
      c.raw["seed"] = *seed;
    }
    return c;
  };

  try {
    if (*stats) {
      const EngineConfig config = need_config();
      const Dataset ds = load_dataset(config.dataset);
      std::map<std::string, std::size_t> by_tag;
      std::map<int, std::size_t> by_rank;
      std::size_t total = 0;
      for (const auto& item : ds.items)
        for (const auto& e : item.elaborations) ++by_tag[e.tag], ++by_rank[e.rank], ++total;
      if (as_json) {
        json ranks = json::object();
        for (const auto& [r, n] : by_rank) ranks[std::to_string(r)] = n;
        io.out << json{{"dataset_id", ds.id}, {"items", ds.items.size()}, {"elaborations", total},
                       {"tags", by_tag}, {"ranks", ranks}}.dump()
               << '\n';
      } else {
        io.out << "dataset " << ds.id << ": " << ds.items.size() << " items, " << total << " elaborations\n";
        for (const auto& [t, n] : by_tag) io.out << "  tag " << t << ": " << n << '\n';
        for (const auto& [r, n] : by_rank) io.out << "  rank " << r << ": " << n << '\n';
      }
      return kOk;
    }

    if (*validate) {
      std::filesystem::path path = validate_dataset_path;
      if (path.empty()) path = need_config().dataset;
      if (!std::filesystem::exists(path)) throw ConfigError("dataset not found: " + path.string());
      const ValidationReport report = validate_dataset(load_dataset(path, LoadMode::kLenient));
      if (as_json) {
        json findings = json::array();
        for (const auto& f : report.findings)
          findings.push_back({{"kind", to_string(f.kind)}, {"item_id", f.item_id}, {"detail", f.detail}});
        io.out << json{{"findings", findings}}.dump() << '\n';
      } else {
        for (const auto& f : report.findings) io.out << to_string(f.kind) << ' ' << f.item_id << ": " << f.detail << '\n';
        if (report.clean()) io.out << "ok\n";
      }
      return report.clean() ? kOk : kRuntime;
    }

    if (*eval) {
      const EngineConfig config = need_config();
      const auto transcripts = detail::read_run(eval_dir);
      const Resources res = load_resources(config);
      const MetricResources mres{&res.lexicon, &res.kb, &res.vectors, config.score.tau_match, config.score.tau_kb};
      std::optional<References> refs;
      if (!references_path.empty()) refs = detail::load_references(references_path);
      std::optional<std::vector<SessionMetrics>> baseline;
      if (!baseline_dir.empty()) {
        const auto base = detail::read_run(baseline_dir);
        baseline.emplace();
        for (const auto& t : base) baseline->push_back(session_metrics(t, mres, refs ? &*refs : nullptr));
      }
      const EvaluationReport report = evaluate(transcripts, mres, refs ? &*refs : nullptr,
                                               {config_hash(config), config.seed, res.dataset.id},
                                               baseline ? &*baseline : nullptr);
      if (as_json) {
        io.out << to_json(report).dump() << '\n';
      } else {
        io.out << "AUM " << detail::fixed(report.aum) << "\nAKCM " << detail::fixed(report.akcm) << "\nASRE "
               << detail::fixed(report.asre) << '\n';
        if (report.rouge_l) io.out << "ROUGE-L " << detail::fixed(*report.rouge_l) << "\nBLEU-1 " << detail::fixed(*report.bleu_1) << '\n';
        for (const auto& [m, t] : report.tests)
          io.out << "test " << m << ' ' << t.test << " p=" << (t.p ? detail::fixed(*t.p) : "-")
                 << (t.significant ? " significant" : "") << '\n';
      }
      return kOk;
    }

    if (*bridge_check) {
      if (endpoint.empty()) {
        const EngineConfig config = need_config();
        if (config.source.kind != SourceKind::kBridge) throw ConfigError("config source is not a bridge; pass --endpoint");
        endpoint = config.source.endpoint;
      }
      bridge::Client client(bridge::connect(endpoint));
      bridge::Request ping;
      ping.id = bridge::make_request_id(seed.value_or(0), "bridge-check", 0);
      ping.item = "bridge check";
      ping.width = 1;
      const auto start = std::chrono::steady_clock::now();
      const auto candidates = client.request(ping);
      const auto ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
      if (as_json)
        io.out << json{{"endpoint", endpoint}, {"protocol", bridge::kProtocol}, {"candidates", candidates.size()},
                       {"latency_ms", ms}}.dump()
               << '\n';
      else
        io.out << endpoint << ": " << bridge::kProtocol << " ok, " << candidates.size() << " candidate(s)\n";
      return kOk;
    }

    const EngineConfig config = need_config();
    const Resources res = load_resources(config);
    SourceHandle source(config, res.dataset);
    const Scorer scorer(res.dataset, res.lexicon, res.kb, res.vectors);

    if (*generate) {
      std::vector<const ProKnowTriple*> chosen;
      if (items.empty())
        for (const auto& item : res.dataset.items) chosen.push_back(&item);
      for (const auto& id : items) chosen.push_back(&res.dataset.item(id));
      SessionOptions opts;
      opts.score = config.score;
      opts.width = config.width;
      opts.seed = config.seed;
      opts.max_questions = steps;
      std::vector<Transcript> transcripts;
      for (const auto* item : chosen) transcripts.push_back(run_session(*item, source.source(), scorer, nullptr, opts));
      if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        std::ofstream file(std::filesystem::path(run_dir) / "transcripts.jsonl");
        write_transcripts(file, transcripts);
        if (!file) throw Error("cannot write transcripts to " + run_dir);
      }
      if (as_json) {
        write_transcripts(io.out, transcripts);
      } else {
        for (const auto& t : transcripts) {
          io.out << t.item_id << '\n';
          for (const auto& e : t.entries) io.out << "  " << detail::entry_text(e) << '\n';
        }
      }
      return kOk;
    }

    if (*converse) {
      const ProKnowTriple& item = res.dataset.item(converse_item);
      ConsoleAnswers answers(io.in, io.out);
      SessionOptions opts;
      opts.score = config.score;
      opts.width = config.width;
      opts.seed = config.seed;
      opts.on_entry = [&](const TranscriptEntry& e) {
        if (as_json) io.out << to_json(e).dump() << '\n';
        else io.out << detail::entry_text(e) << '\n';
        io.out << std::flush;
      };
      if (!as_json) io.out << "item " << item.item_id << ": " << item.item_text << '\n';
      run_session(item, source.source(), scorer, &answers, opts);
      return kOk;
    }

    if (*ablate) {
      const auto rows = run_ablation(config, res, source.source(), {rounds});
      if (as_json) io.out << ablation_to_json(rows).dump() << '\n';
      else print_ablation_table(io.out, rows);
      return kOk;
    }
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace proknow::cli
