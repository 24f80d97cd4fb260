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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "proknow/bridge.hpp"
#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/ngram.hpp"
#include "proknow/scoring.hpp"

namespace proknow {

inline constexpr std::size_t kDefaultWidth = 8;

struct SourceInfo {
  std::string name;
  std::size_t max_width = 0;  // 0: unbounded
};

// Provider of next-question candidates with log-probabilities. Results must
// be a function of (state, width, seed) only.
class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  virtual SourceInfo info() const = 0;
  virtual std::vector<Candidate> next_candidates(const ProcessState& state, std::size_t width, std::uint64_t seed) = 0;
};

// Draws from the item's not yet asked elaborations, one rank at a time in
// round-robin so that any width >= R_max covers every rank. Annotations are
// carried through; log-probabilities are uniform (0).
class PoolSource : public CandidateSource {
 public:
  SourceInfo info() const override { return {"pool", 0}; }

  std::vector<Candidate> next_candidates(const ProcessState& state, std::size_t width, std::uint64_t seed) override {
    if (width == 0) throw DomainError("generate_candidates: width must be >= 1");
    std::vector<QuestionRecord> pool;
    for (const auto& e : state.item->elaborations)
      if (!state.asked(e.text)) pool.push_back(e);
    std::vector<std::size_t> chosen;
    if (width >= pool.size()) {
      for (std::size_t i = 0; i < pool.size(); ++i) chosen.push_back(i);
    } else {
      std::map<int, std::vector<std::size_t>> by_rank;
      for (std::size_t i = 0; i < pool.size(); ++i) by_rank[pool[i].rank].push_back(i);
      SplitMix64 rng(mix_seed(seed, state.item->item_id, state.history.size()));
      for (auto& [rank, members] : by_rank)
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.next() % i]);
      for (std::size_t round = 0; chosen.size() < width; ++round) {
        bool any = false;
        for (const auto& [rank, members] : by_rank) {
          if (round < members.size() && chosen.size() < width) {
            chosen.push_back(members[round]);
            any = true;
          }
        }
        if (!any) break;
      }
      std::sort(chosen.begin(), chosen.end());
    }
    std::vector<Candidate> out;
    for (std::size_t i : chosen) {
      Candidate c;
      c.text = pool[i].text;
      c.lm_logprob = 0.0;
      c.tag = pool[i].tag;
      c.rank = pool[i].rank;
      c.confidence = 1.0;
      out.push_back(std::move(c));
    }
    return out;
  }
};

class NgramSource : public CandidateSource {
 public:
  explicit NgramSource(const NgramLM& lm) : lm_(&lm) {}

  SourceInfo info() const override { return {"ngram" + std::to_string(lm_->order()), 0}; }

  std::vector<Candidate> next_candidates(const ProcessState& state, std::size_t width, std::uint64_t seed) override {
    std::vector<Candidate> out;
    for (auto& s : lm_->sample(width, mix_seed(seed, state.item->item_id, state.history.size()))) {
      Candidate c;
      c.text = std::move(s.text);
      c.lm_logprob = s.logprob;
      out.push_back(std::move(c));
    }
    return out;
  }

 private:
  const NgramLM* lm_;
};

// Candidates from an external model behind the line protocol.
class BridgeSource : public CandidateSource {
 public:
  explicit BridgeSource(bridge::Client& client) : client_(&client) {}

  SourceInfo info() const override { return {"bridge", 0}; }

  std::vector<Candidate> next_candidates(const ProcessState& state, std::size_t width, std::uint64_t seed) override {
    bridge::Request request;
    request.id = bridge::make_request_id(seed, state.item->item_id, state.history.size());
    if (state.last_question) request.context.push_back(state.last_question->text);
    if (state.last_answer) request.context.push_back(*state.last_answer);
    request.item = state.item->item_text;
    request.width = width;
    if (!state.expects_sentinel()) {
      request.expected_rank = state.expected_next_rank;
      for (const auto& e : state.item->elaborations)
        if (e.rank == state.expected_next_rank) {
          request.expected_tag = e.tag;
          break;
        }
    }
    std::vector<Candidate> out;
    for (auto& s : client_->request(request)) {
      Candidate c;
      c.text = std::move(s.text);
      c.lm_logprob = s.logprob;
      out.push_back(std::move(c));
    }
    if (out.size() > width) out.resize(width);
    return out;
  }

 private:
  bridge::Client* client_;
};

inline std::vector<Candidate> generate_candidates(CandidateSource& source, const ProcessState& state, std::size_t width,
                                                  std::uint64_t seed) {
  if (width == 0) throw DomainError("generate_candidates: width must be >= 1");
  auto batch = source.next_candidates(state, width, seed);
  if (batch.empty()) throw SourceError(source.info().name + ": empty candidate set");
  return batch;
}

// ---------------------------------------------------------------------------
// Selection

struct Selection {
  Candidate chosen;
  bool fallback = false;
  std::optional<double> best_total;  // best scored candidate, if any survived
  std::vector<Candidate> rejected;
};

// Picks the best scored candidate if it clears the threshold; otherwise
// emits the dataset's template question at the expected rank. An empty batch
// goes straight to the template.
inline Selection select_next(const ProcessState& state, const std::vector<Candidate>& scored, const ScoreConfig& config) {
  Selection sel;
  if (!scored.empty()) {
    sel.best_total = scored.front().total;
    if (scored.front().total >= config.effective_threshold()) {
      sel.chosen = scored.front();
      sel.rejected.assign(scored.begin() + 1, scored.end());
      return sel;
    }
  }
  const QuestionRecord* tmpl = nullptr;
  for (const auto& e : state.item->elaborations)
    if (e.rank == state.expected_next_rank) {
      tmpl = &e;
      break;
    }
  if (!tmpl)
    throw Error("select_next: no template question at rank " + std::to_string(state.expected_next_rank) +
                " for item " + state.item->item_id);
  sel.fallback = true;
  sel.chosen.text = tmpl->text;
  sel.chosen.tag = tmpl->tag;
  sel.chosen.rank = tmpl->rank;
  sel.chosen.confidence = 1.0;
  sel.rejected = scored;
  return sel;
}

// Drops candidates that repeat a question already asked in this session.
inline std::vector<Candidate> drop_repeats(std::vector<Candidate> batch, const ProcessState& state) {
  std::erase_if(batch, [&](const Candidate& c) { return state.asked(c.text); });
  return batch;
}

// ---------------------------------------------------------------------------
// Sessions

struct TranscriptEntry {
  std::string text;
  std::optional<std::string> tag;
  int rank = 0;
  Breakdown breakdown;
  double total = 0.0;
  bool fallback = false;
  std::optional<double> best_rejected_total;
  bool sentinel = false;
  std::optional<std::string> answer;
  std::vector<Candidate> rejected;
};

struct Transcript {
  std::string item_id;
  std::vector<TranscriptEntry> entries;
  bool terminated = false;

  std::size_t question_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.sentinel; }));
  }

  std::vector<int> ranks() const {
    std::vector<int> out;
    for (const auto& e : entries)
      if (!e.sentinel) out.push_back(e.rank);
    return out;
  }

  std::vector<std::string> questions() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (!e.sentinel) out.push_back(e.text);
    return out;
  }
};

class AnswerProvider {
 public:
  virtual ~AnswerProvider() = default;
  virtual std::optional<std::string> answer(const std::string& question) = 0;
};

class ScriptedAnswers : public AnswerProvider {
 public:
  explicit ScriptedAnswers(std::vector<std::string> answers) : answers_(std::move(answers)) {}
  std::optional<std::string> answer(const std::string&) override {
    if (next_ >= answers_.size()) return std::nullopt;
    return answers_[next_++];
  }

 private:
  std::vector<std::string> answers_;
  std::size_t next_ = 0;
};

// Reads one line per question; end of input yields no answer.
class ConsoleAnswers : public AnswerProvider {
 public:
  ConsoleAnswers(std::istream& in, std::ostream& prompt) : in_(&in), prompt_(&prompt) {}
  std::optional<std::string> answer(const std::string&) override {
    *prompt_ << "> " << std::flush;
    std::string line;
    if (!std::getline(*in_, line)) return std::nullopt;
    return line;
  }

 private:
  std::istream* in_;
  std::ostream* prompt_;
};

struct SessionOptions {
  ScoreConfig score;
  std::size_t width = kDefaultWidth;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_questions;  // stop early without terminating
  std::function<void(const TranscriptEntry&)> on_entry;
};

// generate -> score -> select until the process reaches its end: the expected
// rank passes R_max, the end sentinel is chosen, or R_max questions were asked.
inline Transcript run_session(const ProKnowTriple& item, CandidateSource& source, const Scorer& scorer,
                              AnswerProvider* answers, const SessionOptions& options) {
  options.score.validate();
  if (options.width == 0) throw ConfigError("width must be >= 1");
  Transcript transcript;
  transcript.item_id = item.item_id;
  ProcessState state(item);
  const int max_rank = item.max_rank();
  const std::size_t guard = static_cast<std::size_t>(max_rank) + 2;

  auto finish = [&](TranscriptEntry sentinel) {
    sentinel.sentinel = true;
    sentinel.rank = max_rank + 1;
    sentinel.text = item.end_sentinel;
    if (options.on_entry) options.on_entry(sentinel);
    transcript.entries.push_back(std::move(sentinel));
    transcript.terminated = true;
  };

  for (std::size_t step = 0;; ++step) {
    if (state.expects_sentinel() || transcript.question_count() >= static_cast<std::size_t>(max_rank)) {
      finish({});
      break;
    }
    if (options.max_questions && transcript.question_count() >= *options.max_questions) break;
    if (step >= guard) throw Error("run_session: step guard exceeded for item " + item.item_id);

    auto batch = drop_repeats(generate_candidates(source, state, options.width, options.seed), state);
    if (!batch.empty()) batch = scorer.score(std::move(batch), state, options.score);
    Selection sel = select_next(state, batch, options.score);

    TranscriptEntry entry;
    entry.text = sel.chosen.text;
    entry.tag = sel.chosen.tag;
    entry.rank = sel.chosen.rank.value_or(0);
    entry.breakdown = sel.chosen.breakdown;
    entry.total = sel.chosen.total;
    entry.fallback = sel.fallback;
    if (sel.fallback) entry.best_rejected_total = sel.best_total;
    entry.rejected = std::move(sel.rejected);

    if (sel.chosen.sentinel) {
      finish(std::move(entry));
      break;
    }
    if (options.on_entry) options.on_entry(entry);
    if (answers) entry.answer = answers->answer(entry.text);
    state.advance({entry.text, entry.tag.value_or(""), entry.rank});
    state.last_answer = entry.answer;
    transcript.entries.push_back(std::move(entry));
  }
  return transcript;
}

// ---------------------------------------------------------------------------
// Transcript serialization (one JSON object per line)

inline json to_json(const Breakdown& b) { return {{"lm", b.lm}, {"tr", b.tr}, {"kb", b.kb}, {"safety", b.safety}}; }

inline Breakdown breakdown_from_json(const json& j) {
  return {j.value("lm", 0.0), j.value("tr", 0.0), j.value("kb", 0.0), j.value("safety", 0.0)};
}

inline json to_json(const Candidate& c) {
  return {{"text", c.text},
          {"lm_logprob", c.lm_logprob},
          {"tag", c.tag ? json(*c.tag) : json(nullptr)},
          {"rank", c.rank ? json(*c.rank) : json(nullptr)},
          {"breakdown", to_json(c.breakdown)},
          {"total", c.total}};
}

inline json to_json(const TranscriptEntry& e) {
  json rejected = json::array();
  for (const auto& c : e.rejected) rejected.push_back(to_json(c));
  return {{"text", e.text},
          {"tag", e.tag ? json(*e.tag) : json(nullptr)},
          {"rank", e.rank},
          {"breakdown", to_json(e.breakdown)},
          {"total", e.total},
          {"fallback", e.fallback},
          {"best_rejected_total", e.best_rejected_total ? json(*e.best_rejected_total) : json(nullptr)},
          {"sentinel", e.sentinel},
          {"answer", e.answer ? json(*e.answer) : json(nullptr)},
          {"rejected", std::move(rejected)}};
}

inline json to_json(const Transcript& t) {
  json entries = json::array();
  for (const auto& e : t.entries) entries.push_back(to_json(e));
  return {{"item_id", t.item_id}, {"terminated", t.terminated}, {"entries", std::move(entries)}};
}

inline Transcript transcript_from_json(const json& j) {
  Transcript t;
  t.item_id = j.at("item_id").get<std::string>();
  t.terminated = j.value("terminated", false);
  for (const auto& je : j.at("entries")) {
    TranscriptEntry e;
    e.text = je.at("text").get<std::string>();
    if (je.contains("tag") && je["tag"].is_string()) e.tag = je["tag"].get<std::string>();
    e.rank = je.at("rank").get<int>();
    if (je.contains("breakdown")) e.breakdown = breakdown_from_json(je["breakdown"]);
    e.total = je.value("total", 0.0);
    e.fallback = je.value("fallback", false);
    if (je.contains("best_rejected_total") && je["best_rejected_total"].is_number())
      e.best_rejected_total = je["best_rejected_total"].get<double>();
    e.sentinel = je.value("sentinel", false);
    if (je.contains("answer") && je["answer"].is_string()) e.answer = je["answer"].get<std::string>();
    t.entries.push_back(std::move(e));
  }
  return t;
}

inline void write_transcripts(std::ostream& out, const std::vector<Transcript>& transcripts) {
  for (const auto& t : transcripts) out << to_json(t).dump() << '\n';
}

inline std::vector<Transcript> read_transcripts(std::istream& in, std::string_view origin = "<stream>") {
  std::vector<Transcript> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": malformed transcript");
    try {
      out.push_back(transcript_from_json(j));
    } catch (const json::exception& e) {
      throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace proknow
