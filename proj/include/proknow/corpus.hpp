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
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "proknow/error.hpp"
#include "proknow/text.hpp"
#include "proknow/vectors.hpp"

namespace proknow {

using json = nlohmann::json;

inline constexpr int kDatasetSchema = 1;

inline const std::vector<std::string>& default_tags() {
  static const std::vector<std::string> tags{"Yes/No", "Degree/frequency", "Causes", "Remedies", "OSI"};
  return tags;
}

struct QuestionRecord {
  std::string text;
  std::string tag;
  int rank = 0;

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

// One questionnaire item x with its elaborations Y, each carrying (tag, rank).
struct ProKnowTriple {
  std::string item_id;
  std::string questionnaire;
  std::string item_text;
  std::vector<QuestionRecord> elaborations;
  std::string end_sentinel;

  int max_rank() const {
    int r = 0;
    for (const auto& e : elaborations) r = std::max(r, e.rank);
    return r;
  }

  friend bool operator==(const ProKnowTriple&, const ProKnowTriple&) = default;
};

struct Dataset {
  std::string id;
  std::vector<std::string> tags = default_tags();
  std::vector<ProKnowTriple> items;

  const ProKnowTriple* find(std::string_view item_id) const {
    for (const auto& t : items)
      if (t.item_id == item_id) return &t;
    return nullptr;
  }

  const ProKnowTriple& item(std::string_view item_id) const {
    if (const auto* t = find(item_id)) return *t;
    throw DataError("unknown item_id '" + std::string(item_id) + "'");
  }

  bool has_tag(std::string_view tag) const { return std::find(tags.begin(), tags.end(), tag) != tags.end(); }
};

// ---------------------------------------------------------------------------
// Validation

struct Finding {
  enum class Kind { kDuplicateText, kRankGap, kMissingSentinel, kUnknownTag, kEmptyText, kBadRank, kNoElaborations };

  Kind kind;
  std::string item_id;
  std::string detail;
};

inline std::string_view to_string(Finding::Kind kind) {
  switch (kind) {
    case Finding::Kind::kDuplicateText: return "duplicate";
    case Finding::Kind::kRankGap: return "rank-gap";
    case Finding::Kind::kMissingSentinel: return "missing-sentinel";
    case Finding::Kind::kUnknownTag: return "unknown-tag";
    case Finding::Kind::kEmptyText: return "empty-text";
    case Finding::Kind::kBadRank: return "bad-rank";
    case Finding::Kind::kNoElaborations: return "no-elaborations";
  }
  return "unknown";
}

struct ValidationReport {
  std::vector<Finding> findings;

  bool clean() const { return findings.empty(); }
  std::size_t count(Finding::Kind kind) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [&](const Finding& f) { return f.kind == kind; }));
  }
};

inline void check_triple(const ProKnowTriple& triple, const std::vector<std::string>& tags,
                         std::vector<Finding>& out) {
  using K = Finding::Kind;
  const auto& id = triple.item_id;
  if (triple.elaborations.empty()) out.push_back({K::kNoElaborations, id, "item has no elaborations"});
  if (normalize_phrase(triple.end_sentinel).empty()) out.push_back({K::kMissingSentinel, id, "end sentinel is empty"});

  std::set<std::string> texts;
  std::set<int> ranks;
  for (const auto& e : triple.elaborations) {
    const std::string norm = normalize_phrase(e.text);
    if (norm.empty()) out.push_back({K::kEmptyText, id, "empty elaboration text"});
    else if (!texts.insert(norm).second) out.push_back({K::kDuplicateText, id, "duplicate elaboration '" + e.text + "'"});
    if (std::find(tags.begin(), tags.end(), e.tag) == tags.end())
      out.push_back({K::kUnknownTag, id, "tag '" + e.tag + "' not in declared vocabulary"});
    if (e.rank < 1) out.push_back({K::kBadRank, id, "rank " + std::to_string(e.rank) + " < 1"});
    else ranks.insert(e.rank);
  }
  if (!ranks.empty() && static_cast<int>(ranks.size()) != *ranks.rbegin()) {
    std::string listed;
    for (int r : ranks) listed += (listed.empty() ? "" : ",") + std::to_string(r);
    out.push_back({K::kRankGap, id, "non-contiguous ranks at item " + id + " {" + listed + "}"});
  }
}

inline ValidationReport validate_dataset(const Dataset& dataset) {
  ValidationReport report;
  for (const auto& t : dataset.items) check_triple(t, dataset.tags, report.findings);
  return report;
}

// ---------------------------------------------------------------------------
// Dataset I/O

enum class LoadMode { kStrict, kLenient };

namespace detail {

inline QuestionRecord record_from_json(const json& j) {
  QuestionRecord r;
  r.text = j.at("text").get<std::string>();
  r.tag = j.at("tag").get<std::string>();
  r.rank = j.at("rank").get<int>();
  return r;
}

inline ProKnowTriple triple_from_json(const json& j, LoadMode mode) {
  ProKnowTriple t;
  t.item_id = j.at("item_id").get<std::string>();
  t.questionnaire = j.value("questionnaire", std::string{});
  t.item_text = j.at("item_text").get<std::string>();
  if (mode == LoadMode::kStrict) t.end_sentinel = j.at("end_sentinel").get<std::string>();
  else t.end_sentinel = j.value("end_sentinel", std::string{});
  for (const auto& e : j.at("elaborations")) t.elaborations.push_back(record_from_json(e));
  return t;
}

}  // namespace detail

// Newline-delimited records: an optional header {"proknow_schema":1,"tags":[...]}
// followed by one triple per line. Strict mode rejects the whole file if any
// record breaks an invariant, listing every offending line.
inline Dataset parse_dataset(std::istream& in, std::string_view origin = "<stream>", LoadMode mode = LoadMode::kStrict) {
  Dataset dataset;
  dataset.id = std::string(origin);
  std::vector<std::string> problems;
  std::vector<std::size_t> item_lines;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      problems.push_back(where + "malformed record");
      continue;
    }
    if (j.contains("proknow_schema")) {
      if (header_seen || !dataset.items.empty()) {
        problems.push_back(where + "header must be the first record");
        continue;
      }
      header_seen = true;
      if (j["proknow_schema"] != kDatasetSchema) problems.push_back(where + "unsupported proknow_schema");
      if (j.contains("tags")) {
        try {
          dataset.tags = j["tags"].get<std::vector<std::string>>();
        } catch (const json::exception&) {
          problems.push_back(where + "tags must be a list of strings");
        }
      }
      continue;
    }
    try {
      auto triple = detail::triple_from_json(j, mode);
      if (!ids.insert(triple.item_id).second) problems.push_back(where + "duplicate item_id '" + triple.item_id + "'");
      dataset.items.push_back(std::move(triple));
      item_lines.push_back(line_no);
    } catch (const json::exception& e) {
      problems.push_back(where + "malformed record (" + std::string(e.what()) + ")");
    }
  }

  if (problems.empty() && dataset.items.empty()) throw DataError(std::string(origin) + ": no records");

  if (mode == LoadMode::kStrict) {
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
      std::vector<Finding> findings;
      check_triple(dataset.items[i], dataset.tags, findings);
      for (const auto& f : findings) {
        // Duplicate paraphrases are a validation finding, not a load failure.
        if (f.kind == Finding::Kind::kDuplicateText) continue;
        problems.push_back(std::string(origin) + ":" + std::to_string(item_lines[i]) + ": " + f.detail);
      }
    }
  }

  if (!problems.empty()) {
    std::string message = "dataset load failed:";
    for (const auto& p : problems) message += "\n  " + p;
    throw DataError(message);
  }
  return dataset;
}

inline Dataset load_dataset(const std::filesystem::path& path, LoadMode mode = LoadMode::kStrict) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  Dataset d = parse_dataset(in, path.string(), mode);
  d.id = path.stem().string();
  return d;
}

inline json to_json(const QuestionRecord& r) { return {{"text", r.text}, {"tag", r.tag}, {"rank", r.rank}}; }

inline json to_json(const ProKnowTriple& t) {
  json elaborations = json::array();
  for (const auto& e : t.elaborations) elaborations.push_back(to_json(e));
  return {{"item_id", t.item_id},
          {"questionnaire", t.questionnaire},
          {"item_text", t.item_text},
          {"end_sentinel", t.end_sentinel},
          {"elaborations", std::move(elaborations)}};
}

inline void save_dataset(std::ostream& out, const Dataset& dataset) {
  out << json{{"proknow_schema", kDatasetSchema}, {"tags", dataset.tags}}.dump() << '\n';
  for (const auto& t : dataset.items) out << to_json(t).dump() << '\n';
}

// Elaborations of `item_id`, optionally filtered by tag and/or rank, in file order.
inline std::vector<QuestionRecord> pool_for_item(const Dataset& dataset, std::string_view item_id,
                                                 std::optional<std::string_view> tag = std::nullopt,
                                                 std::optional<int> rank = std::nullopt) {
  std::vector<QuestionRecord> out;
  for (const auto& e : dataset.item(item_id).elaborations) {
    if (tag && e.tag != *tag) continue;
    if (rank && e.rank != *rank) continue;
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Safety lexicon and knowledge base

struct Phrase {
  std::string text;
  Tokens tokens;
};

// Category -> lowercase phrases. Phrases are normalized and deduplicated per
// category on insertion.
class SafetyLexicon {
 public:
  bool add(const std::string& category, std::string_view phrase) {
    std::string norm = normalize_phrase(phrase);
    if (norm.empty()) throw DataError("lexicon category '" + category + "' contains an empty phrase");
    auto& list = categories_[category];
    if (std::find(list.begin(), list.end(), norm) != list.end()) return false;
    list.push_back(norm);
    if (std::none_of(phrases_.begin(), phrases_.end(), [&](const Phrase& p) { return p.text == norm; }))
      phrases_.push_back({norm, tokenize(norm)});
    return true;
  }

  const std::map<std::string, std::vector<std::string>>& categories() const { return categories_; }
  // Distinct phrases across all categories.
  const std::vector<Phrase>& phrases() const { return phrases_; }
  bool empty() const { return phrases_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>> categories_;
  std::vector<Phrase> phrases_;
};

inline SafetyLexicon parse_lexicon(const json& j) {
  if (!j.is_object() || !j.contains("categories") || !j["categories"].is_object())
    throw DataError("lexicon: expected {\"categories\":{...}}");
  SafetyLexicon lexicon;
  for (const auto& [category, phrases] : j["categories"].items()) {
    if (!phrases.is_array()) throw DataError("lexicon: category '" + category + "' must be a list");
    for (const auto& p : phrases) lexicon.add(category, p.get<std::string>());
  }
  if (lexicon.empty()) throw DataError("lexicon: no phrases");
  return lexicon;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError(path.string() + ": malformed JSON");
  return j;
}

inline SafetyLexicon load_lexicon(const std::filesystem::path& path) { return parse_lexicon(read_json_file(path)); }

class KnowledgeBase {
 public:
  void add(std::string_view concept_text) {
    std::string norm = normalize_phrase(concept_text);
    if (norm.empty()) throw DataError("knowledge base contains an empty concept");
    if (std::any_of(concepts_.begin(), concepts_.end(), [&](const Phrase& p) { return p.text == norm; })) return;
    concepts_.push_back({norm, tokenize(norm)});
  }

  // Joins vectors by exact concept string; underscores in the vector table's
  // token column stand for spaces so multiword concepts can be keyed.
  void attach_vectors(const VectorTable& table) {
    std::map<std::string, Vector> joined;
    for (const auto& [token, v] : table.entries()) {
      std::string key = token;
      std::replace(key.begin(), key.end(), '_', ' ');
      if (std::any_of(concepts_.begin(), concepts_.end(), [&](const Phrase& p) { return p.text == key; }))
        joined.emplace(key, v);
    }
    vectors_ = std::move(joined);
    dimension_ = table.dimension();
  }

  const std::vector<Phrase>& concepts() const { return concepts_; }
  bool has_vectors() const { return vectors_.has_value(); }
  std::size_t vector_dimension() const { return dimension_; }

  const Vector* concept_vector(const std::string& concept_text) const {
    if (!vectors_) return nullptr;
    auto it = vectors_->find(concept_text);
    return it == vectors_->end() ? nullptr : &it->second;
  }

 private:
  std::vector<Phrase> concepts_;
  std::optional<std::map<std::string, Vector>> vectors_;
  std::size_t dimension_ = 0;
};

inline KnowledgeBase parse_kb(const json& j) {
  if (!j.is_object() || !j.contains("concepts") || !j["concepts"].is_array())
    throw DataError("kb: expected {\"concepts\":[...]}");
  KnowledgeBase kb;
  for (const auto& c : j["concepts"]) kb.add(c.get<std::string>());
  if (kb.concepts().empty()) throw DataError("kb: no concepts");
  return kb;
}

inline KnowledgeBase load_kb(const std::filesystem::path& path,
                             const std::optional<std::filesystem::path>& vectors_path = std::nullopt) {
  KnowledgeBase kb = parse_kb(read_json_file(path));
  if (vectors_path) kb.attach_vectors(load_vectors(*vectors_path));
  return kb;
}

}  // namespace proknow
