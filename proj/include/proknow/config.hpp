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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "proknow/bridge.hpp"
#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/generator.hpp"
#include "proknow/ngram.hpp"
#include "proknow/scoring.hpp"
#include "proknow/vectors.hpp"

namespace proknow {

inline constexpr std::string_view kConfigSchema = "proknow.config/1";

enum class SourceKind { kPool, kNgram, kBridge };

struct SourceConfig {
  SourceKind kind = SourceKind::kNgram;
  int n = 3;
  std::string endpoint;
};

struct EngineConfig {
  std::filesystem::path dataset;
  std::filesystem::path lexicon;
  std::filesystem::path kb;
  std::filesystem::path vectors;
  std::optional<std::filesystem::path> kb_vectors;
  SourceConfig source;
  ScoreConfig score;
  std::size_t width = kDefaultWidth;
  std::uint64_t seed = 0;
  json raw;  // document as read, for hashing

  void validate() const {
    score.validate();
    if (width == 0) throw ConfigError("config: width must be >= 1");
    if (source.kind == SourceKind::kNgram && (source.n < NgramLM::kMinOrder || source.n > NgramLM::kMaxOrder))
      throw ConfigError("config: source.n must lie in [2,4]");
    if (source.kind == SourceKind::kBridge && source.endpoint.empty())
      throw ConfigError("config: bridge source needs an endpoint");
  }
};

inline std::string to_string(SourceKind k) {
  switch (k) {
    case SourceKind::kPool: return "pool";
    case SourceKind::kNgram: return "ngram";
    case SourceKind::kBridge: return "bridge";
  }
  return "?";
}

namespace detail {

template <class T>
T config_value(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace detail

// Relative paths resolve against `base_dir`.
inline EngineConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  const std::string schema = detail::config_value<std::string>(j, "schema", "");
  if (schema != kConfigSchema) throw ConfigError("config: unsupported schema '" + schema + "'");

  EngineConfig c;
  c.raw = j;
  auto path = [&](const char* key, bool required) -> std::optional<std::filesystem::path> {
    const std::string p = detail::config_value<std::string>(j, key, "");
    if (p.empty()) {
      if (required) throw ConfigError(std::string("config: missing '") + key + "'");
      return std::nullopt;
    }
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  };
  c.dataset = *path("dataset", true);
  c.lexicon = *path("lexicon", true);
  c.kb = *path("kb", true);
  c.vectors = *path("vectors", true);
  c.kb_vectors = path("kb_vectors", false);

  if (j.contains("source")) {
    const json& s = j["source"];
    if (!s.is_object()) throw ConfigError("config: 'source' must be an object");
    const std::string kind = detail::config_value<std::string>(s, "kind", "ngram");
    if (kind == "pool") c.source.kind = SourceKind::kPool;
    else if (kind == "ngram") c.source.kind = SourceKind::kNgram;
    else if (kind == "bridge") c.source.kind = SourceKind::kBridge;
    else throw ConfigError("config: unknown source kind '" + kind + "'");
    c.source.n = detail::config_value<int>(s, "n", 3);
    c.source.endpoint = detail::config_value<std::string>(s, "endpoint", "");
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (!w.is_object()) throw ConfigError("config: 'weights' must be an object");
    c.score.weights.lm = detail::config_value<double>(w, "lm", 1.0);
    c.score.weights.tr = detail::config_value<double>(w, "tr", 1.0);
    c.score.weights.kb = detail::config_value<double>(w, "kb", 1.0);
    c.score.weights.safety = detail::config_value<double>(w, "safety", 1.0);
  }
  if (j.contains("threshold") && !j["threshold"].is_null()) c.score.threshold = detail::config_value<double>(j, "threshold", 0.0);
  c.score.tau_match = detail::config_value<double>(j, "tau_match", 0.8);
  c.score.tau_kb = detail::config_value<double>(j, "tau_kb", 0.3);
  if (j.contains("points")) {
    PointSet points;
    for (int p : detail::config_value<std::vector<int>>(j, "points", {})) {
      if (p < 1 || p > 4) throw ConfigError("config: points must lie in [1,4]");
      points.insert(static_cast<Point>(p));
    }
    c.score.points = points;
  }
  const std::string polarity = detail::config_value<std::string>(j, "safety_polarity", "safe");
  if (polarity == "safe") c.score.polarity = SafetyPolarity::kSafeLexicon;
  else if (polarity == "unsafe") c.score.polarity = SafetyPolarity::kUnsafeLexicon;
  else throw ConfigError("config: safety_polarity must be 'safe' or 'unsafe'");
  const long long width = detail::config_value<long long>(j, "width", static_cast<long long>(kDefaultWidth));
  if (width < 1) throw ConfigError("config: width must be >= 1");
  c.width = static_cast<std::size_t>(width);
  c.seed = detail::config_value<std::uint64_t>(j, "seed", 0);
  c.validate();
  return c;
}

inline EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": malformed config");
  return parse_config(j, path.parent_path());
}

// FNV-1a over the canonical (key-sorted) config document.
inline std::string config_hash(const EngineConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : c.raw.dump()) h = (h ^ ch) * 0x100000001b3ull;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Resources {
  Dataset dataset;
  SafetyLexicon lexicon;
  KnowledgeBase kb;
  VectorTable vectors;
};

inline Resources load_resources(const EngineConfig& c) {
  for (const auto* p : {&c.dataset, &c.lexicon, &c.kb, &c.vectors})
    if (!std::filesystem::exists(*p)) throw ConfigError("config: missing resource " + p->string());
  if (c.kb_vectors && !std::filesystem::exists(*c.kb_vectors))
    throw ConfigError("config: missing resource " + c.kb_vectors->string());
  Resources r{load_dataset(c.dataset), load_lexicon(c.lexicon), load_kb(c.kb, c.kb_vectors), load_vectors(c.vectors)};
  return r;
}

// Owns whatever state the configured candidate source needs.
class SourceHandle {
 public:
  SourceHandle(const EngineConfig& c, const Dataset& dataset) {
    switch (c.source.kind) {
      case SourceKind::kPool:
        source_ = std::make_unique<PoolSource>();
        break;
      case SourceKind::kNgram:
        lm_ = std::make_unique<NgramLM>(train_ngram_lm(dataset, c.source.n, c.seed));
        source_ = std::make_unique<NgramSource>(*lm_);
        break;
      case SourceKind::kBridge:
        client_ = std::make_unique<bridge::Client>(bridge::connect(c.source.endpoint));
        source_ = std::make_unique<BridgeSource>(*client_);
        break;
    }
  }

  CandidateSource& source() { return *source_; }

 private:
  std::unique_ptr<NgramLM> lm_;
  std::unique_ptr<bridge::Client> client_;
  std::unique_ptr<CandidateSource> source_;
};

}  // namespace proknow
