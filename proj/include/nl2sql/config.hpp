#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nl2sql/content.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/evaluate.hpp"
#include "nl2sql/llm.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/prompt.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Run configuration: one structured file drives every command
// ---------------------------------------------------------------------------

struct PathsConfig {
  std::string catalog;        // tables.json
  std::string questions;      // question set (JSON array or JSONL)
  std::string databases_dir;  // <dir>/<db_id>/<db_id>.sqlite
  std::string output_dir;
  CatalogFormat catalog_format = CatalogFormat::kSpiderTablesJson;
};

struct BackendConfig {
  std::string type = "replay";  // "replay" | "http"
  std::string endpoint;
  std::string api_key_env = "NL2SQL_API_KEY";
  std::string model;
  int parallelism = 4;
  double rate_per_second = 0.0;  // 0 disables rate limiting
  int max_retries = 5;
  double request_timeout_seconds = 60.0;
  std::string session_path;  // replay source
  std::string record_path;   // when set, responses are recorded here
};

struct ParadigmFileConfig {
  ParadigmConfig paradigm;
  std::string preliminary_path;  // program-aided selection input
};

struct EvaluationConfig {
  std::vector<std::string> augmented_dirs;
  double timeout_seconds = 30.0;
  bool lenient_numeric = false;
  bool strip_distinct = false;
};

struct RunConfig {
  PathsConfig paths;
  BackendConfig backend;
  std::vector<ParadigmFileConfig> paradigms;
  EvaluationConfig evaluation;
  MatchConfig match;
  uint64_t seed = 0;

  void validate() const {
    if (paths.catalog.empty()) throw ConfigError("paths.catalog is required");
    std::set<std::string> ids;
    for (const ParadigmFileConfig& p : paradigms) {
      p.paradigm.validate();
      if (!ids.insert(p.paradigm.id).second)
        throw ConfigError("duplicate paradigm id: " + p.paradigm.id);
    }
    if (backend.type != "replay" && backend.type != "http")
      throw ConfigError("backend.type must be \"replay\" or \"http\", got \"" + backend.type +
                        "\"");
    if (backend.type == "replay" && backend.session_path.empty())
      throw ConfigError("backend.type=replay requires backend.session_path");
    if (backend.type == "http" && backend.endpoint.empty())
      throw ConfigError("backend.type=http requires backend.endpoint");
    match.validate();
  }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline PromptStyle parse_style(const nlohmann::json& j) {
  PromptStyle style;
  std::string mode = j.value("mode", "concise");
  if (mode == "concise") style.mode = PromptMode::kConcise;
  else if (mode == "verbose") style.mode = PromptMode::kVerbose;
  else throw ConfigError("unknown prompt mode \"" + mode + "\"");
  style.include_data_types = j.value("data_types", true);
  std::string desc = j.value("descriptions", "none");
  if (desc == "none") style.include_descriptions = DescriptionScope::kNone;
  else if (desc == "selected") style.include_descriptions = DescriptionScope::kSelected;
  else if (desc == "full") style.include_descriptions = DescriptionScope::kFull;
  else throw ConfigError("unknown descriptions scope \"" + desc + "\"");
  style.include_content_values = j.value("content", false);
  style.include_hint = j.value("hint", false);
  style.token_limit = j.value("token_limit", 0);
  return style;
}

inline ParadigmFileConfig parse_paradigm(const nlohmann::json& j) {
  ParadigmFileConfig out;
  ParadigmConfig& p = out.paradigm;
  if (!j.contains("id") || !j["id"].is_string())
    throw ConfigError("every paradigm needs a string id");
  p.id = j["id"].get<std::string>();
  p.style = parse_style(j);
  if (j.contains("selection")) {
    const nlohmann::json& s = j["selection"];
    p.use_selection = true;
    std::string mode = s.value("mode", "ground_truth");
    if (mode == "ground_truth") p.selection_mode = SelectionMode::kGroundTruth;
    else if (mode == "program_aided") p.selection_mode = SelectionMode::kProgramAided;
    else if (mode == "retrieval") p.selection_mode = SelectionMode::kRetrieval;
    else throw ConfigError("paradigm " + p.id + ": unknown selection mode \"" + mode + "\"");
    std::string integ = s.value("integration", "soft");
    if (integ == "hard") p.integration = SelectionIntegration::kHard;
    else if (integ == "soft") p.integration = SelectionIntegration::kSoft;
    else throw ConfigError("paradigm " + p.id + ": unknown integration \"" + integ + "\"");
    p.retrieval_top_k = s.value("top_k", 6);
    out.preliminary_path = s.value("preliminary", "");
  }
  p.num_samples = j.value("num_samples", 1);
  p.temperature = j.value("temperature", 0.0);
  p.max_output_len = j.value("max_output_len", 256);
  if (j.contains("stop")) {
    for (const auto& s : j["stop"]) p.stop_sequences.push_back(s.get<std::string>());
  }
  return out;
}

inline MatchConfig parse_match(const nlohmann::json& j) {
  MatchConfig m;
  m.threshold = j.value("threshold", m.threshold);
  m.top_k = j.value("top_k", m.top_k);
  m.max_span_words = j.value("max_span_words", m.max_span_words);
  m.min_keyword_len = j.value("min_keyword_len", m.min_keyword_len);
  m.distinct_cap = j.value("distinct_cap", m.distinct_cap);
  return m;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  if (j.contains("paths")) {
    const nlohmann::json& p = j["paths"];
    cfg.paths.catalog = p.value("catalog", "");
    cfg.paths.questions = p.value("questions", "");
    cfg.paths.databases_dir = p.value("databases_dir", "");
    cfg.paths.output_dir = p.value("output_dir", "");
    std::string fmt = p.value("catalog_format", "spider");
    if (fmt == "spider") cfg.paths.catalog_format = CatalogFormat::kSpiderTablesJson;
    else if (fmt == "bird") cfg.paths.catalog_format = CatalogFormat::kBirdTablesJson;
    else throw ConfigError("unknown catalog_format \"" + fmt + "\"");
  }
  if (j.contains("backend")) {
    const nlohmann::json& b = j["backend"];
    cfg.backend.type = b.value("type", cfg.backend.type);
    cfg.backend.endpoint = b.value("endpoint", "");
    cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
    cfg.backend.model = b.value("model", "");
    cfg.backend.parallelism = b.value("parallelism", cfg.backend.parallelism);
    cfg.backend.rate_per_second = b.value("rate_per_second", cfg.backend.rate_per_second);
    cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
    cfg.backend.request_timeout_seconds =
        b.value("request_timeout_seconds", cfg.backend.request_timeout_seconds);
    cfg.backend.session_path = b.value("session", "");
    cfg.backend.record_path = b.value("record", "");
  }
  if (j.contains("paradigms")) {
    if (!j["paradigms"].is_array()) throw ConfigError("paradigms must be an array");
    for (const auto& p : j["paradigms"]) cfg.paradigms.push_back(detail::parse_paradigm(p));
  }
  if (j.contains("evaluation")) {
    const nlohmann::json& e = j["evaluation"];
    if (e.contains("augmented_dirs")) {
      for (const auto& d : e["augmented_dirs"])
        cfg.evaluation.augmented_dirs.push_back(d.get<std::string>());
    }
    cfg.evaluation.timeout_seconds = e.value("timeout_seconds", cfg.evaluation.timeout_seconds);
    cfg.evaluation.lenient_numeric = e.value("lenient_numeric", cfg.evaluation.lenient_numeric);
    cfg.evaluation.strip_distinct = e.value("strip_distinct", cfg.evaluation.strip_distinct);
  }
  if (j.contains("match")) cfg.match = detail::parse_match(j["match"]);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

// Environment overrides sit between file values and command-line flags:
// flag > env > file. Secrets (the API key itself) only ever come from the
// environment.
inline void apply_env_overrides(RunConfig& cfg) {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  if (std::string v = env("NL2SQL_ENDPOINT"); !v.empty()) cfg.backend.endpoint = v;
  if (std::string v = env("NL2SQL_MODEL"); !v.empty()) cfg.backend.model = v;
  if (std::string v = env("NL2SQL_BACKEND"); !v.empty()) cfg.backend.type = v;
  if (std::string v = env("NL2SQL_SESSION"); !v.empty()) cfg.backend.session_path = v;
  if (std::string v = env("NL2SQL_DATABASES_DIR"); !v.empty()) cfg.paths.databases_dir = v;
  if (std::string v = env("NL2SQL_OUTPUT_DIR"); !v.empty()) cfg.paths.output_dir = v;
}

inline RunConfig load_run_config(const std::string& path, bool with_env = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  RunConfig cfg = parse_run_config(j);
  if (with_env) apply_env_overrides(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Backend construction
// ---------------------------------------------------------------------------

inline std::shared_ptr<CompletionClient> make_backend(const BackendConfig& backend) {
  std::shared_ptr<CompletionClient> client;
  if (backend.type == "replay") {
    client = replay_session(backend.session_path);
  } else if (backend.type == "http") {
    HttpClientConfig http;
    http.endpoint = backend.endpoint;
    if (const char* key = std::getenv(backend.api_key_env.c_str())) http.api_key = key;
    http.model = backend.model;
    http.parallelism = backend.parallelism;
    http.rate_per_second = backend.rate_per_second;
    http.max_retries = backend.max_retries;
    http.request_timeout_seconds = backend.request_timeout_seconds;
    client = std::make_shared<HttpCompletionClient>(http);
  } else {
    throw ConfigError("unknown backend type \"" + backend.type + "\"");
  }
  if (!backend.record_path.empty()) client = record_session(client, backend.record_path);
  return client;
}

// ---------------------------------------------------------------------------
// Evaluation plumbing
// ---------------------------------------------------------------------------

// Augmented copies of one database: <dir>/<db_id>/<db_id>.sqlite for each
// configured directory. Only existing files are returned; eval_ts treats
// configured-but-missing copies as unevaluable, which load-time filtering
// here would silently hide, so missing paths are kept.
inline std::vector<std::string> augmented_paths_for(const EvaluationConfig& eval,
                                                    const std::string& db_id) {
  std::vector<std::string> out;
  for (const std::string& dir : eval.augmented_dirs) {
    std::filesystem::path p = std::filesystem::path(dir) / db_id / (db_id + ".sqlite");
    out.push_back(p.string());
  }
  return out;
}

inline EvalOptions eval_options_from(const EvaluationConfig& eval) {
  EvalOptions opts;
  opts.exec.timeout_seconds = eval.timeout_seconds;
  opts.exec.lenient_numeric = eval.lenient_numeric;
  opts.strip_distinct_compat = eval.strip_distinct;
  return opts;
}

}  // namespace nl2sql
