#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "nl2sql/consistency.hpp"
#include "nl2sql/content.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/llm.hpp"
#include "nl2sql/prompt.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/selection.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Paradigm: one complete prediction configuration
// ---------------------------------------------------------------------------

struct ParadigmConfig {
  std::string id;
  PromptStyle style;

  bool use_selection = false;
  SelectionMode selection_mode = SelectionMode::kGroundTruth;
  SelectionIntegration integration = SelectionIntegration::kSoft;
  int retrieval_top_k = 6;

  int num_samples = 1;
  double temperature = 0.0;
  int max_output_len = 256;
  std::vector<std::string> stop_sequences;

  void validate() const {
    if (id.empty()) throw ConfigError("paradigm id must be non-empty");
    if (num_samples < 1) throw ConfigError("paradigm " + id + ": num_samples must be >= 1");
    if (temperature < 0.0) throw ConfigError("paradigm " + id + ": temperature must be >= 0");
    if (max_output_len < 1) throw ConfigError("paradigm " + id + ": max_output_len must be >= 1");
    if (use_selection && retrieval_top_k < 1 && selection_mode == SelectionMode::kRetrieval)
      throw ConfigError("paradigm " + id + ": retrieval_top_k must be >= 1");
  }
};

struct PipelineOptions {
  MatchConfig match;
  ExecOptions exec;
  int jobs = 1;
  // Replay-backed runs must be byte-reproducible, so wall-clock timing is
  // suppressed (elapsed_ms = 0).
  bool deterministic_timing = false;
  // Question ids already present in the output (resume support).
  std::unordered_set<std::string> skip_question_ids;
  // Predicted SQL per question id, consumed by program-aided selection.
  const std::unordered_map<std::string, std::string>* preliminary_sql = nullptr;
};

struct PipelineResult {
  std::vector<nlohmann::json> predictions;  // question order; skipped/failed omitted
  std::vector<nlohmann::json> failures;     // {question_id, db_id, error}
  size_t skipped = 0;
};

// ---------------------------------------------------------------------------
// Single-question prediction
// ---------------------------------------------------------------------------

namespace detail {

inline SelectionSet select_for_paradigm(const ParadigmConfig& paradigm, const QuestionTask& task,
                                        const DatabaseSchema& schema,
                                        const PipelineOptions& options) {
  SelectionSet sel;
  switch (paradigm.selection_mode) {
    case SelectionMode::kGroundTruth:
      sel = ground_truth_selection(task, schema);
      break;
    case SelectionMode::kProgramAided: {
      if (options.preliminary_sql == nullptr)
        throw ConfigError("paradigm " + paradigm.id +
                          " uses program-aided selection but no preliminary predictions were supplied");
      auto it = options.preliminary_sql->find(task.question_id);
      if (it == options.preliminary_sql->end())
        throw MissingPredictionError("no preliminary SQL for question " + task.question_id);
      sel = extract_references(it->second, schema, SelectionMode::kProgramAided);
      break;
    }
    case SelectionMode::kRetrieval: {
      HashingTrigramEmbedder embedder;
      sel = retrieve_columns(task.question, schema, embedder,
                             static_cast<size_t>(paradigm.retrieval_top_k));
      break;
    }
  }
  sel.integration = paradigm.integration;
  return sel;
}

}  // namespace detail

// Runs one question through one paradigm: selection (optional), content
// matching (optional), prompt assembly, sampling, execution, and
// consistency selection. Returns the prediction record.
inline nlohmann::json predict_question(const QuestionTask& task, const DatabaseSchema& schema,
                                       CompletionClient& client, const ParadigmConfig& paradigm,
                                       const PipelineOptions& options = {},
                                       const std::vector<Demonstration>& demonstrations = {}) {
  auto started = std::chrono::steady_clock::now();

  std::optional<SelectionSet> selection;
  PromptStyle style = paradigm.style;
  if (paradigm.use_selection) {
    selection = detail::select_for_paradigm(paradigm, task, schema, options);
    style = apply_selection(style, *selection);
  }

  std::optional<ContentMatchSet> content;
  if (style.include_content_values)
    content = extract_content(task.question, schema, options.match);

  PromptBundle bundle = build_prompt(schema, task, style, demonstrations,
                                     content ? &*content : nullptr,
                                     selection ? &*selection : nullptr);

  CompletionRequest request;
  request.prompt = bundle.rendered;
  request.temperature = paradigm.temperature;
  request.num_samples = paradigm.num_samples;
  request.max_output_len = paradigm.max_output_len;
  request.stop_sequences = paradigm.stop_sequences;
  CompletionResponse response = client.complete(request);

  std::vector<SqlCandidate> candidates;
  bool all_weighted = true;
  for (size_t i = 0; i < response.samples.size(); ++i) {
    SqlCandidate cand;
    cand.sql = util::trim(response.samples[i].text);
    cand.source.paradigm_id = paradigm.id;
    cand.source.sample_index = i;
    // Group mass aggregates sequence probabilities, so lift reported
    // log-probabilities out of log space.
    if (response.samples[i].logprob)
      cand.weight = std::exp(*response.samples[i].logprob);
    else
      all_weighted = false;
    candidates.push_back(std::move(cand));
  }
  if (candidates.empty())
    throw MalformedResponseError("backend returned zero samples for question " + task.question_id);

  if (schema.storage_path.empty())
    throw StorageError("database " + schema.db_id + " has no storage path");
  Database db(schema.storage_path);
  execute_candidates(candidates, db, options.exec);
  SelectionResult chosen = consistency_select(candidates, /*use_weights=*/all_weighted);

  long elapsed_ms = 0;
  if (!options.deterministic_timing) {
    elapsed_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                       std::chrono::steady_clock::now() - started)
                                       .count());
  }
  return to_prediction_json(task.question_id, task.db_id, paradigm.id, chosen, candidates,
                            elapsed_ms);
}

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

// Runs every task through one paradigm. Per-question failures are
// recorded and do not abort the batch; outputs preserve question order
// regardless of --jobs.
inline PipelineResult run_paradigm(const std::map<std::string, DatabaseSchema>& catalog,
                                   const std::vector<QuestionTask>& tasks,
                                   CompletionClient& client, const ParadigmConfig& paradigm,
                                   const PipelineOptions& options = {},
                                   const std::vector<Demonstration>& demonstrations = {}) {
  paradigm.validate();
  PipelineResult result;

  struct Slot {
    std::optional<nlohmann::json> prediction;
    std::optional<nlohmann::json> failure;
    bool skipped = false;
  };
  std::vector<Slot> slots(tasks.size());

  util::parallel_for(tasks.size(), options.jobs, [&](size_t i) {
    const QuestionTask& task = tasks[i];
    if (options.skip_question_ids.count(task.question_id)) {
      slots[i].skipped = true;
      return;
    }
    try {
      auto it = catalog.find(task.db_id);
      if (it == catalog.end())
        throw UnknownDatabaseError("question " + task.question_id +
                                   " references unknown database " + task.db_id);
      slots[i].prediction =
          predict_question(task, it->second, client, paradigm, options, demonstrations);
    } catch (const Error& e) {
      slots[i].failure = {{"question_id", task.question_id},
                          {"db_id", task.db_id},
                          {"error", e.what()}};
    }
  });

  for (Slot& slot : slots) {
    if (slot.skipped) ++result.skipped;
    if (slot.prediction) result.predictions.push_back(std::move(*slot.prediction));
    if (slot.failure) result.failures.push_back(std::move(*slot.failure));
  }
  return result;
}

// Merges per-paradigm prediction files by majority vote over execution
// results, ties broken by the given paradigm priority order (defaults to
// input order). Questions present in only one file pass through.
inline PipelineResult combine_predictions(
    const std::map<std::string, DatabaseSchema>& catalog, const std::vector<QuestionTask>& tasks,
    const std::vector<std::pair<std::string, std::unordered_map<std::string, std::string>>>&
        per_paradigm,
    const PipelineOptions& options = {}, std::vector<std::string> priority = {}) {
  if (per_paradigm.empty()) throw EmptyInputError("no paradigm prediction sets to combine");
  if (priority.empty()) {
    for (const auto& [id, preds] : per_paradigm) priority.push_back(id);
  }

  PipelineResult result;
  struct Slot {
    std::optional<nlohmann::json> prediction;
    std::optional<nlohmann::json> failure;
    bool skipped = false;
  };
  std::vector<Slot> slots(tasks.size());

  util::parallel_for(tasks.size(), options.jobs, [&](size_t i) {
    const QuestionTask& task = tasks[i];
    if (options.skip_question_ids.count(task.question_id)) {
      slots[i].skipped = true;
      return;
    }
    try {
      std::vector<std::pair<std::string, SqlCandidate>> entries;
      for (const auto& [paradigm_id, predictions] : per_paradigm) {
        auto it = predictions.find(task.question_id);
        if (it == predictions.end()) continue;
        SqlCandidate cand;
        cand.sql = it->second;
        cand.source.paradigm_id = paradigm_id;
        entries.emplace_back(paradigm_id, std::move(cand));
      }
      if (entries.empty())
        throw MissingPredictionError("question " + task.question_id +
                                     " is absent from every paradigm's predictions");
      auto cat = catalog.find(task.db_id);
      if (cat == catalog.end())
        throw UnknownDatabaseError("question " + task.question_id +
                                   " references unknown database " + task.db_id);
      if (cat->second.storage_path.empty())
        throw StorageError("database " + task.db_id + " has no storage path");
      Database db(cat->second.storage_path);
      SelectionResult chosen = cross_paradigm_select(entries, db, options.exec, priority);

      std::vector<SqlCandidate> executed;
      for (auto& [id, cand] : entries) executed.push_back(cand);
      slots[i].prediction = to_prediction_json(task.question_id, task.db_id, "combined", chosen,
                                               executed, /*elapsed_ms=*/0);
    } catch (const Error& e) {
      slots[i].failure = {{"question_id", task.question_id},
                          {"db_id", task.db_id},
                          {"error", e.what()}};
    }
  });

  for (Slot& slot : slots) {
    if (slot.skipped) ++result.skipped;
    if (slot.prediction) result.predictions.push_back(std::move(*slot.prediction));
    if (slot.failure) result.failures.push_back(std::move(*slot.failure));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prediction files
// ---------------------------------------------------------------------------

inline std::string render_prediction_jsonl(const PipelineResult& result) {
  std::string out;
  for (const nlohmann::json& rec : result.predictions) out += rec.dump() + "\n";
  return out;
}

// Question ids already present in a predictions file; used by --resume.
inline std::unordered_set<std::string> scan_completed_questions(const std::string& path) {
  std::unordered_set<std::string> ids;
  std::vector<std::string> lines;
  try {
    lines = util::read_lines(path);
  } catch (const IoError&) {
    return ids;  // no prior output: nothing to skip
  }
  for (const std::string& line : lines) {
    std::string t = util::trim(line);
    if (t.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(t, nullptr, /*allow_exceptions=*/false);
    if (rec.is_object() && rec.contains("question_id") && rec["question_id"].is_string())
      ids.insert(rec["question_id"].get<std::string>());
  }
  return ids;
}

// chosen_sql per question id from a predictions JSONL file.
inline std::unordered_map<std::string, std::string> load_predictions_map(const std::string& path) {
  std::unordered_map<std::string, std::string> map;
  for (const std::string& line : util::read_lines(path)) {
    std::string t = util::trim(line);
    if (t.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(t);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("bad prediction line in " + path + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("question_id") || !rec.contains("chosen_sql"))
      throw ParseError("prediction record in " + path +
                       " is missing question_id/chosen_sql");
    map[rec["question_id"].get<std::string>()] = rec["chosen_sql"].get<std::string>();
  }
  return map;
}

}  // namespace nl2sql
