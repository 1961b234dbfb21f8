#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Cases and per-case results
// ---------------------------------------------------------------------------

struct EvalCase {
  QuestionTask task;
  std::string predicted_sql;
  std::vector<std::string> augmented_db_paths;  // for test-suite accuracy
};

enum class ExVerdict { kPassed, kWrongResult, kPredInvalid, kGoldInvalid };

inline std::string_view to_string(ExVerdict v) {
  switch (v) {
    case ExVerdict::kPassed: return "passed";
    case ExVerdict::kWrongResult: return "wrong_result";
    case ExVerdict::kPredInvalid: return "invalid_prediction";
    case ExVerdict::kGoldInvalid: return "gold_invalid";
  }
  return "wrong_result";
}

struct CaseResult {
  std::string question_id;
  std::string difficulty_label;  // raw label; empty = unlabeled
  ExVerdict ex = ExVerdict::kGoldInvalid;
  std::optional<bool> ts;     // set when test-suite evaluation ran and was judgeable
  bool ts_unevaluable = false;  // a copy was missing or its gold run failed
  std::vector<std::pair<std::string, std::string>> ts_per_db;  // (path, verdict)
};

struct EvalOptions {
  ExecOptions exec;
  // Legacy-benchmark compatibility: strip DISTINCT from both queries
  // before comparing. Off by default — DISTINCT is semantics.
  bool strip_distinct_compat = false;
};

// ---------------------------------------------------------------------------
// Execution accuracy
// ---------------------------------------------------------------------------

// Compares predicted and reference executions on one database. Row order
// participates only when the reference query orders its result.
inline ExVerdict eval_ex(const EvalCase& eval_case, const std::string& db_path,
                         const EvalOptions& opts = {}) {
  if (eval_case.task.gold_sql.empty()) return ExVerdict::kGoldInvalid;
  if (eval_case.predicted_sql.empty())
    throw MissingPredictionError("no prediction recorded for question " +
                                 eval_case.task.question_id);
  std::string gold = eval_case.task.gold_sql;
  std::string pred = eval_case.predicted_sql;
  if (opts.strip_distinct_compat) {
    gold = strip_distinct(gold);
    pred = strip_distinct(pred);
  }
  bool order_sensitive = has_top_level_order_by(eval_case.task.gold_sql);

  Database db(db_path);
  ExecutionOutcome gold_out = execute(db, gold, opts.exec);
  if (!gold_out.ok()) return ExVerdict::kGoldInvalid;
  ExecutionOutcome pred_out = execute(db, pred, opts.exec);
  if (!pred_out.ok()) return ExVerdict::kPredInvalid;
  return result_key(pred_out, order_sensitive) == result_key(gold_out, order_sensitive)
             ? ExVerdict::kPassed
             : ExVerdict::kWrongResult;
}

// ---------------------------------------------------------------------------
// Test-suite accuracy
// ---------------------------------------------------------------------------

struct TsOutcome {
  std::optional<bool> pass;  // unset when unevaluable
  bool unevaluable = false;
  std::vector<std::pair<std::string, std::string>> per_db;  // (path, verdict)
};

// Test-suite accuracy: the prediction must match the reference on the
// original database and on every augmented copy. A missing copy or a
// copy where the reference itself fails makes the case unevaluable
// (excluded, not failed). An empty copy list is a configuration error.
inline TsOutcome eval_ts(const EvalCase& eval_case, const std::string& original_db_path,
                         const EvalOptions& opts = {}) {
  if (eval_case.augmented_db_paths.empty())
    throw ConfigError("test-suite evaluation for question " + eval_case.task.question_id +
                      " has no augmented database copies");
  TsOutcome out;
  std::vector<std::string> all_paths;
  all_paths.push_back(original_db_path);
  for (const std::string& p : eval_case.augmented_db_paths) all_paths.push_back(p);

  bool all_pass = true;
  for (const std::string& path : all_paths) {
    ExVerdict verdict;
    try {
      verdict = eval_ex(eval_case, path, opts);
    } catch (const StorageError&) {
      out.per_db.emplace_back(path, "missing");
      out.unevaluable = true;
      continue;
    }
    out.per_db.emplace_back(path, std::string(to_string(verdict)));
    if (verdict == ExVerdict::kGoldInvalid) {
      // The reference query cannot judge this copy.
      if (path != original_db_path) out.unevaluable = true;
      continue;
    }
    if (verdict != ExVerdict::kPassed) all_pass = false;
  }
  if (!out.unevaluable) out.pass = all_pass;
  return out;
}

// Full per-case evaluation; `with_ts` adds the augmented-copy sweep.
inline CaseResult evaluate_case(const EvalCase& eval_case, const std::string& original_db_path,
                                const EvalOptions& opts = {}, bool with_ts = false) {
  CaseResult r;
  r.question_id = eval_case.task.question_id;
  r.difficulty_label = eval_case.task.difficulty_label;
  r.ex = eval_ex(eval_case, original_db_path, opts);
  if (with_ts && r.ex != ExVerdict::kGoldInvalid) {
    TsOutcome ts = eval_ts(eval_case, original_db_path, opts);
    r.ts = ts.pass;
    r.ts_unevaluable = ts.unevaluable;
    r.ts_per_db = std::move(ts.per_db);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct DifficultyBucket {
  size_t count = 0;   // gold-valid cases in the bucket
  double ex = 0.0;
  std::optional<double> ts;
};

struct MetricsReport {
  double ex = 0.0;
  std::optional<double> ts;
  double invalid_rate = 0.0;
  size_t total_cases = 0;
  size_t ex_denominator = 0;  // gold-valid cases
  size_t ts_denominator = 0;  // gold-valid and test-suite-evaluable cases
  std::vector<std::string> gold_invalid_ids;
  std::vector<std::pair<std::string, std::string>> failures;  // (question_id, class)
  // Bucket order: canonical difficulty labels first, then any raw
  // labels, then "unlabeled".
  std::vector<std::pair<std::string, DifficultyBucket>> per_difficulty;
};

namespace detail {

inline std::string bucket_label(const std::string& raw) {
  if (raw.empty()) return "unlabeled";
  return util::to_lower(util::trim(raw));
}

}  // namespace detail

// Pure aggregation over per-case results. Refuses an empty input: a
// report over nothing is meaningless and hides upstream errors.
inline MetricsReport build_report(const std::vector<CaseResult>& results) {
  if (results.empty()) throw ConfigError("refusing to build a report over zero cases");
  MetricsReport report;
  report.total_cases = results.size();

  size_t ex_pass = 0, invalid = 0, ts_pass = 0;
  bool any_ts = false;
  struct BucketAccum {
    size_t count = 0, ex_pass = 0, ts_count = 0, ts_pass = 0;
  };
  std::map<std::string, BucketAccum> buckets;

  for (const CaseResult& r : results) {
    if (r.ex == ExVerdict::kGoldInvalid) {
      report.gold_invalid_ids.push_back(r.question_id);
      continue;
    }
    ++report.ex_denominator;
    BucketAccum& bucket = buckets[detail::bucket_label(r.difficulty_label)];
    ++bucket.count;
    if (r.ex == ExVerdict::kPassed) {
      ++ex_pass;
      ++bucket.ex_pass;
    } else {
      report.failures.emplace_back(r.question_id, std::string(to_string(r.ex)));
    }
    if (r.ex == ExVerdict::kPredInvalid) ++invalid;

    if (r.ts.has_value()) {
      any_ts = true;
      ++report.ts_denominator;
      ++bucket.ts_count;
      if (*r.ts) {
        ++ts_pass;
        ++bucket.ts_pass;
      } else if (r.ex == ExVerdict::kPassed) {
        report.failures.emplace_back(r.question_id, "ts_divergence");
      }
    }
  }

  if (report.ex_denominator == 0)
    throw ConfigError("every case had an invalid reference query; nothing to score");
  report.ex = static_cast<double>(ex_pass) / static_cast<double>(report.ex_denominator);
  report.invalid_rate =
      static_cast<double>(invalid) / static_cast<double>(report.ex_denominator);
  if (any_ts && report.ts_denominator > 0)
    report.ts = static_cast<double>(ts_pass) / static_cast<double>(report.ts_denominator);

  // Canonical label order, then anything else alphabetically, then the
  // unlabeled bucket.
  std::vector<std::string> order = {"simple", "moderate", "challenging", "easy",
                                    "medium", "hard",     "extra"};
  auto emit = [&](const std::string& label) {
    auto it = buckets.find(label);
    if (it == buckets.end()) return;
    DifficultyBucket b;
    b.count = it->second.count;
    b.ex = it->second.count > 0
               ? static_cast<double>(it->second.ex_pass) / static_cast<double>(it->second.count)
               : 0.0;
    if (it->second.ts_count > 0)
      b.ts = static_cast<double>(it->second.ts_pass) / static_cast<double>(it->second.ts_count);
    report.per_difficulty.emplace_back(label, b);
    buckets.erase(it);
  };
  for (const std::string& label : order) emit(label);
  std::vector<std::string> rest;
  for (const auto& [label, accum] : buckets) {
    if (label != "unlabeled") rest.push_back(label);
  }
  for (const std::string& label : rest) emit(label);
  emit("unlabeled");
  return report;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["ex"] = r.ex;
  if (r.ts) j["ts"] = *r.ts;
  else j["ts"] = nullptr;
  j["invalid_rate"] = r.invalid_rate;
  j["total_cases"] = r.total_cases;
  j["ex_denominator"] = r.ex_denominator;
  j["ts_denominator"] = r.ts_denominator;
  j["gold_invalid"] = r.gold_invalid_ids;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [id, cls] : r.failures) failures.push_back({{"question_id", id}, {"class", cls}});
  j["failures"] = failures;
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& [label, b] : r.per_difficulty) {
    nlohmann::json bj;
    bj["difficulty"] = label;
    bj["count"] = b.count;
    bj["ex"] = b.ex;
    if (b.ts) bj["ts"] = *b.ts;
    else bj["ts"] = nullptr;
    buckets.push_back(std::move(bj));
  }
  j["per_difficulty"] = buckets;
  return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.ex = j.value("ex", 0.0);
  if (j.contains("ts") && j["ts"].is_number()) r.ts = j["ts"].get<double>();
  r.invalid_rate = j.value("invalid_rate", 0.0);
  r.total_cases = j.value("total_cases", size_t{0});
  r.ex_denominator = j.value("ex_denominator", size_t{0});
  r.ts_denominator = j.value("ts_denominator", size_t{0});
  for (const auto& id : j.value("gold_invalid", nlohmann::json::array()))
    r.gold_invalid_ids.push_back(id.get<std::string>());
  for (const auto& f : j.value("failures", nlohmann::json::array()))
    r.failures.emplace_back(f.value("question_id", ""), f.value("class", ""));
  for (const auto& b : j.value("per_difficulty", nlohmann::json::array())) {
    DifficultyBucket bucket;
    bucket.count = b.value("count", size_t{0});
    bucket.ex = b.value("ex", 0.0);
    if (b.contains("ts") && b["ts"].is_number()) bucket.ts = b["ts"].get<double>();
    r.per_difficulty.emplace_back(b.value("difficulty", ""), bucket);
  }
  return r;
}

// Fixed-width human-readable table.
inline std::string render_report_table(const MetricsReport& r) {
  char line[160];
  std::string out;
  out += "difficulty      count       EX       TS\n";
  auto pct = [](double v) { return 100.0 * v; };
  for (const auto& [label, b] : r.per_difficulty) {
    if (b.ts) {
      std::snprintf(line, sizeof(line), "%-14s %6zu %7.2f%% %7.2f%%\n", label.c_str(), b.count,
                    pct(b.ex), pct(*b.ts));
    } else {
      std::snprintf(line, sizeof(line), "%-14s %6zu %7.2f%%        -\n", label.c_str(), b.count,
                    pct(b.ex));
    }
    out += line;
  }
  if (r.ts) {
    std::snprintf(line, sizeof(line), "%-14s %6zu %7.2f%% %7.2f%%\n", "overall",
                  r.ex_denominator, pct(r.ex), pct(*r.ts));
  } else {
    std::snprintf(line, sizeof(line), "%-14s %6zu %7.2f%%        -\n", "overall",
                  r.ex_denominator, pct(r.ex));
  }
  out += line;
  std::snprintf(line, sizeof(line), "invalid predictions: %.2f%%; reference failures: %zu\n",
                pct(r.invalid_rate), r.gold_invalid_ids.size());
  out += line;
  return out;
}

// CSV export: one row per difficulty bucket plus an overall row.
inline std::string render_report_csv(const MetricsReport& r) {
  std::string out = "difficulty,count,ex,ts\n";
  auto fmt = [](double v) { return util::canonical_real(v); };
  for (const auto& [label, b] : r.per_difficulty) {
    out += label + "," + std::to_string(b.count) + "," + fmt(b.ex) + "," +
           (b.ts ? fmt(*b.ts) : std::string("")) + "\n";
  }
  out += "overall," + std::to_string(r.ex_denominator) + "," + fmt(r.ex) + "," +
         (r.ts ? fmt(*r.ts) : std::string("")) + "\n";
  return out;
}

}  // namespace nl2sql
