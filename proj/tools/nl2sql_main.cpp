// Command-line front end: wires schema loading, prompt serialization,
// prediction, selection scoring, content matching, synthesis, and
// evaluation into inspectable subcommands.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "nl2sql/nl2sql.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string databases_dir;  // overrides config
  std::string output_dir;     // overrides config
  int jobs = 0;               // 0 = logical core count
};

struct LoadedRun {
  nl2sql::RunConfig cfg;
  std::map<std::string, nl2sql::DatabaseSchema> catalog;
  std::vector<nl2sql::QuestionTask> tasks;
};

int effective_jobs(const CommonFlags& flags) {
  if (flags.jobs > 0) return flags.jobs;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

LoadedRun load_run(const CommonFlags& flags, bool need_questions = true) {
  LoadedRun run;
  run.cfg = nl2sql::load_run_config(flags.config_path);
  if (!flags.databases_dir.empty()) run.cfg.paths.databases_dir = flags.databases_dir;
  if (!flags.output_dir.empty()) run.cfg.paths.output_dir = flags.output_dir;
  run.cfg.validate();

  std::vector<nl2sql::DatabaseSchema> schemas = nl2sql::load_schema_catalog(
      run.cfg.paths.catalog, run.cfg.paths.catalog_format, run.cfg.paths.databases_dir);
  for (nl2sql::DatabaseSchema& s : schemas) run.catalog.emplace(s.db_id, std::move(s));

  if (need_questions) {
    if (run.cfg.paths.questions.empty())
      throw nl2sql::ConfigError("paths.questions is required for this command");
    std::set<std::string> ids;
    for (const auto& [db_id, schema] : run.catalog) ids.insert(db_id);
    run.tasks = nl2sql::load_question_set(run.cfg.paths.questions, ids);
  }
  return run;
}

const nl2sql::QuestionTask& find_task(const LoadedRun& run, const std::string& question_id) {
  for (const nl2sql::QuestionTask& t : run.tasks) {
    if (t.question_id == question_id) return t;
  }
  throw nl2sql::Error("unknown question id: " + question_id);
}

const nl2sql::DatabaseSchema& find_schema(const LoadedRun& run, const std::string& db_id) {
  auto it = run.catalog.find(db_id);
  if (it == run.catalog.end()) throw nl2sql::UnknownDatabaseError("unknown database: " + db_id);
  return it->second;
}

const nl2sql::ParadigmFileConfig& find_paradigm(const LoadedRun& run, const std::string& id) {
  for (const nl2sql::ParadigmFileConfig& p : run.cfg.paradigms) {
    if (p.paradigm.id == id) return p;
  }
  throw nl2sql::ConfigError("no paradigm with id \"" + id + "\" in config");
}

void ensure_output_dir(const nl2sql::RunConfig& cfg) {
  if (cfg.paths.output_dir.empty())
    throw nl2sql::ConfigError("paths.output_dir is required for this command");
  fs::create_directories(cfg.paths.output_dir);
}

nl2sql::PipelineOptions pipeline_options(const LoadedRun& run, const CommonFlags& flags) {
  nl2sql::PipelineOptions opts;
  opts.match = run.cfg.match;
  opts.exec = nl2sql::eval_options_from(run.cfg.evaluation).exec;
  opts.jobs = effective_jobs(flags);
  opts.deterministic_timing = run.cfg.backend.type == "replay";
  return opts;
}

// ---------------------------------------------------------------------------
// serialize
// ---------------------------------------------------------------------------

struct SerializeArgs {
  CommonFlags common;
  std::string question_id;
  std::string paradigm_id;
  std::string style;  // overrides: concise | verbose
};

int cmd_serialize(const SerializeArgs& args) {
  LoadedRun run = load_run(args.common);
  const nl2sql::QuestionTask& task = find_task(run, args.question_id);
  const nl2sql::DatabaseSchema& schema = find_schema(run, task.db_id);

  nl2sql::ParadigmConfig paradigm;
  if (!args.paradigm_id.empty()) {
    paradigm = find_paradigm(run, args.paradigm_id).paradigm;
  } else {
    paradigm.id = "adhoc";
  }
  if (!args.style.empty()) {
    if (args.style == "concise") paradigm.style.mode = nl2sql::PromptMode::kConcise;
    else if (args.style == "verbose") paradigm.style.mode = nl2sql::PromptMode::kVerbose;
    else throw nl2sql::ConfigError("--style must be concise or verbose");
  }

  std::optional<nl2sql::SelectionSet> selection;
  if (paradigm.use_selection) {
    nl2sql::PipelineOptions opts = pipeline_options(run, args.common);
    std::unordered_map<std::string, std::string> preliminary;
    const nl2sql::ParadigmFileConfig* pf =
        args.paradigm_id.empty() ? nullptr : &find_paradigm(run, args.paradigm_id);
    if (pf && !pf->preliminary_path.empty()) {
      preliminary = nl2sql::load_predictions_map(pf->preliminary_path);
      opts.preliminary_sql = &preliminary;
    }
    selection = nl2sql::detail::select_for_paradigm(paradigm, task, schema, opts);
  }
  nl2sql::PromptStyle style = paradigm.style;
  if (selection) style = nl2sql::apply_selection(style, *selection);
  std::optional<nl2sql::ContentMatchSet> content;
  if (style.include_content_values)
    content = nl2sql::extract_content(task.question, schema, run.cfg.match);

  nl2sql::PromptBundle bundle =
      nl2sql::build_prompt(schema, task, style, {}, content ? &*content : nullptr,
                           selection ? &*selection : nullptr);
  // Byte-exact output: no trailing newline is added.
  std::fwrite(bundle.rendered.data(), 1, bundle.rendered.size(), stdout);
  for (const std::string& note : bundle.truncation_log) std::cerr << "note: " << note << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  CommonFlags common;
  std::vector<std::string> paradigm_filter;
  bool combine = false;
  bool resume = false;
};

int cmd_predict(const PredictArgs& args) {
  LoadedRun run = load_run(args.common);
  ensure_output_dir(run.cfg);
  if (run.cfg.paradigms.empty())
    throw nl2sql::ConfigError("config defines no paradigms; nothing to predict");

  std::vector<const nl2sql::ParadigmFileConfig*> selected;
  if (args.paradigm_filter.empty()) {
    for (const auto& p : run.cfg.paradigms) selected.push_back(&p);
  } else {
    for (const std::string& id : args.paradigm_filter) selected.push_back(&find_paradigm(run, id));
  }

  std::shared_ptr<nl2sql::CompletionClient> client = nl2sql::make_backend(run.cfg.backend);
  size_t total_predictions = 0, total_failures = 0, total_skipped = 0;
  std::vector<std::pair<std::string, std::string>> written_files;  // paradigm id → path

  for (const nl2sql::ParadigmFileConfig* pf : selected) {
    const nl2sql::ParadigmConfig& paradigm = pf->paradigm;
    fs::path out_path =
        fs::path(run.cfg.paths.output_dir) / ("predictions_" + paradigm.id + ".jsonl");

    nl2sql::PipelineOptions opts = pipeline_options(run, args.common);
    std::unordered_map<std::string, std::string> preliminary;
    if (!pf->preliminary_path.empty()) {
      preliminary = nl2sql::load_predictions_map(pf->preliminary_path);
      opts.preliminary_sql = &preliminary;
    }
    if (args.resume) opts.skip_question_ids = nl2sql::scan_completed_questions(out_path.string());

    nl2sql::PipelineResult result =
        nl2sql::run_paradigm(run.catalog, run.tasks, *client, paradigm, opts);

    std::string payload = nl2sql::render_prediction_jsonl(result);
    if (args.resume && fs::exists(out_path)) {
      std::string existing = nl2sql::util::read_file(out_path.string());
      nl2sql::util::write_file(out_path.string(), existing + payload);
    } else {
      nl2sql::util::write_file(out_path.string(), payload);
    }
    written_files.emplace_back(paradigm.id, out_path.string());

    if (!result.failures.empty()) {
      fs::path fail_path =
          fs::path(run.cfg.paths.output_dir) / ("failures_" + paradigm.id + ".jsonl");
      std::string fail_payload;
      for (const json& f : result.failures) fail_payload += f.dump() + "\n";
      nl2sql::util::write_file(fail_path.string(), fail_payload);
      for (const json& f : result.failures)
        std::cerr << "warn: question " << f.value("question_id", "?") << " failed: "
                  << f.value("error", "?") << "\n";
    }
    std::cerr << "paradigm " << paradigm.id << ": " << result.predictions.size() << " predicted, "
              << result.failures.size() << " failed, " << result.skipped << " skipped -> "
              << out_path.string() << "\n";
    total_predictions += result.predictions.size();
    total_failures += result.failures.size();
    total_skipped += result.skipped;
  }

  if (args.combine) {
    if (written_files.size() < 2)
      throw nl2sql::ConfigError("--combine needs at least two paradigms");
    std::vector<std::pair<std::string, std::unordered_map<std::string, std::string>>> maps;
    std::vector<std::string> priority;
    for (const auto& [id, path] : written_files) {
      maps.emplace_back(id, nl2sql::load_predictions_map(path));
      priority.push_back(id);
    }
    nl2sql::PipelineOptions opts = pipeline_options(run, args.common);
    nl2sql::PipelineResult combined =
        nl2sql::combine_predictions(run.catalog, run.tasks, maps, opts, priority);
    fs::path out_path = fs::path(run.cfg.paths.output_dir) / "predictions_combined.jsonl";
    nl2sql::util::write_file(out_path.string(), nl2sql::render_prediction_jsonl(combined));
    std::cerr << "combined: " << combined.predictions.size() << " predicted, "
              << combined.failures.size() << " failed -> " << out_path.string() << "\n";
    total_predictions += combined.predictions.size();
  }

  // Operational failure only when literally nothing succeeded.
  if (total_predictions == 0 && total_skipped == 0 && total_failures > 0) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  CommonFlags common;
  std::string predictions_path;
  std::string report_path;  // default <output_dir>/report.json
  std::string csv_path;
};

int cmd_evaluate(const EvaluateArgs& args) {
  LoadedRun run = load_run(args.common);
  std::unordered_map<std::string, std::string> predictions =
      nl2sql::load_predictions_map(args.predictions_path);

  std::vector<nl2sql::EvalCase> cases;
  for (const nl2sql::QuestionTask& task : run.tasks) {
    auto it = predictions.find(task.question_id);
    if (it == predictions.end()) {
      std::cerr << "warn: no prediction for question " << task.question_id << "; excluded\n";
      continue;
    }
    nl2sql::EvalCase c;
    c.task = task;
    c.task.db_id = task.db_id;
    c.predicted_sql = it->second;
    c.augmented_db_paths = nl2sql::augmented_paths_for(run.cfg.evaluation, task.db_id);
    cases.push_back(std::move(c));
  }
  if (cases.empty()) throw nl2sql::ConfigError("no evaluable (task, prediction) pairs");

  nl2sql::EvalOptions opts = nl2sql::eval_options_from(run.cfg.evaluation);
  bool with_ts = !run.cfg.evaluation.augmented_dirs.empty();

  std::vector<nl2sql::CaseResult> results(cases.size());
  nl2sql::util::parallel_for(cases.size(), effective_jobs(args.common), [&](size_t i) {
    const nl2sql::DatabaseSchema& schema = find_schema(run, cases[i].task.db_id);
    if (schema.storage_path.empty())
      throw nl2sql::StorageError("database " + cases[i].task.db_id + " has no storage path");
    results[i] = nl2sql::evaluate_case(cases[i], schema.storage_path, opts, with_ts);
  });

  nl2sql::MetricsReport report = nl2sql::build_report(results);
  json report_json = nl2sql::to_json(report);

  std::string report_path = args.report_path;
  if (report_path.empty() && !run.cfg.paths.output_dir.empty()) {
    fs::create_directories(run.cfg.paths.output_dir);
    report_path = (fs::path(run.cfg.paths.output_dir) / "report.json").string();
  }
  if (!report_path.empty()) nl2sql::util::write_file(report_path, report_json.dump(2) + "\n");
  if (!args.csv_path.empty())
    nl2sql::util::write_file(args.csv_path, nl2sql::render_report_csv(report));

  std::cout << nl2sql::render_report_table(report);
  return 0;
}

// ---------------------------------------------------------------------------
// select-columns
// ---------------------------------------------------------------------------

struct SelectColumnsArgs {
  CommonFlags common;
  std::string mode = "ground_truth";  // ground_truth | program_aided | retrieval
  std::string integration = "soft";
  std::string preliminary_path;
  int top_k = 6;
  std::string metrics_path;
  std::string selections_path;
};

int cmd_select_columns(const SelectColumnsArgs& args) {
  LoadedRun run = load_run(args.common);

  nl2sql::SelectionMode mode;
  if (args.mode == "ground_truth") mode = nl2sql::SelectionMode::kGroundTruth;
  else if (args.mode == "program_aided") mode = nl2sql::SelectionMode::kProgramAided;
  else if (args.mode == "retrieval") mode = nl2sql::SelectionMode::kRetrieval;
  else throw nl2sql::ConfigError("--mode must be ground_truth, program_aided, or retrieval");
  nl2sql::SelectionIntegration integration;
  if (args.integration == "soft") integration = nl2sql::SelectionIntegration::kSoft;
  else if (args.integration == "hard") integration = nl2sql::SelectionIntegration::kHard;
  else throw nl2sql::ConfigError("--integration must be soft or hard");

  std::unordered_map<std::string, std::string> preliminary;
  if (mode == nl2sql::SelectionMode::kProgramAided) {
    if (args.preliminary_path.empty())
      throw nl2sql::ConfigError("--mode program_aided requires --preliminary <predictions.jsonl>");
    preliminary = nl2sql::load_predictions_map(args.preliminary_path);
  }

  struct Row {
    std::optional<nl2sql::SelectionSet> selection;
    std::optional<nl2sql::SampleScore> table_score, column_score;
    std::string error;
  };
  std::vector<Row> rows(run.tasks.size());

  nl2sql::util::parallel_for(run.tasks.size(), effective_jobs(args.common), [&](size_t i) {
    const nl2sql::QuestionTask& task = run.tasks[i];
    try {
      const nl2sql::DatabaseSchema& schema = find_schema(run, task.db_id);
      nl2sql::SelectionSet sel;
      switch (mode) {
        case nl2sql::SelectionMode::kGroundTruth:
          sel = nl2sql::ground_truth_selection(task, schema);
          break;
        case nl2sql::SelectionMode::kProgramAided: {
          auto it = preliminary.find(task.question_id);
          if (it == preliminary.end())
            throw nl2sql::MissingPredictionError("no preliminary SQL for question " +
                                                 task.question_id);
          sel = nl2sql::extract_references(it->second, schema,
                                           nl2sql::SelectionMode::kProgramAided);
          break;
        }
        case nl2sql::SelectionMode::kRetrieval: {
          nl2sql::HashingTrigramEmbedder embedder;
          sel = nl2sql::retrieve_columns(task.question, schema, embedder,
                                         static_cast<size_t>(args.top_k));
          break;
        }
      }
      sel.integration = integration;
      rows[i].selection = sel;
      nl2sql::SelectionSet truth = nl2sql::ground_truth_selection(task, schema);
      rows[i].table_score = nl2sql::score_identifier_sets(sel.tables, truth.tables);
      rows[i].column_score = nl2sql::score_identifier_sets(sel.columns, truth.columns);
    } catch (const nl2sql::Error& e) {
      rows[i].error = e.what();
    }
  });

  std::vector<nl2sql::SampleScore> table_scores, column_scores;
  std::string selections_payload;
  size_t failed = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    if (!row.error.empty()) {
      ++failed;
      std::cerr << "warn: question " << run.tasks[i].question_id << " failed: " << row.error
                << "\n";
      continue;
    }
    table_scores.push_back(*row.table_score);
    column_scores.push_back(*row.column_score);
    selections_payload +=
        nl2sql::to_json(*row.selection, run.tasks[i].db_id, run.tasks[i].question_id).dump() +
        "\n";
  }
  if (table_scores.empty()) throw nl2sql::Error("selection failed for every question");

  nl2sql::SelectionMetrics table_metrics = nl2sql::aggregate_scores(table_scores);
  nl2sql::SelectionMetrics column_metrics = nl2sql::aggregate_scores(column_scores);
  auto metrics_json = [](const nl2sql::SelectionMetrics& m) {
    return json{{"recall", m.recall},
                {"precision", m.precision},
                {"f1", m.f1},
                {"avg_count", m.avg_count},
                {"samples", m.samples}};
  };
  json out{{"mode", args.mode},
           {"integration", args.integration},
           {"tables", metrics_json(table_metrics)},
           {"columns", metrics_json(column_metrics)},
           {"questions", run.tasks.size()},
           {"failed", failed}};
  if (mode == nl2sql::SelectionMode::kRetrieval) out["top_k"] = args.top_k;

  if (!args.metrics_path.empty()) nl2sql::util::write_file(args.metrics_path, out.dump(2) + "\n");
  if (!args.selections_path.empty())
    nl2sql::util::write_file(args.selections_path, selections_payload);
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// match-content
// ---------------------------------------------------------------------------

struct MatchContentArgs {
  CommonFlags common;
  std::string question_id;  // empty = all
  bool as_json = false;
};

int cmd_match_content(const MatchContentArgs& args) {
  LoadedRun run = load_run(args.common);
  std::vector<const nl2sql::QuestionTask*> tasks;
  if (!args.question_id.empty()) {
    tasks.push_back(&find_task(run, args.question_id));
  } else {
    for (const nl2sql::QuestionTask& t : run.tasks) tasks.push_back(&t);
  }

  json all = json::array();
  for (const nl2sql::QuestionTask* task : tasks) {
    const nl2sql::DatabaseSchema& schema = find_schema(run, task->db_id);
    nl2sql::ContentMatchSet matches =
        nl2sql::extract_content(task->question, schema, run.cfg.match);
    if (args.as_json) {
      json rec{{"question_id", task->question_id},
               {"db_id", task->db_id},
               {"matches", json::array()}};
      for (const nl2sql::ContentMatch& m : matches.matches) {
        rec["matches"].push_back({{"table", m.table},
                                  {"column", m.column},
                                  {"value", m.value},
                                  {"keyword", m.keyword},
                                  {"score", m.score}});
      }
      rec["skipped_columns"] = matches.skipped_columns;
      all.push_back(std::move(rec));
    } else {
      std::cout << "# " << task->question_id << ": " << task->question << "\n";
      std::string lines = nl2sql::render_content_lines(matches);
      if (!lines.empty()) std::cout << lines << "\n";
      if (matches.skipped_columns > 0)
        std::cerr << "warn: " << matches.skipped_columns
                  << " column(s) skipped (distinct-value cap)\n";
    }
  }
  if (args.as_json) std::cout << all.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

struct SynthesizeArgs {
  CommonFlags common;
  int max_rewrites = 3;
  double ceiling = 0.9;
  double temperature = 0.0;
  int max_output_len = 512;
  size_t limit = 0;  // 0 = all questions
  std::string output_path;
  std::string stats_path;
};

int cmd_synthesize(const SynthesizeArgs& args) {
  LoadedRun run = load_run(args.common);
  ensure_output_dir(run.cfg);
  std::shared_ptr<nl2sql::CompletionClient> client = nl2sql::make_backend(run.cfg.backend);

  nl2sql::SynthConfig synth;
  synth.max_rewrites = args.max_rewrites;
  synth.similarity_ceiling = args.ceiling;
  synth.validate();
  nl2sql::ExecOptions exec = nl2sql::eval_options_from(run.cfg.evaluation).exec;

  size_t n = run.tasks.size();
  if (args.limit > 0 && args.limit < n) n = args.limit;

  struct Row {
    std::string records;
    nl2sql::SynthFilterStats stats;
    int warnings = 0;
    std::string error;
  };
  std::vector<Row> rows(n);

  nl2sql::util::parallel_for(n, effective_jobs(args.common), [&](size_t i) {
    const nl2sql::QuestionTask& task = run.tasks[i];
    try {
      const nl2sql::DatabaseSchema& schema = find_schema(run, task.db_id);
      if (schema.storage_path.empty())
        throw nl2sql::StorageError("database " + task.db_id + " has no storage path");
      nl2sql::CompletionRequest request;
      request.prompt = nl2sql::build_synth_prompt(schema, task, synth);
      request.temperature = args.temperature;
      request.num_samples = 1;
      request.max_output_len = args.max_output_len;
      nl2sql::CompletionResponse response = client->complete(request);
      if (response.samples.empty())
        throw nl2sql::MalformedResponseError("backend returned zero samples");
      nl2sql::SynthParseResult parsed =
          nl2sql::parse_synth_response(response.samples[0].text, task.question_id);
      rows[i].warnings = parsed.warnings;
      rows[i].stats =
          nl2sql::filter_candidates(parsed.candidates, task, schema.storage_path, synth, exec);
      rows[i].records = nl2sql::render_training_records(task, parsed.candidates);
    } catch (const nl2sql::Error& e) {
      rows[i].error = e.what();
    }
  });

  std::string payload;
  size_t total = 0, correct = 0, kept = 0, warnings = 0, failed_questions = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) {
      ++failed_questions;
      std::cerr << "warn: question " << run.tasks[i].question_id << " failed: " << rows[i].error
                << "\n";
      continue;
    }
    payload += rows[i].records;
    total += rows[i].stats.total;
    correct += rows[i].stats.correct;
    kept += rows[i].stats.kept;
    warnings += static_cast<size_t>(rows[i].warnings);
  }

  std::string output_path = args.output_path;
  if (output_path.empty())
    output_path = (fs::path(run.cfg.paths.output_dir) / "synthetic.jsonl").string();
  nl2sql::util::write_file(output_path, payload);

  json stats{{"questions", n},
             {"failed_questions", failed_questions},
             {"candidates", total},
             {"correct", correct},
             {"kept", kept},
             {"parse_warnings", warnings},
             {"similarity_ceiling", args.ceiling},
             {"max_rewrites", args.max_rewrites}};
  if (!args.stats_path.empty()) nl2sql::util::write_file(args.stats_path, stats.dump(2) + "\n");
  std::cout << stats.dump(2) << "\n";
  return failed_questions == rows.size() && !rows.empty() ? 1 : 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string input_path;
  std::string format = "table";  // table | csv | json
};

int cmd_report(const ReportArgs& args) {
  json j;
  try {
    j = json::parse(nl2sql::util::read_file(args.input_path));
  } catch (const json::parse_error& e) {
    throw nl2sql::ParseError("report file " + args.input_path + " is not valid JSON: " + e.what());
  }
  nl2sql::MetricsReport report = nl2sql::report_from_json(j);
  if (args.format == "table") std::cout << nl2sql::render_report_table(report);
  else if (args.format == "csv") std::cout << nl2sql::render_report_csv(report);
  else if (args.format == "json") std::cout << nl2sql::to_json(report).dump(2) << "\n";
  else throw nl2sql::ConfigError("--format must be table, csv, or json");
  return 0;
}

void add_common_flags(CLI::App* sub, CommonFlags& flags, bool with_jobs = true) {
  sub->add_option("--config", flags.config_path, "Run configuration JSON file")->required();
  sub->add_option("--databases-dir", flags.databases_dir,
                  "Override the SQLite databases directory");
  sub->add_option("--output-dir", flags.output_dir, "Override the output directory");
  if (with_jobs)
    sub->add_option("--jobs", flags.jobs, "Worker threads (default: logical core count)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-SQL orchestration harness"};
  app.require_subcommand(1);

  SerializeArgs ser;
  CLI::App* ser_cmd = app.add_subcommand("serialize", "Print the exact prompt for one question");
  add_common_flags(ser_cmd, ser.common, /*with_jobs=*/false);
  ser_cmd->add_option("--question-id", ser.question_id, "Question to serialize")->required();
  ser_cmd->add_option("--paradigm", ser.paradigm_id, "Use this paradigm's prompt settings");
  ser_cmd->add_option("--style", ser.style, "Prompt family: concise or verbose");

  PredictArgs pred;
  CLI::App* pred_cmd = app.add_subcommand("predict", "Generate SQL predictions per paradigm");
  add_common_flags(pred_cmd, pred.common);
  pred_cmd->add_option("--paradigm", pred.paradigm_filter,
                       "Only run these paradigm ids (repeatable)");
  pred_cmd->add_flag("--combine", pred.combine,
                     "Merge paradigm outputs by execution-result vote");
  pred_cmd->add_flag("--resume", pred.resume, "Skip questions already in the output files");

  EvaluateArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "Score predictions (EX, and TS when "
                                                    "augmented databases are configured)");
  add_common_flags(ev_cmd, ev.common);
  ev_cmd->add_option("--predictions", ev.predictions_path, "Predictions JSONL file")->required();
  ev_cmd->add_option("--report", ev.report_path, "Report JSON path (default: <output_dir>/report.json)");
  ev_cmd->add_option("--csv", ev.csv_path, "Also write the report as CSV");

  SelectColumnsArgs selc;
  CLI::App* selc_cmd =
      app.add_subcommand("select-columns", "Run table/column selection and score it");
  add_common_flags(selc_cmd, selc.common);
  selc_cmd->add_option("--mode", selc.mode, "ground_truth, program_aided, or retrieval");
  selc_cmd->add_option("--integration", selc.integration, "soft or hard");
  selc_cmd->add_option("--preliminary", selc.preliminary_path,
                       "Predictions JSONL for program-aided mode");
  selc_cmd->add_option("--top-k", selc.top_k, "Columns to retrieve in retrieval mode");
  selc_cmd->add_option("--metrics", selc.metrics_path, "Write metrics JSON here");
  selc_cmd->add_option("--selections", selc.selections_path,
                       "Write per-question selections JSONL here");

  MatchContentArgs mc;
  CLI::App* mc_cmd =
      app.add_subcommand("match-content", "Link question keywords to database values");
  add_common_flags(mc_cmd, mc.common, /*with_jobs=*/false);
  mc_cmd->add_option("--question-id", mc.question_id, "Only this question (default: all)");
  mc_cmd->add_flag("--json", mc.as_json, "Emit JSON instead of text lines");

  SynthesizeArgs sy;
  CLI::App* sy_cmd = app.add_subcommand(
      "synthesize", "Generate, verify, and filter SQL rewrites for training data");
  add_common_flags(sy_cmd, sy.common);
  sy_cmd->add_option("--max-rewrites", sy.max_rewrites, "Rewrites requested per question");
  sy_cmd->add_option("--ceiling", sy.ceiling, "Drop rewrites with declared similarity above this");
  sy_cmd->add_option("--temperature", sy.temperature, "Sampling temperature");
  sy_cmd->add_option("--max-output-len", sy.max_output_len, "Max completion tokens");
  sy_cmd->add_option("--limit", sy.limit, "Only the first N questions (0 = all)");
  sy_cmd->add_option("--output", sy.output_path, "Training records JSONL path");
  sy_cmd->add_option("--stats", sy.stats_path, "Statistics JSON path");

  ReportArgs rep;
  CLI::App* rep_cmd = app.add_subcommand("report", "Render a stored evaluation report");
  rep_cmd->add_option("--input", rep.input_path, "Report JSON file")->required();
  rep_cmd->add_option("--format", rep.format, "table, csv, or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors
  }

  try {
    if (ser_cmd->parsed()) return cmd_serialize(ser);
    if (pred_cmd->parsed()) return cmd_predict(pred);
    if (ev_cmd->parsed()) return cmd_evaluate(ev);
    if (selc_cmd->parsed()) return cmd_select_columns(selc);
    if (mc_cmd->parsed()) return cmd_match_content(mc);
    if (sy_cmd->parsed()) return cmd_synthesize(sy);
    if (rep_cmd->parsed()) return cmd_report(rep);
  } catch (const nl2sql::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nl2sql::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
