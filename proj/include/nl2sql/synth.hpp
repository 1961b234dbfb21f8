#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/text_match.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Configuration and candidate types
// ---------------------------------------------------------------------------

struct SynthConfig {
  int max_rewrites = 3;
  // Rewrites more similar than this to the original are discarded: they
  // add no diversity to a training set.
  double similarity_ceiling = 0.9;
  // Optional template override; placeholders {max_rewrites}, {schema},
  // {question}, {original_sql}. Empty selects the built-in template.
  std::string prompt_template;

  void validate() const {
    if (max_rewrites < 1) throw ConfigError("max_rewrites must be >= 1");
    if (!(similarity_ceiling > 0.0 && similarity_ceiling < 1.0))
      throw ConfigError("similarity_ceiling must be in (0, 1)");
  }
};

struct SyntheticCandidate {
  std::string source_question_id;
  std::string sql;
  double similarity = 0.0;        // declared by the generator
  double local_similarity = 0.0;  // advisory cross-check, never binding
  bool correct = false;           // execution result matches the original query's
  bool kept = false;              // correct and not too similar
};

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

namespace detail {

inline std::string create_table_ident(std::string_view name) {
  bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) plain = false;
  }
  return plain ? std::string(name) : "`" + std::string(name) + "`";
}

inline std::string create_table_type(DataType t) {
  switch (t) {
    case DataType::kNumber: return "int";
    case DataType::kText: return "text";
    case DataType::kTime: return "datetime";
    case DataType::kBoolean: return "boolean";
    case DataType::kOthers: return "text";
  }
  return "text";
}

// CREATE TABLE rendering with column descriptions as inline comments.
inline std::string render_create_tables(const DatabaseSchema& schema) {
  std::vector<std::string> tables;
  for (const TableSchema& table : schema.tables) {
    std::string block = "CREATE TABLE " + create_table_ident(table.name) + " (\n";
    for (size_t c = 0; c < table.columns.size(); ++c) {
      const ColumnSpec& col = table.columns[c];
      block += "  " + create_table_ident(col.name) + " " + create_table_type(col.data_type);
      if (c + 1 < table.columns.size()) block += ",";
      if (!col.description.empty()) block += " -- " + col.description;
      block += "\n";
    }
    block += ");";
    tables.push_back(std::move(block));
  }
  return util::join(tables, "\n\n");
}

inline constexpr std::string_view kSynthTemplate =
    "You will be provided with a list of tables from a SQL database followed by a natural "
    "language query related to the database and the original SQL query answering the question. "
    "Your job is to understand the natural language queries and generate up to {max_rewrites} "
    "different SQL queries using diverse commands from the original query while answering the "
    "question correctly. You need to make sure to use the same columns from the original query "
    "for the generated query. You will also generate a similarity score between the original "
    "and the generated query based on how closer they are syntactically.\n"
    "\n"
    "Database tables schema are as follows:\n"
    "\n"
    "{schema}\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Original SQL query:\n"
    "{original_sql}\n"
    "\n"
    "Output the generated queries and the similarity scores in a json list as follows:\n"
    "[\n"
    "  {\"sql\":        // generated query-1,\n"
    "   \"similarity\": // similarity score (0.0-1.0) for query-1\n"
    "  },\n"
    "  {\"sql\":        // generated query-2,\n"
    "   \"similarity\": // similarity score (0.0-1.0) for query-2\n"
    "  }\n"
    "]";

inline std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace detail

// Rewrite-generation prompt for one task: schema as commented CREATE
// TABLE statements, the question, the original query, and the JSON
// output instruction asking for up to max_rewrites rewrites.
inline std::string build_synth_prompt(const DatabaseSchema& schema, const QuestionTask& task,
                                      const SynthConfig& config = {}) {
  config.validate();
  if (task.gold_sql.empty())
    throw MissingGoldError("question " + task.question_id +
                           " has no reference SQL to rewrite");
  std::string tpl = config.prompt_template.empty() ? std::string(detail::kSynthTemplate)
                                                   : config.prompt_template;
  tpl = detail::replace_all(std::move(tpl), "{max_rewrites}", std::to_string(config.max_rewrites));
  tpl = detail::replace_all(std::move(tpl), "{schema}", detail::render_create_tables(schema));
  tpl = detail::replace_all(std::move(tpl), "{question}", task.question);
  tpl = detail::replace_all(std::move(tpl), "{original_sql}", task.gold_sql);
  return tpl;
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

struct SynthParseResult {
  std::vector<SyntheticCandidate> candidates;
  int warnings = 0;  // malformed or out-of-range elements skipped
};

namespace detail {

// Locates the first balanced JSON array in free-form text (string-aware
// bracket matching). Returns npos..npos when there is none.
inline std::pair<size_t, size_t> find_json_array(std::string_view text) {
  for (size_t start = text.find('['); start != std::string_view::npos;
       start = text.find('[', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '[' || c == '{') ++depth;
      else if (c == ']' || c == '}') {
        --depth;
        if (depth == 0) return {start, i + 1};
      }
    }
  }
  return {std::string_view::npos, std::string_view::npos};
}

}  // namespace detail

// Extracts rewrite candidates from a completion. The first balanced JSON
// array in the text is taken; elements missing a usable "sql" string or
// an in-range "similarity" number are skipped and counted as warnings.
inline SynthParseResult parse_synth_response(std::string_view response_text,
                                             const std::string& source_question_id = "") {
  auto [begin, end] = detail::find_json_array(response_text);
  if (begin == std::string_view::npos)
    throw NoJsonFoundError("completion contains no JSON array of rewrites");
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(response_text.substr(begin, end - begin));
  } catch (const nlohmann::json::parse_error& e) {
    throw NoJsonFoundError(std::string("rewrite array does not parse as JSON: ") + e.what());
  }
  if (!arr.is_array()) throw NoJsonFoundError("rewrite payload is not a JSON array");

  SynthParseResult out;
  for (const auto& el : arr) {
    if (!el.is_object() || !el.contains("sql") || !el["sql"].is_string() ||
        !el.contains("similarity") || !el["similarity"].is_number()) {
      ++out.warnings;
      continue;
    }
    SyntheticCandidate cand;
    cand.source_question_id = source_question_id;
    cand.sql = util::trim(el["sql"].get<std::string>());
    cand.similarity = el["similarity"].get<double>();
    if (cand.sql.empty() || cand.similarity < 0.0 || cand.similarity > 1.0) {
      ++out.warnings;
      continue;
    }
    out.candidates.push_back(std::move(cand));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution filtering
// ---------------------------------------------------------------------------

struct SynthFilterStats {
  size_t total = 0;
  size_t correct = 0;
  size_t kept = 0;
};

// Marks each candidate: correct when its execution result equals the
// original query's, kept when additionally the declared similarity does
// not exceed the ceiling. Throws GoldInvalidError when the original
// query itself fails — correctness would be undefined.
inline SynthFilterStats filter_candidates(std::vector<SyntheticCandidate>& candidates,
                                          const QuestionTask& task, const std::string& db_path,
                                          const SynthConfig& config = {},
                                          const ExecOptions& exec = {}) {
  config.validate();
  if (task.gold_sql.empty())
    throw MissingGoldError("question " + task.question_id + " has no reference SQL");
  Database db(db_path);
  ExecutionOutcome gold_out = execute(db, task.gold_sql, exec);
  if (!gold_out.ok())
    throw GoldInvalidError("reference SQL for question " + task.question_id +
                           " fails to execute: " + gold_out.error_message);
  bool order_sensitive = has_top_level_order_by(task.gold_sql);
  ResultKey gold_key = result_key(gold_out, order_sensitive);

  SynthFilterStats stats;
  stats.total = candidates.size();
  for (SyntheticCandidate& cand : candidates) {
    cand.local_similarity = sequence_ratio(task.gold_sql, cand.sql);  // advisory only
    ExecutionOutcome out = execute(db, cand.sql, exec);
    cand.correct = out.ok() && result_key(out, order_sensitive) == gold_key;
    cand.kept = cand.correct && cand.similarity <= config.similarity_ceiling;
    if (cand.correct) ++stats.correct;
    if (cand.kept) ++stats.kept;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Training-record emission
// ---------------------------------------------------------------------------

// JSONL training pairs for the kept candidates. Records are readable by
// the question-set loader (db_id / question / SQL keys) and tagged
// synthetic so downstream consumers can tell them apart.
inline std::string render_training_records(const QuestionTask& task,
                                           const std::vector<SyntheticCandidate>& candidates) {
  std::string out;
  int k = 0;
  for (const SyntheticCandidate& cand : candidates) {
    if (!cand.kept) continue;
    nlohmann::json rec;
    rec["question_id"] = task.question_id + "#synth" + std::to_string(k++);
    rec["db_id"] = task.db_id;
    rec["question"] = task.question;
    rec["SQL"] = cand.sql;
    rec["synthetic"] = true;
    rec["source_question_id"] = task.question_id;
    rec["similarity"] = cand.similarity;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace nl2sql
