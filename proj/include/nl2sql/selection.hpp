#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Selection sets
// ---------------------------------------------------------------------------

enum class SelectionMode { kGroundTruth, kProgramAided, kRetrieval };
enum class SelectionIntegration { kHard, kSoft };

inline std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::kGroundTruth: return "ground_truth";
    case SelectionMode::kProgramAided: return "program_aided";
    case SelectionMode::kRetrieval: return "retrieval";
  }
  return "ground_truth";
}

inline std::string_view to_string(SelectionIntegration i) {
  return i == SelectionIntegration::kHard ? "hard" : "soft";
}

// A subset of a schema: tables and qualified "table.column" names, both
// in original spelling and schema order.
struct SelectionSet {
  std::vector<std::string> tables;
  std::vector<std::string> columns;
  SelectionMode mode = SelectionMode::kGroundTruth;
  SelectionIntegration integration = SelectionIntegration::kHard;
  // Retrieval populates per-column similarity scores, keyed like columns.
  std::map<std::string, double> scores;

  bool empty() const { return tables.empty() && columns.empty(); }

  bool has_table(std::string_view name) const {
    for (const auto& t : tables)
      if (util::iequals(t, name)) return true;
    return false;
  }
  bool has_column(std::string_view qualified) const {
    for (const auto& c : columns)
      if (util::iequals(c, qualified)) return true;
    return false;
  }
};

inline nlohmann::json to_json(const SelectionSet& sel, const std::string& db_id,
                              const std::string& question_id) {
  nlohmann::json j;
  j["db_id"] = db_id;
  j["question_id"] = question_id;
  j["tables"] = sel.tables;
  j["columns"] = sel.columns;
  j["mode"] = std::string(to_string(sel.mode));
  j["integration"] = std::string(to_string(sel.integration));
  if (!sel.scores.empty()) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [k, v] : sel.scores) s[k] = v;
    j["scores"] = s;
  }
  return j;
}

inline SelectionSet selection_from_json(const nlohmann::json& j) {
  SelectionSet sel;
  for (const auto& t : j.value("tables", nlohmann::json::array())) sel.tables.push_back(t);
  for (const auto& c : j.value("columns", nlohmann::json::array())) sel.columns.push_back(c);
  std::string mode = j.value("mode", "ground_truth");
  sel.mode = mode == "program_aided" ? SelectionMode::kProgramAided
             : mode == "retrieval"   ? SelectionMode::kRetrieval
                                     : SelectionMode::kGroundTruth;
  sel.integration = j.value("integration", "hard") == std::string("soft")
                        ? SelectionIntegration::kSoft
                        : SelectionIntegration::kHard;
  if (j.contains("scores")) {
    for (auto it = j["scores"].begin(); it != j["scores"].end(); ++it)
      sel.scores[it.key()] = it.value().get<double>();
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Lexical SQL reference extraction
// ---------------------------------------------------------------------------

namespace detail {

struct SqlToken {
  enum class Kind { kWord, kQuotedIdent, kStringLiteral, kPunct } kind;
  std::string text;  // unquoted content for identifiers/literals
};

inline bool is_sql_keyword(std::string_view word) {
  static const std::set<std::string> kKeywords = {
      "select", "from",   "where",  "join",   "inner",    "left",   "right", "full",
      "outer",  "cross",  "natural", "on",    "and",      "or",     "not",   "in",
      "exists", "as",     "group",  "by",     "order",    "having", "limit", "offset",
      "union",  "all",    "intersect", "except", "distinct", "case", "when",  "then",
      "else",   "end",    "like",   "between", "is",      "null",   "asc",   "desc",
      "cast",   "with",   "using",  "values"};
  return kKeywords.count(util::to_lower(word)) > 0;
}

inline std::vector<SqlToken> tokenize_sql(std::string_view sql) {
  std::vector<SqlToken> tokens;
  size_t i = 0;
  auto read_quoted = [&](char close) {
    std::string content;
    ++i;  // past the opening quote
    while (i < sql.size()) {
      if (sql[i] == close) {
        if (i + 1 < sql.size() && sql[i + 1] == close) {
          content.push_back(close);  // doubled quote escape
          i += 2;
          continue;
        }
        ++i;
        break;
      }
      content.push_back(sql[i++]);
    }
    return content;
  };
  while (i < sql.size()) {
    char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '`') {
      tokens.push_back({SqlToken::Kind::kQuotedIdent, read_quoted('`')});
    } else if (c == '"') {
      tokens.push_back({SqlToken::Kind::kQuotedIdent, read_quoted('"')});
    } else if (c == '[') {
      std::string content;
      ++i;
      while (i < sql.size() && sql[i] != ']') content.push_back(sql[i++]);
      if (i < sql.size()) ++i;  // past ']'
      tokens.push_back({SqlToken::Kind::kQuotedIdent, content});
    } else if (c == '\'') {
      tokens.push_back({SqlToken::Kind::kStringLiteral, read_quoted('\'')});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t b = i;
      while (i < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_'))
        ++i;
      tokens.push_back({SqlToken::Kind::kWord, std::string(sql.substr(b, i - b))});
    } else {
      tokens.push_back({SqlToken::Kind::kPunct, std::string(1, c)});
      ++i;
    }
  }
  return tokens;
}

inline bool is_identifier_token(const SqlToken& t) {
  return t.kind == SqlToken::Kind::kWord || t.kind == SqlToken::Kind::kQuotedIdent;
}

}  // namespace detail

// Lexically extracts the tables and columns a SQL statement touches.
// Tables are the schema names that follow FROM/JOIN (aliases tracked and
// resolved, subqueries scanned by the same token walk); columns are the
// selected tables' column names found anywhere in the statement, with
// qualified references attributed to the resolved table and bare names
// attributed to every selected table that has such a column. This is a
// deliberate over-approximation: no SQL grammar, just tokens against the
// schema vocabulary.
//
// Throws UnparseableError only when the statement contains neither a
// FROM/JOIN clause nor any known table name to anchor on.
inline SelectionSet extract_references(std::string_view sql, const DatabaseSchema& schema,
                                       SelectionMode mode = SelectionMode::kGroundTruth) {
  using detail::SqlToken;
  std::vector<SqlToken> tokens = detail::tokenize_sql(sql);

  bool saw_from_or_join = false;
  std::set<int> selected_tables;                  // table ordinals
  std::map<std::string, int> alias_to_table;      // lower-cased alias -> ordinal
  std::vector<bool> consumed(tokens.size(), false);

  auto table_of = [&](const std::string& name) { return find_table(schema, name); };

  // Pass 1: FROM/JOIN clauses define the table universe and aliases.
  for (size_t i = 0; i < tokens.size(); ++i) {
    const SqlToken& t = tokens[i];
    bool is_from = t.kind == SqlToken::Kind::kWord && util::iequals(t.text, "from");
    bool is_join = t.kind == SqlToken::Kind::kWord && util::iequals(t.text, "join");
    if (!is_from && !is_join) continue;
    saw_from_or_join = true;
    size_t j = i + 1;
    for (;;) {  // one or more comma-separated table references (FROM only)
      if (j >= tokens.size()) break;
      if (tokens[j].kind == SqlToken::Kind::kPunct && tokens[j].text == "(") break;  // subquery
      if (!detail::is_identifier_token(tokens[j])) break;
      if (tokens[j].kind == SqlToken::Kind::kWord && detail::is_sql_keyword(tokens[j].text)) break;

      int table = table_of(tokens[j].text);
      if (table >= 0) {
        selected_tables.insert(table);
        consumed[j] = true;
      }
      ++j;
      // Optional alias: "AS alias" or a bare non-keyword identifier.
      if (j < tokens.size() && tokens[j].kind == SqlToken::Kind::kWord &&
          util::iequals(tokens[j].text, "as")) {
        consumed[j] = true;
        ++j;
      }
      if (j < tokens.size() && detail::is_identifier_token(tokens[j]) &&
          !(tokens[j].kind == SqlToken::Kind::kWord && detail::is_sql_keyword(tokens[j].text)) &&
          !(j + 1 < tokens.size() && tokens[j + 1].kind == SqlToken::Kind::kPunct &&
            tokens[j + 1].text == ".")) {
        if (table >= 0) alias_to_table[util::to_lower(tokens[j].text)] = table;
        consumed[j] = true;
        ++j;
      }
      if (is_from && j < tokens.size() && tokens[j].kind == SqlToken::Kind::kPunct &&
          tokens[j].text == ",") {
        ++j;
        continue;
      }
      break;
    }
  }

  if (!saw_from_or_join) {
    // Last resort: any known table name mentioned anywhere anchors the
    // extraction; otherwise the statement is not attributable at all.
    bool any_table = false;
    for (const SqlToken& t : tokens) {
      if (detail::is_identifier_token(t) && table_of(t.text) >= 0) {
        any_table = true;
        break;
      }
    }
    if (!any_table)
      throw UnparseableError("no FROM/JOIN clause and no known table name in statement");
    for (size_t i = 0; i < tokens.size(); ++i) {
      int table = table_of(tokens[i].text);
      if (detail::is_identifier_token(tokens[i]) && table >= 0) {
        selected_tables.insert(table);
        consumed[i] = true;
      }
    }
  }

  // Pass 2: qualified references "qualifier.column".
  std::set<std::pair<int, int>> columns;  // (table ordinal, column ordinal)
  for (size_t i = 0; i + 2 < tokens.size(); ++i) {
    if (!(tokens[i + 1].kind == SqlToken::Kind::kPunct && tokens[i + 1].text == ".")) continue;
    if (!detail::is_identifier_token(tokens[i]) || !detail::is_identifier_token(tokens[i + 2]))
      continue;
    std::string qualifier = util::to_lower(tokens[i].text);
    int table = -1;
    auto alias_it = alias_to_table.find(qualifier);
    if (alias_it != alias_to_table.end()) table = alias_it->second;
    if (table < 0) table = table_of(tokens[i].text);
    if (table < 0) continue;
    selected_tables.insert(table);
    int col = find_column(schema.tables[table], tokens[i + 2].text);
    if (col >= 0) columns.insert({table, col});
    consumed[i] = consumed[i + 1] = consumed[i + 2] = true;
  }

  // Pass 3: bare identifiers matching columns of any selected table.
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (consumed[i] || !detail::is_identifier_token(tokens[i])) continue;
    if (tokens[i].kind == SqlToken::Kind::kWord && detail::is_sql_keyword(tokens[i].text))
      continue;
    for (int table : selected_tables) {
      int col = find_column(schema.tables[table], tokens[i].text);
      if (col >= 0) columns.insert({table, col});
    }
  }

  SelectionSet sel;
  sel.mode = mode;
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    if (selected_tables.count(static_cast<int>(t))) sel.tables.push_back(schema.tables[t].name);
  }
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    for (size_t c = 0; c < schema.tables[t].columns.size(); ++c) {
      if (columns.count({static_cast<int>(t), static_cast<int>(c)}))
        sel.columns.push_back(schema.tables[t].name + "." + schema.tables[t].columns[c].name);
    }
  }
  return sel;
}

// Ground-truth selection: the references the reference SQL itself uses.
inline SelectionSet ground_truth_selection(const QuestionTask& task,
                                           const DatabaseSchema& schema) {
  if (task.gold_sql.empty())
    throw MissingGoldError("question " + task.question_id + " has no reference SQL");
  return extract_references(task.gold_sql, schema, SelectionMode::kGroundTruth);
}

// ---------------------------------------------------------------------------
// Retrieval-based selection
// ---------------------------------------------------------------------------

// Text-embedding backend. Implementations must be deterministic for a
// given input; vectors are L2-normalized (or all-zero for degenerate
// input).
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

// Deterministic offline embedder: character trigrams feature-hashed into
// a fixed-width vector. No external model, stable across platforms.
class HashingTrigramEmbedder : public Embedder {
 public:
  explicit HashingTrigramEmbedder(size_t dim = 512) : dim_(dim) {
    if (dim_ == 0) throw EmbedderError("embedding dimension must be positive");
  }

  std::vector<double> embed(const std::string& text) override {
    std::vector<double> v(dim_, 0.0);
    std::string norm = normalize(text);
    if (norm.empty()) return v;
    if (norm.size() < 3) {
      v[util::fnv1a64(norm) % dim_] += 1.0;
    } else {
      for (size_t i = 0; i + 3 <= norm.size(); ++i)
        v[util::fnv1a64(std::string_view(norm).substr(i, 3)) % dim_] += 1.0;
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 0.0) {
      double inv = 1.0 / std::sqrt(norm2);
      for (double& x : v) x *= inv;
    }
    return v;
  }

 private:
  static std::string normalize(const std::string& text) {
    std::string out;
    bool last_space = true;
    for (unsigned char c : text) {
      if (std::isspace(c)) {
        if (!last_space) out.push_back(' ');
        last_space = true;
      } else {
        out.push_back(static_cast<char>(std::tolower(c)));
        last_space = false;
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
  }

  size_t dim_;
};

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw EmbedderError("embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Natural-language rendering of one column, the retrieval unit:
//   Column name 'size' of type 'STRING' from the table 'package'.
//   Description: 'package size dimensions'. Value examples: 'small', ...
// Optional clauses are omitted when the schema lacks them; embedded
// apostrophes are doubled.
inline std::string build_column_sentence(const DatabaseSchema& schema, int table_ordinal,
                                         int column_ordinal) {
  if (table_ordinal < 0 || table_ordinal >= static_cast<int>(schema.tables.size()))
    throw OutOfRangeError("table ordinal out of range");
  const TableSchema& table = schema.tables[table_ordinal];
  if (column_ordinal < 0 || column_ordinal >= static_cast<int>(table.columns.size()))
    throw OutOfRangeError("column ordinal out of range");
  const ColumnSpec& col = table.columns[column_ordinal];

  auto q = [](std::string_view s) {
    std::string out = "'";
    for (char c : s) {
      out.push_back(c);
      if (c == '\'') out.push_back('\'');
    }
    out.push_back('\'');
    return out;
  };
  auto type_name = [](DataType t) -> std::string {
    switch (t) {
      case DataType::kText: return "STRING";
      case DataType::kNumber: return "NUMBER";
      case DataType::kTime: return "TIME";
      case DataType::kBoolean: return "BOOLEAN";
      case DataType::kOthers: return "OTHERS";
    }
    return "OTHERS";
  };

  std::string sentence = "Column name " + q(col.name) + " of type " + q(type_name(col.data_type)) +
                         " from the table " + q(table.name) + ".";
  if (!col.description.empty()) sentence += " Description: " + q(col.description) + ".";
  if (!col.sample_values.empty()) {
    std::string vals;
    size_t n = std::min<size_t>(3, col.sample_values.size());
    for (size_t i = 0; i < n; ++i) {
      if (i > 0) vals += ", ";
      vals += q(col.sample_values[i]);
    }
    sentence += " Value examples: " + vals + ".";
  }
  return sentence;
}

// Ranks every column by cosine similarity between the question embedding
// and the column-sentence embedding; keeps the global top_k (ties broken
// by schema order). Tables of the kept columns form the table selection.
inline SelectionSet retrieve_columns(const std::string& question, const DatabaseSchema& schema,
                                     Embedder& embedder, size_t top_k) {
  std::vector<double> qv = embedder.embed(question);
  struct Scored {
    int table, column;
    double score;
  };
  std::vector<Scored> scored;
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    for (size_t c = 0; c < schema.tables[t].columns.size(); ++c) {
      std::vector<double> cv =
          embedder.embed(build_column_sentence(schema, static_cast<int>(t), static_cast<int>(c)));
      scored.push_back(
          {static_cast<int>(t), static_cast<int>(c), cosine_similarity(qv, cv)});
    }
  }
  // Stable sort on descending score keeps schema order among ties.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  if (scored.size() > top_k) scored.resize(top_k);

  SelectionSet sel;
  sel.mode = SelectionMode::kRetrieval;
  std::set<std::pair<int, int>> keep;
  std::set<int> keep_tables;
  for (const Scored& s : scored) {
    keep.insert({s.table, s.column});
    keep_tables.insert(s.table);
    sel.scores[schema.tables[s.table].name + "." + schema.tables[s.table].columns[s.column].name] =
        s.score;
  }
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    if (keep_tables.count(static_cast<int>(t))) sel.tables.push_back(schema.tables[t].name);
    for (size_t c = 0; c < schema.tables[t].columns.size(); ++c) {
      if (keep.count({static_cast<int>(t), static_cast<int>(c)}))
        sel.columns.push_back(schema.tables[t].name + "." + schema.tables[t].columns[c].name);
    }
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Selection quality metrics
// ---------------------------------------------------------------------------

// Per-sample scores; a metric is nullopt when undefined for the sample
// (empty reference side) and excluded from averages.
struct SampleScore {
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
  double count = 0.0;  // number of predicted identifiers
};

struct SelectionMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double avg_count = 0.0;
  size_t samples = 0;
};

// Scores one predicted identifier set against the reference set
// (case-insensitive membership).
inline SampleScore score_identifier_sets(const std::vector<std::string>& predicted,
                                         const std::vector<std::string>& truth) {
  auto lower_set = [](const std::vector<std::string>& v) {
    std::set<std::string> s;
    for (const auto& x : v) s.insert(util::to_lower(x));
    return s;
  };
  std::set<std::string> p = lower_set(predicted), t = lower_set(truth);
  size_t inter = 0;
  for (const auto& x : p) inter += t.count(x);

  SampleScore score;
  score.count = static_cast<double>(p.size());
  if (t.empty()) {
    if (p.empty()) {
      score.recall = 1.0;
      score.precision = 1.0;
      score.f1 = 1.0;
    }
    // Reference empty but prediction not: recall undefined, precision 0.
    else {
      score.precision = 0.0;
    }
  } else if (p.empty()) {
    score.recall = 0.0;  // missed everything; precision undefined
  } else {
    double r = static_cast<double>(inter) / static_cast<double>(t.size());
    double pr = static_cast<double>(inter) / static_cast<double>(p.size());
    score.recall = r;
    score.precision = pr;
    score.f1 = (r + pr) > 0.0 ? 2.0 * r * pr / (r + pr) : 0.0;
  }
  return score;
}

// Column-level convenience wrapper over two selection sets.
inline SampleScore score_selection(const SelectionSet& predicted, const SelectionSet& truth) {
  return score_identifier_sets(predicted.columns, truth.columns);
}

// Averages per-sample scores, skipping undefined entries per metric.
inline SelectionMetrics aggregate_scores(const std::vector<SampleScore>& scores) {
  SelectionMetrics m;
  m.samples = scores.size();
  size_t nr = 0, np = 0, nf = 0;
  double count_sum = 0.0;
  for (const SampleScore& s : scores) {
    if (s.recall) {
      m.recall += *s.recall;
      ++nr;
    }
    if (s.precision) {
      m.precision += *s.precision;
      ++np;
    }
    if (s.f1) {
      m.f1 += *s.f1;
      ++nf;
    }
    count_sum += s.count;
  }
  m.recall = nr > 0 ? m.recall / static_cast<double>(nr) : 0.0;
  m.precision = np > 0 ? m.precision / static_cast<double>(np) : 0.0;
  m.f1 = nf > 0 ? m.f1 / static_cast<double>(nf) : 0.0;
  m.avg_count = scores.empty() ? 0.0 : count_sum / static_cast<double>(scores.size());
  return m;
}

}  // namespace nl2sql
