#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Core data model
// ---------------------------------------------------------------------------

// Coarse column type vocabulary shared by the benchmark catalogs.
enum class DataType { kNumber, kText, kTime, kBoolean, kOthers };

inline std::string_view to_string(DataType t) {
  switch (t) {
    case DataType::kNumber: return "number";
    case DataType::kText: return "text";
    case DataType::kTime: return "time";
    case DataType::kBoolean: return "boolean";
    case DataType::kOthers: return "others";
  }
  return "others";
}

// Maps a raw catalog/SQL type label onto the coarse vocabulary.
inline DataType data_type_from_label(std::string_view label) {
  std::string t = util::to_lower(util::trim(label));
  if (t == "text" || t == "varchar" || t == "char" || t == "string" || t == "clob")
    return DataType::kText;
  if (t == "number" || t == "int" || t == "integer" || t == "real" || t == "float" ||
      t == "double" || t == "numeric" || t == "decimal" || t == "bigint" || t == "smallint")
    return DataType::kNumber;
  if (t == "time" || t == "date" || t == "datetime" || t == "timestamp" || t == "year")
    return DataType::kTime;
  if (t == "boolean" || t == "bool") return DataType::kBoolean;
  return DataType::kOthers;
}

struct ColumnSpec {
  int table_index = -1;                    // owner table's position in the schema
  std::string name;                        // original (storage) spelling
  DataType data_type = DataType::kOthers;
  std::string description;                 // optional; empty means absent
  std::vector<std::string> sample_values;  // distinct values, capped; see attach_sample_values
};

struct TableSchema {
  std::string name;  // original spelling
  std::vector<ColumnSpec> columns;
  std::vector<int> primary_key_columns;  // ordinals into `columns`
};

// Directed link: (from_table, from_column) references (to_table, to_column).
struct ForeignKeyLink {
  int from_table = -1;
  int from_column = -1;  // ordinal within the source table
  int to_table = -1;
  int to_column = -1;  // ordinal within the target table
};

struct DatabaseSchema {
  std::string db_id;
  std::vector<TableSchema> tables;
  std::vector<ForeignKeyLink> foreign_keys;
  std::string storage_path;  // location of the backing database file; may be empty
};

// Difficulty labels used by the two benchmark families.
enum class Difficulty { kSimple, kModerate, kChallenging, kEasy, kMedium, kHard, kExtra };

inline std::optional<Difficulty> difficulty_from_label(std::string_view label) {
  std::string t = util::to_lower(util::trim(label));
  if (t == "simple") return Difficulty::kSimple;
  if (t == "moderate") return Difficulty::kModerate;
  if (t == "challenging") return Difficulty::kChallenging;
  if (t == "easy") return Difficulty::kEasy;
  if (t == "medium") return Difficulty::kMedium;
  if (t == "hard") return Difficulty::kHard;
  if (t == "extra") return Difficulty::kExtra;
  return std::nullopt;
}

struct QuestionTask {
  std::string question_id;
  std::string db_id;
  std::string question;
  std::string hint;      // auxiliary domain knowledge; empty means absent
  std::string gold_sql;  // reference SQL; empty means absent
  std::string difficulty_label;  // raw label as found in the source; may be empty
  std::optional<Difficulty> difficulty;
};

// ---------------------------------------------------------------------------
// Lookup helpers
// ---------------------------------------------------------------------------

// "table.column" with original spellings; ordinal-based access used by
// selection and reporting code.
inline std::string column_identifier(const DatabaseSchema& schema, int table_ordinal,
                                     int column_ordinal) {
  if (table_ordinal < 0 || table_ordinal >= static_cast<int>(schema.tables.size()))
    throw OutOfRangeError("table ordinal " + std::to_string(table_ordinal) + " out of range for " +
                          schema.db_id);
  const TableSchema& t = schema.tables[table_ordinal];
  if (column_ordinal < 0 || column_ordinal >= static_cast<int>(t.columns.size()))
    throw OutOfRangeError("column ordinal " + std::to_string(column_ordinal) +
                          " out of range for table " + t.name);
  return t.name + "." + t.columns[column_ordinal].name;
}

// Case-insensitive table lookup; -1 when absent.
inline int find_table(const DatabaseSchema& schema, std::string_view name) {
  for (size_t i = 0; i < schema.tables.size(); ++i) {
    if (util::iequals(schema.tables[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

// Case-insensitive column lookup within one table; -1 when absent.
inline int find_column(const TableSchema& table, std::string_view name) {
  for (size_t i = 0; i < table.columns.size(); ++i) {
    if (util::iequals(table.columns[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Catalog loading (Spider-style tables.json, with or without BIRD sidecars)
// ---------------------------------------------------------------------------

enum class CatalogFormat { kSpiderTablesJson, kBirdTablesJson };

namespace detail {

// Minimal RFC-4180 CSV reader: quoted fields, doubled quotes, newlines
// inside quotes. Returns rows of fields; the caller interprets headers.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  size_t i = 0;
  auto end_field = [&] { row.push_back(field), field.clear(); };
  auto end_row = [&] {
    end_field();
    rows.push_back(row), row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallow; the matching \n (if any) ends the row
      if (i + 1 >= text.size() || text[i + 1] != '\n') end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

inline int require_int(const nlohmann::json& v, const char* what) {
  if (!v.is_number_integer()) throw ParseError(std::string("expected integer for ") + what);
  return v.get<int>();
}

// Validates structural constraints that a parsed schema must satisfy.
inline void check_integrity(const DatabaseSchema& schema) {
  for (const TableSchema& t : schema.tables) {
    std::set<std::string> seen;
    for (const ColumnSpec& c : t.columns) {
      if (!seen.insert(util::to_lower(c.name)).second)
        throw IntegrityError("duplicate column name '" + c.name + "' in table '" + t.name +
                             "' of " + schema.db_id);
    }
    for (int pk : t.primary_key_columns) {
      if (pk < 0 || pk >= static_cast<int>(t.columns.size()))
        throw IntegrityError("primary key ordinal out of range in table '" + t.name + "' of " +
                             schema.db_id);
    }
  }
  for (const ForeignKeyLink& fk : schema.foreign_keys) {
    auto ok_side = [&](int t, int c) {
      return t >= 0 && t < static_cast<int>(schema.tables.size()) && c >= 0 &&
             c < static_cast<int>(schema.tables[t].columns.size());
    };
    if (!ok_side(fk.from_table, fk.from_column) || !ok_side(fk.to_table, fk.to_column))
      throw IntegrityError("foreign key does not resolve in " + schema.db_id);
  }
}

}  // namespace detail

// Parses one catalog entry (the per-database object inside tables.json).
inline DatabaseSchema parse_catalog_entry(const nlohmann::json& entry) {
  if (!entry.is_object()) throw ParseError("catalog entry is not an object");
  DatabaseSchema schema;
  if (!entry.contains("db_id") || !entry["db_id"].is_string())
    throw ParseError("catalog entry missing db_id");
  schema.db_id = entry["db_id"].get<std::string>();

  const auto& table_names = entry.value("table_names_original", nlohmann::json::array());
  if (!table_names.is_array() || table_names.empty())
    throw ParseError("catalog entry for " + schema.db_id + " has no table_names_original");
  for (const auto& name : table_names) {
    if (!name.is_string()) throw ParseError("table name is not a string in " + schema.db_id);
    TableSchema t;
    t.name = name.get<std::string>();
    schema.tables.push_back(std::move(t));
  }

  const auto& col_names = entry.value("column_names_original", nlohmann::json::array());
  const auto& col_types = entry.value("column_types", nlohmann::json::array());
  if (col_names.size() != col_types.size())
    throw ParseError("column_names_original/column_types length mismatch in " + schema.db_id);

  // Global column index -> (table ordinal, column ordinal); index 0 is
  // conventionally the pseudo-column [-1, "*"], which owns no table.
  std::vector<std::pair<int, int>> global_to_local(col_names.size(), {-1, -1});
  for (size_t g = 0; g < col_names.size(); ++g) {
    const auto& pair = col_names[g];
    if (!pair.is_array() || pair.size() != 2)
      throw ParseError("malformed column_names_original entry in " + schema.db_id);
    int table_idx = detail::require_int(pair[0], "column table index");
    if (table_idx == -1) continue;  // the "*" pseudo-column
    if (table_idx < 0 || table_idx >= static_cast<int>(schema.tables.size()))
      throw IntegrityError("column references missing table in " + schema.db_id);
    ColumnSpec col;
    col.table_index = table_idx;
    col.name = pair[1].is_string() ? pair[1].get<std::string>() : "";
    if (col.name.empty()) throw ParseError("empty column name in " + schema.db_id);
    col.data_type = col_types[g].is_string()
                        ? data_type_from_label(col_types[g].get<std::string>())
                        : DataType::kOthers;
    TableSchema& owner = schema.tables[table_idx];
    global_to_local[g] = {table_idx, static_cast<int>(owner.columns.size())};
    owner.columns.push_back(std::move(col));
  }

  auto resolve_global = [&](int g, const char* what) -> std::pair<int, int> {
    if (g < 0 || g >= static_cast<int>(global_to_local.size()) || global_to_local[g].first < 0)
      throw IntegrityError(std::string(what) + " references invalid column index in " +
                           schema.db_id);
    return global_to_local[g];
  };

  for (const auto& pk : entry.value("primary_keys", nlohmann::json::array())) {
    // Composite keys may arrive as nested lists; flatten either shape.
    std::vector<int> parts;
    if (pk.is_array()) {
      for (const auto& p : pk) parts.push_back(detail::require_int(p, "primary key"));
    } else {
      parts.push_back(detail::require_int(pk, "primary key"));
    }
    for (int g : parts) {
      auto [t, c] = resolve_global(g, "primary key");
      schema.tables[t].primary_key_columns.push_back(c);
    }
  }

  for (const auto& fk : entry.value("foreign_keys", nlohmann::json::array())) {
    if (!fk.is_array() || fk.size() != 2)
      throw ParseError("malformed foreign_keys entry in " + schema.db_id);
    auto [ft, fc] = resolve_global(detail::require_int(fk[0], "foreign key"), "foreign key");
    auto [tt, tc] = resolve_global(detail::require_int(fk[1], "foreign key"), "foreign key");
    schema.foreign_keys.push_back(ForeignKeyLink{ft, fc, tt, tc});
  }

  detail::check_integrity(schema);
  return schema;
}

// Attaches per-column descriptions from BIRD-style sidecar CSVs found at
// <db_dir>/database_description/<table>.csv. Missing files are fine;
// irregular encodings are decoded lossily.
inline void attach_descriptions_from_csv(DatabaseSchema& schema, const std::string& db_dir);

// Loads a full catalog file (JSON array of per-database entries).
// `databases_dir`, when given, resolves each schema's storage path to
// <databases_dir>/<db_id>/<db_id>.sqlite and (for the BIRD format) the
// description sidecars next to it.
inline std::vector<DatabaseSchema> load_schema_catalog(const std::string& path,
                                                       CatalogFormat format,
                                                       const std::string& databases_dir = "") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse catalog " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError("catalog " + path + " is not a JSON array");
  std::vector<DatabaseSchema> catalog;
  std::set<std::string> ids;
  for (const auto& entry : doc) {
    DatabaseSchema schema = parse_catalog_entry(entry);
    if (!ids.insert(schema.db_id).second)
      throw IntegrityError("duplicate db_id in catalog: " + schema.db_id);
    if (!databases_dir.empty()) {
      std::string db_dir = databases_dir + "/" + schema.db_id;
      schema.storage_path = db_dir + "/" + schema.db_id + ".sqlite";
      if (format == CatalogFormat::kBirdTablesJson) attach_descriptions_from_csv(schema, db_dir);
    }
    catalog.push_back(std::move(schema));
  }
  return catalog;
}

inline void attach_descriptions_from_csv(DatabaseSchema& schema, const std::string& db_dir) {
  for (TableSchema& table : schema.tables) {
    std::string csv_path = db_dir + "/database_description/" + table.name + ".csv";
    std::string raw;
    try {
      raw = util::read_file(csv_path);
    } catch (const IoError&) {
      continue;  // descriptions are optional
    }
    auto rows = detail::parse_csv(util::utf8_sanitize(raw));
    if (rows.empty()) continue;
    // Header row gives the field layout; match on lower-cased names.
    const auto& header = rows[0];
    int col_name_idx = -1, desc_idx = -1, value_desc_idx = -1;
    for (size_t i = 0; i < header.size(); ++i) {
      std::string h = util::to_lower(util::trim(header[i]));
      if (h == "original_column_name") col_name_idx = static_cast<int>(i);
      if (h == "column_description") desc_idx = static_cast<int>(i);
      if (h == "value_description") value_desc_idx = static_cast<int>(i);
    }
    if (col_name_idx < 0) continue;
    for (size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (col_name_idx >= static_cast<int>(row.size())) continue;
      int c = find_column(table, util::trim(row[col_name_idx]));
      if (c < 0) continue;
      std::string desc;
      if (desc_idx >= 0 && desc_idx < static_cast<int>(row.size()))
        desc = util::trim(row[desc_idx]);
      if (desc.empty() && value_desc_idx >= 0 && value_desc_idx < static_cast<int>(row.size()))
        desc = util::trim(row[value_desc_idx]);
      if (!desc.empty()) table.columns[c].description = desc;
    }
  }
}

// ---------------------------------------------------------------------------
// Catalog serialization (round-trips through load_schema_catalog)
// ---------------------------------------------------------------------------

inline nlohmann::json to_catalog_entry_json(const DatabaseSchema& schema) {
  nlohmann::json entry;
  entry["db_id"] = schema.db_id;
  nlohmann::json table_names = nlohmann::json::array();
  nlohmann::json table_names_natural = nlohmann::json::array();
  for (const TableSchema& t : schema.tables) {
    table_names.push_back(t.name);
    table_names_natural.push_back(util::to_lower(t.name));
  }
  entry["table_names_original"] = table_names;
  entry["table_names"] = table_names_natural;

  nlohmann::json col_names = nlohmann::json::array();
  nlohmann::json col_names_natural = nlohmann::json::array();
  nlohmann::json col_types = nlohmann::json::array();
  col_names.push_back({-1, "*"});
  col_names_natural.push_back({-1, "*"});
  col_types.push_back("text");
  // Global index bookkeeping mirrors the loader's convention.
  std::vector<std::vector<int>> global_of(schema.tables.size());
  int g = 1;
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    for (const ColumnSpec& c : schema.tables[t].columns) {
      col_names.push_back({static_cast<int>(t), c.name});
      col_names_natural.push_back({static_cast<int>(t), util::to_lower(c.name)});
      col_types.push_back(std::string(to_string(c.data_type)));
      global_of[t].push_back(g++);
    }
  }
  entry["column_names_original"] = col_names;
  entry["column_names"] = col_names_natural;
  entry["column_types"] = col_types;

  nlohmann::json pks = nlohmann::json::array();
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    for (int c : schema.tables[t].primary_key_columns) pks.push_back(global_of[t][c]);
  }
  entry["primary_keys"] = pks;

  nlohmann::json fks = nlohmann::json::array();
  for (const ForeignKeyLink& fk : schema.foreign_keys) {
    fks.push_back({global_of[fk.from_table][fk.from_column], global_of[fk.to_table][fk.to_column]});
  }
  entry["foreign_keys"] = fks;
  return entry;
}

// Structural equality over everything the catalog format preserves.
inline bool structurally_equal(const DatabaseSchema& a, const DatabaseSchema& b) {
  if (a.db_id != b.db_id || a.tables.size() != b.tables.size() ||
      a.foreign_keys.size() != b.foreign_keys.size())
    return false;
  for (size_t t = 0; t < a.tables.size(); ++t) {
    const TableSchema &ta = a.tables[t], &tb = b.tables[t];
    if (ta.name != tb.name || ta.columns.size() != tb.columns.size() ||
        ta.primary_key_columns != tb.primary_key_columns)
      return false;
    for (size_t c = 0; c < ta.columns.size(); ++c) {
      if (ta.columns[c].name != tb.columns[c].name ||
          ta.columns[c].data_type != tb.columns[c].data_type)
        return false;
    }
  }
  for (size_t i = 0; i < a.foreign_keys.size(); ++i) {
    const ForeignKeyLink &fa = a.foreign_keys[i], &fb = b.foreign_keys[i];
    if (fa.from_table != fb.from_table || fa.from_column != fb.from_column ||
        fa.to_table != fb.to_table || fa.to_column != fb.to_column)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Question loading
// ---------------------------------------------------------------------------

namespace detail {

inline QuestionTask parse_question_record(const nlohmann::json& rec, size_t index) {
  if (!rec.is_object()) throw ParseError("question record is not an object");
  QuestionTask task;
  if (rec.contains("question_id")) {
    const auto& id = rec["question_id"];
    task.question_id = id.is_string() ? id.get<std::string>() : id.dump();
  } else {
    task.question_id = std::to_string(index);
  }
  if (!rec.contains("db_id") || !rec["db_id"].is_string())
    throw ParseError("question record " + task.question_id + " missing db_id");
  task.db_id = rec["db_id"].get<std::string>();
  if (!rec.contains("question") || !rec["question"].is_string())
    throw ParseError("question record " + task.question_id + " missing question");
  task.question = rec["question"].get<std::string>();
  for (const char* key : {"query", "SQL", "sql", "gold_sql"}) {
    if (rec.contains(key) && rec[key].is_string()) {
      task.gold_sql = rec[key].get<std::string>();
      break;
    }
  }
  for (const char* key : {"evidence", "hint"}) {
    if (rec.contains(key) && rec[key].is_string()) {
      task.hint = util::trim(rec[key].get<std::string>());
      break;
    }
  }
  if (rec.contains("difficulty") && rec["difficulty"].is_string()) {
    task.difficulty_label = rec["difficulty"].get<std::string>();
    task.difficulty = difficulty_from_label(task.difficulty_label);
  }
  return task;
}

}  // namespace detail

// Loads a question set from either a JSON array or a JSONL stream (the
// training-record emitter writes JSONL; benchmark files are arrays).
// With `strict`, any db_id absent from `known_db_ids` is an error.
inline std::vector<QuestionTask> load_question_set(const std::string& path,
                                                   const std::set<std::string>& known_db_ids,
                                                   bool strict = true) {
  std::string text = util::read_file(path);
  std::vector<nlohmann::json> records;
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParseError("question set " + path + " is empty");
  if (text[first] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("cannot parse question set " + path + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError("question set " + path + " is not an array");
    for (auto& rec : doc) records.push_back(std::move(rec));
  } else {
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string trimmed = util::trim(line);
      if (trimmed.empty()) continue;
      try {
        records.push_back(nlohmann::json::parse(trimmed));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("cannot parse question set " + path + " line " +
                         std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  std::vector<QuestionTask> tasks;
  tasks.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    QuestionTask task = detail::parse_question_record(records[i], i);
    if (strict && !known_db_ids.count(task.db_id))
      throw UnknownDatabaseError("question " + task.question_id + " references unknown db_id '" +
                                 task.db_id + "'");
    tasks.push_back(std::move(task));
  }
  return tasks;
}

// Convenience overload building the known-id set from a loaded catalog.
inline std::vector<QuestionTask> load_question_set(const std::string& path,
                                                   const std::vector<DatabaseSchema>& catalog,
                                                   bool strict = true) {
  std::set<std::string> ids;
  for (const DatabaseSchema& s : catalog) ids.insert(s.db_id);
  return load_question_set(path, ids, strict);
}

}  // namespace nl2sql
