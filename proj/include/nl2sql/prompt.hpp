#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/content.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/selection.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Style and bundle types
// ---------------------------------------------------------------------------

enum class PromptMode { kConcise, kVerbose };
enum class DescriptionScope { kNone, kSelected, kFull };

struct PromptStyle {
  PromptMode mode = PromptMode::kConcise;
  bool include_data_types = true;
  DescriptionScope include_descriptions = DescriptionScope::kNone;
  bool include_content_values = false;
  bool include_hint = false;
  // Token budget for the rendered prompt (character-proxy estimate);
  // 0 disables fitting.
  size_t token_limit = 0;

  bool operator==(const PromptStyle&) const = default;
};

// A few-shot demonstration: serialized input text plus its SQL, used
// verbatim. The input carries everything up to (not including) the
// SQL-initiation marker.
struct Demonstration {
  std::string input;
  std::string sql;
};

struct PromptBundle {
  std::string x1;        // schema serialization
  std::string x2;        // auxiliary blocks: descriptions, content values, hint
  std::string question;  // raw question text
  std::vector<Demonstration> demonstrations;
  std::string rendered;  // complete prompt, ending at the SQL-initiation marker
  std::vector<std::string> truncation_log;  // what budget fitting removed, in order
};

inline constexpr std::string_view kPreamble =
    "This is a task converting text into SQL statement. We will first given the dataset "
    "schema and then ask a question in text. You are asked to generate SQL statement.";
inline constexpr std::string_view kConciseTaskTag = "Convert text to SQL:";
inline constexpr std::string_view kExampleHeader = "Here is an example: ";
inline constexpr std::string_view kTestHeader = "Here is the test question to be answered: ";
inline constexpr std::string_view kContentBlockHeader =
    "[Database values that related with questions]:";
inline constexpr std::string_view kDescriptionBlockHeader =
    "[detailed description of tables and columns]:";
inline constexpr std::string_view kHintBlockHeader = "[Additional Info]:";
inline constexpr std::string_view kConciseSqlMarker = "[SQL]:";
inline constexpr std::string_view kVerboseSqlMarker = "The corresponding SQL is: ";

// ---------------------------------------------------------------------------
// Hard-selection filtering
// ---------------------------------------------------------------------------

// Restricts a schema to a selection: kept tables are those named (or
// those owning a named column), kept columns are the named ones (all
// columns when the selection lists none for a kept table). Primary keys
// of dropped columns vanish; foreign keys with a vanished endpoint are
// dropped. Tables left without columns are dropped entirely.
inline DatabaseSchema filter_schema(const DatabaseSchema& schema, const SelectionSet& selection) {
  std::set<std::string> want_tables;
  for (const auto& t : selection.tables) want_tables.insert(util::to_lower(t));
  std::set<std::string> want_columns;
  for (const auto& c : selection.columns) want_columns.insert(util::to_lower(c));
  for (const auto& c : selection.columns) {
    size_t dot = c.find('.');
    if (dot != std::string::npos) want_tables.insert(util::to_lower(c.substr(0, dot)));
  }

  DatabaseSchema out;
  out.db_id = schema.db_id;
  out.storage_path = schema.storage_path;
  std::vector<int> table_remap(schema.tables.size(), -1);
  std::vector<std::vector<int>> column_remap(schema.tables.size());

  for (size_t t = 0; t < schema.tables.size(); ++t) {
    const TableSchema& table = schema.tables[t];
    column_remap[t].assign(table.columns.size(), -1);
    if (!want_tables.count(util::to_lower(table.name))) continue;
    TableSchema kept;
    kept.name = table.name;
    for (size_t c = 0; c < table.columns.size(); ++c) {
      std::string qualified = util::to_lower(table.name + "." + table.columns[c].name);
      if (!want_columns.empty() && !want_columns.count(qualified)) continue;
      column_remap[t][c] = static_cast<int>(kept.columns.size());
      ColumnSpec col = table.columns[c];
      col.table_index = static_cast<int>(out.tables.size());
      kept.columns.push_back(std::move(col));
    }
    if (kept.columns.empty()) continue;
    for (int pk : table.primary_key_columns) {
      if (column_remap[t][pk] >= 0) kept.primary_key_columns.push_back(column_remap[t][pk]);
    }
    table_remap[t] = static_cast<int>(out.tables.size());
    out.tables.push_back(std::move(kept));
  }
  if (out.tables.empty())
    throw EmptySelectionError("hard selection removed every table of " + schema.db_id);

  for (const ForeignKeyLink& fk : schema.foreign_keys) {
    int ft = table_remap[fk.from_table], tt = table_remap[fk.to_table];
    if (ft < 0 || tt < 0) continue;
    int fc = column_remap[fk.from_table][fk.from_column];
    int tc = column_remap[fk.to_table][fk.to_column];
    if (fc < 0 || tc < 0) continue;
    out.foreign_keys.push_back(ForeignKeyLink{ft, fc, tt, tc});
  }
  return out;
}

// Adjusts a style for a selection's integration mode. Hard integration
// keeps the style as-is (the schema itself gets filtered at build time);
// soft integration switches the description block to the selected
// columns. Idempotent.
inline PromptStyle apply_selection(PromptStyle style, const SelectionSet& selection) {
  if (selection.integration == SelectionIntegration::kHard) {
    if (selection.empty())
      throw EmptySelectionError("hard integration requires a non-empty selection");
    return style;
  }
  style.include_descriptions = DescriptionScope::kSelected;
  return style;
}

// ---------------------------------------------------------------------------
// Concise serialization
// ---------------------------------------------------------------------------

namespace detail {

// Concise mode lower-cases identifiers; names containing the block
// delimiters get backtick-quoted so the serialization stays injective.
inline std::string concise_name(std::string_view name) {
  std::string lower = util::to_lower(name);
  if (lower.find_first_of(",|:") != std::string::npos) return "`" + lower + "`";
  return lower;
}

}  // namespace detail

// Delimiter-structured schema rendering:
//   [Schema (values)]: | db | t : c1 , c2 | t2 : ...;
//   [Column names (type)]: t : c (type) | ...;
//   [Primary Keys]: t : c | ...;
//   [Foreign Keys]: tA : cA equals tB : cB | ...
inline std::string serialize_schema_concise(const DatabaseSchema& schema,
                                            const PromptStyle& style) {
  std::vector<std::string> blocks;

  std::string schema_block = "[Schema (values)]: | " + schema.db_id + " |";
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    const TableSchema& table = schema.tables[t];
    schema_block += " " + detail::concise_name(table.name) + " :";
    for (size_t c = 0; c < table.columns.size(); ++c) {
      if (c > 0) schema_block += " ,";
      schema_block += " " + detail::concise_name(table.columns[c].name);
    }
    if (t + 1 < schema.tables.size()) schema_block += " |";
  }
  blocks.push_back(schema_block + ";");

  if (style.include_data_types) {
    std::vector<std::string> entries;
    for (const TableSchema& table : schema.tables) {
      for (const ColumnSpec& col : table.columns) {
        entries.push_back(detail::concise_name(table.name) + " : " +
                          detail::concise_name(col.name) + " (" +
                          std::string(to_string(col.data_type)) + ")");
      }
    }
    blocks.push_back("[Column names (type)]: " + util::join(entries, " | ") + ";");
  }

  std::vector<std::string> pk_entries;
  for (const TableSchema& table : schema.tables) {
    for (int pk : table.primary_key_columns) {
      pk_entries.push_back(detail::concise_name(table.name) + " : " +
                           detail::concise_name(table.columns[pk].name));
    }
  }
  if (!pk_entries.empty()) blocks.push_back("[Primary Keys]: " + util::join(pk_entries, " | ") + ";");

  std::vector<std::string> fk_entries;
  for (const ForeignKeyLink& fk : schema.foreign_keys) {
    const TableSchema& from = schema.tables[fk.from_table];
    const TableSchema& to = schema.tables[fk.to_table];
    fk_entries.push_back(detail::concise_name(from.name) + " : " +
                         detail::concise_name(from.columns[fk.from_column].name) + " equals " +
                         detail::concise_name(to.name) + " : " +
                         detail::concise_name(to.columns[fk.to_column].name));
  }
  if (!fk_entries.empty()) blocks.push_back("[Foreign Keys]: " + util::join(fk_entries, " | "));

  return util::join(blocks, "\n");
}

// ---------------------------------------------------------------------------
// Verbose serialization
// ---------------------------------------------------------------------------

// Natural-language schema rendering ("There are N tables. ... Use
// foreign keys to join Tables."). Column lists keep original spelling;
// the key sentences use lower-cased names.
inline std::string serialize_schema_verbose(const DatabaseSchema& schema,
                                            const PromptStyle& style) {
  std::vector<std::string> sentences;
  sentences.push_back(
      "Let us take a question and turn it into a SQL statement about database tables.");

  size_t n = schema.tables.size();
  std::vector<std::string> titles;
  for (const TableSchema& t : schema.tables) titles.push_back(t.name);
  if (n == 1) {
    sentences.push_back("There is 1 table. Its title is: " + titles[0] + ".");
  } else {
    sentences.push_back("There are " + std::to_string(n) + " tables. Their titles are: " +
                        util::join(titles, ", ") + ".");
  }

  for (size_t t = 0; t < n; ++t) {
    const TableSchema& table = schema.tables[t];
    std::vector<std::string> cols;
    for (const ColumnSpec& col : table.columns) {
      if (style.include_data_types) {
        cols.push_back(col.name + " (Type is " + std::string(to_string(col.data_type)) + ")");
      } else {
        cols.push_back(col.name);
      }
    }
    std::string label = style.include_data_types ? "column names and types" : "column names";
    sentences.push_back("Table " + std::to_string(t + 1) + " is " + table.name + ", and its " +
                        label + " are: " + util::join(cols, ", ") + ".");
  }

  std::vector<std::string> pk_entries;
  for (const TableSchema& table : schema.tables) {
    for (int pk : table.primary_key_columns) {
      pk_entries.push_back(util::to_lower(table.columns[pk].name) + " from Table " +
                           util::to_lower(table.name));
    }
  }
  if (!pk_entries.empty())
    sentences.push_back("The primary keys are: " + util::join(pk_entries, ", ") + ".");

  std::vector<std::string> fk_entries;
  for (const ForeignKeyLink& fk : schema.foreign_keys) {
    const TableSchema& from = schema.tables[fk.from_table];
    const TableSchema& to = schema.tables[fk.to_table];
    fk_entries.push_back(util::to_lower(from.columns[fk.from_column].name) + " from Table " +
                         util::to_lower(from.name) + " is equivalent with " +
                         util::to_lower(to.columns[fk.to_column].name) + " from Table " +
                         util::to_lower(to.name));
  }
  if (!fk_entries.empty()) {
    sentences.push_back("The foreign keys are: " + util::join(fk_entries, ", ") + ".");
    sentences.push_back("Use foreign keys to join Tables.");
  }

  return util::join(sentences, " ");
}

// ---------------------------------------------------------------------------
// Auxiliary (x2) blocks
// ---------------------------------------------------------------------------

namespace detail {

inline std::string dq(std::string_view s) { return "\"" + std::string(s) + "\""; }

// Per-table description listing, restricted to a selection when one is
// given. Columns without descriptions are skipped; an entirely
// description-free schema renders nothing.
inline std::string render_description_block(const DatabaseSchema& schema,
                                            const SelectionSet* selection) {
  std::vector<std::string> lines;
  for (const TableSchema& table : schema.tables) {
    std::vector<std::string> table_lines;
    for (const ColumnSpec& col : table.columns) {
      if (col.description.empty()) continue;
      if (selection != nullptr) {
        std::string qualified = table.name + "." + col.name;
        if (!selection->has_column(qualified)) continue;
      }
      table_lines.push_back("Column " + dq(col.name) + " of Table " + dq(table.name) +
                            ", means " + dq(col.description));
    }
    if (table_lines.empty()) continue;
    lines.push_back("Column description of Table " + dq(table.name) +
                    " have the following descriptions:");
    for (std::string& l : table_lines) lines.push_back(std::move(l));
  }
  if (lines.empty()) return "";
  return std::string(kDescriptionBlockHeader) + "\n" + util::join(lines, "\n") + ";";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Budget estimation
// ---------------------------------------------------------------------------

struct TokenBudget {
  bool fits = true;
  size_t overflow_chars = 0;
  size_t estimated_tokens = 0;
};

// Character-proxy token estimate: ceil(chars / 4) against the limit.
inline TokenBudget estimate_token_budget(const PromptBundle& bundle, size_t limit) {
  TokenBudget b;
  size_t chars = bundle.rendered.size();
  b.estimated_tokens = (chars + 3) / 4;
  b.fits = b.estimated_tokens <= limit;
  if (!b.fits) b.overflow_chars = chars - limit * 4;
  return b;
}

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

namespace detail {

struct BuildFlags {
  bool content = true;
  bool descriptions = true;
  size_t demos_from = 0;  // demonstrations dropped from the front
};

inline PromptBundle assemble(const DatabaseSchema& schema, const QuestionTask& task,
                             const PromptStyle& style, const std::vector<Demonstration>& demos,
                             const ContentMatchSet* content, const SelectionSet* selection,
                             const BuildFlags& flags) {
  PromptBundle bundle;
  bundle.question = task.question;

  bundle.x1 = style.mode == PromptMode::kConcise ? serialize_schema_concise(schema, style)
                                                 : serialize_schema_verbose(schema, style);

  // x2: descriptions, then content values, then the hint.
  std::vector<std::string> aux;
  if (flags.descriptions && style.include_descriptions != DescriptionScope::kNone) {
    const SelectionSet* scope =
        style.include_descriptions == DescriptionScope::kSelected ? selection : nullptr;
    std::string block = render_description_block(schema, scope);
    if (!block.empty()) aux.push_back(std::move(block));
  }
  if (flags.content && style.include_content_values && content != nullptr && !content->empty()) {
    aux.push_back(std::string(kContentBlockHeader) + "\n" + render_content_lines(*content) + ";");
  }
  if (style.include_hint && !task.hint.empty()) {
    aux.push_back(std::string(kHintBlockHeader) + " " + task.hint + ";");
  }
  bundle.x2 = util::join(aux, "\n");

  for (size_t d = flags.demos_from; d < demos.size(); ++d)
    bundle.demonstrations.push_back(demos[d]);

  // Render the full prompt: preamble, demonstrations, test instance.
  std::vector<std::string> sections;
  sections.emplace_back(kPreamble);
  if (style.mode == PromptMode::kConcise) {
    for (const Demonstration& demo : bundle.demonstrations) {
      sections.push_back(std::string(kExampleHeader) + std::string(kConciseTaskTag) + "\n" +
                         demo.input + "\n" + std::string(kConciseSqlMarker) + " " + demo.sql);
    }
    std::string test = std::string(kTestHeader) + std::string(kConciseTaskTag) + "\n" + bundle.x1;
    if (!bundle.x2.empty()) test += "\n" + bundle.x2;
    test += "\n[Q]: " + bundle.question + ";\n" + std::string(kConciseSqlMarker);
    sections.push_back(std::move(test));
  } else {
    for (const Demonstration& demo : bundle.demonstrations) {
      sections.push_back(std::string(kExampleHeader) + demo.input + " " +
                         std::string(kVerboseSqlMarker) + demo.sql);
    }
    std::string question_part =
        "Let us take a text question and turn it into a SQL statement about database tables. "
        "The question is: " +
        bundle.question + " " + std::string(kVerboseSqlMarker);
    std::string test = std::string(kTestHeader) + bundle.x1;
    if (!bundle.x2.empty()) {
      test += "\n" + bundle.x2 + "\n" + question_part;
    } else {
      test += "  " + question_part;  // sentence flow: double space, as prose
    }
    sections.push_back(std::move(test));
  }
  bundle.rendered = util::join(sections, "\n");
  return bundle;
}

}  // namespace detail

// Builds the full prompt bundle for one task. When the style carries a
// token limit and the rendered prompt overflows it, auxiliary material
// is dropped in a fixed order — content values, then descriptions, then
// demonstrations from the front — and the removals are logged. The
// schema serialization and the question are never truncated.
inline PromptBundle build_prompt(const DatabaseSchema& schema, const QuestionTask& task,
                                 const PromptStyle& style,
                                 const std::vector<Demonstration>& demonstrations = {},
                                 const ContentMatchSet* content = nullptr,
                                 const SelectionSet* selection = nullptr) {
  if (style.include_content_values && content == nullptr)
    throw MissingContentError("style requests content values but none were supplied for " +
                              task.question_id);

  const DatabaseSchema* working = &schema;
  DatabaseSchema filtered;
  if (selection != nullptr && selection->integration == SelectionIntegration::kHard) {
    filtered = filter_schema(schema, *selection);
    working = &filtered;
  }

  detail::BuildFlags flags;
  PromptBundle bundle =
      detail::assemble(*working, task, style, demonstrations, content, selection, flags);
  if (style.token_limit == 0 || estimate_token_budget(bundle, style.token_limit).fits)
    return bundle;

  std::vector<std::string> log;
  if (style.include_content_values && content != nullptr && !content->empty()) {
    flags.content = false;
    log.push_back("dropped content values");
    bundle = detail::assemble(*working, task, style, demonstrations, content, selection, flags);
    if (estimate_token_budget(bundle, style.token_limit).fits) {
      bundle.truncation_log = log;
      return bundle;
    }
  }
  if (style.include_descriptions != DescriptionScope::kNone) {
    flags.descriptions = false;
    log.push_back("dropped column descriptions");
    bundle = detail::assemble(*working, task, style, demonstrations, content, selection, flags);
    if (estimate_token_budget(bundle, style.token_limit).fits) {
      bundle.truncation_log = log;
      return bundle;
    }
  }
  while (flags.demos_from < demonstrations.size()) {
    log.push_back("dropped demonstration " + std::to_string(flags.demos_from));
    ++flags.demos_from;
    bundle = detail::assemble(*working, task, style, demonstrations, content, selection, flags);
    if (estimate_token_budget(bundle, style.token_limit).fits) break;
  }
  bundle.truncation_log = log;
  return bundle;
}

}  // namespace nl2sql
