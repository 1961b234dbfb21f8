#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/text_match.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Configuration and result types
// ---------------------------------------------------------------------------

struct MatchConfig {
  double threshold = 0.85;   // minimum similarity for a value to qualify
  int top_k = 2;             // strongest values kept per keyword within a column
  int max_span_words = 4;    // n-gram width over question words
  int min_keyword_len = 3;   // minimum keyword length in characters
  size_t distinct_cap = 10000;  // columns with more distinct values are skipped

  void validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0))
      throw ConfigError("match threshold must be in (0, 1]");
    if (top_k < 1) throw ConfigError("match top_k must be >= 1");
    if (max_span_words < 1) throw ConfigError("match max_span_words must be >= 1");
    if (min_keyword_len < 1) throw ConfigError("match min_keyword_len must be >= 1");
  }
};

// One database value linked to a question keyword.
struct ContentMatch {
  std::string table;
  std::string column;
  std::string value;    // verbatim cell text
  std::string keyword;  // question span that triggered the match
  double score = 0.0;
};

struct ContentMatchSet {
  std::vector<ContentMatch> matches;  // grouped by (table, column) in schema order
  int skipped_columns = 0;            // columns whose distinct count exceeded the cap

  bool empty() const { return matches.empty(); }
};

// ---------------------------------------------------------------------------
// Keyword extraction
// ---------------------------------------------------------------------------

namespace detail {

// Common English function words that never make useful lookup keywords.
inline const std::set<std::string>& stop_words() {
  static const std::set<std::string> kStopWords = {
      "a",    "about", "all",  "an",    "and",   "any",   "are",   "as",    "at",    "be",
      "been", "but",   "by",   "can",   "could", "do",    "does",  "did",   "for",   "from",
      "had",  "has",   "have", "how",   "in",    "is",    "it",    "its",   "many",  "more",
      "most", "of",    "on",   "or",    "that",  "the",   "their", "there", "these", "they",
      "this", "to",    "was",  "we",    "were",  "what",  "when",  "where", "which", "who",
      "will", "with"};
  return kStopWords;
}

inline bool is_stop_word(std::string_view w) {
  return stop_words().count(util::to_lower(w)) > 0;
}

// Splits the question into runs of words. Hard punctuation (anything
// that is not a word character or a space) ends a run, so n-grams never
// bridge a comma or question mark. Hyphens and apostrophes are word
// characters: "K-12" stays one word.
inline std::vector<std::vector<std::string>> word_runs(std::string_view question) {
  auto is_word_char = [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '-' || c == '\'' || c == '_';
  };
  std::vector<std::vector<std::string>> runs(1);
  std::string cur;
  auto end_word = [&] {
    // Strip dangling hyphens/apostrophes picked up from punctuation use.
    while (!cur.empty() && (cur.front() == '-' || cur.front() == '\'')) cur.erase(cur.begin());
    while (!cur.empty() && (cur.back() == '-' || cur.back() == '\'')) cur.pop_back();
    if (!cur.empty()) runs.back().push_back(cur);
    cur.clear();
  };
  for (unsigned char c : question) {
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      end_word();
    } else {
      end_word();
      if (!runs.back().empty()) runs.emplace_back();
    }
  }
  end_word();
  // Trailing punctuation opens a run that never receives a word.
  if (runs.size() > 1 && runs.back().empty()) runs.pop_back();
  return runs;
}

}  // namespace detail

// Candidate lookup keywords: the question's words plus contiguous word
// n-grams up to max_span_words, minus short spans and spans made purely
// of stop words. Order is span width, then position; duplicates keep
// their first occurrence.
inline std::vector<std::string> extract_keywords(std::string_view question,
                                                 const MatchConfig& config = {}) {
  config.validate();
  auto runs = detail::word_runs(question);
  std::vector<std::string> keywords;
  std::set<std::string> seen;
  for (int n = 1; n <= config.max_span_words; ++n) {
    for (const auto& run : runs) {
      if (static_cast<int>(run.size()) < n) continue;
      for (size_t i = 0; i + n <= run.size(); ++i) {
        bool all_stop = true;
        for (size_t k = i; k < i + n; ++k) {
          if (!detail::is_stop_word(run[k])) {
            all_stop = false;
            break;
          }
        }
        if (all_stop) continue;
        std::string span = util::join(run.begin() + i, run.begin() + i + n, " ");
        if (static_cast<int>(span.size()) < config.min_keyword_len) continue;
        if (seen.insert(span).second) keywords.push_back(std::move(span));
      }
    }
  }
  return keywords;
}

// Similarity between a question keyword and a database value: the
// sequence-matcher ratio over lower-cased text.
inline double match_score(std::string_view keyword, std::string_view value) {
  return sequence_ratio(util::to_lower(keyword), util::to_lower(value));
}

// ---------------------------------------------------------------------------
// Database scan
// ---------------------------------------------------------------------------

// Links question keywords to values actually present in the database.
// Only TEXT-typed columns are scanned. For each (keyword, column) the
// strongest top_k values at or above the threshold are kept; duplicate
// (table, column, value) triples collapse onto their best-scoring
// keyword. Throws StorageError when the backing file is unreadable.
inline ContentMatchSet extract_content(std::string_view question, const DatabaseSchema& schema,
                                       const MatchConfig& config = {}) {
  config.validate();
  if (schema.storage_path.empty())
    throw StorageError("schema " + schema.db_id + " has no storage path for content matching");
  Database db(schema.storage_path);

  std::vector<std::string> keywords = extract_keywords(question, config);
  ContentMatchSet result;
  if (keywords.empty()) return result;

  for (const TableSchema& table : schema.tables) {
    for (const ColumnSpec& col : table.columns) {
      if (col.data_type != DataType::kText) continue;
      std::vector<std::string> values;
      if (!distinct_text_values(db, table.name, col.name, config.distinct_cap, values)) {
        ++result.skipped_columns;
        continue;
      }
      if (values.empty()) continue;

      // Collect this column's matches across all keywords, best first.
      std::vector<ContentMatch> column_matches;
      for (const std::string& keyword : keywords) {
        std::vector<ContentMatch> scored;
        for (const std::string& value : values) {
          double s = match_score(keyword, value);
          if (s >= config.threshold)
            scored.push_back(ContentMatch{table.name, col.name, value, keyword, s});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
          if (a.score != b.score) return a.score > b.score;
          return a.value < b.value;
        });
        if (static_cast<int>(scored.size()) > config.top_k) scored.resize(config.top_k);
        for (ContentMatch& m : scored) {
          auto dup = std::find_if(column_matches.begin(), column_matches.end(),
                                  [&](const ContentMatch& e) { return e.value == m.value; });
          if (dup == column_matches.end()) {
            column_matches.push_back(std::move(m));
          } else if (m.score > dup->score) {
            *dup = std::move(m);  // keep the strongest keyword for the value
          }
        }
      }
      std::stable_sort(column_matches.begin(), column_matches.end(),
                       [](const auto& a, const auto& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.value < b.value;
                       });
      for (ContentMatch& m : column_matches) result.matches.push_back(std::move(m));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

// One line per (table, column), in the match set's order:
//   The column `col` in Table `t` has database values: ['v1', 'v2']
inline std::string render_content_lines(const ContentMatchSet& set) {
  std::vector<std::string> lines;
  std::vector<std::pair<std::string, std::string>> seen;  // (table, column) in order
  for (const ContentMatch& m : set.matches) {
    auto key = std::make_pair(m.table, m.column);
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) seen.push_back(key);
  }
  for (const auto& [table, column] : seen) {
    std::string vals;
    for (const ContentMatch& m : set.matches) {
      if (m.table != table || m.column != column) continue;
      if (!vals.empty()) vals += ", ";
      std::string escaped;
      for (char c : m.value) {
        if (c == '\'') escaped += "\\'";
        else escaped.push_back(c);
      }
      vals += "'" + escaped + "'";
    }
    lines.push_back("The column `" + column + "` in Table `" + table +
                    "` has database values: [" + vals + "]");
  }
  return util::join(lines, "\n");
}

}  // namespace nl2sql
