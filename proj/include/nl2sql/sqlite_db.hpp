#pragma once

#include <sqlite3.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/errors.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Connection handling
// ---------------------------------------------------------------------------

// Read-only connection to a SQLite database file. Queries can never
// mutate the underlying file: the handle is opened with the read-only
// flag, so INSERT/UPDATE/DELETE/DDL fail at execution time.
//
// A Database is not thread-safe; concurrent executors open one
// connection per worker.
class Database {
 public:
  explicit Database(const std::string& path) : path_(path) {
    sqlite3* raw = nullptr;
    int rc = sqlite3_open_v2(path.c_str(), &raw, SQLITE_OPEN_READONLY, nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = raw != nullptr ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
      sqlite3_close(raw);
      throw StorageError("cannot open database " + path + ": " + msg);
    }
    handle_.reset(raw);
    // SQLite opens lazily; force a header read so a missing or corrupt
    // file surfaces here as StorageError rather than in the first query.
    sqlite3_stmt* stmt = nullptr;
    rc = sqlite3_prepare_v2(raw, "SELECT 1 FROM sqlite_master LIMIT 1", -1, &stmt, nullptr);
    if (stmt != nullptr) {
      sqlite3_step(stmt);
      sqlite3_finalize(stmt);
    }
    if (rc != SQLITE_OK) {
      std::string msg = sqlite3_errmsg(raw);
      handle_.reset();
      throw StorageError("cannot read database " + path + ": " + msg);
    }
  }

  sqlite3* raw() const { return handle_.get(); }
  const std::string& path() const { return path_; }

 private:
  struct Closer {
    void operator()(sqlite3* db) const { sqlite3_close(db); }
  };
  std::string path_;
  std::unique_ptr<sqlite3, Closer> handle_;
};

// Quotes an identifier for embedding into SQL text ("" doubling).
// Backtick quoting: unlike double quotes, SQLite never reinterprets an
// unknown backtick-quoted identifier as a string literal, so a missing
// column fails the statement instead of fabricating values.
inline std::string quote_ident(std::string_view name) {
  std::string out = "`";
  for (char c : name) {
    out.push_back(c);
    if (c == '`') out.push_back('`');
  }
  out.push_back('`');
  return out;
}

// ---------------------------------------------------------------------------
// Execution outcomes
// ---------------------------------------------------------------------------

enum class ExecStatus { kOk, kError, kTimeout };

inline std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::kOk: return "ok";
    case ExecStatus::kError: return "error";
    case ExecStatus::kTimeout: return "timeout";
  }
  return "error";
}

// One normalized result cell. Decimal values are canonicalized to text
// with six significant digits so float jitter cannot break result
// comparison; blobs are fingerprinted rather than carried around.
struct Cell {
  enum class Kind { kNull, kInteger, kReal, kText, kBlob } kind = Kind::kNull;
  std::int64_t integer = 0;  // valid when kind == kInteger
  std::string text;          // canonical text for kReal, verbatim for kText,
                             // digest for kBlob

  // Stable single-character type tag + payload; the building block of
  // result keys. The tag keeps 1 (integer) distinct from '1' (text).
  std::string encode() const {
    switch (kind) {
      case Kind::kNull: return "n:";
      case Kind::kInteger: return "i:" + std::to_string(integer);
      case Kind::kReal: return "r:" + text;
      case Kind::kText: return "t:" + text;
      case Kind::kBlob: return "b:" + text;
    }
    return "n:";
  }
};

using Row = std::vector<Cell>;

struct ExecutionOutcome {
  ExecStatus status = ExecStatus::kError;
  std::vector<Row> rows;
  std::string error_message;
  double elapsed_seconds = 0.0;

  bool ok() const { return status == ExecStatus::kOk; }
};

struct ExecOptions {
  double timeout_seconds = 30.0;
  // When set, text cells whose entire content parses as a number are
  // normalized as numbers. Off by default: '3' and 3 stay distinct, as
  // strict result comparison requires.
  bool lenient_numeric = false;
};

namespace detail {

inline bool parse_full_int(const char* s, std::int64_t& out) {
  if (s == nullptr || *s == '\0') return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s, &end, 10);
  if (errno != 0 || end == nullptr || *end != '\0') return false;
  out = static_cast<std::int64_t>(v);
  return true;
}

inline bool parse_full_real(const char* s, double& out) {
  if (s == nullptr || *s == '\0') return false;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s, &end);
  if (errno != 0 || end == nullptr || *end != '\0') return false;
  out = v;
  return true;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

inline int progress_callback(void* ctx) {
  auto* deadline = static_cast<Deadline*>(ctx);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;  // abort the statement with SQLITE_INTERRUPT
  }
  return 0;
}

inline Cell normalize_column(sqlite3_stmt* stmt, int col, const ExecOptions& opts) {
  Cell cell;
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_NULL:
      cell.kind = Cell::Kind::kNull;
      break;
    case SQLITE_INTEGER:
      cell.kind = Cell::Kind::kInteger;
      cell.integer = sqlite3_column_int64(stmt, col);
      break;
    case SQLITE_FLOAT: {
      double v = sqlite3_column_double(stmt, col);
      // Integral floats collapse onto the integer representation so a
      // COUNT(*) returned as 3.0 compares equal to 3.
      if (v == static_cast<std::int64_t>(v) && std::abs(v) < 1e15) {
        cell.kind = Cell::Kind::kInteger;
        cell.integer = static_cast<std::int64_t>(v);
      } else {
        cell.kind = Cell::Kind::kReal;
        cell.text = util::canonical_real(v);
      }
      break;
    }
    case SQLITE_BLOB: {
      const void* data = sqlite3_column_blob(stmt, col);
      int n = sqlite3_column_bytes(stmt, col);
      cell.kind = Cell::Kind::kBlob;
      cell.text = util::sha256_hex(std::string_view(static_cast<const char*>(data),
                                                    static_cast<size_t>(n)))
                      .substr(0, 16);
      break;
    }
    default: {  // SQLITE_TEXT
      const unsigned char* s = sqlite3_column_text(stmt, col);
      const char* txt = reinterpret_cast<const char*>(s);
      if (opts.lenient_numeric) {
        std::int64_t iv;
        double rv;
        if (parse_full_int(txt, iv)) {
          cell.kind = Cell::Kind::kInteger;
          cell.integer = iv;
          break;
        }
        if (parse_full_real(txt, rv)) {
          if (rv == static_cast<std::int64_t>(rv) && std::abs(rv) < 1e15) {
            cell.kind = Cell::Kind::kInteger;
            cell.integer = static_cast<std::int64_t>(rv);
          } else {
            cell.kind = Cell::Kind::kReal;
            cell.text = util::canonical_real(rv);
          }
          break;
        }
      }
      cell.kind = Cell::Kind::kText;
      cell.text = txt != nullptr ? txt : "";
      break;
    }
  }
  return cell;
}

}  // namespace detail

// Runs one SQL statement and materializes the full result set. Never
// throws for SQL-level failures: syntax errors, write attempts against
// the read-only handle, and timeouts all come back in the outcome.
inline ExecutionOutcome execute(const Database& db, const std::string& sql,
                                const ExecOptions& opts = {}) {
  ExecutionOutcome out;
  auto started = std::chrono::steady_clock::now();
  detail::Deadline deadline{
      started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(opts.timeout_seconds))};
  sqlite3_progress_handler(db.raw(), 1000, detail::progress_callback, &deadline);

  sqlite3_stmt* stmt = nullptr;
  // Only the first statement runs; predictions are single statements and
  // anything after the terminating ';' is deliberately ignored.
  int rc = sqlite3_prepare_v2(db.raw(), sql.c_str(), -1, &stmt, nullptr);
  if (rc != SQLITE_OK || stmt == nullptr) {
    out.status = deadline.expired ? ExecStatus::kTimeout : ExecStatus::kError;
    out.error_message = sqlite3_errmsg(db.raw());
    if (stmt != nullptr) sqlite3_finalize(stmt);
    sqlite3_progress_handler(db.raw(), 0, nullptr, nullptr);
    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
  }

  int cols = sqlite3_column_count(stmt);
  for (;;) {
    rc = sqlite3_step(stmt);
    if (rc == SQLITE_ROW) {
      Row row;
      row.reserve(static_cast<size_t>(cols));
      for (int c = 0; c < cols; ++c) row.push_back(detail::normalize_column(stmt, c, opts));
      out.rows.push_back(std::move(row));
      continue;
    }
    if (rc == SQLITE_DONE) {
      out.status = ExecStatus::kOk;
    } else if (rc == SQLITE_INTERRUPT || deadline.expired) {
      out.status = ExecStatus::kTimeout;
      out.error_message = "statement timed out";
      out.rows.clear();
    } else {
      out.status = ExecStatus::kError;
      out.error_message = sqlite3_errmsg(db.raw());
      out.rows.clear();
    }
    break;
  }
  sqlite3_finalize(stmt);
  sqlite3_progress_handler(db.raw(), 0, nullptr, nullptr);
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

// Opens the database at `path` and executes. Throws StorageError when
// the file itself is missing or unreadable (SQL failures still come
// back in the outcome).
inline ExecutionOutcome execute_at(const std::string& path, const std::string& sql,
                                   const ExecOptions& opts = {}) {
  Database db(path);
  return execute(db, sql, opts);
}

// ---------------------------------------------------------------------------
// Result keys
// ---------------------------------------------------------------------------

// Digest identifying an execution result. Two outcomes share a key iff
// their normalized results are equivalent under the chosen row-order
// policy (multiset comparison unless order_sensitive).
using ResultKey = std::string;

inline ResultKey result_key(const ExecutionOutcome& outcome, bool order_sensitive) {
  if (!outcome.ok())
    throw NotExecutableError("result key requested for a failed execution: " +
                             outcome.error_message);
  std::vector<std::string> encoded;
  encoded.reserve(outcome.rows.size());
  for (const Row& row : outcome.rows) {
    std::string enc;
    for (size_t c = 0; c < row.size(); ++c) {
      if (c > 0) enc.push_back('\x1f');
      enc += row[c].encode();
    }
    encoded.push_back(std::move(enc));
  }
  if (!order_sensitive) std::sort(encoded.begin(), encoded.end());
  std::string payload = order_sensitive ? "o:" : "u:";
  for (size_t r = 0; r < encoded.size(); ++r) {
    if (r > 0) payload.push_back('\x1e');
    payload += encoded[r];
  }
  return util::sha256_hex(payload);
}

// ---------------------------------------------------------------------------
// SQL text inspection helpers
// ---------------------------------------------------------------------------

// True when the statement has an ORDER BY at the top nesting level
// (outside parentheses and string/identifier quotes). Decides whether
// result comparison is row-order sensitive.
inline bool has_top_level_order_by(std::string_view sql) {
  int depth = 0;
  size_t i = 0;
  bool pending_order = false;
  auto skip_quoted = [&](char close) {
    ++i;
    while (i < sql.size()) {
      if (sql[i] == close) {
        if (close == '\'' && i + 1 < sql.size() && sql[i + 1] == '\'') {
          i += 2;  // escaped quote inside a literal
          continue;
        }
        ++i;
        return;
      }
      ++i;
    }
  };
  while (i < sql.size()) {
    char c = sql[i];
    if (c == '\'' || c == '"' || c == '`') {
      skip_quoted(c);
      pending_order = false;
      continue;
    }
    if (c == '[') {
      skip_quoted(']');
      pending_order = false;
      continue;
    }
    if (c == '(') ++depth, ++i;
    else if (c == ')') --depth, ++i;
    else if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t b = i;
      while (i < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_'))
        ++i;
      std::string_view word = sql.substr(b, i - b);
      if (depth == 0) {
        if (pending_order && util::iequals(word, "by")) return true;
        pending_order = util::iequals(word, "order");
      }
    } else {
      ++i;
    }
  }
  return false;
}

// Removes DISTINCT keywords outside string literals. Used only by the
// legacy-compatibility evaluation mode; strict comparison keeps them.
inline std::string strip_distinct(std::string_view sql) {
  std::string out;
  size_t i = 0;
  while (i < sql.size()) {
    char c = sql[i];
    if (c == '\'' || c == '"' || c == '`') {
      char close = c;
      out.push_back(sql[i++]);
      while (i < sql.size()) {
        out.push_back(sql[i]);
        if (sql[i] == close) {
          if (close == '\'' && i + 1 < sql.size() && sql[i + 1] == '\'') {
            out.push_back(sql[++i]);
            ++i;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t b = i;
      while (i < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_'))
        ++i;
      std::string_view word = sql.substr(b, i - b);
      if (util::iequals(word, "distinct")) {
        // Drop the keyword and one following space to keep text tidy.
        if (i < sql.size() && sql[i] == ' ') ++i;
        continue;
      }
      out += word;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value scans backing prompts and content matching
// ---------------------------------------------------------------------------

// Fills ColumnSpec::sample_values with the most common distinct values
// (frequency order, value as tie-break), capped. Run once right after
// loading a catalog; schemas are treated as immutable afterwards.
inline void attach_sample_values(DatabaseSchema& schema, size_t cap = 64) {
  if (schema.storage_path.empty()) return;
  Database db(schema.storage_path);
  for (TableSchema& table : schema.tables) {
    for (ColumnSpec& col : table.columns) {
      std::string q = "SELECT CAST(" + quote_ident(col.name) + " AS TEXT) AS v, COUNT(*) AS n " +
                      "FROM " + quote_ident(table.name) + " WHERE " + quote_ident(col.name) +
                      " IS NOT NULL GROUP BY v ORDER BY n DESC, v ASC LIMIT " +
                      std::to_string(cap);
      ExecutionOutcome out = execute(db, q);
      if (!out.ok()) continue;  // mismatched fixture tables are skipped, not fatal
      col.sample_values.clear();
      for (const Row& row : out.rows) {
        if (!row.empty() && row[0].kind == Cell::Kind::kText) col.sample_values.push_back(row[0].text);
      }
    }
  }
}

// Distinct TEXT-typed values of one column in first-appearance (storage)
// order. Returns false when the column holds more than `cap` distinct
// values, in which case the scan is abandoned.
inline bool distinct_text_values(const Database& db, const std::string& table,
                                 const std::string& column, size_t cap,
                                 std::vector<std::string>& out) {
  out.clear();
  std::string q = "SELECT " + quote_ident(column) + " AS v, MIN(rowid) AS r FROM " +
                  quote_ident(table) + " WHERE typeof(" + quote_ident(column) +
                  ") = 'text' GROUP BY v ORDER BY r LIMIT " + std::to_string(cap + 1);
  ExecutionOutcome res = execute(db, q);
  if (!res.ok()) {
    // WITHOUT ROWID tables lack rowid; fall back to value order.
    q = "SELECT DISTINCT " + quote_ident(column) + " AS v FROM " + quote_ident(table) +
        " WHERE typeof(" + quote_ident(column) + ") = 'text' ORDER BY v LIMIT " +
        std::to_string(cap + 1);
    res = execute(db, q);
    if (!res.ok()) return true;  // column unusable; treat as empty
  }
  if (res.rows.size() > cap) return false;
  for (const Row& row : res.rows) {
    if (!row.empty() && row[0].kind == Cell::Kind::kText) out.push_back(row[0].text);
  }
  return true;
}

}  // namespace nl2sql
