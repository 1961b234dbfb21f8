// Read-only SQLite execution, result normalization, result keys, and the
// SQL text inspection helpers.

#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "nl2sql/nl2sql.hpp"
#include "support/fixtures.hpp"

using namespace nl2sql;

namespace {

struct Db {
  fixtures::TempDir dir{"sqlite"};
  std::string path;
  Db() {
    path = (dir.path() / "concert_singer.sqlite").string();
    fixtures::write_concert_singer_db(path);
  }
};

}  // namespace

TEST_CASE("Database constructor validates the file", "[sqlite_db]") {
  fixtures::TempDir dir("sqlite-open");
  CHECK_THROWS_AS(Database((dir.path() / "missing.sqlite").string()), StorageError);
  std::string garbage = (dir.path() / "garbage.sqlite").string();
  util::write_file(garbage, "this is not a database file, not even close to one......");
  CHECK_THROWS_AS(Database(garbage), StorageError);
  CHECK_THROWS_AS(execute_at((dir.path() / "missing.sqlite").string(), "SELECT 1"), StorageError);
}

TEST_CASE("execute returns normalized rows", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);

  ExecutionOutcome out = execute(db, "SELECT count(*) FROM singer");
  REQUIRE(out.ok());
  REQUIRE(out.rows.size() == 1);
  REQUIRE(out.rows[0].size() == 1);
  CHECK(out.rows[0][0].kind == Cell::Kind::kInteger);
  CHECK(out.rows[0][0].integer == 4);

  out = execute(db, "SELECT Name FROM stadium ORDER BY Capacity DESC");
  REQUIRE(out.ok());
  REQUIRE(out.rows.size() == 3);
  CHECK(out.rows[0][0].text == "Big Stadium");
  CHECK(out.rows[1][0].text == "Mid Field");
  CHECK(out.rows[2][0].text == "Small Arena");
  CHECK(out.elapsed_seconds >= 0.0);
}

TEST_CASE("execute reports SQL failures in the outcome, not as exceptions", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);

  ExecutionOutcome bad = execute(db, "SELECT * FROM stadiumm");
  CHECK(bad.status == ExecStatus::kError);
  CHECK_FALSE(bad.error_message.empty());

  // The connection is read-only: mutation fails at execution time.
  ExecutionOutcome write = execute(db, "INSERT INTO stadium VALUES (9,'S','N',1,1,1,1)");
  CHECK(write.status == ExecStatus::kError);
  ExecutionOutcome ddl = execute(db, "DROP TABLE stadium");
  CHECK(ddl.status == ExecStatus::kError);
  CHECK(execute(db, "SELECT count(*) FROM stadium").ok());  // nothing was mutated

  // Only the first statement of a compound string runs.
  ExecutionOutcome first = execute(db, "SELECT 7; DROP TABLE stadium;");
  REQUIRE(first.ok());
  REQUIRE(first.rows.size() == 1);
  CHECK(first.rows[0][0].integer == 7);
  CHECK(execute(db, "SELECT count(*) FROM stadium").ok());
}

TEST_CASE("runaway statements hit the timeout", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);
  ExecOptions opts;
  opts.timeout_seconds = 0.05;
  ExecutionOutcome out = execute(
      db, "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) SELECT count(*) FROM c",
      opts);
  CHECK(out.status == ExecStatus::kTimeout);
  CHECK(out.rows.empty());
  // The handle stays usable afterwards.
  CHECK(execute(db, "SELECT 1", opts).ok());
}

TEST_CASE("cell normalization", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);

  SECTION("integral floats collapse onto integers") {
    ExecutionOutcome out = execute(db, "SELECT 3.0, 2.5, -0.0");
    REQUIRE(out.ok());
    CHECK(out.rows[0][0].kind == Cell::Kind::kInteger);
    CHECK(out.rows[0][0].integer == 3);
    CHECK(out.rows[0][1].kind == Cell::Kind::kReal);
    CHECK(out.rows[0][1].text == "2.5");
    CHECK(out.rows[0][2].kind == Cell::Kind::kInteger);
    CHECK(out.rows[0][2].integer == 0);
  }

  SECTION("reals use canonical six-significant-digit text") {
    ExecutionOutcome out = execute(db, "SELECT 1.0/3, 1e16");
    REQUIRE(out.ok());
    CHECK(out.rows[0][0].kind == Cell::Kind::kReal);
    CHECK(out.rows[0][0].text == "0.333333");
    // Magnitudes past the integral-collapse guard stay real.
    CHECK(out.rows[0][1].kind == Cell::Kind::kReal);
    CHECK(out.rows[0][1].text == "1e+16");
  }

  SECTION("NULL, text, and blob cells") {
    ExecutionOutcome out = execute(db, "SELECT NULL, 'abc', X'0102', X''");
    REQUIRE(out.ok());
    CHECK(out.rows[0][0].kind == Cell::Kind::kNull);
    CHECK(out.rows[0][1].kind == Cell::Kind::kText);
    CHECK(out.rows[0][1].text == "abc");
    CHECK(out.rows[0][2].kind == Cell::Kind::kBlob);
    CHECK(out.rows[0][2].text == util::sha256_hex(std::string("\x01\x02", 2)).substr(0, 16));
    CHECK(out.rows[0][3].kind == Cell::Kind::kBlob);
    CHECK(out.rows[0][3].text == util::sha256_hex("").substr(0, 16));
  }

  SECTION("lenient_numeric folds numeric-looking text") {
    ExecOptions lenient;
    lenient.lenient_numeric = true;
    ExecutionOutcome out = execute(db, "SELECT '3', '3.5', '4.0', 'abc', '3x', ''", lenient);
    REQUIRE(out.ok());
    CHECK(out.rows[0][0].kind == Cell::Kind::kInteger);
    CHECK(out.rows[0][0].integer == 3);
    CHECK(out.rows[0][1].kind == Cell::Kind::kReal);
    CHECK(out.rows[0][1].text == "3.5");
    CHECK(out.rows[0][2].kind == Cell::Kind::kInteger);
    CHECK(out.rows[0][2].integer == 4);
    CHECK(out.rows[0][3].kind == Cell::Kind::kText);
    CHECK(out.rows[0][4].kind == Cell::Kind::kText);
    CHECK(out.rows[0][5].kind == Cell::Kind::kText);

    // Strict mode keeps '3' textual.
    ExecutionOutcome strict = execute(db, "SELECT '3'");
    CHECK(strict.rows[0][0].kind == Cell::Kind::kText);
  }
}

TEST_CASE("Cell::encode keeps types apart", "[sqlite_db]") {
  Cell i;
  i.kind = Cell::Kind::kInteger;
  i.integer = 1;
  Cell t;
  t.kind = Cell::Kind::kText;
  t.text = "1";
  Cell r;
  r.kind = Cell::Kind::kReal;
  r.text = "1.5";
  Cell n;
  CHECK(i.encode() == "i:1");
  CHECK(t.encode() == "t:1");
  CHECK(r.encode() == "r:1.5");
  CHECK(n.encode() == "n:");
}

TEST_CASE("result_key equivalence semantics", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);

  ExecutionOutcome asc = execute(db, "SELECT Name FROM stadium ORDER BY Capacity ASC");
  ExecutionOutcome desc = execute(db, "SELECT Name FROM stadium ORDER BY Capacity DESC");
  REQUIRE(asc.ok());
  REQUIRE(desc.ok());

  // Same multiset of rows: equal unordered keys, distinct ordered keys.
  CHECK(result_key(asc, false) == result_key(desc, false));
  CHECK(result_key(asc, true) != result_key(desc, true));
  // Deterministic across calls.
  CHECK(result_key(asc, true) == result_key(asc, true));
  // The order policy is part of the key.
  CHECK(result_key(asc, true) != result_key(asc, false));

  // Typed cells are distinct even when they print alike.
  ExecutionOutcome num = execute(db, "SELECT 1");
  ExecutionOutcome txt = execute(db, "SELECT '1'");
  CHECK(result_key(num, false) != result_key(txt, false));

  // Row boundaries matter: two one-cell rows != one two-cell row.
  ExecutionOutcome two_rows = execute(db, "SELECT 'a' UNION ALL SELECT 'b'");
  ExecutionOutcome one_row = execute(db, "SELECT 'a', 'b'");
  CHECK(result_key(two_rows, false) != result_key(one_row, false));

  // Empty result sets still key by order policy.
  ExecutionOutcome empty = execute(db, "SELECT Name FROM stadium WHERE Capacity > 99999");
  CHECK(result_key(empty, true) != result_key(empty, false));

  ExecutionOutcome failed = execute(db, "SELECT * FROM nope");
  CHECK_THROWS_AS(result_key(failed, false), NotExecutableError);
}

TEST_CASE("has_top_level_order_by", "[sqlite_db]") {
  CHECK(has_top_level_order_by("SELECT a FROM t ORDER BY a"));
  CHECK(has_top_level_order_by("SELECT a FROM t order   by a LIMIT 1"));
  CHECK(has_top_level_order_by("SELECT a FROM t ORDER\nBY a"));
  CHECK_FALSE(has_top_level_order_by("SELECT a FROM t"));
  // Nested inside parentheses: not top level.
  CHECK_FALSE(has_top_level_order_by(
      "SELECT a FROM (SELECT a FROM t ORDER BY a LIMIT 3) sub"));
  CHECK_FALSE(has_top_level_order_by(
      "SELECT a FROM t WHERE b IN (SELECT b FROM u ORDER BY b)"));
  // Inside quotes: ignored.
  CHECK_FALSE(has_top_level_order_by("SELECT 'ORDER BY x' FROM t"));
  CHECK_FALSE(has_top_level_order_by("SELECT \"ORDER BY\" FROM t"));
  CHECK_FALSE(has_top_level_order_by("SELECT `ORDER BY` FROM t"));
  CHECK_FALSE(has_top_level_order_by("SELECT [ORDER BY] FROM t"));
  // A quoted segment breaks an ORDER ... BY pair.
  CHECK_FALSE(has_top_level_order_by("SELECT a AS \"order\" FROM t WHERE b = 'by'"));
  // Escaped single quote inside a literal does not end the literal.
  CHECK_FALSE(has_top_level_order_by("SELECT 'it''s ORDER BY here' FROM t"));
  // Outer ORDER BY after a subquery is still top level.
  CHECK(has_top_level_order_by(
      "SELECT a FROM (SELECT a FROM t) sub ORDER BY a"));
}

TEST_CASE("strip_distinct", "[sqlite_db]") {
  CHECK(strip_distinct("SELECT DISTINCT a FROM t") == "SELECT a FROM t");
  CHECK(strip_distinct("SELECT distinct a, b FROM t") == "SELECT a, b FROM t");
  CHECK(strip_distinct("SELECT COUNT(DISTINCT a) FROM t") == "SELECT COUNT(a) FROM t");
  // Keyword followed by a non-space loses only the keyword.
  CHECK(strip_distinct("SELECT DISTINCT(a) FROM t") == "SELECT (a) FROM t");
  // Literals and quoted identifiers are preserved.
  CHECK(strip_distinct("SELECT 'DISTINCT a' FROM t") == "SELECT 'DISTINCT a' FROM t");
  CHECK(strip_distinct("SELECT \"distinct\" FROM t") == "SELECT \"distinct\" FROM t");
  CHECK(strip_distinct("SELECT 'it''s DISTINCT' FROM t") == "SELECT 'it''s DISTINCT' FROM t");
  // Words merely containing the keyword are untouched.
  CHECK(strip_distinct("SELECT distinctive FROM t") == "SELECT distinctive FROM t");
  CHECK(strip_distinct("no keyword here") == "no keyword here");
}

TEST_CASE("attach_sample_values fills frequency-ordered capped values", "[sqlite_db]") {
  Db fixture;
  DatabaseSchema schema = fixtures::concert_singer_schema(fixture.path);
  attach_sample_values(schema);

  // singer.Country: France twice, the rest once -> frequency then value.
  const ColumnSpec& country = schema.tables[1].columns[2];
  CHECK(country.sample_values ==
        std::vector<std::string>{"France", "Netherlands", "United States"});

  // Numeric columns arrive as text casts, ordered by value on equal counts.
  const ColumnSpec& age = schema.tables[1].columns[5];
  CHECK(age.sample_values == std::vector<std::string>{"29", "32", "41", "52"});

  // Cap limits the list length.
  DatabaseSchema capped = fixtures::concert_singer_schema(fixture.path);
  attach_sample_values(capped, 2);
  CHECK(capped.tables[1].columns[2].sample_values ==
        std::vector<std::string>{"France", "Netherlands"});

  // No storage path: a silent no-op.
  DatabaseSchema detached = fixtures::concert_singer_schema();
  attach_sample_values(detached);
  CHECK(detached.tables[0].columns[0].sample_values.empty());

  // A schema table missing from the file is skipped, not fatal.
  DatabaseSchema extra = fixtures::concert_singer_schema(fixture.path);
  TableSchema ghost;
  ghost.name = "ghost";
  ColumnSpec ghost_col;
  ghost_col.table_index = 4;
  ghost_col.name = "c";
  ghost.columns.push_back(ghost_col);
  extra.tables.push_back(ghost);
  CHECK_NOTHROW(attach_sample_values(extra));
  CHECK(extra.tables[4].columns[0].sample_values.empty());
}

TEST_CASE("distinct_text_values scans in storage order with a cap", "[sqlite_db]") {
  Db fixture;
  Database db(fixture.path);
  std::vector<std::string> values;

  // Storage order, not value order: East(row 1), West(row 2), North(row 3).
  REQUIRE(distinct_text_values(db, "stadium", "Location", 100, values));
  CHECK(values == std::vector<std::string>{"East", "West", "North"});

  // Duplicates collapse to first appearance.
  REQUIRE(distinct_text_values(db, "concert", "Year", 100, values));
  CHECK(values == std::vector<std::string>{"2014", "2015"});

  // Over-cap columns abort the scan.
  CHECK_FALSE(distinct_text_values(db, "concert", "Year", 1, values));

  // Non-text columns yield nothing (typeof filter).
  REQUIRE(distinct_text_values(db, "stadium", "Capacity", 100, values));
  CHECK(values.empty());

  // Unusable columns are treated as empty rather than fatal.
  REQUIRE(distinct_text_values(db, "stadium", "NoSuchColumn", 100, values));
  CHECK(values.empty());
}
