#pragma once

// Shared fixtures: miniature databases, catalogs, question sets, a
// scripted completion backend, and an end-to-end run layout on disk.

#include <sqlite3.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nl2sql/nl2sql.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Scratch directories
// ---------------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    dir_ = fs::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return dir_; }
  std::string str() const { return dir_.string(); }

 private:
  fs::path dir_;
};

// ---------------------------------------------------------------------------
// SQLite creation (tests need write access; the library itself is read-only)
// ---------------------------------------------------------------------------

inline void create_db(const std::string& path, const std::vector<std::string>& statements) {
  fs::create_directories(fs::path(path).parent_path());
  sqlite3* db = nullptr;
  if (sqlite3_open(path.c_str(), &db) != SQLITE_OK)
    throw std::runtime_error("fixture: cannot create " + path);
  for (const std::string& sql : statements) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      sqlite3_close(db);
      throw std::runtime_error("fixture: " + msg + " while running: " + sql);
    }
  }
  sqlite3_close(db);
}

// ---------------------------------------------------------------------------
// concert_singer (Spider)
// ---------------------------------------------------------------------------

inline json concert_singer_entry() {
  return json{
      {"db_id", "concert_singer"},
      {"table_names_original", {"stadium", "singer", "concert", "singer_in_concert"}},
      {"column_names_original",
       json::array({{-1, "*"},
                    {0, "Stadium_ID"},
                    {0, "Location"},
                    {0, "Name"},
                    {0, "Capacity"},
                    {0, "Highest"},
                    {0, "Lowest"},
                    {0, "Average"},
                    {1, "Singer_ID"},
                    {1, "Name"},
                    {1, "Country"},
                    {1, "Song_Name"},
                    {1, "Song_release_year"},
                    {1, "Age"},
                    {1, "Is_male"},
                    {2, "concert_ID"},
                    {2, "concert_Name"},
                    {2, "Theme"},
                    {2, "Stadium_ID"},
                    {2, "Year"},
                    {3, "concert_ID"},
                    {3, "Singer_ID"}})},
      {"column_types",
       {"text",   "number", "text", "text", "number", "number", "number", "number",
        "number", "text",   "text", "text", "text",   "number", "others", "number",
        "text",   "text",   "text", "text", "number", "text"}},
      {"primary_keys", {1, 8, 15, 20}},
      {"foreign_keys", json::array({{18, 1}, {21, 8}, {20, 15}})}};
}

inline nl2sql::DatabaseSchema concert_singer_schema(const std::string& storage_path = "") {
  nl2sql::DatabaseSchema s = nl2sql::parse_catalog_entry(concert_singer_entry());
  s.storage_path = storage_path;
  return s;
}

inline std::vector<std::string> concert_singer_ddl() {
  return {
      "CREATE TABLE stadium (Stadium_ID INTEGER PRIMARY KEY, Location TEXT, Name TEXT, "
      "Capacity INTEGER, Highest INTEGER, Lowest INTEGER, Average INTEGER);",
      "CREATE TABLE singer (Singer_ID INTEGER PRIMARY KEY, Name TEXT, Country TEXT, "
      "Song_Name TEXT, Song_release_year TEXT, Age INTEGER, Is_male TEXT);",
      "CREATE TABLE concert (concert_ID INTEGER PRIMARY KEY, concert_Name TEXT, Theme TEXT, "
      "Stadium_ID TEXT, Year TEXT);",
      "CREATE TABLE singer_in_concert (concert_ID INTEGER, Singer_ID TEXT);"};
}

inline void write_concert_singer_db(const std::string& path) {
  std::vector<std::string> stmts = concert_singer_ddl();
  stmts.insert(stmts.end(),
               {"INSERT INTO stadium VALUES (1,'East','Big Stadium',1000,90,50,70),"
                "(2,'West','Small Arena',500,80,40,60),(3,'North','Mid Field',750,85,45,65);",
                "INSERT INTO singer VALUES (1,'Joe Sharp','Netherlands','You','1992',52,'T'),"
                "(2,'Timbaland','United States','Dangerous','2008',32,'T'),"
                "(3,'Justin Brown','France','Hey Oh','2013',29,'T'),"
                "(4,'Rose White','France','Sun','2003',41,'F');",
                "INSERT INTO concert VALUES (1,'Auditions','Free choice','1','2014'),"
                "(2,'Super bowl','Free choice 2','1','2014'),(3,'Home Visits','Music','2','2015'),"
                "(4,'Week 1','Free','2','2014'),(5,'Week 2','Party','3','2015');",
                "INSERT INTO singer_in_concert VALUES (1,'2'),(1,'3'),(2,'1'),(2,'4'),(3,'2'),"
                "(4,'3'),(5,'1'),(5,'2');"});
  create_db(path, stmts);
}

// Same query answers, different incidental strings (themes, songs,
// locations): a semantics-preserving test-suite copy.
inline void write_concert_singer_copy1(const std::string& path) {
  std::vector<std::string> stmts = concert_singer_ddl();
  stmts.insert(stmts.end(),
               {"INSERT INTO stadium VALUES (3,'Harbor','Mid Field',750,85,45,65),"
                "(1,'Downtown','Big Stadium',1000,90,50,70),"
                "(2,'Uptown','Small Arena',500,80,40,60);",
                "INSERT INTO singer VALUES (4,'Rose White','France','Moon','2003',41,'F'),"
                "(1,'Joe Sharp','Netherlands','Me','1992',52,'T'),"
                "(3,'Justin Brown','France','Hello','2013',29,'T'),"
                "(2,'Timbaland','United States','Safe','2008',32,'T');",
                "INSERT INTO concert VALUES (5,'Week 2','Jazz','3','2015'),"
                "(1,'Auditions','Rock','1','2014'),(2,'Super bowl','Pop','1','2014'),"
                "(4,'Week 1','Folk','2','2014'),(3,'Home Visits','Blues','2','2015');",
                "INSERT INTO singer_in_concert VALUES (5,'2'),(1,'2'),(2,'1'),(1,'3'),(3,'2'),"
                "(2,'4'),(5,'1'),(4,'3');"});
  create_db(path, stmts);
}

// Adds a capacity tie and an extra singer: queries that only
// accidentally matched on the original data diverge here.
inline void write_concert_singer_copy2(const std::string& path) {
  std::vector<std::string> stmts = concert_singer_ddl();
  stmts.insert(stmts.end(),
               {"INSERT INTO stadium VALUES (1,'East','Big Stadium',1000,90,50,70),"
                "(2,'West','Small Arena',500,80,40,60),(3,'North','Mid Field',750,85,45,65),"
                "(4,'South','Aaa Stadium',1000,88,47,66);",
                "INSERT INTO singer VALUES (1,'Joe Sharp','Netherlands','You','1992',52,'T'),"
                "(2,'Timbaland','United States','Dangerous','2008',32,'T'),"
                "(3,'Justin Brown','France','Hey Oh','2013',29,'T'),"
                "(4,'Rose White','France','Sun','2003',41,'F'),"
                "(5,'Tim Young','Canada','Hi','2010',30,'T');",
                "INSERT INTO concert VALUES (1,'Auditions','Free choice','1','2014'),"
                "(2,'Super bowl','Free choice 2','1','2014'),(3,'Home Visits','Music','2','2015'),"
                "(4,'Week 1','Free','2','2014'),(5,'Week 2','Party','3','2015');",
                "INSERT INTO singer_in_concert VALUES (1,'2'),(1,'3'),(2,'1'),(2,'4'),(3,'2'),"
                "(4,'3'),(5,'1'),(5,'2');"});
  create_db(path, stmts);
}

inline std::vector<nl2sql::QuestionTask> concert_singer_tasks() {
  auto make = [](std::string id, std::string q, std::string gold, std::string diff) {
    nl2sql::QuestionTask t;
    t.question_id = std::move(id);
    t.db_id = "concert_singer";
    t.question = std::move(q);
    t.gold_sql = std::move(gold);
    t.difficulty_label = diff;
    t.difficulty = nl2sql::difficulty_from_label(diff);
    return t;
  };
  return {
      make("q1", "How many singers do we have?", "SELECT count(*) FROM singer", "easy"),
      make("q2", "What is the total capacity of all stadiums?",
           "SELECT sum(Capacity) FROM stadium", "easy"),
      make("q3", "List the names of all stadiums.", "SELECT Name FROM stadium", "easy"),
      make("q4", "List singer names ordered from oldest to youngest.",
           "SELECT Name FROM singer ORDER BY Age DESC", "medium"),
      make("q5", "What is the average stadium capacity?", "SELECT avg(Capacity) FROM stadium",
           "easy"),
      make("q6", "How many concerts took place in the year 2014?",
           "SELECT count(*) FROM concert WHERE Year = '2014'", "medium"),
      make("q7", "What are the distinct countries of the singers?",
           "SELECT DISTINCT Country FROM singer", "medium"),
      make("q8", "What is the name of the stadium with the highest capacity?",
           "SELECT Name FROM stadium ORDER BY Capacity DESC LIMIT 1", "hard"),
      make("q9", "How many concerts are held at each stadium?",
           "SELECT Stadium_ID, count(*) FROM concert GROUP BY Stadium_ID", "hard"),
      make("q10", "What is the name of the youngest singer?",
           "SELECT Name FROM singer ORDER BY Age ASC LIMIT 1", "extra")};
}

// ---------------------------------------------------------------------------
// california_schools (BIRD-style content)
// ---------------------------------------------------------------------------

inline json california_schools_entry() {
  return json{
      {"db_id", "california_schools"},
      {"table_names_original", {"frpm", "satscores", "schools"}},
      {"column_names_original",
       json::array({{-1, "*"},
                    {0, "CDSCode"},
                    {0, "County Name"},
                    {0, "District Name"},
                    {0, "School Name"},
                    {0, "District Type"},
                    {0, "School Type"},
                    {0, "Charter School (Y/N)"},
                    {0, "Enrollment (K-12)"},
                    {0, "Free Meal Count (K-12)"},
                    {0, "FRPM Count (K-12)"},
                    {0, "Percent (%) Eligible Free (K-12)"},
                    {0, "Low Grade"},
                    {0, "High Grade"},
                    {1, "cds"},
                    {1, "rtype"},
                    {1, "sname"},
                    {1, "dname"},
                    {1, "cname"},
                    {1, "enroll12"},
                    {1, "NumTstTakr"},
                    {1, "AvgScrMath"},
                    {1, "NumGE1500"},
                    {2, "CDSCode"},
                    {2, "County"},
                    {2, "District"},
                    {2, "School"},
                    {2, "City"},
                    {2, "Zip"},
                    {2, "MailCity"},
                    {2, "GSoffered"},
                    {2, "GSserved"},
                    {2, "DOCType"},
                    {2, "AdmFName1"},
                    {2, "AdmLName1"},
                    {2, "Charter"}})},
      {"column_types", {"text",   "text", "text", "text", "text",   "text",   "text",
                        "number", "number", "number", "number", "number", "text", "text",
                        "text",   "text", "text", "text", "text",   "number", "number",
                        "number", "number", "text", "text", "text",   "text",   "text",
                        "text",   "text", "text", "text", "text",   "text",   "text",
                        "number"}},
      {"primary_keys", {1, 14, 23}},
      {"foreign_keys", json::array({{14, 1}, {23, 1}})}};
}

inline nl2sql::DatabaseSchema california_schools_schema(const std::string& storage_path = "") {
  nl2sql::DatabaseSchema s = nl2sql::parse_catalog_entry(california_schools_entry());
  s.storage_path = storage_path;
  return s;
}

inline void write_california_schools_db(const std::string& path) {
  create_db(
      path,
      {"CREATE TABLE frpm (CDSCode TEXT PRIMARY KEY, \"County Name\" TEXT, \"District Name\" "
       "TEXT, \"School Name\" TEXT, \"District Type\" TEXT, \"School Type\" TEXT, \"Charter "
       "School (Y/N)\" INTEGER, \"Enrollment (K-12)\" REAL, \"Free Meal Count (K-12)\" REAL, "
       "\"FRPM Count (K-12)\" REAL, \"Percent (%) Eligible Free (K-12)\" REAL, \"Low Grade\" "
       "TEXT, \"High Grade\" TEXT);",
       "CREATE TABLE satscores (cds TEXT PRIMARY KEY, rtype TEXT, sname TEXT, dname TEXT, "
       "cname TEXT, enroll12 INTEGER, NumTstTakr INTEGER, AvgScrMath INTEGER, NumGE1500 "
       "INTEGER);",
       "CREATE TABLE schools (CDSCode TEXT PRIMARY KEY, County TEXT, District TEXT, School "
       "TEXT, City TEXT, Zip TEXT, MailCity TEXT, GSoffered TEXT, GSserved TEXT, DOCType TEXT, "
       "AdmFName1 TEXT, AdmLName1 TEXT, Charter INTEGER);",
       "INSERT INTO frpm VALUES "
       "('01100170109835','Alameda','Alameda County Office of Education','Envision Academy',"
       "'County Office of Education (COE)','High Schools (Public)',1,200,115,115,0.575,'9','12'),"
       "('01611190130229','Alameda','Alameda Unified','Island High','Unified School District',"
       "'High Schools (Public)',0,1800,450,520,0.25,'9','12'),"
       "('10101080000001','Fresno','Fresno County Office of Education','Fresno ROP',"
       "'County Office of Education (COE)','Juvenile Court Schools',1,1200,680,700,0.5667,'K','12'),"
       "('06100660000002','Colusa','Colusa County Office of Education','Quail Ridge',"
       "'County Office of Education (COE)','Juvenile Court Schools',0,90,60,62,0.6667,'K','12'),"
       "('19647330000003','Los Angeles','Los Angeles Unified','Main Street Elementary',"
       "'Unified School District','Elementary Schools (Public)',0,950,700,720,0.7368,'K','6');",
       "INSERT INTO satscores VALUES "
       "('01100170109835','S','Envision Academy','Alameda County Office of Education','Alameda',"
       "120,100,420,30),"
       "('01611190130229','S','Island High','Alameda Unified','Alameda',400,350,480,120),"
       "('10101080000001','D','Fresno ROP','Fresno County Office of Education','Fresno',800,600,"
       "430,150),"
       "('06100660000002','D','Quail Ridge','Colusa County Office of Education','Colusa',60,50,"
       "390,8);",
       "INSERT INTO schools VALUES "
       "('01100170109835','Alameda','Alameda County Office of Education','Envision Academy',"
       "'Oakland','94612-3355','Oakland','K-12','K-12','County Office of Education (COE)','Rae',"
       "'Free',1),"
       "('01611190130229','Alameda','Alameda Unified','Island High','Alameda','94501-1020',"
       "'Alameda','9-12','9-12','Unified School District','Mark','Huang',0),"
       "('10101080000001','Fresno','Fresno County Office of Education','Fresno ROP','Fresno',"
       "'93706-2605','Fresno','K-12','K-12','County Office of Education (COE)','Lisa','Coe',1),"
       "('06100660000002','Colusa','Colusa County Office of Education','Quail Ridge','Colusa',"
       "'95932-2750','Colusa','K-12','K-12','County Office of Education (COE)','Dana','Ward',0),"
       "('19647330000003','Los Angeles','Los Angeles Unified','Main Street Elementary',"
       "'Los Angeles','90011-2416','Los Angeles','K-6','K-6','Unified School District','Sam',"
       "'Ortiz',0);"});
}

inline nl2sql::QuestionTask alameda_task() {
  nl2sql::QuestionTask t;
  t.question_id = "cs1";
  t.db_id = "california_schools";
  t.question =
      "What is the highest eligible free rate for K-12 students in the schools in Alameda "
      "County?";
  t.hint = "Eligible free rate for K-12 = `FRPM Count (K-12)` / `Enrollment (K-12)`";
  t.gold_sql =
      "SELECT `FRPM Count (K-12)` / `Enrollment (K-12)` FROM frpm WHERE `County Name` = "
      "'Alameda' ORDER BY (CAST(`FRPM Count (K-12)` AS REAL) / `Enrollment (K-12)`) DESC LIMIT "
      "1";
  t.difficulty_label = "simple";
  t.difficulty = nl2sql::difficulty_from_label("simple");
  return t;
}

inline nl2sql::QuestionTask fresno_task() {
  nl2sql::QuestionTask t;
  t.question_id = "cs2";
  t.db_id = "california_schools";
  t.question = "Please list the zip code of all the charter schools in Fresno County Office of "
               "Education.";
  t.hint = "Charter schools refers to `Charter School (Y/N)` = 1";
  t.gold_sql =
      "SELECT T2.Zip FROM frpm AS T1 INNER JOIN schools AS T2 ON T1.CDSCode = T2.CDSCode WHERE "
      "T1.`District Name` = 'Fresno County Office of Education' AND T1.`Charter School (Y/N)` = "
      "1";
  t.difficulty_label = "moderate";
  t.difficulty = nl2sql::difficulty_from_label("moderate");
  return t;
}

// ---------------------------------------------------------------------------
// farm (4-table natural-language serialization fixture)
// ---------------------------------------------------------------------------

inline json farm_entry() {
  return json{
      {"db_id", "farm"},
      {"table_names_original", {"city", "farm", "farm_competition", "competition_record"}},
      {"column_names_original",
       json::array({{-1, "*"},          {0, "City_ID"},        {0, "Official_Name"},
                    {0, "Status"},      {0, "Area_km_2"},      {0, "Population"},
                    {0, "Census_Ranking"}, {1, "Farm_ID"},     {1, "Year"},
                    {1, "Total_Horses"},   {1, "Working_Horses"}, {1, "Total_Cattle"},
                    {1, "Oxen"},        {1, "Bulls"},          {1, "Cows"},
                    {1, "Pigs"},        {1, "Sheep_and_Goats"}, {2, "Competition_ID"},
                    {2, "Year"},        {2, "Theme"},          {2, "Host_city_ID"},
                    {2, "Hosts"},       {3, "Competition_ID"}, {3, "Farm_ID"},
                    {3, "Rank"}})},
      {"column_types", {"text",   "number", "text",   "text",   "number", "number", "text",
                        "number", "number", "number", "number", "number", "number", "number",
                        "number", "number", "number", "number", "number", "text",   "number",
                        "text",   "number", "number", "number"}},
      {"primary_keys", {1, 7, 17, 22}},
      {"foreign_keys", json::array({{20, 1}, {23, 7}, {22, 17}})}};
}

inline nl2sql::DatabaseSchema farm_schema() { return nl2sql::parse_catalog_entry(farm_entry()); }

// ---------------------------------------------------------------------------
// Scripted completion backend
// ---------------------------------------------------------------------------

// Keys canned sample texts by exact prompt; returns exactly the
// normalized sample count requested.
class ScriptedClient : public nl2sql::CompletionClient {
 public:
  void script(const std::string& prompt, std::vector<std::string> texts) {
    by_prompt_[prompt] = std::move(texts);
  }

  nl2sql::CompletionResponse complete(const nl2sql::CompletionRequest& request) override {
    nl2sql::CompletionRequest req = nl2sql::detail::normalized(request);
    auto it = by_prompt_.find(req.prompt);
    if (it == by_prompt_.end())
      throw nl2sql::MalformedResponseError("scripted client: no script for this prompt");
    nl2sql::CompletionResponse res;
    for (int i = 0; i < req.num_samples; ++i) {
      nl2sql::Sample s;
      s.text = it->second[static_cast<size_t>(i) % it->second.size()];
      res.samples.push_back(std::move(s));
    }
    res.model_id = "scripted";
    return res;
  }

 private:
  std::unordered_map<std::string, std::vector<std::string>> by_prompt_;
};

// ---------------------------------------------------------------------------
// End-to-end run layout (catalog + questions + databases + replay session
// + config) under one root directory
// ---------------------------------------------------------------------------

// Canned sampled SQL per question for the "concise" (3 samples, t=0.7)
// and "verbose" (1 sample, t=0) paradigms. Chosen so that consistency
// voting, error filtering, cross-paradigm ties, one EX failure (q6), and
// one TS-only failure (q8) are all exercised.
inline std::vector<std::string> e2e_concise_samples(const std::string& qid) {
  auto gold = [](const std::string& id) {
    for (const nl2sql::QuestionTask& t : concert_singer_tasks()) {
      if (t.question_id == id) return t.gold_sql;
    }
    throw std::runtime_error("fixture: unknown question " + id);
  };
  if (qid == "q1") return {gold(qid), gold(qid), "SELECT count(*) FROM singer WHERE 1 = 1"};
  if (qid == "q2") return {gold(qid), gold(qid), "SELECT sum(Capacity) FROM stadiumm"};
  // The stray sample shares the gold's unordered result but must sort
  // lexicographically after it, or the vote would surface the wrong
  // ordering.
  if (qid == "q4")
    return {gold(qid), gold(qid), "SELECT singer.Name FROM singer ORDER BY Age ASC"};
  if (qid == "q6")
    return {"SELECT count(*) FROM concert WHERE Year = '2015'",
            "SELECT count(*) FROM concert WHERE Year = '2015'", gold(qid)};
  if (qid == "q7") return {gold(qid), "SELECT Country FROM singer", gold(qid)};
  if (qid == "q8") {
    std::string alt = "SELECT Name FROM stadium WHERE Capacity = (SELECT max(Capacity) FROM "
                      "stadium)";
    return {alt, alt, alt};
  }
  return {gold(qid), gold(qid), gold(qid)};
}

inline std::string e2e_verbose_sample(const std::string& qid) {
  for (const nl2sql::QuestionTask& t : concert_singer_tasks()) {
    if (t.question_id == qid) return t.gold_sql;
  }
  throw std::runtime_error("fixture: unknown question " + qid);
}

struct E2eLayout {
  fs::path root;
  fs::path config;        // run configuration
  fs::path session;       // replay session JSONL
  fs::path output_dir;    // predictions/report target
  fs::path questions;     // question set JSONL
};

inline E2eLayout write_e2e_fixture(const fs::path& root) {
  E2eLayout out;
  out.root = root;
  fs::create_directories(root);

  json tables = json::array({concert_singer_entry()});
  nl2sql::util::write_file((root / "tables.json").string(), tables.dump(2) + "\n");

  std::string questions;
  for (const nl2sql::QuestionTask& t : concert_singer_tasks()) {
    json rec{{"question_id", t.question_id},
             {"db_id", t.db_id},
             {"question", t.question},
             {"query", t.gold_sql},
             {"difficulty", t.difficulty_label}};
    questions += rec.dump() + "\n";
  }
  out.questions = root / "questions.jsonl";
  nl2sql::util::write_file(out.questions.string(), questions);

  write_concert_singer_db((root / "databases/concert_singer/concert_singer.sqlite").string());
  write_concert_singer_copy1((root / "aug1/concert_singer/concert_singer.sqlite").string());
  write_concert_singer_copy2((root / "aug2/concert_singer/concert_singer.sqlite").string());

  // Record the exact requests the pipeline will issue so replay keys match.
  out.session = root / "session.jsonl";
  {
    nl2sql::DatabaseSchema schema = concert_singer_schema();
    auto scripted = std::make_shared<ScriptedClient>();
    nl2sql::RecordingClient recorder(scripted, out.session.string());
    nl2sql::PromptStyle concise;
    nl2sql::PromptStyle verbose;
    verbose.mode = nl2sql::PromptMode::kVerbose;
    for (const nl2sql::QuestionTask& task : concert_singer_tasks()) {
      nl2sql::CompletionRequest req;
      req.prompt = nl2sql::build_prompt(schema, task, concise).rendered;
      req.temperature = 0.7;
      req.num_samples = 3;
      req.max_output_len = 256;
      scripted->script(req.prompt, e2e_concise_samples(task.question_id));
      recorder.complete(req);

      nl2sql::CompletionRequest vreq;
      vreq.prompt = nl2sql::build_prompt(schema, task, verbose).rendered;
      vreq.temperature = 0.0;
      vreq.num_samples = 1;
      vreq.max_output_len = 256;
      scripted->script(vreq.prompt, {e2e_verbose_sample(task.question_id)});
      recorder.complete(vreq);
    }
  }

  out.output_dir = root / "out";
  json config{
      {"paths",
       {{"catalog", (root / "tables.json").string()},
        {"questions", out.questions.string()},
        {"databases_dir", (root / "databases").string()},
        {"output_dir", out.output_dir.string()},
        {"catalog_format", "spider"}}},
      {"backend", {{"type", "replay"}, {"session", out.session.string()}}},
      {"paradigms",
       json::array({{{"id", "concise"},
                     {"mode", "concise"},
                     {"num_samples", 3},
                     {"temperature", 0.7},
                     {"max_output_len", 256}},
                    {{"id", "verbose"},
                     {"mode", "verbose"},
                     {"num_samples", 1},
                     {"temperature", 0.0},
                     {"max_output_len", 256}}})},
      {"evaluation",
       {{"augmented_dirs", {(root / "aug1").string(), (root / "aug2").string()}},
        {"timeout_seconds", 30.0}}}};
  out.config = root / "config.json";
  nl2sql::util::write_file(out.config.string(), config.dump(2) + "\n");
  return out;
}

// Rewrite-generation replay session over the first three questions, with
// a matching config file. Scripts:
//   q1: three correct rewrites at similarities .95/.85/.75 (two kept)
//   q2: two correct (one above the ceiling) and one wrong-result rewrite
//   q3: one kept rewrite plus one malformed element (parse warning)
inline E2eLayout write_synth_fixture(const fs::path& root) {
  E2eLayout out;
  out.root = root;
  fs::create_directories(root);

  json tables = json::array({concert_singer_entry()});
  nl2sql::util::write_file((root / "tables.json").string(), tables.dump(2) + "\n");

  std::vector<nl2sql::QuestionTask> tasks = concert_singer_tasks();
  tasks.resize(3);
  std::string questions;
  for (const nl2sql::QuestionTask& t : tasks) {
    json rec{{"question_id", t.question_id},
             {"db_id", t.db_id},
             {"question", t.question},
             {"query", t.gold_sql},
             {"difficulty", t.difficulty_label}};
    questions += rec.dump() + "\n";
  }
  out.questions = root / "questions.jsonl";
  nl2sql::util::write_file(out.questions.string(), questions);

  write_concert_singer_db((root / "databases/concert_singer/concert_singer.sqlite").string());

  auto synth_response = [](const std::string& qid) -> std::string {
    if (qid == "q1")
      return json::array({{{"sql", "SELECT count(Singer_ID) FROM singer"}, {"similarity", 0.95}},
                          {{"sql", "SELECT count(*) FROM singer WHERE 1 = 1"},
                           {"similarity", 0.85}},
                          {{"sql", "SELECT sum(1) FROM singer"}, {"similarity", 0.75}}})
          .dump();
    if (qid == "q2")
      return json::array({{{"sql", "SELECT sum(Capacity) FROM stadium WHERE 1 = 1"},
                           {"similarity", 0.95}},
                          {{"sql", "SELECT total(Capacity) FROM stadium"}, {"similarity", 0.5}},
                          {{"sql", "SELECT max(Capacity) FROM stadium"}, {"similarity", 0.4}}})
          .dump();
    // q3: prose around the array, one malformed element
    return "Here are the rewrites:\n" +
           json::array({{{"sql", "SELECT Name FROM stadium WHERE 1 = 1"}, {"similarity", 0.8}},
                        {{"similarity", 0.7}}})
               .dump() +
           "\nDone.";
  };

  out.session = root / "session.jsonl";
  {
    nl2sql::DatabaseSchema schema = concert_singer_schema();
    auto scripted = std::make_shared<ScriptedClient>();
    nl2sql::RecordingClient recorder(scripted, out.session.string());
    for (const nl2sql::QuestionTask& task : tasks) {
      nl2sql::CompletionRequest req;
      req.prompt = nl2sql::build_synth_prompt(schema, task);
      req.temperature = 0.0;
      req.num_samples = 1;
      req.max_output_len = 512;
      scripted->script(req.prompt, {synth_response(task.question_id)});
      recorder.complete(req);
    }
  }

  out.output_dir = root / "out";
  json config{{"paths",
               {{"catalog", (root / "tables.json").string()},
                {"questions", out.questions.string()},
                {"databases_dir", (root / "databases").string()},
                {"output_dir", out.output_dir.string()},
                {"catalog_format", "spider"}}},
              {"backend", {{"type", "replay"}, {"session", out.session.string()}}}};
  out.config = root / "config.json";
  nl2sql::util::write_file(out.config.string(), config.dump(2) + "\n");
  return out;
}

// california_schools layout for content-matching and selection commands.
inline E2eLayout write_california_fixture(const fs::path& root) {
  E2eLayout out;
  out.root = root;
  fs::create_directories(root);

  json tables = json::array({california_schools_entry()});
  nl2sql::util::write_file((root / "tables.json").string(), tables.dump(2) + "\n");

  json questions = json::array();
  for (const nl2sql::QuestionTask& t : {alameda_task(), fresno_task()}) {
    questions.push_back({{"question_id", t.question_id},
                         {"db_id", t.db_id},
                         {"question", t.question},
                         {"evidence", t.hint},
                         {"SQL", t.gold_sql},
                         {"difficulty", t.difficulty_label}});
  }
  out.questions = root / "questions.json";
  nl2sql::util::write_file(out.questions.string(), questions.dump(2) + "\n");

  write_california_schools_db(
      (root / "databases/california_schools/california_schools.sqlite").string());

  out.session = root / "session.jsonl";
  nl2sql::util::write_file(out.session.string(), "");

  out.output_dir = root / "out";
  json config{{"paths",
               {{"catalog", (root / "tables.json").string()},
                {"questions", out.questions.string()},
                {"databases_dir", (root / "databases").string()},
                {"output_dir", out.output_dir.string()},
                {"catalog_format", "spider"}}},
              {"backend", {{"type", "replay"}, {"session", out.session.string()}}}};
  out.config = root / "config.json";
  nl2sql::util::write_file(out.config.string(), config.dump(2) + "\n");
  return out;
}

}  // namespace fixtures
