#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

struct CandidateSource {
  std::string paradigm_id;
  int sample_index = 0;
};

struct SqlCandidate {
  std::string sql;
  CandidateSource source;
  std::optional<double> weight;             // sequence probability, when reported
  std::optional<ExecutionOutcome> outcome;  // populated by execution
};

struct SelectionResult {
  SqlCandidate chosen;
  ResultKey group_key;     // empty when every candidate failed
  double group_mass = 0.0; // winning group's aggregated weight (or count)
  int valid_count = 0;
  int error_count = 0;
  bool tie_broken = false;   // winner decided by the declared tie rule
  bool all_invalid = false;  // no candidate executed successfully
};

// Executes any candidate that does not carry an outcome yet.
inline void execute_candidates(std::vector<SqlCandidate>& candidates, const Database& db,
                               const ExecOptions& opts = {}) {
  for (SqlCandidate& c : candidates) {
    if (!c.outcome) c.outcome = execute(db, c.sql, opts);
  }
}

// ---------------------------------------------------------------------------
// Execution-consistency selection over sampled candidates
// ---------------------------------------------------------------------------

// Picks the candidate whose execution result carries the largest
// aggregated probability mass. Failed executions are filtered out first;
// survivors are grouped by result key (multiset row semantics — sampled
// candidates have no reference ORDER BY to borrow); each group scores
// the sum of member weights when `use_weights` is set and every input
// candidate has one, or the member count otherwise. The chosen SQL is
// the lexicographically smallest member of the winning group; when
// several groups tie on score, the group containing the earliest
// sample_index wins and the result is flagged tie_broken. When nothing
// executes, the first candidate comes back flagged all_invalid.
inline SelectionResult consistency_select(const std::vector<SqlCandidate>& candidates,
                                          bool use_weights = false,
                                          bool order_sensitive = false) {
  if (candidates.empty()) throw EmptyInputError("consistency selection over zero candidates");

  bool weights_usable = use_weights;
  for (const SqlCandidate& c : candidates) {
    if (!c.weight) {
      weights_usable = false;  // any missing weight demotes the whole batch to counts
      break;
    }
  }

  std::map<ResultKey, std::vector<size_t>> groups;
  int valid = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const SqlCandidate& c = candidates[i];
    if (!c.outcome || !c.outcome->ok()) continue;
    ++valid;
    groups[result_key(*c.outcome, order_sensitive)].push_back(i);
  }

  SelectionResult result;
  result.valid_count = valid;
  result.error_count = static_cast<int>(candidates.size()) - valid;
  if (groups.empty()) {
    result.chosen = candidates.front();
    result.all_invalid = true;
    return result;
  }

  struct GroupScore {
    ResultKey key;
    double mass = 0.0;
    int earliest_sample = 0;
  };
  std::vector<GroupScore> scored;
  for (const auto& [key, members] : groups) {
    GroupScore g;
    g.key = key;
    g.earliest_sample = candidates[members.front()].source.sample_index;
    for (size_t i : members) {
      g.mass += weights_usable ? *candidates[i].weight : 1.0;
      g.earliest_sample = std::min(g.earliest_sample, candidates[i].source.sample_index);
    }
    scored.push_back(std::move(g));
  }

  const GroupScore* best = &scored.front();
  int max_count = 1;
  for (size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].mass > best->mass) {
      best = &scored[i];
      max_count = 1;
    } else if (scored[i].mass == best->mass) {
      ++max_count;
      if (scored[i].earliest_sample < best->earliest_sample) best = &scored[i];
    }
  }
  result.tie_broken = max_count > 1;
  result.group_key = best->key;
  result.group_mass = best->mass;

  const std::vector<size_t>& members = groups[best->key];
  size_t pick = members.front();
  for (size_t i : members) {
    if (candidates[i].sql < candidates[pick].sql) pick = i;
  }
  result.chosen = candidates[pick];
  return result;
}

// ---------------------------------------------------------------------------
// Cross-paradigm selection (one candidate per prompting paradigm)
// ---------------------------------------------------------------------------

// Arg-max over counts of matching valid execution results across the
// paradigms' answers. `priority` (paradigm ids, best first; defaults to
// input order) resolves count ties and selects the representative within
// the winning group. With no valid execution at all, the
// highest-priority paradigm's candidate comes back flagged all_invalid.
inline SelectionResult cross_paradigm_select_executed(
    const std::vector<std::pair<std::string, SqlCandidate>>& per_paradigm,
    std::vector<std::string> priority = {}, bool order_sensitive = false) {
  if (per_paradigm.empty()) throw EmptyInputError("cross-paradigm selection over zero paradigms");
  if (priority.empty()) {
    for (const auto& [id, cand] : per_paradigm) priority.push_back(id);
  }
  auto entry_of = [&](const std::string& id) -> const SqlCandidate* {
    for (const auto& [pid, cand] : per_paradigm) {
      if (pid == id) return &cand;
    }
    return nullptr;
  };

  std::map<ResultKey, int> counts;
  int valid = 0;
  std::map<std::string, ResultKey> key_of;  // paradigm -> its result key
  for (const auto& [id, cand] : per_paradigm) {
    if (!cand.outcome || !cand.outcome->ok()) continue;
    ++valid;
    ResultKey key = result_key(*cand.outcome, order_sensitive);
    key_of[id] = key;
    counts[key] += 1;
  }

  SelectionResult result;
  result.valid_count = valid;
  result.error_count = static_cast<int>(per_paradigm.size()) - valid;

  if (valid == 0) {
    for (const std::string& id : priority) {
      if (const SqlCandidate* c = entry_of(id)) {
        result.chosen = *c;
        break;
      }
    }
    result.all_invalid = true;
    return result;
  }

  int max_count = 0;
  int groups_at_max = 0;
  for (const auto& [key, count] : counts) {
    if (count > max_count) {
      max_count = count;
      groups_at_max = 1;
    } else if (count == max_count) {
      ++groups_at_max;
    }
  }
  result.tie_broken = groups_at_max > 1;
  result.group_mass = max_count;

  // Highest-priority paradigm sitting in a maximal group represents it.
  for (const std::string& id : priority) {
    auto it = key_of.find(id);
    if (it == key_of.end()) continue;
    if (counts[it->second] == max_count) {
      result.chosen = *entry_of(id);
      result.group_key = it->second;
      return result;
    }
  }
  throw Error("cross-paradigm selection failed to locate a maximal group member");
}

// Convenience wrapper that executes each paradigm's SQL first.
inline SelectionResult cross_paradigm_select(
    std::vector<std::pair<std::string, SqlCandidate>> per_paradigm, const Database& db,
    const ExecOptions& opts = {}, std::vector<std::string> priority = {}) {
  for (auto& [id, cand] : per_paradigm) {
    cand.source.paradigm_id = id;
    if (!cand.outcome) cand.outcome = execute(db, cand.sql, opts);
  }
  return cross_paradigm_select_executed(per_paradigm, std::move(priority));
}

// ---------------------------------------------------------------------------
// Prediction records
// ---------------------------------------------------------------------------

// JSONL record written per question by the prediction pipeline.
inline nlohmann::json to_prediction_json(const std::string& question_id, const std::string& db_id,
                                         const std::string& paradigm,
                                         const SelectionResult& result,
                                         const std::vector<SqlCandidate>& candidates,
                                         long elapsed_ms) {
  nlohmann::json j;
  j["question_id"] = question_id;
  j["db_id"] = db_id;
  j["paradigm"] = paradigm;
  j["chosen_sql"] = result.chosen.sql;
  j["all_invalid"] = result.all_invalid;
  nlohmann::json cands = nlohmann::json::array();
  for (const SqlCandidate& c : candidates) {
    nlohmann::json cj;
    cj["sql"] = c.sql;
    if (c.outcome) {
      cj["status"] = std::string(to_string(c.outcome->status));
      cj["result_digest"] = c.outcome->ok() ? result_key(*c.outcome, false) : "";
    } else {
      cj["status"] = "not_executed";
      cj["result_digest"] = "";
    }
    cands.push_back(std::move(cj));
  }
  j["candidates"] = cands;
  j["elapsed_ms"] = elapsed_ms;
  return j;
}

}  // namespace nl2sql
