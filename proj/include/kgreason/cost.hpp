#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace kgreason {

// Tags under which completions are metered.
namespace tags {
inline constexpr const char* kThought = "thought";
inline constexpr const char* kMerge = "merge";
inline constexpr const char* kSelect = "select";
inline constexpr const char* kScore = "score";
inline constexpr const char* kExtract = "extract";
inline constexpr const char* kPruneRelations = "prune_relations";
inline constexpr const char* kPruneEntities = "prune_entities";
inline constexpr const char* kAttributes = "attributes";
inline constexpr const char* kEndCheck = "end_check";
inline constexpr const char* kAnswer = "answer";
inline constexpr const char* kReask = "reask";
inline constexpr const char* kJudge = "judge";
inline constexpr const char* kJudgeError = "judge_error";
}  // namespace tags

// KG operation kinds.
namespace ops {
inline constexpr const char* kRetrieveNode = "retrieve_node";
inline constexpr const char* kNodeFeature = "node_feature";
inline constexpr const char* kNeighborCheck = "neighbor_check";
inline constexpr const char* kNodeDegree = "node_degree";
inline constexpr const char* kFetchEntity = "fetch_entity";
}  // namespace ops

// Plain snapshot of the meters for one run.
struct CostCounters {
  std::map<std::string, std::int64_t> llm_calls_by_tag;
  std::map<std::string, std::int64_t> kg_ops_by_kind;
  std::int64_t merge_attempts = 0;
  std::int64_t transport_retries = 0;
  std::int64_t explore_searches = 0;
  // Sum over expanded entities of (1 + relations selected).
  std::int64_t explore_cost_units = 0;
  std::optional<double> wall_time_seconds;

  std::int64_t llm_calls() const;
  std::int64_t llm_calls(const std::string& tag) const;
  std::int64_t kg_ops() const;
  std::int64_t kg_ops(const std::string& kind) const;

  CostCounters& operator+=(const CostCounters& other);
  bool operator==(const CostCounters&) const = default;
};

// Thread-safe accumulator; snapshot() at run end.
class CostMeter {
 public:
  void llm_call(const std::string& tag, std::int64_t n = 1);
  void kg_op(const std::string& kind, std::int64_t n = 1);
  void merge_attempt();
  void transport_retry();
  void explore_search(std::int64_t cost_units);

  CostCounters snapshot() const;

 private:
  mutable std::mutex mu_;
  CostCounters counters_;
};

enum class Strategy { kCot, kTot, kGot };
enum class Interaction { kAgent, kExplore };
enum class Evaluator { kSelect, kScore };

const char* to_string(Strategy s);
const char* to_string(Interaction i);
const char* to_string(Evaluator e);
Strategy parse_strategy(const std::string& s);
Interaction parse_interaction(const std::string& s);
Evaluator parse_evaluator(const std::string& s);

struct CostBound {
  Strategy strategy = Strategy::kCot;
  Interaction interaction = Interaction::kAgent;
  int n = 0;
  int k = 1;
  int t = 1;
  int d_max = 1;
  int d = 0;  // KG search depth (explore)
  std::int64_t generation_call_bound = 0;
  std::int64_t merge_attempt_bound = 0;
  // Agent: KG operations. Explore: KG searches, i.e. units of Cost_Explore(d).
  std::int64_t kg_op_bound = 0;
};

struct BoundParams {
  Strategy strategy = Strategy::kCot;
  Interaction interaction = Interaction::kAgent;
  int n = 10;
  int k = 3;
  int t = 3;
  int d_max = 3;
  int d = 3;
  int max_actions_per_step = 4;
};

// k * (t^D - 1) / (t - 1), or k * D when t == 1.
std::int64_t tree_generation_calls(int k, int t, int depth);
// Sum over i = 1..D of floor(k * t^i / 2).
std::int64_t got_merge_attempts(int k, int t, int depth);

CostBound bound_for(const BoundParams& params);

struct CheckResult {
  bool ok = true;
  std::vector<std::string> violations;
};

CheckResult check(const CostCounters& counters, const CostBound& bound);

}  // namespace kgreason
