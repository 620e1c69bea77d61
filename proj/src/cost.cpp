#include "kgreason/cost.hpp"

#include "kgreason/error.hpp"

namespace kgreason {

std::int64_t CostCounters::llm_calls() const {
  std::int64_t total = 0;
  for (const auto& [_, n] : llm_calls_by_tag) total += n;
  return total;
}

std::int64_t CostCounters::llm_calls(const std::string& tag) const {
  auto it = llm_calls_by_tag.find(tag);
  return it == llm_calls_by_tag.end() ? 0 : it->second;
}

std::int64_t CostCounters::kg_ops() const {
  std::int64_t total = 0;
  for (const auto& [_, n] : kg_ops_by_kind) total += n;
  return total;
}

std::int64_t CostCounters::kg_ops(const std::string& kind) const {
  auto it = kg_ops_by_kind.find(kind);
  return it == kg_ops_by_kind.end() ? 0 : it->second;
}

CostCounters& CostCounters::operator+=(const CostCounters& other) {
  for (const auto& [tag, n] : other.llm_calls_by_tag) llm_calls_by_tag[tag] += n;
  for (const auto& [kind, n] : other.kg_ops_by_kind) kg_ops_by_kind[kind] += n;
  merge_attempts += other.merge_attempts;
  transport_retries += other.transport_retries;
  explore_searches += other.explore_searches;
  explore_cost_units += other.explore_cost_units;
  if (other.wall_time_seconds) {
    wall_time_seconds = wall_time_seconds.value_or(0.0) + *other.wall_time_seconds;
  }
  return *this;
}

void CostMeter::llm_call(const std::string& tag, std::int64_t n) {
  std::lock_guard lock(mu_);
  counters_.llm_calls_by_tag[tag] += n;
}

void CostMeter::kg_op(const std::string& kind, std::int64_t n) {
  std::lock_guard lock(mu_);
  counters_.kg_ops_by_kind[kind] += n;
}

void CostMeter::merge_attempt() {
  std::lock_guard lock(mu_);
  ++counters_.merge_attempts;
}

void CostMeter::transport_retry() {
  std::lock_guard lock(mu_);
  ++counters_.transport_retries;
}

void CostMeter::explore_search(std::int64_t cost_units) {
  std::lock_guard lock(mu_);
  ++counters_.explore_searches;
  counters_.explore_cost_units += cost_units;
}

CostCounters CostMeter::snapshot() const {
  std::lock_guard lock(mu_);
  return counters_;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kCot: return "cot";
    case Strategy::kTot: return "tot";
    case Strategy::kGot: return "got";
  }
  return "?";
}

const char* to_string(Interaction i) {
  return i == Interaction::kAgent ? "agent" : "explore";
}

const char* to_string(Evaluator e) {
  return e == Evaluator::kSelect ? "select" : "score";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "cot") return Strategy::kCot;
  if (s == "tot") return Strategy::kTot;
  if (s == "got") return Strategy::kGot;
  throw Error(ErrorCode::kInvalidConfig, "unknown strategy '" + s + "'");
}

Interaction parse_interaction(const std::string& s) {
  if (s == "agent") return Interaction::kAgent;
  if (s == "explore") return Interaction::kExplore;
  throw Error(ErrorCode::kInvalidConfig, "unknown interaction '" + s + "'");
}

Evaluator parse_evaluator(const std::string& s) {
  if (s == "select") return Evaluator::kSelect;
  if (s == "score") return Evaluator::kScore;
  throw Error(ErrorCode::kInvalidConfig, "unknown evaluator '" + s + "'");
}

namespace {

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

std::int64_t tree_generation_calls(int k, int t, int depth) {
  if (t == 1) return static_cast<std::int64_t>(k) * depth;
  return k * (ipow(t, depth) - 1) / (t - 1);
}

std::int64_t got_merge_attempts(int k, int t, int depth) {
  std::int64_t total = 0;
  for (int i = 1; i <= depth; ++i) total += (k * ipow(t, i)) / 2;
  return total;
}

CostBound bound_for(const BoundParams& p) {
  if (p.n < 1 || p.k < 1 || p.t < 1 || p.d_max < 1 || p.d < 0) {
    throw Error(ErrorCode::kInvalidConfig, "bound parameters out of range");
  }
  CostBound b;
  b.strategy = p.strategy;
  b.interaction = p.interaction;
  b.n = p.n;
  b.k = p.strategy == Strategy::kCot ? 1 : p.k;
  b.t = p.strategy == Strategy::kCot ? 1 : p.t;
  b.d_max = p.strategy == Strategy::kCot ? p.n : p.d_max;
  b.d = p.d;
  switch (p.strategy) {
    case Strategy::kCot:
      b.generation_call_bound = p.n;
      break;
    case Strategy::kTot:
      b.generation_call_bound = tree_generation_calls(p.k, p.t, p.d_max);
      break;
    case Strategy::kGot:
      b.generation_call_bound = tree_generation_calls(p.k, p.t, p.d_max);
      b.merge_attempt_bound = got_merge_attempts(p.k, p.t, p.d_max);
      break;
  }
  // Merged thoughts are not grounded, so KG work scales with generated thoughts.
  if (p.interaction == Interaction::kAgent) {
    b.kg_op_bound = b.generation_call_bound * p.max_actions_per_step;
  } else {
    b.kg_op_bound = b.generation_call_bound;
  }
  return b;
}

CheckResult check(const CostCounters& c, const CostBound& b) {
  CheckResult r;
  auto violate = [&](const std::string& what, std::int64_t got, std::int64_t bound) {
    r.ok = false;
    r.violations.push_back(what + ": " + std::to_string(got) + " > " + std::to_string(bound));
  };
  auto generation = c.llm_calls(tags::kThought);
  if (generation > b.generation_call_bound) {
    violate("generation calls", generation, b.generation_call_bound);
  }
  if (c.merge_attempts > b.merge_attempt_bound) {
    violate("merge attempts", c.merge_attempts, b.merge_attempt_bound);
  }
  if (c.llm_calls(tags::kMerge) > c.merge_attempts) {
    violate("merge calls", c.llm_calls(tags::kMerge), c.merge_attempts);
  }
  if (b.interaction == Interaction::kAgent) {
    if (c.kg_ops() > b.kg_op_bound) violate("kg ops", c.kg_ops(), b.kg_op_bound);
  } else {
    if (c.explore_searches > b.kg_op_bound) {
      violate("kg searches", c.explore_searches, b.kg_op_bound);
    }
    auto explore_ops = c.kg_ops(ops::kFetchEntity) + c.kg_ops(ops::kNeighborCheck);
    if (explore_ops > c.explore_cost_units) {
      violate("explore kg ops", explore_ops, c.explore_cost_units);
    }
  }
  return r;
}

}  // namespace kgreason
