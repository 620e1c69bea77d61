#include "kgreason/validate.hpp"

#include <algorithm>
#include <set>

namespace kgreason {

namespace {

void exploration_certificate(const ExplorationState& e, int state_id, std::vector<std::string>& v) {
  for (const auto& t : e.found_triples()) {
    const auto* h = e.find(t.head_id);
    const auto* tl = e.find(t.tail_id);
    if (h == nullptr || tl == nullptr) {
      v.push_back("state " + std::to_string(state_id) + ": triple endpoint not seen: " + t.render());
      continue;
    }
    if (tl->depth_discovered > h->depth_discovered + 1) {
      v.push_back("state " + std::to_string(state_id) + ": depth certificate broken for " +
                  t.render());
    }
  }
}

}  // namespace

std::vector<std::string> validate_graph(const ReasoningGraph& g, Strategy strategy, int t) {
  std::vector<std::string> v;
  auto sid = [](int id) { return "state " + std::to_string(id); };
  const int n = static_cast<int>(g.states.size());
  if (n == 0) {
    v.push_back("graph has no states");
    return v;
  }
  for (int i = 0; i < n; ++i) {
    const auto& s = g.states[static_cast<std::size_t>(i)];
    if (s.id != i) v.push_back(sid(i) + ": id does not match its position");
    if (i == 0) {
      if (!s.parents.empty() || s.depth != 0) v.push_back("root must have depth 0 and no parents");
      continue;
    }
    if (s.parents.empty()) v.push_back(sid(i) + ": non-root state without parents");
    for (int p : s.parents) {
      // Parents always precede children, so id order is a topological order.
      if (p < 0 || p >= i) v.push_back(sid(i) + ": parent " + std::to_string(p) + " breaks acyclicity");
    }
    if (s.parents.size() > 2) v.push_back(sid(i) + ": more than two parents");
    if (s.parents.size() == 2) {
      if (strategy != Strategy::kGot) v.push_back(sid(i) + ": merge state outside got");
      int a = s.parents[0], b = s.parents[1];
      if (a == b) v.push_back(sid(i) + ": merge of a state with itself");
      if (a >= 0 && a < i && b >= 0 && b < i) {
        int da = g.state(a).depth, db = g.state(b).depth;
        if (da != db) v.push_back(sid(i) + ": merged parents at different depths");
        if (s.depth != std::max(da, db)) v.push_back(sid(i) + ": merge state off its parents' layer");
      }
    } else if (s.parents.size() == 1) {
      int p = s.parents[0];
      if (p >= 0 && p < i && s.depth != g.state(p).depth + 1) {
        v.push_back(sid(i) + ": depth is not parent depth + 1");
      }
    }
    if (s.status == StateStatus::kFinished && !s.answer) v.push_back(sid(i) + ": finished without answer");
    if (s.evidence.exploration) exploration_certificate(*s.evidence.exploration, i, v);
  }

  std::set<int> pruned_before;
  int last_depth = 0;
  for (std::size_t r = 0; r < g.rounds.size(); ++r) {
    const auto& round = g.rounds[r];
    auto rid = "round " + std::to_string(r + 1);
    if (round.depth <= last_depth) v.push_back(rid + ": depth does not increase");
    last_depth = round.depth;
    auto want = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 1)), round.candidates.size());
    if (round.retained.size() != want) v.push_back(rid + ": retained size is not min(t, candidates)");
    std::set<int> cands(round.candidates.begin(), round.candidates.end());
    std::set<int> kept(round.retained.begin(), round.retained.end());
    if (kept.size() != round.retained.size()) v.push_back(rid + ": duplicate retained id");
    for (int id : round.retained) {
      if (!cands.count(id)) v.push_back(rid + ": retained state " + std::to_string(id) + " was not a candidate");
      if (pruned_before.count(id)) v.push_back(rid + ": pruned state " + std::to_string(id) + " re-entered");
    }
    for (int id : round.candidates) {
      if (id < 0 || id >= n) {
        v.push_back(rid + ": unknown candidate " + std::to_string(id));
        continue;
      }
      if (g.state(id).depth != round.depth) v.push_back(rid + ": candidate off the round's layer");
      if (!kept.count(id)) {
        pruned_before.insert(id);
        if (g.state(id).status == StateStatus::kActive) {
          v.push_back(rid + ": dropped candidate " + std::to_string(id) + " still active");
        }
      } else if (g.state(id).status == StateStatus::kPruned) {
        v.push_back(rid + ": retained state " + std::to_string(id) + " marked pruned");
      }
    }
    for (int id : round.merges) {
      if (id < 0 || id >= n || g.state(id).parents.size() != 2) {
        v.push_back(rid + ": merge " + std::to_string(id) + " lacks two parents");
      }
    }
  }
  if (g.frontier.size() > static_cast<std::size_t>(std::max(t, 1))) v.push_back("final frontier exceeds t");
  std::set<int> depths;
  for (int id : g.frontier) {
    if (id >= 0 && id < n) depths.insert(g.state(id).depth);
  }
  if (depths.size() > 1) v.push_back("frontier states at different depths");

  const ThoughtState* best = nullptr;
  for (const auto& s : g.states) {
    if (s.status != StateStatus::kFinished || !s.answer) continue;
    if (best == nullptr || s.score.value_or(0.0) > best->score.value_or(0.0)) best = &s;
  }
  if ((best ? best->answer : std::nullopt) != g.answer) v.push_back("answer is not the best finished state's");
  if (g.answer.has_value() != (g.termination == Termination::kFinished)) {
    v.push_back("termination disagrees with answer presence");
  }
  return v;
}

std::vector<std::string> validate_trace(const TraceRecord& trace) {
  std::vector<std::string> v;
  if (trace.schema != kTraceSchema) v.push_back("schema tag is " + trace.schema);
  if (trace.failure) {
    v.push_back("run failed: " + *trace.failure);
    return v;
  }
  int t = trace.config.strategy == Strategy::kCot ? 1 : trace.config.t;
  for (auto& s : validate_graph(trace.graph, trace.config.strategy, t)) v.push_back(std::move(s));
  if (trace.answer != trace.graph.answer) v.push_back("trace answer differs from graph answer");
  if (trace.termination != trace.graph.termination) v.push_back("trace termination differs from graph");
  int d_max = trace.config.strategy == Strategy::kCot ? trace.config.n : trace.config.d_max;
  for (const auto& r : trace.graph.rounds) {
    if (r.depth > d_max) v.push_back("round beyond the depth limit");
  }

  auto recheck = check(trace.counters, trace.bound);
  if (recheck.ok != trace.cost_check.ok) v.push_back("recorded cost check disagrees with counters");
  for (const auto& s : recheck.violations) v.push_back("cost bound: " + s);
  auto expected = bound_for(trace.config.bound_params());
  if (expected.generation_call_bound != trace.bound.generation_call_bound ||
      expected.merge_attempt_bound != trace.bound.merge_attempt_bound ||
      expected.kg_op_bound != trace.bound.kg_op_bound) {
    v.push_back("recorded bound differs from the configured closed form");
  }

  auto r = score_trace(trace);
  if (r.rouge_l.has_value() != r.model_answer.has_value()) v.push_back("rouge_l present without answer");
  if (trace.judge.error_class) {
    bool correct_label = *trace.judge.error_class == ErrorClass::kCorrect;
    if (correct_label != (trace.judge.correct == true)) {
      v.push_back("error class 'correct' disagrees with the judge verdict");
    }
    bool mechanical = *trace.judge.error_class == ErrorClass::kCorrect ||
                      *trace.judge.error_class == ErrorClass::kReachedLimit;
    if (mechanical && trace.judge.error_judge_called) v.push_back("judge called for a mechanical label");
  }
  return v;
}

}  // namespace kgreason
