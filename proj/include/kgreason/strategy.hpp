#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgreason/agent.hpp"
#include "kgreason/cost.hpp"
#include "kgreason/explorer.hpp"
#include "kgreason/gateway.hpp"
#include "kgreason/graph.hpp"
#include "kgreason/question.hpp"

namespace kgreason {

enum class StateStatus { kActive, kPruned, kFinished, kMergedAway };

const char* to_string(StateStatus s);
StateStatus parse_state_status(const std::string& s);

struct Evidence {
  std::vector<std::string> thoughts;
  std::vector<Triple> triples;
  std::vector<Attribute> attributes;
  std::optional<Scratchpad> scratchpad;        // agent interaction
  std::optional<ExplorationState> exploration;  // explore interaction

  bool operator==(const Evidence&) const = default;
};

struct ThoughtState {
  int id = 0;
  int depth = 0;
  std::string thought;
  Evidence evidence;
  std::vector<int> parents;
  StateStatus status = StateStatus::kActive;
  std::optional<double> score;
  std::optional<std::string> answer;  // set on finished states

  bool operator==(const ThoughtState&) const = default;
};

struct SearchConfig {
  Strategy strategy = Strategy::kCot;
  Evaluator evaluator = Evaluator::kSelect;
  Interaction interaction = Interaction::kAgent;
  int k = 3;
  int t = 3;
  int d_max = 3;
  int n = 10;     // CoT step limit
  int votes = 1;  // score completions per candidate

  // CoT runs as k = t = 1 with d_max = n. Throws kInvalidConfig.
  SearchConfig normalized() const;
};

// One evaluation round: the candidates of a depth and who survived.
struct SearchRound {
  int depth = 0;
  std::vector<int> candidates;
  std::vector<int> retained;
  std::vector<int> merges;

  bool operator==(const SearchRound&) const = default;
};

struct ReasoningGraph {
  std::vector<ThoughtState> states;  // index == id
  std::vector<int> frontier;
  std::optional<std::string> answer;
  Termination termination = Termination::kStepLimit;
  std::vector<SearchRound> rounds;

  const ThoughtState& state(int id) const { return states.at(static_cast<std::size_t>(id)); }
  ThoughtState& state(int id) { return states.at(static_cast<std::size_t>(id)); }
  int add(ThoughtState s);

  bool operator==(const ReasoningGraph&) const = default;
};

// The grounding half of an expansion: one thought completion plus whatever
// the interaction mode does with it.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual Interaction interaction() const = 0;
  virtual Evidence root_evidence() const = 0;
  // Fills thought, evidence, status and answer of a fresh child of parent.
  // Throws Error(kTransport) when the backend is unreachable.
  virtual ThoughtState expand_one(const ThoughtState& parent, const Question& q) = 0;

  virtual const KnowledgeGraph& graph() const = 0;
  virtual Gateway& gateway() = 0;
  virtual const PromptAssets& assets() const = 0;
};

class AgentDriver final : public Driver {
 public:
  explicit AgentDriver(AgentContext ctx) : ctx_(ctx) {}

  Interaction interaction() const override { return Interaction::kAgent; }
  Evidence root_evidence() const override;
  ThoughtState expand_one(const ThoughtState& parent, const Question& q) override;

  const KnowledgeGraph& graph() const override { return ctx_.graph; }
  Gateway& gateway() override { return ctx_.gateway; }
  const PromptAssets& assets() const override { return ctx_.assets; }

 private:
  AgentContext ctx_;
};

class ExploreDriver final : public Driver {
 public:
  explicit ExploreDriver(ExploreContext ctx, double temperature = 0.7)
      : ctx_(ctx), temperature_(temperature) {}

  Interaction interaction() const override { return Interaction::kExplore; }
  Evidence root_evidence() const override;
  ThoughtState expand_one(const ThoughtState& parent, const Question& q) override;

  const KnowledgeGraph& graph() const override { return ctx_.graph; }
  Gateway& gateway() override { return ctx_.gateway; }
  const PromptAssets& assets() const override { return ctx_.assets; }

 private:
  ExploreContext ctx_;
  double temperature_;
};

// Finish[...] payload of a reply, if any.
std::optional<std::string> finish_payload(const std::string& reply);

// k children of state, appended to graph. Children whose generation failed
// on transport are born pruned.
std::vector<int> expand(ReasoningGraph& graph, int state, int k, Driver& driver,
                        const Question& q);

// Chain text shown to evaluators and merges: thoughts plus evidence.
std::string render_chain(const ThoughtState& s, const KnowledgeGraph& graph);

// Retained ids in creation order. Skips the model when |candidates| <= t.
std::vector<int> evaluate_select(const ReasoningGraph& graph, const std::vector<int>& candidates,
                                 int t, const Question& q, Driver& driver);

// Sets each candidate's score (mean of votes); retains top-t by score, ties
// by creation id. Returns ids in creation order.
std::vector<int> evaluate_score(ReasoningGraph& graph, const std::vector<int>& candidates, int t,
                                const Question& q, Driver& driver, int votes);

// Dispatches to the evaluator and marks active losers pruned.
std::vector<int> select_frontier(ReasoningGraph& graph, const std::vector<int>& candidates, int t,
                                 Evaluator evaluator, const Question& q, Driver& driver,
                                 int votes = 1);

// Merged state added to graph, or nullopt when the merge reply was empty or
// the backend failed. Meters one merge attempt.
std::optional<int> merge_pair(ReasoningGraph& graph, int a, int b, const Question& q,
                              Driver& driver);

struct SearchOutcome {
  std::optional<std::string> answer;
  ReasoningGraph graph;
  CostCounters counters;
};

SearchOutcome run_search(const Question& q, const SearchConfig& cfg, Driver& driver);

}  // namespace kgreason
