#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgreason/gateway.hpp"
#include "kgreason/graph.hpp"
#include "kgreason/prompts.hpp"
#include "kgreason/question.hpp"

namespace kgreason {

enum class ActionKind { kRetrieveNode, kNodeFeature, kNeighborCheck, kNodeDegree, kFinish };

const char* to_string(ActionKind kind);

struct AgentAction {
  ActionKind kind = ActionKind::kFinish;
  std::vector<std::string> args;
  std::string written;  // the span as the model wrote it, e.g. "RetrieveNode[KRT39]"

  // Finish payload: the bracket content verbatim (trimmed).
  std::string payload;

  bool operator==(const AgentAction&) const = default;
};

struct AgentStep {
  int index = 0;
  std::string thought;
  std::string action_text;  // everything after "Action N:" as written
  std::vector<AgentAction> actions;
  std::vector<std::string> observations;
  bool malformed = false;

  bool operator==(const AgentStep&) const = default;
};

struct Scratchpad {
  std::vector<AgentStep> steps;

  // "Thought i: ...\nAction i: ...\nObservation i: ...\n" per step.
  std::string render() const;
  bool operator==(const Scratchpad&) const = default;
};

enum class Termination { kFinished, kStepLimit };

const char* to_string(Termination t);

struct AgentOutcome {
  std::optional<std::string> answer;
  Termination termination = Termination::kStepLimit;
  Scratchpad scratchpad;
};

// Parses every `Name[args]` span after the "Action" marker. Throws
// Error(kMalformedOutput) on an unknown name, wrong arity or no span.
std::vector<AgentAction> parse_actions(std::string_view text);

struct AgentOptions {
  int max_actions_per_step = 4;
  double temperature = 0.7;
  // 0 keeps the whole scratchpad in the prompt; otherwise only the most
  // recent steps that fit in this many characters are rendered.
  std::size_t scratchpad_char_budget = 0;
};

struct AgentContext {
  const KnowledgeGraph& graph;
  Gateway& gateway;
  const RetrieverPolicy& retriever = default_retriever();
  const PromptAssets& assets;
  AgentOptions options{};
};

// Runs one action against the graph and renders its observation. Graph
// errors become observation text. Meters one KG op per non-Finish action.
std::string execute_action(const KnowledgeGraph& graph, const AgentAction& action,
                           CostMeter& meter,
                           const RetrieverPolicy& retriever = default_retriever());

struct StepResult {
  AgentStep step;
  std::optional<std::string> answer;  // set when the step issued Finish
};

// Prompts for, parses and executes the next step after `pad`. The step is
// returned, not appended. Throws only on transport failure.
StepResult agent_step(const Scratchpad& pad, const Question& q, AgentContext& ctx);

std::variant<Scratchpad, AgentOutcome> run_agent_step(Scratchpad pad, const Question& q,
                                                      AgentContext& ctx, int step_limit);

AgentOutcome run_agent(const Question& q, AgentContext& ctx, int n);

// Observation line strings.
namespace observation {
std::string node_id(const std::string& id);
std::string neighbors(const std::vector<std::string>& ids);
std::string feature(const std::string& id, const std::string& value);
std::string degree(const std::string& id, const std::string& relation, std::size_t count);
}  // namespace observation

}  // namespace kgreason
