#include "kgreason/agent.hpp"

#include <cctype>

#include "kgreason/error.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kRetrieveNode: return "RetrieveNode";
    case ActionKind::kNodeFeature: return "NodeFeature";
    case ActionKind::kNeighborCheck: return "NeighborCheck";
    case ActionKind::kNodeDegree: return "NodeDegree";
    case ActionKind::kFinish: return "Finish";
  }
  return "?";
}

const char* to_string(Termination t) {
  return t == Termination::kFinished ? "finished" : "step_limit";
}

namespace observation {

std::string node_id(const std::string& id) { return "The ID of the node is " + id; }

std::string neighbors(const std::vector<std::string>& ids) {
  std::string out = "The neighbors are [";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + ids[i] + "'";
  }
  return out + "]";
}

std::string feature(const std::string& id, const std::string& value) {
  return id + " → " + value;
}

std::string degree(const std::string& id, const std::string& relation, std::size_t count) {
  return "Node " + id + " has " + std::to_string(count) + " " + relation + " neighbors";
}

}  // namespace observation

namespace {

struct MarkerPos {
  std::size_t begin = std::string_view::npos;  // start of the marker word
  std::size_t content = std::string_view::npos;  // first char after ':'
};

// Finds "<word>[ ][digits][ ]:" and returns where it starts and ends.
MarkerPos find_marker(std::string_view text, std::string_view word, std::size_t from = 0) {
  for (auto pos = text.find(word, from); pos != std::string_view::npos;
       pos = text.find(word, pos + 1)) {
    std::size_t j = pos + word.size();
    while (j < text.size() && text[j] == ' ') ++j;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    while (j < text.size() && text[j] == ' ') ++j;
    if (j < text.size() && text[j] == ':') return {pos, j + 1};
  }
  return {};
}

std::optional<ActionKind> kind_from_name(std::string_view name) {
  if (name == "RetrieveNode") return ActionKind::kRetrieveNode;
  if (name == "NodeFeature") return ActionKind::kNodeFeature;
  if (name == "NeighborCheck" || name == "NeighbourCheck") return ActionKind::kNeighborCheck;
  if (name == "NodeDegree") return ActionKind::kNodeDegree;
  if (name == "Finish") return ActionKind::kFinish;
  return std::nullopt;
}

bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

struct ParsedStep {
  std::string thought;
  std::string action_text;
  std::vector<AgentAction> actions;
};

// Action region: after the first "Action N:" marker (or the whole text),
// cut at the next "Observation" marker the model may have hallucinated.
std::pair<std::string_view, std::size_t> action_region(std::string_view text) {
  auto marker = find_marker(text, "Action");
  std::size_t start = marker.content == std::string_view::npos ? 0 : marker.content;
  auto region = text.substr(start);
  auto obs = find_marker(region, "Observation");
  if (obs.begin != std::string_view::npos) region = region.substr(0, obs.begin);
  return {region, marker.begin};
}

std::optional<ParsedStep> parse_step(std::string_view reply) {
  ParsedStep step;
  try {
    step.actions = parse_actions(reply);
  } catch (const Error&) {
    return std::nullopt;
  }
  auto [region, marker_begin] = action_region(reply);
  step.action_text = trim(region);
  if (auto nl = step.action_text.find('\n'); nl != std::string::npos) {
    step.action_text = trim(std::string_view(step.action_text).substr(0, nl));
  }
  std::string_view thought = marker_begin == std::string_view::npos
                                 ? std::string_view{}
                                 : reply.substr(0, marker_begin);
  auto tm = find_marker(thought, "Thought");
  if (tm.content != std::string_view::npos) thought = thought.substr(tm.content);
  step.thought = trim(thought);
  return step;
}

}  // namespace

std::vector<AgentAction> parse_actions(std::string_view text) {
  auto [region, _] = action_region(text);
  std::vector<AgentAction> actions;
  std::size_t i = 0;
  while (i < region.size()) {
    if (region[i] != '[') {
      ++i;
      continue;
    }
    std::size_t name_end = i;
    std::size_t name_begin = name_end;
    while (name_begin > 0 && is_name_char(region[name_begin - 1])) --name_begin;
    int depth = 0;
    std::size_t close = i;
    for (; close < region.size(); ++close) {
      if (region[close] == '[') ++depth;
      if (region[close] == ']' && --depth == 0) break;
    }
    if (close >= region.size()) {
      throw Error(ErrorCode::kMalformedOutput, "unclosed action bracket");
    }
    std::string_view name = region.substr(name_begin, name_end - name_begin);
    if (name.empty()) {
      i = close + 1;  // bare bracket, e.g. a quoted list; not an action
      continue;
    }
    auto kind = kind_from_name(name);
    if (!kind) throw Error(ErrorCode::kMalformedOutput, "unknown action '" + std::string(name) + "'");

    AgentAction action;
    action.kind = *kind;
    action.written = std::string(region.substr(name_begin, close + 1 - name_begin));
    action.payload = trim(region.substr(i + 1, close - i - 1));
    if (*kind == ActionKind::kRetrieveNode) {
      if (action.payload.empty()) throw Error(ErrorCode::kMalformedOutput, "RetrieveNode needs 1 argument");
      action.args = {action.payload};
    } else if (*kind == ActionKind::kFinish) {
      if (!action.payload.empty()) action.args = split_top_level(action.payload);
    } else {
      action.args = split_top_level(action.payload);
      if (action.args.size() != 2 || action.args[0].empty() || action.args[1].empty()) {
        throw Error(ErrorCode::kMalformedOutput,
                    std::string(to_string(*kind)) + " needs 2 arguments, got '" + action.payload + "'");
      }
    }
    actions.push_back(std::move(action));
    i = close + 1;
  }
  if (actions.empty()) throw Error(ErrorCode::kMalformedOutput, "no action span");
  return actions;
}

std::string execute_action(const KnowledgeGraph& graph, const AgentAction& action,
                           CostMeter& meter, const RetrieverPolicy& retriever) {
  try {
    switch (action.kind) {
      case ActionKind::kRetrieveNode:
        meter.kg_op(ops::kRetrieveNode);
        return observation::node_id(retrieve_node(graph, action.args.at(0), retriever));
      case ActionKind::kNodeFeature:
        meter.kg_op(ops::kNodeFeature);
        return observation::feature(action.args.at(0),
                                    node_feature(graph, action.args.at(0), action.args.at(1)));
      case ActionKind::kNeighborCheck:
        meter.kg_op(ops::kNeighborCheck);
        return observation::neighbors(neighbor_check(graph, action.args.at(0), action.args.at(1)));
      case ActionKind::kNodeDegree:
        meter.kg_op(ops::kNodeDegree);
        return observation::degree(action.args.at(0), action.args.at(1),
                                   node_degree(graph, action.args.at(0), action.args.at(1)));
      case ActionKind::kFinish:
        return {};
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kUnknownNode:
        return "There is no node with ID '" + action.args.at(0) + "'";
      case ErrorCode::kFeatureAbsent:
        return "Node " + action.args.at(0) + " has no feature '" + action.args.at(1) + "'";
      case ErrorCode::kNoMatch:
        return "No node matches '" + action.args.at(0) + "'";
      case ErrorCode::kEmptyGraph:
        return "The graph is empty";
      default:
        throw;
    }
  }
  return {};
}

std::string Scratchpad::render() const {
  std::string out;
  for (const auto& step : steps) {
    auto i = std::to_string(step.index);
    out += "Thought " + i + ": " + step.thought + "\n";
    out += "Action " + i + ": " + step.action_text + "\n";
    if (!step.observations.empty()) {
      out += "Observation " + i + ": " + join(step.observations, ", ") + ".\n";
    }
  }
  return out;
}

namespace {

std::string render_pad(const Scratchpad& pad, std::size_t budget) {
  if (budget == 0) return pad.render();
  Scratchpad tail;
  std::size_t used = 0;
  for (auto it = pad.steps.rbegin(); it != pad.steps.rend(); ++it) {
    Scratchpad one{{*it}};
    auto size = one.render().size();
    if (used + size > budget && !tail.steps.empty()) break;
    used += size;
    tail.steps.insert(tail.steps.begin(), *it);
  }
  return tail.render();
}

}  // namespace

StepResult agent_step(const Scratchpad& pad, const Question& q, AgentContext& ctx) {
  const auto& tmpl = prompt_template("agent_step");
  CompletionRequest req;
  req.prompt = render(tmpl, {{"examples", ctx.assets.examples("agent_step", q.domain)},
                             {"graph_definition", ctx.graph.definition()},
                             {"question", q.text},
                             {"scratchpad", render_pad(pad, ctx.options.scratchpad_char_budget)}});
  req.decoding = thought_decoding(ctx.options.temperature);
  req.tag = tags::kThought;

  std::string last_reply;
  auto parsed = ctx.gateway.complete_parsed(req, format_reminder("agent_step"),
                                            [&](const std::string& reply) {
                                              last_reply = reply;
                                              return parse_step(reply);
                                            });
  StepResult result;
  result.step.index = static_cast<int>(pad.steps.size()) + 1;
  if (!parsed) {
    auto [region, marker] = action_region(last_reply);
    result.step.malformed = true;
    result.step.thought = trim(marker == std::string_view::npos
                                   ? std::string_view(last_reply)
                                   : std::string_view(last_reply).substr(0, marker));
    auto tm = find_marker(result.step.thought, "Thought");
    if (tm.content != std::string_view::npos) {
      result.step.thought = trim(std::string_view(result.step.thought).substr(tm.content));
    }
    result.step.action_text = trim(region.substr(0, region.find('\n')));
    result.step.observations = {"Invalid action format; use Name[arguments]"};
    return result;
  }

  result.step.thought = std::move(parsed->thought);
  result.step.action_text = std::move(parsed->action_text);
  auto limit = static_cast<std::size_t>(std::max(1, ctx.options.max_actions_per_step));
  for (auto& action : parsed->actions) {
    if (result.step.actions.size() >= limit) break;
    if (action.kind == ActionKind::kFinish) {
      result.answer = action.payload;
      result.step.actions.push_back(std::move(action));
      break;
    }
    result.step.observations.push_back(
        execute_action(ctx.graph, action, ctx.gateway.meter(), ctx.retriever));
    result.step.actions.push_back(std::move(action));
  }
  return result;
}

std::variant<Scratchpad, AgentOutcome> run_agent_step(Scratchpad pad, const Question& q,
                                                      AgentContext& ctx, int step_limit) {
  if (static_cast<int>(pad.steps.size()) >= step_limit) {
    return AgentOutcome{std::nullopt, Termination::kStepLimit, std::move(pad)};
  }
  auto result = agent_step(pad, q, ctx);
  pad.steps.push_back(std::move(result.step));
  if (result.answer) {
    return AgentOutcome{std::move(result.answer), Termination::kFinished, std::move(pad)};
  }
  if (static_cast<int>(pad.steps.size()) >= step_limit) {
    return AgentOutcome{std::nullopt, Termination::kStepLimit, std::move(pad)};
  }
  return pad;
}

AgentOutcome run_agent(const Question& q, AgentContext& ctx, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "agent step limit must be >= 1");
  Scratchpad pad;
  for (;;) {
    auto next = run_agent_step(std::move(pad), q, ctx, n);
    if (auto* outcome = std::get_if<AgentOutcome>(&next)) return std::move(*outcome);
    pad = std::move(std::get<Scratchpad>(next));
  }
}

}  // namespace kgreason
