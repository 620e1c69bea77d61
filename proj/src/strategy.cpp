#include "kgreason/strategy.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "kgreason/error.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

const char* to_string(StateStatus s) {
  switch (s) {
    case StateStatus::kActive: return "active";
    case StateStatus::kPruned: return "pruned";
    case StateStatus::kFinished: return "finished";
    case StateStatus::kMergedAway: return "merged_away";
  }
  return "active";
}

StateStatus parse_state_status(const std::string& s) {
  if (s == "active") return StateStatus::kActive;
  if (s == "pruned") return StateStatus::kPruned;
  if (s == "finished") return StateStatus::kFinished;
  if (s == "merged_away") return StateStatus::kMergedAway;
  throw Error(ErrorCode::kMalformedLine, "unknown state status '" + s + "'");
}

SearchConfig SearchConfig::normalized() const {
  SearchConfig c = *this;
  if (c.strategy == Strategy::kCot) {
    c.k = 1;
    c.t = 1;
    c.d_max = c.n;
  }
  if (c.k < 1) throw Error(ErrorCode::kInvalidConfig, "branching k must be >= 1");
  if (c.t < 1) throw Error(ErrorCode::kInvalidConfig, "retained t must be >= 1");
  if (c.d_max < 1) throw Error(ErrorCode::kInvalidConfig, "depth limit must be >= 1");
  if (c.votes < 1) throw Error(ErrorCode::kInvalidConfig, "votes must be >= 1");
  return c;
}

int ReasoningGraph::add(ThoughtState s) {
  s.id = static_cast<int>(states.size());
  states.push_back(std::move(s));
  return states.back().id;
}

namespace {

template <typename T>
void append_unique(std::vector<T>& into, const std::vector<T>& from) {
  for (const auto& x : from) {
    if (std::find(into.begin(), into.end(), x) == into.end()) into.push_back(x);
  }
}

void append_unique_triples(std::vector<Triple>& into, const std::vector<Triple>& from) {
  for (const auto& t : from) {
    bool seen = std::any_of(into.begin(), into.end(),
                            [&](const Triple& x) { return x.same_edge(t); });
    if (!seen) into.push_back(t);
  }
}

std::string strip_label(std::string text, std::string_view label) {
  text = trim(text);
  if (text.rfind(label, 0) == 0) {
    auto colon = text.find(':');
    auto newline = text.find('\n');
    if (colon != std::string::npos && colon < newline) text = trim(std::string_view(text).substr(colon + 1));
  }
  return text;
}

// Triples and attributes read off the graph for a step's successful actions.
void harvest(const KnowledgeGraph& graph, const AgentStep& step, Evidence& ev) {
  for (const auto& a : step.actions) {
    if (a.kind == ActionKind::kNeighborCheck && a.args.size() == 2) {
      const auto* node = graph.find(a.args[0]);
      if (node == nullptr) continue;
      std::vector<Triple> found;
      for (const auto& tail : neighbor_check(graph, a.args[0], a.args[1])) {
        found.push_back(make_triple(graph, a.args[0], a.args[1], tail));
      }
      append_unique_triples(ev.triples, found);
    } else if (a.kind == ActionKind::kNodeFeature && a.args.size() == 2) {
      const auto* node = graph.find(a.args[0]);
      if (node == nullptr) continue;
      auto it = node->features.find(a.args[1]);
      if (it == node->features.end()) continue;
      append_unique(ev.attributes, {Attribute{a.args[0], a.args[1], it->second}});
    }
  }
}

}  // namespace

std::optional<std::string> finish_payload(const std::string& reply) {
  auto pos = reply.rfind("Finish[");
  if (pos == std::string::npos) return std::nullopt;
  auto spans = find_bracket_spans(std::string_view(reply).substr(pos), BracketStyle::kSquare);
  if (spans.empty()) return std::nullopt;
  return spans.front().content;
}

Evidence AgentDriver::root_evidence() const {
  Evidence ev;
  ev.scratchpad = Scratchpad{};
  return ev;
}

ThoughtState AgentDriver::expand_one(const ThoughtState& parent, const Question& q) {
  ThoughtState child;
  child.evidence = parent.evidence;
  if (!child.evidence.scratchpad) child.evidence.scratchpad = Scratchpad{};
  auto result = agent_step(*child.evidence.scratchpad, q, ctx_);
  child.thought = result.step.thought;
  child.evidence.thoughts.push_back(child.thought);
  harvest(ctx_.graph, result.step, child.evidence);
  child.evidence.scratchpad->steps.push_back(std::move(result.step));
  if (result.answer) {
    child.status = StateStatus::kFinished;
    child.answer = std::move(result.answer);
  }
  return child;
}

Evidence ExploreDriver::root_evidence() const {
  Evidence ev;
  ev.exploration = ExplorationState{};
  return ev;
}

ThoughtState ExploreDriver::expand_one(const ThoughtState& parent, const Question& q) {
  ThoughtState child;
  child.evidence = parent.evidence;
  if (!child.evidence.exploration) child.evidence.exploration = ExplorationState{};
  auto& ev = child.evidence;
  const auto& graph = ctx_.graph;

  auto vars = [&](const std::string& tmpl) -> PromptVars {
    return {{"examples", ctx_.assets.examples(tmpl, q.domain)},
            {"graph_definition", graph.definition()},
            {"question", q.text},
            {"triples", render_triples(ev.exploration->found_triples())},
            {"thoughts", render_thoughts(ev.thoughts)},
            {"attributes", render_attributes(graph, ev.exploration->relevant_attributes())}};
  };

  CompletionRequest req;
  req.prompt = render(prompt_template("search_thought"), vars("search_thought"));
  req.decoding = thought_decoding(temperature_);
  req.tag = tags::kThought;
  child.thought = strip_label(ctx_.gateway.complete(req), "Thought");
  ev.thoughts.push_back(child.thought);

  if (auto answer = finish_payload(child.thought)) {
    child.status = StateStatus::kFinished;
    child.answer = std::move(answer);
    return child;
  }

  auto text = parent.depth == 0 ? q.text + "\n" + child.thought : child.thought;
  auto anchors = resolve_entities(extract_entities(text, q, ctx_), ctx_);
  auto outcome = explore(q, anchors, std::move(*ev.exploration), ev.thoughts, ctx_);
  ev.exploration = std::move(outcome.state);
  ev.triples = ev.exploration->found_triples();
  ev.attributes = ev.exploration->relevant_attributes();

  if (outcome.sufficient) {
    CompletionRequest ans;
    ans.prompt = render(prompt_template("answer_extraction"), vars("answer_extraction"));
    ans.decoding = control_decoding();
    ans.tag = tags::kAnswer;
    auto answer = ctx_.gateway.complete_parsed(ans, format_reminder("answer_extraction"),
                                               finish_payload);
    if (answer) {
      child.status = StateStatus::kFinished;
      child.answer = std::move(answer);
    }
  }
  return child;
}

std::vector<int> expand(ReasoningGraph& graph, int state, int k, Driver& driver,
                        const Question& q) {
  std::vector<int> children;
  for (int j = 0; j < k; ++j) {
    const auto& parent = graph.state(state);
    ThoughtState child;
    try {
      child = driver.expand_one(parent, q);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport) throw;
      child = ThoughtState{};
      child.evidence = parent.evidence;
      child.status = StateStatus::kPruned;
    }
    child.depth = graph.state(state).depth + 1;
    child.parents = {state};
    children.push_back(graph.add(std::move(child)));
  }
  return children;
}

std::string render_chain(const ThoughtState& s, const KnowledgeGraph& graph) {
  std::string out = render_thoughts(s.evidence.thoughts);
  if (s.evidence.scratchpad && !s.evidence.scratchpad->steps.empty()) {
    out = s.evidence.scratchpad->render();
    while (!out.empty() && out.back() == '\n') out.pop_back();
  }
  if (!s.evidence.triples.empty()) out += "\nTriples:\n" + render_triples(s.evidence.triples);
  if (!s.evidence.attributes.empty()) {
    out += "\nAttributes:\n" + render_attributes(graph, s.evidence.attributes);
  }
  return out;
}

namespace {

std::vector<int> in_creation_order(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::vector<int> evaluate_select(const ReasoningGraph& graph, const std::vector<int>& candidates,
                                 int t, const Question& q, Driver& driver) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidConfig, "no candidates to select from");
  const auto want = static_cast<std::size_t>(std::max(1, t));
  if (candidates.size() <= want) return in_creation_order(candidates);

  std::string choices;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    choices += "Choice " + std::to_string(i + 1) + ":\n" +
               render_chain(graph.state(candidates[i]), driver.graph()) + "\n";
  }
  const auto& tmpl = prompt_template("selection_vote");
  CompletionRequest req;
  req.prompt = render(tmpl, {{"examples", driver.assets().examples(tmpl.name, q.domain)},
                             {"count", std::to_string(want)},
                             {"question", q.text},
                             {"choices", choices}});
  req.decoding = control_decoding();
  req.tag = tags::kSelect;
  auto ids = driver.gateway().complete_parsed(
      req, format_reminder(tmpl.name),
      [](const std::string& reply) -> std::optional<std::vector<long long>> {
        auto content = try_parse_bracketed_answer(reply);
        if (!content) return std::nullopt;
        return integers_in(*content);
      });

  std::vector<bool> taken(candidates.size(), false);
  std::vector<int> retained;
  if (ids) {
    for (auto id : *ids) {
      if (retained.size() >= want) break;
      if (id < 1 || id > static_cast<long long>(candidates.size())) continue;
      auto idx = static_cast<std::size_t>(id - 1);
      if (taken[idx]) continue;
      taken[idx] = true;
      retained.push_back(candidates[idx]);
    }
  }
  for (std::size_t i = 0; i < candidates.size() && retained.size() < want; ++i) {
    if (!taken[i]) {
      taken[i] = true;
      retained.push_back(candidates[i]);
    }
  }
  return in_creation_order(retained);
}

std::vector<int> evaluate_score(ReasoningGraph& graph, const std::vector<int>& candidates, int t,
                                const Question& q, Driver& driver, int votes) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidConfig, "no candidates to score");
  if (votes < 1) throw Error(ErrorCode::kInvalidConfig, "votes must be >= 1");
  const auto want = static_cast<std::size_t>(std::max(1, t));
  if (candidates.size() <= want) return in_creation_order(candidates);

  const auto& tmpl = prompt_template("score_vote");
  for (int id : candidates) {
    CompletionRequest req;
    req.prompt = render(tmpl, {{"examples", driver.assets().examples(tmpl.name, q.domain)},
                               {"question", q.text},
                               {"thoughts", render_chain(graph.state(id), driver.graph())}});
    req.decoding = control_decoding();
    req.tag = tags::kScore;
    double sum = 0.0;
    for (int v = 0; v < votes; ++v) {
      auto value = last_number(driver.gateway().complete(req));
      if (value) sum += std::clamp(*value, 0.0, 1.0);
    }
    graph.state(id).score = sum / votes;
  }

  std::vector<int> order = candidates;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double sa = graph.state(a).score.value_or(0.0);
    double sb = graph.state(b).score.value_or(0.0);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  order.resize(want);
  return in_creation_order(order);
}

std::vector<int> select_frontier(ReasoningGraph& graph, const std::vector<int>& candidates, int t,
                                 Evaluator evaluator, const Question& q, Driver& driver,
                                 int votes) {
  if (candidates.empty()) return {};
  auto retained = evaluator == Evaluator::kScore
                      ? evaluate_score(graph, candidates, t, q, driver, votes)
                      : evaluate_select(graph, candidates, t, q, driver);
  std::set<int> keep(retained.begin(), retained.end());
  for (int id : candidates) {
    auto& s = graph.state(id);
    if (!keep.count(id) && s.status == StateStatus::kActive) s.status = StateStatus::kPruned;
  }
  return retained;
}

std::optional<int> merge_pair(ReasoningGraph& graph, int a, int b, const Question& q,
                              Driver& driver) {
  driver.gateway().meter().merge_attempt();
  const auto& sa = graph.state(a);
  const auto& sb = graph.state(b);

  Evidence merged = sa.evidence;
  append_unique(merged.thoughts, sb.evidence.thoughts);
  append_unique_triples(merged.triples, sb.evidence.triples);
  append_unique(merged.attributes, sb.evidence.attributes);
  if (merged.scratchpad && sb.evidence.scratchpad) {
    for (const auto& step : sb.evidence.scratchpad->steps) {
      bool dup = std::any_of(merged.scratchpad->steps.begin(), merged.scratchpad->steps.end(),
                             [&](const AgentStep& s) {
                               return s.thought == step.thought &&
                                      s.action_text == step.action_text &&
                                      s.observations == step.observations;
                             });
      if (dup) continue;
      merged.scratchpad->steps.push_back(step);
      merged.scratchpad->steps.back().index = static_cast<int>(merged.scratchpad->steps.size());
    }
  }
  if (merged.exploration && sb.evidence.exploration) {
    merged.exploration->merge_from(*sb.evidence.exploration);
  }

  const auto& tmpl = prompt_template("got_merge");
  CompletionRequest req;
  req.prompt = render(tmpl, {{"examples", driver.assets().examples(tmpl.name, q.domain)},
                             {"question", q.text},
                             {"chain_1", render_chain(sa, driver.graph())},
                             {"chain_2", render_chain(sb, driver.graph())},
                             {"merged_chain", render_thoughts(merged.thoughts)}});
  req.decoding = thought_decoding();
  req.tag = tags::kMerge;
  std::string reply;
  try {
    reply = strip_label(driver.gateway().complete(req), "Thought");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTransport) throw;
    return std::nullopt;
  }
  if (reply.empty()) return std::nullopt;

  ThoughtState m;
  m.depth = std::max(sa.depth, sb.depth);
  m.thought = reply;
  m.parents = {a, b};
  merged.thoughts.push_back(reply);
  m.evidence = std::move(merged);
  return graph.add(std::move(m));
}

SearchOutcome run_search(const Question& q, const SearchConfig& config, Driver& driver) {
  const auto cfg = config.normalized();
  SearchOutcome out;
  auto& g = out.graph;

  ThoughtState root;
  root.thought = q.text;
  root.evidence = driver.root_evidence();
  g.frontier = {g.add(std::move(root))};

  for (int depth = 1; depth <= cfg.d_max && !g.frontier.empty(); ++depth) {
    std::vector<int> children;
    for (int id : g.frontier) {
      auto born = expand(g, id, cfg.k, driver, q);
      children.insert(children.end(), born.begin(), born.end());
    }

    SearchRound round;
    round.depth = depth;
    if (cfg.strategy == Strategy::kGot) {
      std::vector<int> active;
      for (int id : children) {
        if (g.state(id).status == StateStatus::kActive) active.push_back(id);
      }
      for (std::size_t i = 0; i + 1 < active.size(); i += 2) {
        if (auto m = merge_pair(g, active[i], active[i + 1], q, driver)) round.merges.push_back(*m);
      }
    }

    for (int id : children) {
      if (g.state(id).status != StateStatus::kPruned) round.candidates.push_back(id);
    }
    round.candidates.insert(round.candidates.end(), round.merges.begin(), round.merges.end());
    round.retained = select_frontier(g, round.candidates, cfg.t, cfg.evaluator, q, driver, cfg.votes);
    g.frontier = round.retained;
    g.rounds.push_back(round);

    bool finished = std::any_of(round.candidates.begin(), round.candidates.end(),
                                [&](int id) { return g.state(id).status == StateStatus::kFinished; });
    if (finished) break;
  }

  const ThoughtState* best = nullptr;
  for (const auto& s : g.states) {
    if (s.status != StateStatus::kFinished || !s.answer) continue;
    if (best == nullptr || s.score.value_or(0.0) > best->score.value_or(0.0)) best = &s;
  }
  if (best != nullptr) {
    g.answer = best->answer;
    g.termination = Termination::kFinished;
  }
  out.answer = g.answer;
  out.counters = driver.gateway().meter().snapshot();
  return out;
}

}  // namespace kgreason
