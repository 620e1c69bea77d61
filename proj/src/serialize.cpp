#include "kgreason/serialize.hpp"

#include <fstream>
#include <sstream>

#include "kgreason/error.hpp"

namespace kgreason {

namespace {

template <typename T>
ojson opt(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

template <typename T>
std::optional<T> get_opt(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

const ojson& at(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::kMalformedLine, std::string("missing field '") + key + "'");
  return *it;
}

ActionKind parse_action_kind(const std::string& s) {
  for (auto k : {ActionKind::kRetrieveNode, ActionKind::kNodeFeature, ActionKind::kNeighborCheck,
                 ActionKind::kNodeDegree, ActionKind::kFinish}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::kMalformedLine, "unknown action kind '" + s + "'");
}

Termination parse_termination(const std::string& s) {
  if (s == to_string(Termination::kFinished)) return Termination::kFinished;
  if (s == to_string(Termination::kStepLimit)) return Termination::kStepLimit;
  throw Error(ErrorCode::kMalformedLine, "unknown termination '" + s + "'");
}

ojson attribute_json(const Attribute& a) {
  return ojson{{"entity", a.entity}, {"key", a.key}, {"value", a.value}};
}

Attribute attribute_from_json(const ojson& j) {
  return {at(j, "entity").get<std::string>(), at(j, "key").get<std::string>(),
          at(j, "value").get<std::string>()};
}

}  // namespace

ojson to_json(const Triple& t) {
  return ojson{{"head", t.head_name}, {"relation", t.relation}, {"tail", t.tail_name},
               {"head_id", t.head_id}, {"tail_id", t.tail_id}};
}

Triple triple_from_json(const ojson& j) {
  Triple t;
  t.head_name = at(j, "head").get<std::string>();
  t.relation = at(j, "relation").get<std::string>();
  t.tail_name = at(j, "tail").get<std::string>();
  t.head_id = at(j, "head_id").get<std::string>();
  t.tail_id = at(j, "tail_id").get<std::string>();
  return t;
}

ojson to_json(const AgentStep& s) {
  ojson actions = ojson::array();
  for (const auto& a : s.actions) {
    actions.push_back({{"written", a.written}, {"kind", to_string(a.kind)}, {"args", a.args},
                       {"payload", a.payload}});
  }
  return ojson{{"index", s.index},          {"thought", s.thought},
               {"action_text", s.action_text}, {"actions", actions},
               {"observations", s.observations}, {"malformed", s.malformed}};
}

ojson to_json(const Scratchpad& s) {
  ojson steps = ojson::array();
  for (const auto& st : s.steps) steps.push_back(to_json(st));
  return ojson{{"steps", steps}};
}

Scratchpad scratchpad_from_json(const ojson& j) {
  Scratchpad pad;
  for (const auto& sj : at(j, "steps")) {
    AgentStep s;
    s.index = at(sj, "index").get<int>();
    s.thought = at(sj, "thought").get<std::string>();
    s.action_text = at(sj, "action_text").get<std::string>();
    for (const auto& aj : at(sj, "actions")) {
      AgentAction a;
      a.written = at(aj, "written").get<std::string>();
      a.kind = parse_action_kind(at(aj, "kind").get<std::string>());
      a.args = at(aj, "args").get<std::vector<std::string>>();
      a.payload = at(aj, "payload").get<std::string>();
      s.actions.push_back(std::move(a));
    }
    s.observations = at(sj, "observations").get<std::vector<std::string>>();
    s.malformed = at(sj, "malformed").get<bool>();
    pad.steps.push_back(std::move(s));
  }
  return pad;
}

ojson to_json(const ExplorationState& s) {
  ojson seen = ojson::array();
  for (const auto& e : s.seen()) {
    seen.push_back({{"id", e.id}, {"visited", e.visited}, {"depth", e.depth_discovered}});
  }
  ojson triples = ojson::array();
  for (const auto& t : s.found_triples()) triples.push_back(to_json(t));
  ojson attrs = ojson::array();
  for (const auto& a : s.relevant_attributes()) attrs.push_back(attribute_json(a));
  return ojson{{"seen", seen}, {"found_triples", triples}, {"relevant_attributes", attrs}};
}

ExplorationState exploration_from_json(const ojson& j) {
  ExplorationState s;
  for (const auto& e : at(j, "seen")) {
    auto id = at(e, "id").get<std::string>();
    s.see(id, at(e, "depth").get<int>());
    if (at(e, "visited").get<bool>()) s.mark_visited(id);
  }
  for (const auto& t : at(j, "found_triples")) s.add_triple(triple_from_json(t));
  for (const auto& a : at(j, "relevant_attributes")) s.add_attribute(attribute_from_json(a));
  return s;
}

ojson to_json(const ThoughtState& s) {
  ojson triples = ojson::array();
  for (const auto& t : s.evidence.triples) triples.push_back(to_json(t));
  ojson attrs = ojson::array();
  for (const auto& a : s.evidence.attributes) attrs.push_back(attribute_json(a));
  ojson evidence{{"thoughts", s.evidence.thoughts},
                 {"triples", triples},
                 {"attributes", attrs},
                 {"scratchpad", s.evidence.scratchpad ? to_json(*s.evidence.scratchpad) : ojson(nullptr)},
                 {"exploration", s.evidence.exploration ? to_json(*s.evidence.exploration)
                                                        : ojson(nullptr)}};
  return ojson{{"id", s.id},
               {"depth", s.depth},
               {"parents", s.parents},
               {"status", to_string(s.status)},
               {"score", opt(s.score)},
               {"answer", opt(s.answer)},
               {"thought", s.thought},
               {"evidence", evidence}};
}

ThoughtState state_from_json(const ojson& j) {
  ThoughtState s;
  s.id = at(j, "id").get<int>();
  s.depth = at(j, "depth").get<int>();
  s.parents = at(j, "parents").get<std::vector<int>>();
  s.status = parse_state_status(at(j, "status").get<std::string>());
  s.score = get_opt<double>(j, "score");
  s.answer = get_opt<std::string>(j, "answer");
  s.thought = at(j, "thought").get<std::string>();
  const auto& ev = at(j, "evidence");
  s.evidence.thoughts = at(ev, "thoughts").get<std::vector<std::string>>();
  for (const auto& t : at(ev, "triples")) s.evidence.triples.push_back(triple_from_json(t));
  for (const auto& a : at(ev, "attributes")) s.evidence.attributes.push_back(attribute_from_json(a));
  if (!at(ev, "scratchpad").is_null()) s.evidence.scratchpad = scratchpad_from_json(ev["scratchpad"]);
  if (!at(ev, "exploration").is_null()) {
    s.evidence.exploration = exploration_from_json(ev["exploration"]);
  }
  return s;
}

ojson to_json(const ReasoningGraph& g) {
  ojson states = ojson::array();
  ojson edges = ojson::array();
  for (const auto& s : g.states) {
    states.push_back(to_json(s));
    for (int p : s.parents) edges.push_back(ojson::array({p, s.id}));
  }
  ojson rounds = ojson::array();
  for (const auto& r : g.rounds) {
    rounds.push_back({{"depth", r.depth},
                      {"candidates", r.candidates},
                      {"retained", r.retained},
                      {"merges", r.merges}});
  }
  return ojson{{"answer", opt(g.answer)},
               {"termination", to_string(g.termination)},
               {"frontier", g.frontier},
               {"rounds", rounds},
               {"edges", edges},
               {"states", states}};
}

ReasoningGraph graph_from_json(const ojson& j) {
  ReasoningGraph g;
  g.answer = get_opt<std::string>(j, "answer");
  g.termination = parse_termination(at(j, "termination").get<std::string>());
  g.frontier = at(j, "frontier").get<std::vector<int>>();
  for (const auto& r : at(j, "rounds")) {
    SearchRound round;
    round.depth = at(r, "depth").get<int>();
    round.candidates = at(r, "candidates").get<std::vector<int>>();
    round.retained = at(r, "retained").get<std::vector<int>>();
    round.merges = at(r, "merges").get<std::vector<int>>();
    g.rounds.push_back(std::move(round));
  }
  for (const auto& s : at(j, "states")) g.states.push_back(state_from_json(s));
  return g;
}

ojson to_json(const CostCounters& c) {
  ojson tags = ojson::object();
  for (const auto& [k, v] : c.llm_calls_by_tag) tags[k] = v;
  ojson kinds = ojson::object();
  for (const auto& [k, v] : c.kg_ops_by_kind) kinds[k] = v;
  return ojson{{"llm_calls", c.llm_calls()},
               {"llm_calls_by_tag", tags},
               {"kg_ops", c.kg_ops()},
               {"kg_ops_by_kind", kinds},
               {"merge_attempts", c.merge_attempts},
               {"transport_retries", c.transport_retries},
               {"explore_searches", c.explore_searches},
               {"explore_cost_units", c.explore_cost_units},
               {"wall_time_seconds", opt(c.wall_time_seconds)}};
}

CostCounters counters_from_json(const ojson& j) {
  CostCounters c;
  for (const auto& [k, v] : at(j, "llm_calls_by_tag").items()) c.llm_calls_by_tag[k] = v.get<std::int64_t>();
  for (const auto& [k, v] : at(j, "kg_ops_by_kind").items()) c.kg_ops_by_kind[k] = v.get<std::int64_t>();
  c.merge_attempts = at(j, "merge_attempts").get<std::int64_t>();
  c.transport_retries = at(j, "transport_retries").get<std::int64_t>();
  c.explore_searches = at(j, "explore_searches").get<std::int64_t>();
  c.explore_cost_units = at(j, "explore_cost_units").get<std::int64_t>();
  c.wall_time_seconds = get_opt<double>(j, "wall_time_seconds");
  return c;
}

ojson to_json(const CostBound& b) {
  return ojson{{"strategy", to_string(b.strategy)},
               {"interaction", to_string(b.interaction)},
               {"n", b.n},
               {"k", b.k},
               {"t", b.t},
               {"d_max", b.d_max},
               {"d", b.d},
               {"generation_call_bound", b.generation_call_bound},
               {"merge_attempt_bound", b.merge_attempt_bound},
               {"kg_op_bound", b.kg_op_bound}};
}

CostBound bound_from_json(const ojson& j) {
  CostBound b;
  b.strategy = parse_strategy(at(j, "strategy").get<std::string>());
  b.interaction = parse_interaction(at(j, "interaction").get<std::string>());
  b.n = at(j, "n").get<int>();
  b.k = at(j, "k").get<int>();
  b.t = at(j, "t").get<int>();
  b.d_max = at(j, "d_max").get<int>();
  b.d = at(j, "d").get<int>();
  b.generation_call_bound = at(j, "generation_call_bound").get<std::int64_t>();
  b.merge_attempt_bound = at(j, "merge_attempt_bound").get<std::int64_t>();
  b.kg_op_bound = at(j, "kg_op_bound").get<std::int64_t>();
  return b;
}

ojson to_json(const RunConfig& c) {
  return ojson{{"kg", c.kg_path.string()},
               {"questions", c.questions_path.string()},
               {"strategy", to_string(c.strategy)},
               {"interaction", to_string(c.interaction)},
               {"evaluator", to_string(c.evaluator)},
               {"votes", c.votes},
               {"steps", c.n},
               {"branching", c.k},
               {"retain", c.t},
               {"max_depth", c.d_max},
               {"search_depth", c.search_depth},
               {"max_relations", c.max_relations},
               {"max_neighbors", c.max_neighbors},
               {"max_actions_per_step", c.max_actions_per_step},
               {"temperature", c.temperature},
               {"backend", to_string(c.backend)},
               {"endpoint", c.endpoint},
               {"model", c.model},
               {"replay", c.replay_path.string()},
               {"strict_replay", c.strict_replay},
               {"judge", to_string(c.judge)},
               {"judge_replay", c.judge_replay_path.string()},
               {"seed", c.seed},
               {"concurrency", c.concurrency},
               {"inverse_prefix", opt(c.inverse_prefix)},
               {"prompt_assets", c.prompt_assets ? ojson(c.prompt_assets->string()) : ojson(nullptr)}};
}

RunConfig config_from_json(const ojson& j) {
  RunConfig c;
  c.kg_path = at(j, "kg").get<std::string>();
  c.questions_path = at(j, "questions").get<std::string>();
  c.strategy = parse_strategy(at(j, "strategy").get<std::string>());
  c.interaction = parse_interaction(at(j, "interaction").get<std::string>());
  c.evaluator = parse_evaluator(at(j, "evaluator").get<std::string>());
  c.votes = at(j, "votes").get<int>();
  c.n = at(j, "steps").get<int>();
  c.k = at(j, "branching").get<int>();
  c.t = at(j, "retain").get<int>();
  c.d_max = at(j, "max_depth").get<int>();
  c.search_depth = at(j, "search_depth").get<int>();
  c.max_relations = at(j, "max_relations").get<std::size_t>();
  c.max_neighbors = at(j, "max_neighbors").get<std::size_t>();
  c.max_actions_per_step = at(j, "max_actions_per_step").get<int>();
  c.temperature = at(j, "temperature").get<double>();
  c.backend = parse_backend(at(j, "backend").get<std::string>());
  c.endpoint = at(j, "endpoint").get<std::string>();
  c.model = at(j, "model").get<std::string>();
  c.replay_path = at(j, "replay").get<std::string>();
  c.strict_replay = at(j, "strict_replay").get<bool>();
  c.judge = parse_judge(at(j, "judge").get<std::string>());
  c.judge_replay_path = at(j, "judge_replay").get<std::string>();
  c.seed = at(j, "seed").get<std::uint64_t>();
  c.concurrency = at(j, "concurrency").get<int>();
  c.inverse_prefix = get_opt<std::string>(j, "inverse_prefix");
  if (auto p = get_opt<std::string>(j, "prompt_assets")) c.prompt_assets = *p;
  return c;
}

ojson to_json(const EvalResult& r) {
  return ojson{{"qid", r.qid},
               {"domain", r.domain},
               {"difficulty", to_string(r.difficulty)},
               {"answer", opt(r.model_answer)},
               {"rouge_l", opt(r.rouge_l)},
               {"exact_match", r.exact_match},
               {"judge_correct", opt(r.judge_correct)},
               {"error_class", r.error_class ? ojson(to_string(*r.error_class)) : ojson(nullptr)},
               {"judge_malformed", r.judge_malformed}};
}

EvalResult result_from_json(const ojson& j) {
  EvalResult r;
  r.qid = at(j, "qid").get<std::string>();
  r.domain = at(j, "domain").get<std::string>();
  r.difficulty = parse_difficulty(at(j, "difficulty").get<std::string>());
  r.model_answer = get_opt<std::string>(j, "answer");
  r.rouge_l = get_opt<double>(j, "rouge_l");
  r.exact_match = at(j, "exact_match").get<bool>();
  r.judge_correct = get_opt<bool>(j, "judge_correct");
  if (auto c = get_opt<std::string>(j, "error_class")) r.error_class = parse_error_class(*c);
  r.judge_malformed = at(j, "judge_malformed").get<bool>();
  return r;
}

ojson to_json(const TraceRecord& t) {
  ojson question{{"qid", t.question.qid},
                 {"text", t.question.text},
                 {"gold_answer", t.question.gold_answer},
                 {"difficulty", to_string(t.question.difficulty)},
                 {"domain", t.question.domain}};
  ojson judge{{"correct", opt(t.judge.correct)},
              {"correct_malformed", t.judge.correct_malformed},
              {"error_class", t.judge.error_class ? ojson(to_string(*t.judge.error_class))
                                                  : ojson(nullptr)},
              {"error_judge_called", t.judge.error_judge_called},
              {"error_malformed", t.judge.error_malformed}};
  return ojson{{"schema", t.schema},
               {"index", t.index},
               {"qid", t.question.qid},
               {"method", t.method},
               {"question", question},
               {"config", to_json(t.config)},
               {"answer", opt(t.answer)},
               {"termination", to_string(t.termination)},
               {"failure", opt(t.failure)},
               {"started_at", opt(t.started_at)},
               {"finished_at", opt(t.finished_at)},
               {"counters", to_json(t.counters)},
               {"bound", to_json(t.bound)},
               {"cost_check", {{"ok", t.cost_check.ok}, {"violations", t.cost_check.violations}}},
               {"judge", judge},
               {"graph", to_json(t.graph)}};
}

TraceRecord trace_from_json(const ojson& j) {
  TraceRecord t;
  t.schema = at(j, "schema").get<std::string>();
  if (t.schema != kTraceSchema) {
    throw Error(ErrorCode::kMalformedLine, "unsupported trace schema '" + t.schema + "'");
  }
  t.index = at(j, "index").get<std::size_t>();
  t.method = at(j, "method").get<std::string>();
  const auto& q = at(j, "question");
  t.question.qid = at(q, "qid").get<std::string>();
  t.question.text = at(q, "text").get<std::string>();
  t.question.gold_answer = at(q, "gold_answer").get<std::string>();
  t.question.difficulty = parse_difficulty(at(q, "difficulty").get<std::string>());
  t.question.domain = at(q, "domain").get<std::string>();
  t.config = config_from_json(at(j, "config"));
  t.answer = get_opt<std::string>(j, "answer");
  t.termination = parse_termination(at(j, "termination").get<std::string>());
  t.failure = get_opt<std::string>(j, "failure");
  t.started_at = get_opt<std::string>(j, "started_at");
  t.finished_at = get_opt<std::string>(j, "finished_at");
  t.counters = counters_from_json(at(j, "counters"));
  t.bound = bound_from_json(at(j, "bound"));
  const auto& cc = at(j, "cost_check");
  t.cost_check.ok = at(cc, "ok").get<bool>();
  t.cost_check.violations = at(cc, "violations").get<std::vector<std::string>>();
  const auto& jj = at(j, "judge");
  t.judge.correct = get_opt<bool>(jj, "correct");
  t.judge.correct_malformed = at(jj, "correct_malformed").get<bool>();
  if (auto c = get_opt<std::string>(jj, "error_class")) t.judge.error_class = parse_error_class(*c);
  t.judge.error_judge_called = at(jj, "error_judge_called").get<bool>();
  t.judge.error_malformed = at(jj, "error_malformed").get<bool>();
  t.graph = graph_from_json(at(j, "graph"));
  return t;
}

std::string dump_trace(const TraceRecord& t) { return to_json(t).dump(2) + "\n"; }

TraceRecord load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read trace " + path.string());
  try {
    return trace_from_json(ojson::parse(in));
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kMalformedLine, path.string() + ": " + e.what());
  }
}

}  // namespace kgreason
