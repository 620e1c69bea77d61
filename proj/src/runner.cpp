#include "kgreason/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "kgreason/error.hpp"
#include "kgreason/serialize.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

namespace fs = std::filesystem;

const char* to_string(BackendKind b) { return b == BackendKind::kWire ? "wire" : "replay"; }
const char* to_string(JudgeKind j) { return j == JudgeKind::kLlm ? "llm" : "none"; }

BackendKind parse_backend(const std::string& s) {
  if (s == "wire") return BackendKind::kWire;
  if (s == "replay") return BackendKind::kReplay;
  throw Error(ErrorCode::kInvalidConfig, "unknown backend '" + s + "'");
}

JudgeKind parse_judge(const std::string& s) {
  if (s == "none") return JudgeKind::kNone;
  if (s == "llm") return JudgeKind::kLlm;
  throw Error(ErrorCode::kInvalidConfig, "unknown judge '" + s + "'");
}

std::string RunConfig::method_label() const {
  std::ostringstream ss;
  ss << to_string(strategy) << '-' << to_string(interaction);
  if (strategy == Strategy::kCot) {
    ss << "(n=" << n;
  } else {
    ss << '-' << to_string(evaluator) << "(k=" << k << ",t=" << t << ",D=" << d_max;
  }
  if (interaction == Interaction::kExplore) ss << ",d=" << search_depth;
  ss << ')';
  return ss.str();
}

SearchConfig RunConfig::search_config() const {
  SearchConfig c;
  c.strategy = strategy;
  c.evaluator = evaluator;
  c.interaction = interaction;
  c.k = k;
  c.t = t;
  c.d_max = d_max;
  c.n = n;
  c.votes = votes;
  return c.normalized();
}

BoundParams RunConfig::bound_params() const {
  BoundParams p;
  p.strategy = strategy;
  p.interaction = interaction;
  p.n = n;
  p.k = k;
  p.t = t;
  p.d_max = d_max;
  p.d = search_depth;
  p.max_actions_per_step = max_actions_per_step;
  return p;
}

void validate_config(const RunConfig& cfg) {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  auto readable = [](const fs::path& p, const char* what) {
    if (p.empty()) throw Error(ErrorCode::kInvalidConfig, std::string(what) + " path not set");
    if (!fs::is_regular_file(p)) {
      throw Error(ErrorCode::kIo, std::string(what) + " file not found: " + p.string());
    }
  };
  readable(cfg.kg_path, "kg");
  readable(cfg.questions_path, "questions");
  if (cfg.n < 1) invalid("--steps must be >= 1");
  if (cfg.k < 1) invalid("--branching must be >= 1");
  if (cfg.t < 1) invalid("--retain must be >= 1");
  if (cfg.d_max < 1) invalid("--max-depth must be >= 1");
  if (cfg.search_depth < 1) invalid("--search-depth must be >= 1");
  if (cfg.votes < 1) invalid("--votes must be >= 1");
  if (cfg.concurrency < 1) invalid("--concurrency must be >= 1");
  if (cfg.max_actions_per_step < 1) invalid("max actions per step must be >= 1");
  if (cfg.max_relations < 1) invalid("--max-relations must be >= 1");
  if (cfg.max_neighbors < 1) invalid("--max-neighbors must be >= 1");
  if (cfg.backend == BackendKind::kReplay) {
    readable(cfg.replay_path, "replay");
    if (cfg.strict_replay && cfg.concurrency > 1) {
      invalid("strict replay needs --concurrency 1");
    }
  } else {
    if (cfg.endpoint.empty()) invalid("wire backend needs --endpoint");
    if (cfg.model.empty()) invalid("wire backend needs --model");
    if (cfg.strict_replay) invalid("--strict-replay applies to the replay backend only");
  }
  if (cfg.judge == JudgeKind::kLlm && cfg.backend == BackendKind::kReplay) {
    if (cfg.judge_replay_path.empty()) invalid("--judge llm with the replay backend needs --judge-replay");
    readable(cfg.judge_replay_path, "judge replay");
  }
  if (cfg.prompt_assets && !fs::is_directory(*cfg.prompt_assets)) {
    throw Error(ErrorCode::kIo, "prompt assets directory not found: " + cfg.prompt_assets->string());
  }
  if (fs::exists(cfg.out_dir) && !fs::is_directory(cfg.out_dir)) {
    invalid("--out exists and is not a directory: " + cfg.out_dir.string());
  }
}

std::string trace_evidence(const TraceRecord& trace) {
  std::vector<std::string> lines;
  std::set<std::string> seen;
  auto add = [&](std::string line) {
    if (seen.insert(line).second) lines.push_back(std::move(line));
  };
  for (const auto& s : trace.graph.states) {
    for (const auto& t : s.evidence.triples) add(t.render());
    if (s.evidence.scratchpad) {
      for (const auto& step : s.evidence.scratchpad->steps) {
        for (const auto& o : step.observations) add(o);
      }
    }
  }
  return join(lines, "\n");
}

EvalResult score_trace(const TraceRecord& trace) {
  EvalResult r;
  r.qid = trace.question.qid;
  r.domain = trace.question.domain;
  r.difficulty = trace.question.difficulty;
  r.model_answer = trace.answer;
  if (trace.answer) {
    r.rouge_l = rouge_l(*trace.answer, trace.question.gold_answer);
    r.exact_match = exact_match(*trace.answer, trace.question.gold_answer);
  }
  r.judge_correct = trace.judge.correct;
  r.error_class = trace.judge.error_class;
  r.judge_malformed = trace.judge.correct_malformed || trace.judge.error_malformed;
  return r;
}

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_stem_for(const std::string& qid) {
  std::string out = qid;
  for (auto& c : out) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend == BackendKind::kReplay) {
    return std::make_unique<ReplayBackend>(load_replay_script(cfg.replay_path, cfg.strict_replay));
  }
  WireConfig w;
  w.endpoint = cfg.endpoint;
  w.model = cfg.model;
  w.token = cfg.token;
  w.max_in_flight = cfg.concurrency;
  return std::make_unique<WireBackend>(std::move(w));
}

struct Shared {
  const RunConfig& cfg;
  const KnowledgeGraph& graph;
  Backend& backend;
  Backend* judge = nullptr;
  const PromptAssets& assets;
  CostBound bound;
  SearchConfig search;
};

TraceRecord run_question(const Question& q, std::size_t index, Shared& sh) {
  TraceRecord tr;
  tr.index = index;
  tr.question = q;
  tr.config = sh.cfg;
  tr.config.token.clear();
  tr.method = sh.cfg.method_label();
  tr.bound = sh.bound;
  const bool deterministic = sh.backend.deterministic();
  if (!deterministic) tr.started_at = utc_now();
  auto t0 = std::chrono::steady_clock::now();

  CostMeter meter;
  Gateway gw(sh.backend, meter);
  try {
    std::unique_ptr<Driver> driver;
    if (sh.cfg.interaction == Interaction::kAgent) {
      AgentOptions opts;
      opts.max_actions_per_step = sh.cfg.max_actions_per_step;
      opts.temperature = sh.cfg.temperature;
      driver = std::make_unique<AgentDriver>(AgentContext{
          .graph = sh.graph, .gateway = gw, .assets = sh.assets, .options = opts});
    } else {
      ExploreConfig ec;
      ec.search_depth = sh.cfg.search_depth;
      ec.max_relations_per_entity = sh.cfg.max_relations;
      ec.max_neighbors_per_relation = sh.cfg.max_neighbors;
      driver = std::make_unique<ExploreDriver>(
          ExploreContext{.graph = sh.graph, .gateway = gw, .assets = sh.assets, .config = ec},
          sh.cfg.temperature);
    }
    auto outcome = run_search(q, sh.search, *driver);
    tr.graph = std::move(outcome.graph);
    tr.answer = outcome.answer;
    tr.termination = tr.graph.termination;
  } catch (const std::exception& e) {
    tr.failure = e.what();
  }

  if (sh.judge != nullptr) {
    Gateway jg(*sh.judge, meter);
    try {
      if (tr.answer) {
        tr.judge.correct = judge_correct(q, *tr.answer, jg);
        tr.judge.correct_malformed = !tr.judge.correct.has_value();
      } else {
        tr.judge.correct = false;
      }
      ClassifyInput in{tr.termination, tr.judge.correct, tr.answer, trace_evidence(tr)};
      auto c = classify_error(in, q, jg);
      tr.judge.error_class = c.label;
      tr.judge.error_judge_called = c.judge_called;
      tr.judge.error_malformed = c.malformed;
    } catch (const std::exception& e) {
      if (!tr.failure) tr.failure = std::string("judge: ") + e.what();
    }
  } else if (tr.termination == Termination::kStepLimit) {
    tr.judge.error_class = ErrorClass::kReachedLimit;
  }

  tr.counters = meter.snapshot();
  if (!deterministic) {
    tr.counters.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    tr.finished_at = utc_now();
  }
  tr.cost_check = check(tr.counters, tr.bound);
  return tr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

RunSummary summarize(std::vector<TraceRecord> traces, const fs::path& out_dir) {
  RunSummary sum;
  std::vector<CostCounters> costs;
  for (const auto& t : traces) {
    sum.results.push_back(score_trace(t));
    costs.push_back(t.counters);
    if (t.failure) ++sum.failures;
  }
  std::string method = traces.empty() ? std::string("none") : traces.front().method;
  write_results(sum.results, method, out_dir / "results.lines");
  if (!sum.results.empty()) {
    sum.report = aggregate(sum.results, costs);
    write_text(out_dir / "report.table", format_report_table({{method, sum.report}}));
  } else {
    write_text(out_dir / "report.table", format_report_table({}));
  }
  sum.traces = std::move(traces);
  return sum;
}

}  // namespace

void write_results(const std::vector<EvalResult>& results, const std::string& method,
                   const fs::path& path) {
  std::ostringstream out;
  for (const auto& r : results) {
    ojson line{{"schema", kResultsSchema}, {"method", method}};
    auto fields = to_json(r);
    for (auto& [k, v] : fields.items()) line[k] = v;
    out << line.dump() << '\n';
  }
  write_text(path, out.str());
}

std::vector<EvalResult> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<EvalResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(result_from_json(ojson::parse(line)));
  }
  return out;
}

RunSummary run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  LoadOptions lo;
  lo.inverse_prefix = cfg.inverse_prefix;
  auto graph = load_graph(cfg.kg_path, lo);
  auto questions = load_questions(cfg.questions_path);
  auto search = cfg.search_config();
  auto bound = bound_for(cfg.bound_params());
  auto backend = make_backend(cfg);
  std::unique_ptr<Backend> judge_script;
  Backend* judge = nullptr;
  if (cfg.judge == JudgeKind::kLlm) {
    if (cfg.backend == BackendKind::kReplay) {
      judge_script = std::make_unique<ReplayBackend>(load_replay_script(cfg.judge_replay_path));
      judge = judge_script.get();
    } else {
      judge = backend.get();
    }
  }
  PromptAssets assets = cfg.prompt_assets ? PromptAssets(*cfg.prompt_assets) : PromptAssets();

  fs::create_directories(cfg.out_dir / "traces");
  Shared sh{cfg, graph, *backend, judge, assets, bound, search};
  std::vector<TraceRecord> traces(questions.size());
  std::vector<std::string> write_errors(questions.size());
  const auto count = static_cast<long long>(questions.size());
  const int cap = std::max(1, cfg.concurrency);
#pragma omp parallel for schedule(dynamic) num_threads(cap)
  for (long long i = 0; i < count; ++i) {
    auto idx = static_cast<std::size_t>(i);
    traces[idx] = run_question(questions[idx], idx, sh);
    try {
      write_text(cfg.out_dir / "traces" / (file_stem_for(questions[idx].qid) + ".trace"),
                 dump_trace(traces[idx]));
    } catch (const std::exception& e) {
      write_errors[idx] = e.what();
    }
  }
  for (const auto& e : write_errors) {
    if (!e.empty()) throw Error(ErrorCode::kIo, e);
  }
  return summarize(std::move(traces), cfg.out_dir);
}

RunSummary score_traces(const fs::path& trace_dir, const fs::path& out_dir) {
  if (!fs::is_directory(trace_dir)) {
    throw Error(ErrorCode::kIo, "trace directory not found: " + trace_dir.string());
  }
  std::vector<TraceRecord> traces;
  for (const auto& entry : fs::directory_iterator(trace_dir)) {
    if (entry.path().extension() == ".trace") traces.push_back(load_trace(entry.path()));
  }
  std::sort(traces.begin(), traces.end(),
            [](const TraceRecord& a, const TraceRecord& b) { return a.index < b.index; });
  fs::create_directories(out_dir);
  return summarize(std::move(traces), out_dir);
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kSteps: return "steps";
    case SweepAxis::kDepth: return "depth";
    case SweepAxis::kWidth: return "width";
    case SweepAxis::kEvaluator: return "evaluator";
  }
  return "steps";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "steps") return SweepAxis::kSteps;
  if (s == "depth") return SweepAxis::kDepth;
  if (s == "width") return SweepAxis::kWidth;
  if (s == "evaluator") return SweepAxis::kEvaluator;
  throw Error(ErrorCode::kInvalidConfig, "unknown sweep axis '" + s + "'");
}

namespace {

RunConfig apply_axis(RunConfig cfg, SweepAxis axis, const std::string& value) {
  auto as_int = [&] {
    try {
      std::size_t used = 0;
      int v = std::stoi(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "sweep value '" + value + "' is not an integer");
    }
  };
  switch (axis) {
    case SweepAxis::kSteps: cfg.n = as_int(); break;
    case SweepAxis::kDepth: cfg.search_depth = as_int(); break;
    case SweepAxis::kWidth: cfg.k = cfg.t = as_int(); break;
    case SweepAxis::kEvaluator: cfg.evaluator = parse_evaluator(value); break;
  }
  cfg.out_dir = cfg.out_dir / (std::string(to_string(axis)) + "=" + value);
  return cfg;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::fixed;
  ss.precision(4);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one value");
  std::vector<RunConfig> runs;
  for (const auto& v : values) {
    runs.push_back(apply_axis(base, axis, v));
    validate_config(runs.back());
  }

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto sum = run_experiment(runs[i]);
    const auto& rep = sum.report;
    auto add = [&](const char* metric, double m) { rows.push_back({values[i], metric, m}); };
    add("rouge_l", 100.0 * rep.overall.rouge_l);
    if (rep.overall.judge_rate) add("judge_rate", *rep.overall.judge_rate);
    double triples = 0.0;
    for (const auto& t : sum.traces) {
      std::vector<Triple> all;
      for (const auto& s : t.graph.states) {
        for (const auto& tr : s.evidence.triples) {
          bool dup = std::any_of(all.begin(), all.end(),
                                 [&](const Triple& x) { return x.same_edge(tr); });
          if (!dup) all.push_back(tr);
        }
      }
      triples += static_cast<double>(all.size());
    }
    if (!sum.traces.empty()) triples /= static_cast<double>(sum.traces.size());
    add("triples_found", triples);
    for (const char* c : {"llm_calls", "generation_calls", "kg_ops", "merge_attempts",
                          "explore_cost_units"}) {
      auto it = rep.mean_costs.find(c);
      add(c, it == rep.mean_costs.end() ? 0.0 : it->second);
    }
    add("failures", static_cast<double>(sum.failures));
  }

  fs::create_directories(base.out_dir);
  std::ostringstream out;
  out << "# " << kSweepSchema << '\n';
  out << "# method " << base.method_label() << '\n';
  out << "axis | value | metric | measurement\n";
  for (const auto& r : rows) {
    out << to_string(axis) << " | " << r.value << " | " << r.metric << " | " << fmt(r.measurement)
        << '\n';
  }
  write_text(base.out_dir / "sweep.table", out.str());
  return rows;
}

}  // namespace kgreason
