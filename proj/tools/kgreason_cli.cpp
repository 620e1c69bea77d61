#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgreason/error.hpp"
#include "kgreason/graph.hpp"
#include "kgreason/runner.hpp"
#include "kgreason/serialize.hpp"
#include "kgreason/validate.hpp"

namespace fs = std::filesystem;
using namespace kgreason;

namespace {

struct RunFlags {
  std::string kg, questions, strategy = "cot", interaction = "agent", evaluator = "select";
  std::string backend = "replay", endpoint, model, replay, judge = "none", judge_replay;
  std::string out = "out", inverse_prefix, prompt_assets;
  int votes = 1, steps = 10, branching = 3, retain = 3, max_depth = 3, search_depth = 3;
  int concurrency = 1, max_actions = 4;
  std::size_t max_relations = 3, max_neighbors = 5;
  double temperature = 0.7;
  std::uint64_t seed = 0;
  bool strict_replay = false;

  void attach(CLI::App& app) {
    app.add_option("--kg", kg, "Graph file (one JSON node per line)")->required();
    app.add_option("--questions", questions, "Question file (one JSON record per line)")->required();
    app.add_option("--strategy", strategy)->check(CLI::IsMember({"cot", "tot", "got"}));
    app.add_option("--interaction", interaction)->check(CLI::IsMember({"agent", "explore"}));
    app.add_option("--evaluator", evaluator)->check(CLI::IsMember({"select", "score"}));
    app.add_option("--votes", votes, "Score completions per candidate");
    app.add_option("--steps", steps, "CoT step limit n");
    app.add_option("--branching", branching, "Children per state k");
    app.add_option("--retain", retain, "Frontier size t");
    app.add_option("--max-depth", max_depth, "Search depth limit");
    app.add_option("--search-depth", search_depth, "Exploration depth d");
    app.add_option("--max-relations", max_relations, "Relations kept per explored entity");
    app.add_option("--max-neighbors", max_neighbors, "Tails kept per explored relation");
    app.add_option("--max-actions", max_actions, "Actions executed per agent step");
    app.add_option("--temperature", temperature, "Sampling temperature for thoughts");
    app.add_option("--backend", backend)->check(CLI::IsMember({"wire", "replay"}));
    app.add_option("--endpoint", endpoint, "Chat-completions URL");
    app.add_option("--model", model, "Model name sent to the endpoint");
    app.add_option("--replay", replay, "Replay script");
    app.add_flag("--strict-replay", strict_replay, "Require scripted calls in order");
    app.add_option("--judge", judge, "Judge for correctness and error classes")->check(CLI::IsMember({"none", "llm"}));
    app.add_option("--judge-replay", judge_replay, "Replay script for judge calls");
    app.add_option("--seed", seed, "Recorded in traces");
    app.add_option("--out", out, "Output directory");
    app.add_option("--concurrency", concurrency, "Questions in flight");
    app.add_option("--inverse-prefix", inverse_prefix, "Materialize inverse edges with this prefix");
    app.add_option("--prompt-assets", prompt_assets, "Few-shot example directory");
  }

  RunConfig config() const {
    RunConfig c;
    c.kg_path = kg;
    c.questions_path = questions;
    c.strategy = parse_strategy(strategy);
    c.interaction = parse_interaction(interaction);
    c.evaluator = parse_evaluator(evaluator);
    c.votes = votes;
    c.n = steps;
    c.k = branching;
    c.t = retain;
    c.d_max = max_depth;
    c.search_depth = search_depth;
    c.max_relations = max_relations;
    c.max_neighbors = max_neighbors;
    c.max_actions_per_step = max_actions;
    c.temperature = temperature;
    c.backend = parse_backend(backend);
    c.endpoint = endpoint;
    c.model = model;
    c.replay_path = replay;
    c.strict_replay = strict_replay;
    c.judge = parse_judge(judge);
    c.judge_replay_path = judge_replay;
    c.seed = seed;
    c.out_dir = out;
    c.concurrency = concurrency;
    if (!inverse_prefix.empty()) c.inverse_prefix = inverse_prefix;
    if (!prompt_assets.empty()) c.prompt_assets = fs::path(prompt_assets);
    if (const char* token = std::getenv("KGREASON_API_KEY")) c.token = token;
    return c;
  }
};

void print_summary(const RunSummary& sum, const fs::path& out) {
  std::size_t cost_failures = 0;
  for (const auto& t : sum.traces) {
    if (!t.cost_check.ok) ++cost_failures;
  }
  std::cout << "questions: " << sum.traces.size() << "\n"
            << "failures: " << sum.failures << "\n"
            << "cost check failures: " << cost_failures << "\n"
            << "rouge_l: " << 100.0 * sum.report.overall.rouge_l << "\n"
            << "output: " << out.string() << "\n";
}

std::vector<fs::path> trace_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".trace") files.push_back(e.path());
      }
    } else {
      files.emplace_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reasoning strategies over knowledge graphs"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Answer every question and write traces and reports");
  run_flags.attach(*run);

  RunFlags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "One run per value of a parameter");
  sweep_flags.attach(*sweep);
  sweep->add_option("--axis", axis)->required()->check(
      CLI::IsMember({"steps", "depth", "width", "evaluator"}));
  sweep->add_option("--values", values)->required()->delimiter(',');

  std::vector<std::string> validate_inputs;
  auto* validate = app.add_subcommand("validate-trace", "Check trace invariants");
  validate->add_option("traces", validate_inputs, "Trace files or directories")->required();

  std::string score_traces_dir, score_out;
  auto* score = app.add_subcommand("score", "Rebuild results and report from traces");
  score->add_option("--traces", score_traces_dir, "Trace directory")->required();
  score->add_option("--out", score_out, "Where results.lines and report.table go")->required();

  std::uint64_t gen_seed = 0;
  SyntheticSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-graph", "Write a seeded synthetic graph");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--nodes", spec.nodes);
  gen->add_option("--edges-per-node", spec.edges_per_node);
  gen->add_option("--types", spec.node_types)->delimiter(',');
  gen->add_option("--relations", spec.relations)->delimiter(',');
  gen->add_option("--out", gen_out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto cfg = run_flags.config();
      auto sum = run_experiment(cfg);
      print_summary(sum, cfg.out_dir);
    } else if (sweep->parsed()) {
      auto cfg = sweep_flags.config();
      auto rows = run_sweep(cfg, parse_sweep_axis(axis), values);
      std::cout << "sweep rows: " << rows.size() << "\n"
                << "output: " << (cfg.out_dir / "sweep.table").string() << "\n";
    } else if (validate->parsed()) {
      int bad = 0;
      for (const auto& f : trace_files(validate_inputs)) {
        std::vector<std::string> violations;
        try {
          violations = validate_trace(load_trace(f));
        } catch (const Error& e) {
          violations = {e.what()};
        }
        if (violations.empty()) {
          std::cout << "OK   " << f.string() << "\n";
        } else {
          ++bad;
          std::cout << "FAIL " << f.string() << "\n";
          for (const auto& v : violations) std::cout << "  " << v << "\n";
        }
      }
      return bad == 0 ? 0 : 1;
    } else if (score->parsed()) {
      auto sum = score_traces(score_traces_dir, score_out);
      print_summary(sum, score_out);
    } else if (gen->parsed()) {
      save_graph(generate_synthetic_graph(gen_seed, spec), fs::path(gen_out));
      std::cout << "wrote " << gen_out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
