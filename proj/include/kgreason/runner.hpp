#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgreason/cost.hpp"
#include "kgreason/eval.hpp"
#include "kgreason/question.hpp"
#include "kgreason/strategy.hpp"

namespace kgreason {

inline constexpr const char* kTraceSchema = "kgreason.trace/1";
inline constexpr const char* kResultsSchema = "kgreason.results/1";
inline constexpr const char* kSweepSchema = "kgreason.sweep/1";

enum class BackendKind { kWire, kReplay };
enum class JudgeKind { kNone, kLlm };

const char* to_string(BackendKind b);
const char* to_string(JudgeKind j);
BackendKind parse_backend(const std::string& s);
JudgeKind parse_judge(const std::string& s);

struct RunConfig {
  std::filesystem::path kg_path;
  std::filesystem::path questions_path;
  Strategy strategy = Strategy::kCot;
  Interaction interaction = Interaction::kAgent;
  Evaluator evaluator = Evaluator::kSelect;
  int votes = 1;
  int n = 10;
  int k = 3;
  int t = 3;
  int d_max = 3;
  int search_depth = 3;
  std::size_t max_relations = 3;
  std::size_t max_neighbors = 5;
  int max_actions_per_step = 4;
  double temperature = 0.7;

  BackendKind backend = BackendKind::kReplay;
  std::string endpoint;
  std::string model;
  std::string token;  // never written to traces
  std::filesystem::path replay_path;
  bool strict_replay = false;

  JudgeKind judge = JudgeKind::kNone;
  std::filesystem::path judge_replay_path;

  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  int concurrency = 1;
  std::optional<std::string> inverse_prefix;
  std::optional<std::filesystem::path> prompt_assets;

  // e.g. "tot-agent-select(k=3,t=3,D=3)"
  std::string method_label() const;
  SearchConfig search_config() const;
  BoundParams bound_params() const;
};

// Pre-flight: paths readable and flags mutually consistent. Throws
// Error(kInvalidConfig) or Error(kIo).
void validate_config(const RunConfig& cfg);

struct JudgeVerdicts {
  std::optional<bool> correct;
  bool correct_malformed = false;
  std::optional<ErrorClass> error_class;
  bool error_judge_called = false;
  bool error_malformed = false;

  bool operator==(const JudgeVerdicts&) const = default;
};

struct TraceRecord {
  std::string schema = kTraceSchema;
  std::size_t index = 0;  // position in the question file
  Question question;
  RunConfig config;
  std::string method;
  ReasoningGraph graph;
  std::optional<std::string> answer;
  Termination termination = Termination::kStepLimit;
  CostCounters counters;
  CostBound bound;
  CheckResult cost_check;
  JudgeVerdicts judge;
  std::optional<std::string> failure;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;
};

// Harvested triples and observations across every state, one per line.
std::string trace_evidence(const TraceRecord& trace);

// Rouge-L and judge fields from a trace alone.
EvalResult score_trace(const TraceRecord& trace);

struct RunSummary {
  std::vector<TraceRecord> traces;
  std::vector<EvalResult> results;
  AggregateReport report;
  std::size_t failures = 0;
};

// Runs every question and writes traces/, results.lines and report.table
// under cfg.out_dir. Pre-flight errors leave out_dir untouched.
RunSummary run_experiment(const RunConfig& cfg);

// Rebuilds results.lines and report.table from out_dir/traces.
RunSummary score_traces(const std::filesystem::path& trace_dir,
                        const std::filesystem::path& out_dir);

enum class SweepAxis { kSteps, kDepth, kWidth, kEvaluator };

const char* to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& s);

struct SweepRow {
  std::string value;
  std::string metric;
  double measurement = 0.0;
};

// One sub-run per value under out_dir/<axis>=<value>/, plus
// out_dir/sweep.table in long format.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values);

void write_results(const std::vector<EvalResult>& results, const std::string& method,
                   const std::filesystem::path& path);
std::vector<EvalResult> read_results(const std::filesystem::path& path);

}  // namespace kgreason
