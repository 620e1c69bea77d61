#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgreason/agent.hpp"
#include "kgreason/cost.hpp"
#include "kgreason/gateway.hpp"
#include "kgreason/question.hpp"

namespace kgreason {

enum class ErrorClass { kReachedLimit, kFoundNotReturned, kWrongStep, kCorrect };

const char* to_string(ErrorClass c);
ErrorClass parse_error_class(const std::string& s);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Rouge-L F1 over tokenize()d words; 0 when either side is empty.
double rouge_l(std::string_view candidate, std::string_view reference);

using TextPair = std::pair<std::string, std::string>;

// Parallel over pairs.
std::vector<double> rouge_l_batch(const std::vector<TextPair>& pairs);
std::vector<double> rouge_l_batch_serial(const std::vector<TextPair>& pairs);

// Case-folded token sequences equal.
bool exact_match(std::string_view candidate, std::string_view reference);

// One judge completion; nullopt when the reply has no Yes/No verdict.
std::optional<bool> judge_correct(const Question& q, const std::string& model_answer,
                                  Gateway& gateway);

// What the error labeler needs from a finished trace.
struct ClassifyInput {
  Termination termination = Termination::kStepLimit;
  std::optional<bool> judge_correct;
  std::optional<std::string> model_answer;
  std::string evidence;  // harvested triples and observations, one per line
};

struct Classification {
  ErrorClass label = ErrorClass::kWrongStep;
  bool judge_called = false;
  bool malformed = false;  // judge reply unparseable, defaulted to wrong_step
};

Classification classify_error(const ClassifyInput& in, const Question& q, Gateway& gateway);

struct EvalResult {
  std::string qid;
  std::string domain;
  Difficulty difficulty = Difficulty::kEasy;
  std::optional<std::string> model_answer;
  std::optional<double> rouge_l;
  bool exact_match = false;
  std::optional<bool> judge_correct;
  std::optional<ErrorClass> error_class;
  bool judge_malformed = false;

  bool operator==(const EvalResult&) const = default;
};

struct MetricCell {
  std::size_t count = 0;
  double rouge_l = 0.0;               // mean in [0,1], missing answers count 0
  std::optional<double> judge_rate;   // percent of judged; absent when none judged
  std::size_t judged = 0;
  std::size_t judge_absent = 0;

  bool operator==(const MetricCell&) const = default;
};

struct AggregateReport {
  MetricCell overall;
  std::map<std::string, MetricCell> by_domain;
  std::map<std::string, MetricCell> by_difficulty;
  std::map<std::string, MetricCell> by_domain_difficulty;  // "domain/difficulty"
  std::map<std::string, std::size_t> error_counts;
  std::map<std::string, double> error_share;  // percent of classified results
  std::map<std::string, double> mean_costs;

  bool operator==(const AggregateReport&) const = default;
};

// Throws kInvalidConfig on an empty result list.
AggregateReport aggregate(const std::vector<EvalResult>& results,
                          const std::vector<CostCounters>& costs);

struct MethodReport {
  std::string method;
  AggregateReport report;
};

// Rows are methods, columns domains; followed by difficulty, error and cost
// sections.
std::string format_report_table(const std::vector<MethodReport>& reports);

}  // namespace kgreason
