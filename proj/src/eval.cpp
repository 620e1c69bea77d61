#include "kgreason/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgreason/error.hpp"
#include "kgreason/prompts.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

using nlohmann::json;

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "easy";
}

Difficulty parse_difficulty(const std::string& s) {
  auto v = to_lower(trim(s));
  if (v == "easy") return Difficulty::kEasy;
  if (v == "medium") return Difficulty::kMedium;
  if (v == "hard") return Difficulty::kHard;
  throw Error(ErrorCode::kMalformedLine, "unknown difficulty '" + s + "'");
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<Question> parse_questions(std::istream& in) {
  std::vector<Question> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": not an object");
    }
    Question q;
    q.qid = required_string(obj, "qid", line_no);
    q.text = required_string(obj, "question", line_no);
    q.gold_answer = required_string(obj, "answer", line_no);
    try {
      q.difficulty = parse_difficulty(required_string(obj, "difficulty", line_no));
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
    q.domain = obj.contains("domain") ? required_string(obj, "domain", line_no) : "default";
    if (trim(q.text).empty()) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": empty question");
    }
    if (!seen.insert(q.qid).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate qid '" + q.qid + "'");
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read questions file " + path.string());
  return parse_questions(in);
}

const char* to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::kReachedLimit: return "reached_limit";
    case ErrorClass::kFoundNotReturned: return "found_not_returned";
    case ErrorClass::kWrongStep: return "wrong_step";
    case ErrorClass::kCorrect: return "correct";
  }
  return "wrong_step";
}

ErrorClass parse_error_class(const std::string& s) {
  if (s == "reached_limit") return ErrorClass::kReachedLimit;
  if (s == "found_not_returned") return ErrorClass::kFoundNotReturned;
  if (s == "wrong_step") return ErrorClass::kWrongStep;
  if (s == "correct") return ErrorClass::kCorrect;
  throw Error(ErrorCode::kMalformedLine, "unknown error class '" + s + "'");
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;
  auto l = static_cast<double>(lcs_length(c, r));
  if (l == 0.0) return 0.0;
  double p = l / static_cast<double>(c.size());
  double rec = l / static_cast<double>(r.size());
  return 2.0 * p * rec / (p + rec);
}

std::vector<double> rouge_l_batch_serial(const std::vector<TextPair>& pairs) {
  std::vector<double> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = rouge_l(pairs[i].first, pairs[i].second);
  return out;
}

std::vector<double> rouge_l_batch(const std::vector<TextPair>& pairs) {
  std::vector<double> out(pairs.size());
  const auto n = static_cast<long long>(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = rouge_l(p.first, p.second);
  }
  return out;
}

bool exact_match(std::string_view candidate, std::string_view reference) {
  return tokenize(candidate) == tokenize(reference);
}

std::optional<bool> judge_correct(const Question& q, const std::string& model_answer,
                                  Gateway& gateway) {
  const auto& tmpl = prompt_template("judge_correctness");
  CompletionRequest req;
  req.prompt = render(tmpl, {{"question", q.text},
                             {"gold_answer", q.gold_answer},
                             {"model_answer", model_answer}});
  req.decoding = control_decoding();
  req.tag = tags::kJudge;
  auto reply = gateway.complete(req);
  auto spans = find_bracket_spans(reply, BracketStyle::kAny);
  std::string verdict = spans.empty() ? to_lower(trim(reply)) : to_lower(spans.front().content);
  auto words = tokenize(verdict);
  if (words.empty()) return std::nullopt;
  if (words.front() == "yes") return true;
  if (words.front() == "no") return false;
  return std::nullopt;
}

Classification classify_error(const ClassifyInput& in, const Question& q, Gateway& gateway) {
  Classification c;
  if (in.judge_correct == true) {
    c.label = ErrorClass::kCorrect;
    return c;
  }
  if (in.termination == Termination::kStepLimit) {
    c.label = ErrorClass::kReachedLimit;
    return c;
  }
  const auto& tmpl = prompt_template("judge_error_class");
  CompletionRequest req;
  req.prompt = render(tmpl, {{"question", q.text},
                             {"gold_answer", q.gold_answer},
                             {"model_answer", in.model_answer.value_or("(none)")},
                             {"evidence", in.evidence.empty() ? "None" : in.evidence}});
  req.decoding = control_decoding();
  req.tag = tags::kJudgeError;
  c.judge_called = true;
  auto content = try_parse_bracketed_answer(gateway.complete(req));
  auto label = content ? to_lower(*content) : std::string{};
  if (label == "2" || label.find("found") != std::string::npos) {
    c.label = ErrorClass::kFoundNotReturned;
  } else if (label == "3" || label.find("wrong") != std::string::npos) {
    c.label = ErrorClass::kWrongStep;
  } else {
    c.label = ErrorClass::kWrongStep;
    c.malformed = true;
  }
  return c;
}

namespace {

struct CellAcc {
  std::size_t count = 0;
  double rouge_sum = 0.0;
  std::size_t judged = 0;
  std::size_t correct = 0;
  std::size_t absent = 0;

  void add(const EvalResult& r) {
    ++count;
    rouge_sum += r.rouge_l.value_or(0.0);
    if (r.judge_correct) {
      ++judged;
      if (*r.judge_correct) ++correct;
    } else {
      ++absent;
    }
  }

  MetricCell cell() const {
    MetricCell c;
    c.count = count;
    c.rouge_l = count == 0 ? 0.0 : rouge_sum / static_cast<double>(count);
    c.judged = judged;
    c.judge_absent = absent;
    if (judged > 0) c.judge_rate = 100.0 * static_cast<double>(correct) / static_cast<double>(judged);
    return c;
  }
};

}  // namespace

AggregateReport aggregate(const std::vector<EvalResult>& results,
                          const std::vector<CostCounters>& costs) {
  if (results.empty()) throw Error(ErrorCode::kInvalidConfig, "nothing to aggregate");
  // Sorted copy so floating sums do not depend on input order.
  std::vector<EvalResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(),
            [](const EvalResult& a, const EvalResult& b) { return a.qid < b.qid; });

  CellAcc all;
  std::map<std::string, CellAcc> dom, diff, both;
  AggregateReport rep;
  std::size_t classified = 0;
  for (const auto& r : sorted) {
    all.add(r);
    dom[r.domain].add(r);
    diff[to_string(r.difficulty)].add(r);
    both[r.domain + "/" + to_string(r.difficulty)].add(r);
    if (r.error_class) {
      ++rep.error_counts[to_string(*r.error_class)];
      ++classified;
    }
  }
  rep.overall = all.cell();
  for (const auto& [k, v] : dom) rep.by_domain[k] = v.cell();
  for (const auto& [k, v] : diff) rep.by_difficulty[k] = v.cell();
  for (const auto& [k, v] : both) rep.by_domain_difficulty[k] = v.cell();
  for (auto c : {ErrorClass::kReachedLimit, ErrorClass::kFoundNotReturned, ErrorClass::kWrongStep,
                 ErrorClass::kCorrect}) {
    auto n = rep.error_counts.count(to_string(c)) ? rep.error_counts[to_string(c)] : 0;
    rep.error_counts[to_string(c)] = n;
    rep.error_share[to_string(c)] =
        classified == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(classified);
  }

  if (!costs.empty()) {
    CostCounters total;
    for (const auto& c : costs) total += c;
    auto mean = [&](std::int64_t v) { return static_cast<double>(v) / static_cast<double>(costs.size()); };
    rep.mean_costs["llm_calls"] = mean(total.llm_calls());
    rep.mean_costs["generation_calls"] = mean(total.llm_calls(tags::kThought));
    rep.mean_costs["kg_ops"] = mean(total.kg_ops());
    rep.mean_costs["merge_attempts"] = mean(total.merge_attempts);
    rep.mean_costs["explore_cost_units"] = mean(total.explore_cost_units);
    rep.mean_costs["transport_retries"] = mean(total.transport_retries);
    for (const auto& [tag, n] : total.llm_calls_by_tag) rep.mean_costs["llm." + tag] = mean(n);
    for (const auto& [kind, n] : total.kg_ops_by_kind) rep.mean_costs["kg." + kind] = mean(n);
  }
  return rep;
}

namespace {

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

std::string judge_cell(const MetricCell& c) {
  if (!c.judge_rate) return "n/a (0 judged)";
  return fixed2(*c.judge_rate);
}

void write_row(std::ostringstream& out, const std::vector<std::string>& cells) {
  out << join(cells, " | ") << '\n';
}

}  // namespace

std::string format_report_table(const std::vector<MethodReport>& reports) {
  std::ostringstream out;
  out << "# kgreason.report/1\n";
  out << "# R-L = Rouge-L F1 (beta=1) x100; Judge = percent of judged answers deemed correct\n";

  std::set<std::string> domains;
  for (const auto& m : reports) {
    for (const auto& [d, _] : m.report.by_domain) domains.insert(d);
  }

  out << "\n## domains\n";
  std::vector<std::string> header{"method"};
  for (const auto& d : domains) {
    header.push_back(d + " R-L");
    header.push_back(d + " Judge");
  }
  header.push_back("all R-L");
  header.push_back("all Judge");
  header.push_back("n");
  write_row(out, header);
  for (const auto& m : reports) {
    std::vector<std::string> row{m.method};
    for (const auto& d : domains) {
      auto it = m.report.by_domain.find(d);
      if (it == m.report.by_domain.end()) {
        row.insert(row.end(), {"-", "-"});
        continue;
      }
      row.push_back(fixed2(100.0 * it->second.rouge_l));
      row.push_back(judge_cell(it->second));
    }
    row.push_back(fixed2(100.0 * m.report.overall.rouge_l));
    row.push_back(judge_cell(m.report.overall));
    row.push_back(std::to_string(m.report.overall.count));
    write_row(out, row);
  }

  out << "\n## difficulty\n";
  header = {"method"};
  const std::vector<std::string> levels{"easy", "medium", "hard"};
  for (const auto& l : levels) {
    header.push_back(l + " R-L");
    header.push_back(l + " Judge");
  }
  write_row(out, header);
  for (const auto& m : reports) {
    std::vector<std::string> row{m.method};
    for (const auto& l : levels) {
      auto it = m.report.by_difficulty.find(l);
      if (it == m.report.by_difficulty.end()) {
        row.insert(row.end(), {"-", "-"});
        continue;
      }
      row.push_back(fixed2(100.0 * it->second.rouge_l));
      row.push_back(judge_cell(it->second));
    }
    write_row(out, row);
  }

  out << "\n## errors (percent of classified)\n";
  write_row(out, {"method", "reached_limit", "found_not_returned", "wrong_step", "correct"});
  for (const auto& m : reports) {
    std::vector<std::string> row{m.method};
    for (const char* c : {"reached_limit", "found_not_returned", "wrong_step", "correct"}) {
      auto it = m.report.error_share.find(c);
      row.push_back(fixed2(it == m.report.error_share.end() ? 0.0 : it->second));
    }
    write_row(out, row);
  }

  out << "\n## costs (mean per question)\n";
  const std::vector<std::string> cost_cols{"llm_calls", "generation_calls", "kg_ops",
                                           "merge_attempts", "explore_cost_units"};
  header = {"method"};
  header.insert(header.end(), cost_cols.begin(), cost_cols.end());
  write_row(out, header);
  for (const auto& m : reports) {
    std::vector<std::string> row{m.method};
    for (const auto& c : cost_cols) {
      auto it = m.report.mean_costs.find(c);
      row.push_back(fixed2(it == m.report.mean_costs.end() ? 0.0 : it->second));
    }
    write_row(out, row);
  }
  return out.str();
}

}  // namespace kgreason
