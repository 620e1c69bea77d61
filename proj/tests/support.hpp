#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "kgreason/gateway.hpp"
#include "kgreason/graph.hpp"
#include "kgreason/question.hpp"

namespace kgr_test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(KGR_FIXTURES) / name;
}

inline kgreason::Question krt39_question() {
  kgreason::Question q;
  q.qid = "krt39";
  q.text = "What anatomy can be expressed by gene KRT39?";
  q.gold_answer = "head, skin of body";
  q.difficulty = kgreason::Difficulty::kEasy;
  q.domain = "biomedical";
  return q;
}

inline kgreason::KnowledgeGraph krt39_graph() {
  return kgreason::load_graph(fixture("krt39_graph.jsonl"));
}

inline kgreason::KnowledgeGraph graph_from(const std::string& text) {
  std::istringstream in(text);
  return kgreason::parse_graph(in);
}

inline kgreason::ReplayScript script_from(const std::string& text, bool strict = false) {
  std::istringstream in(text);
  return kgreason::parse_replay_script(in, strict);
}

// Text after the last occurrence of label on its line.
inline std::string line_after(const std::string& prompt, const std::string& label) {
  auto pos = prompt.rfind(label);
  if (pos == std::string::npos) return {};
  pos += label.size();
  auto end = prompt.find('\n', pos);
  return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

}  // namespace kgr_test
