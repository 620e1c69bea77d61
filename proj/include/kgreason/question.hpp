#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace kgreason {

enum class Difficulty { kEasy, kMedium, kHard };

const char* to_string(Difficulty d);
Difficulty parse_difficulty(const std::string& s);

struct Question {
  std::string qid;
  std::string text;
  std::string gold_answer;
  Difficulty difficulty = Difficulty::kEasy;
  std::string domain;
};

// Line-delimited records: qid, question, answer, difficulty, optional domain.
std::vector<Question> load_questions(const std::filesystem::path& path);
std::vector<Question> parse_questions(std::istream& in);

}  // namespace kgreason
