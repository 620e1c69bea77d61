#include "kgreason/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "kgreason/error.hpp"

namespace kgreason {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformedLine: return "malformed-line";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kDanglingEdge: return "dangling-edge";
    case ErrorCode::kUnknownNode: return "unknown-node";
    case ErrorCode::kFeatureAbsent: return "feature-absent";
    case ErrorCode::kEmptyGraph: return "empty-graph";
    case ErrorCode::kNoMatch: return "no-match";
    case ErrorCode::kMissingPlaceholder: return "missing-placeholder";
    case ErrorCode::kMalformedOutput: return "malformed-output";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kReplayMismatch: return "replay-mismatch";
    case ErrorCode::kInvalidConfig: return "invalid-config";
  }
  return "unknown";
}

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::vector<std::string> split_top_level(std::string_view s, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
      --depth;
    } else if (c == sep && depth == 0) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  parts.push_back(trim(s.substr(start)));
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<BracketSpan> find_bracket_spans(std::string_view text,
                                            BracketStyle style) {
  const bool want_curly = style != BracketStyle::kSquare;
  const bool want_square = style != BracketStyle::kCurly;
  std::vector<BracketSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (want_curly && text.compare(i, 2, "{{") == 0) {
      auto close = text.find("}}", i + 2);
      if (close == std::string_view::npos) break;
      spans.push_back({i, close + 2, trim(text.substr(i + 2, close - i - 2))});
      i = close + 2;
      continue;
    }
    if (want_square && text[i] == '[') {
      int depth = 0;
      std::size_t j = i;
      for (; j < text.size(); ++j) {
        if (text[j] == '[') ++depth;
        if (text[j] == ']' && --depth == 0) break;
      }
      if (j >= text.size()) {
        ++i;  // unbalanced; try the next opener
        continue;
      }
      spans.push_back({i, j + 1, trim(text.substr(i + 1, j - i - 1))});
      i = j + 1;
      continue;
    }
    ++i;
  }
  return spans;
}

std::optional<std::string> try_parse_bracketed_answer(std::string_view text,
                                                      BracketStyle style) {
  auto spans = find_bracket_spans(text, style);
  if (spans.empty()) return std::nullopt;
  return spans.back().content;
}

std::string parse_bracketed_answer(std::string_view text, BracketStyle style) {
  auto answer = try_parse_bracketed_answer(text, style);
  if (!answer) {
    throw Error(ErrorCode::kMalformedOutput, "no bracketed answer span found");
  }
  return *answer;
}

std::optional<double> last_number(std::string_view text) {
  std::optional<double> last;
  std::size_t i = 0;
  while (i < text.size()) {
    bool starts = is_digit(text[i]) ||
                  (text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1]));
    if (!starts) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > 0 && text[begin - 1] == '-') --begin;
    while (i < text.size() && is_digit(text[i])) ++i;
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
    }
    std::string literal(text.substr(begin, i - begin));
    last = std::strtod(literal.c_str(), nullptr);
  }
  return last;
}

std::vector<long long> integers_in(std::string_view text) {
  std::vector<long long> values;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    long long v = 0;
    while (i < text.size() && is_digit(text[i])) {
      v = std::min<long long>(v * 10 + (text[i] - '0'), 1LL << 40);
      ++i;
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace kgreason
