#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgreason {

// Case-folded word tokens. ASCII letters and digits are word characters,
// bytes >= 0x80 are kept inside words so UTF-8 text is not split mid-rune.
std::vector<std::string> tokenize(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on commas that are not nested inside (), [] or {}.
std::vector<std::string> split_top_level(std::string_view s, char sep = ',');

std::string join(const std::vector<std::string>& parts, std::string_view sep);

enum class BracketStyle { kCurly, kSquare, kAny };

struct BracketSpan {
  std::size_t begin = 0;  // offset of the opening bracket
  std::size_t end = 0;    // one past the closing bracket
  std::string content;    // trimmed inner text
};

// All non-nested answer spans in text order. Curly spans are `{{...}}`,
// square spans are `[...]`.
std::vector<BracketSpan> find_bracket_spans(std::string_view text,
                                            BracketStyle style);

// Content of the last answer span; throws Error(kMalformedOutput) if none.
std::string parse_bracketed_answer(std::string_view text,
                                   BracketStyle style = BracketStyle::kAny);

std::optional<std::string> try_parse_bracketed_answer(
    std::string_view text, BracketStyle style = BracketStyle::kAny);

// Last decimal number (optionally signed, with fraction) in the text.
std::optional<double> last_number(std::string_view text);

// Every non-negative integer literal in the text, in order.
std::vector<long long> integers_in(std::string_view text);

}  // namespace kgreason
