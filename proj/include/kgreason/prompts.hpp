#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kgreason {

// A prompt body with `{name}` placeholders. Double-brace spans such as
// `{{answer}}` are literal text and are never substituted.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> required_placeholders;
  bool artifact_authored = false;
};

using PromptVars = std::map<std::string, std::string>;

// Placeholder names occurring in a body, in first-seen order.
std::vector<std::string> placeholders_in(std::string_view body);

// Throws Error(kMissingPlaceholder) when vars lacks a required name.
// Unused entries in vars are ignored.
std::string render(const PromptTemplate& tmpl, const PromptVars& vars);

// Built-in registry. Names: agent_step, search_thought, search_end,
// entity_extraction, prune_relations, prune_entities, search_attributes,
// selection_vote, score_vote, got_merge, judge_correctness,
// judge_error_class, answer_extraction.
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> prompt_names();

// Few-shot example text keyed by (template, domain), read from
// <dir>/<template>.<domain>.txt with <dir>/<template>.txt as fallback.
class PromptAssets {
 public:
  PromptAssets() = default;
  explicit PromptAssets(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::string examples(std::string_view template_name, std::string_view domain) const;

 private:
  std::optional<std::filesystem::path> dir_;
};

// Appended to a prompt when a reply could not be parsed.
std::string format_reminder(std::string_view template_name);

}  // namespace kgreason
