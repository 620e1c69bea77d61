#include "kgreason/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "kgreason/error.hpp"

namespace kgreason {

namespace {

bool is_ident(char c) {
  return std::islower(static_cast<unsigned char>(c)) != 0 ||
         std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Length of a `{name}` placeholder starting at pos, or 0.
std::size_t placeholder_at(std::string_view body, std::size_t pos) {
  if (body[pos] != '{') return 0;
  std::size_t j = pos + 1;
  while (j < body.size() && is_ident(body[j])) ++j;
  if (j == pos + 1 || j >= body.size() || body[j] != '}') return 0;
  return j - pos + 1;
}

template <typename Visit>
void scan(std::string_view body, Visit&& visit) {
  std::size_t i = 0;
  while (i < body.size()) {
    if (body.compare(i, 2, "{{") == 0) {
      auto close = body.find("}}", i + 2);
      std::size_t end = close == std::string_view::npos ? body.size() : close + 2;
      visit(body.substr(i, end - i), std::string_view{});
      i = end;
      continue;
    }
    if (auto len = placeholder_at(body, i); len > 0) {
      visit(std::string_view{}, body.substr(i + 1, len - 2));
      i += len;
      continue;
    }
    visit(body.substr(i, 1), std::string_view{});
    ++i;
  }
}

PromptTemplate make(std::string name, std::string body, bool authored = false) {
  PromptTemplate t;
  t.name = std::move(name);
  t.body = std::move(body);
  for (auto& p : placeholders_in(t.body)) t.required_placeholders.insert(p);
  t.artifact_authored = authored;
  return t;
}

std::vector<PromptTemplate> build_registry() {
  std::vector<PromptTemplate> r;
  r.push_back(make("agent_step",
      "Solve a question answering task with interleaving Thought, Interaction with Graph, "
      "Feedback from Graph steps. In Thought step, you can think about what further "
      "information is needed, and In Interaction step, you can get feedback from graphs "
      "with four functions:\n"
      "(1) RetrieveNode[keyword], which retrieves the related node from the graph according "
      "to the corresponding query.\n"
      "(2) NodeFeature[Node, feature], which returns the detailed attribute information of "
      "Node regarding the given \"feature\" key.\n"
      "(3) NodeDegree[Node, neighbor_type], which calculates the number of \"neighbor_type\" "
      "neighbors of the node Node in the graph.\n"
      "(4) NeighbourCheck[Node, neighbor_type], which lists the \"neighbor_type\" neighbours "
      "of the node Node in the graph and returns them.\n"
      "You may take as many steps as necessary.\n"
      "Here are some examples:\n"
      "{examples}\n"
      "Please answer by providing node main feature (e.g., names) rather than node IDs.\n"
      "Generate the next step.\n"
      "Definition of the graph: {graph_definition}\n"
      "Question: {question}\n"
      "{scratchpad}"));
  r.push_back(make("search_thought",
      "Given the previous thoughts, generate the next thought to answer the provided "
      "question.\n"
      "Your end goal is to answer the question step by step. For context, you are also "
      "provided with some knowledge triples from a knowledge base.\n"
      "Follow the format of the examples to generate the next thought.\n"
      "\n"
      "{examples}\n"
      "\n"
      "Graph Definition: {graph_definition}\n"
      "Question: {question}\n"
      "Knowledge Triples:\n"
      "{triples}\n"
      "Previous thoughts:\n"
      "{thoughts}\n"
      "Related Entity Attributes:\n"
      "{attributes}\n"
      "Next Thought:\n"));
  r.push_back(make("search_end",
      "Your are provided with the an original question, the associated subquestion thoughts "
      "and their corresponding knowledge graph triples (head_entity -> relation -> "
      "tail_entity). Your task is to answer whether it's sufficient for you to answer the "
      "original question (Yes or No). You are provided with examples. You should follow the "
      "same format as in the examples, writing 'Yes' or 'No' within brackets at the "
      "beginning of the answer.\n"
      "{examples}\n"
      "Task:\n"
      "Question: {question}\n"
      "Thoughts: {thoughts}\n"
      "Knowledge Triples: {triples}\n"
      "Entity Attributes: {attributes}\n"
      "Answer:\n"));
  r.push_back(make("entity_extraction",
      "Given the provided text, extract the relevant entities that may appear in a "
      "knowledge base. Return the answer at the end with brackets {{relevant entities}} as "
      "shown in the following examples. If there are several entities, separate them with "
      "commas.\n"
      "{examples}\n"
      "Task:\n"
      "Text: {text}\n"
      "Relevant Entities:\n"));
  r.push_back(make("prune_relations",
      "From the given entity and relations, select only the relevant relations to answer "
      "the question. Provide the answer at the end with brackets {{answer}}, as shown in the "
      "following example.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Head Entity: {entity}\n"
      "Relations: {relations}\n"
      "Answer:\n"));
  r.push_back(make("prune_entities",
      "You are provided with a question, a head entity, a relation and tail entity or "
      "entities from a knowledge base. Select the tail entity or entities to answer the "
      "question. Return the tail entity or entities at the end with brackets "
      "{{relevant entity or entities}}, as shown in the following examples.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Head Entity: {head_entity}\n"
      "Relation: {relation}\n"
      "Tail Entities: {tail_entities}\n"
      "Relevant Entities:\n"));
  r.push_back(make("search_attributes",
      "Is any of the attributes relevant to answer the question? Return the answer at the "
      "end with brackets {{answer}}, as shown in the following examples.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Entity: {entity}\n"
      "Attributes: {attributes}\n"
      "Relevant Attributes:\n"));
  r.push_back(make("selection_vote",
      "Given a question, you need to select the possible chain of thought that may lead to "
      "the correct answer with higher probablity. You are provided with several choices with "
      "thouhgts and related triples from a knowledge base. Decide which choice is most "
      "promising to complete the task. Analyze each choice in detail, then conclude in the "
      "last line: \"The best choice is {{s}}\", where s the integer id of the choice.\n"
      "Select {count} choice(s); list their ids separated by commas inside the brackets.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Choices:\n{choices}\n"
      "Answer:\n"));
  r.push_back(make("score_vote",
      "Generate a score for the given reasoning chain. The score represents the probability "
      "that the chain will lead to the correct answer. The chains contain interleaved "
      "thoughts and related triples from a knowledge base. Some chains may not be complete, "
      "but you need to judge the steps that are provided. The score can be any floating "
      "number between 0 and 1.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Thought Chain:\n{thoughts}\n"
      "Score:\n"));
  r.push_back(make("got_merge",
      "Generate the next thought for the merged chain of thoughts. You are provided with the "
      "question, two chains of thoughts, and the corresponding merged chain of thought. "
      "Identify inconsistencies or errors from the previous chains and provide the next "
      "thought for the merged chain. You should follow the same format as in the examples.\n"
      "{examples}\n"
      "Question: {question}\n"
      "Chain 1:\n{chain_1}\n"
      "Chain 2:\n{chain_2}\n"
      "Merged Chain:\n{merged_chain}\n"
      "Next Thought:\n"));
  r.push_back(make("judge_correctness",
      "You are grading an answer to a question over a knowledge graph. Decide whether the "
      "model answer matches the ground truth answer in meaning; ordering and phrasing may "
      "differ. Reply with Yes or No inside brackets, e.g. [Yes].\n"
      "Question: {question}\n"
      "Ground Truth Answer: {gold_answer}\n"
      "Model Answer: {model_answer}\n"
      "Verdict:\n",
      true));
  r.push_back(make("judge_error_class",
      "A reasoning trace failed to produce the correct answer. Decide which error occurred:\n"
      "[2] the correct answer appears in the retrieved evidence below but was not returned;\n"
      "[3] the reasoning took a wrong step and the answer never appeared.\n"
      "Reply with 2 or 3 inside brackets.\n"
      "Question: {question}\n"
      "Ground Truth Answer: {gold_answer}\n"
      "Model Answer: {model_answer}\n"
      "Evidence:\n{evidence}\n"
      "Label:\n",
      true));
  r.push_back(make("answer_extraction",
      "The knowledge gathered so far is sufficient to answer the question. Give the final "
      "answer as Finish[answer], using node names rather than node IDs.\n"
      "{examples}\n"
      "Graph Definition: {graph_definition}\n"
      "Question: {question}\n"
      "Knowledge Triples:\n"
      "{triples}\n"
      "Previous thoughts:\n"
      "{thoughts}\n"
      "Related Entity Attributes:\n"
      "{attributes}\n"
      "Action:\n",
      true));
  return r;
}

const std::vector<PromptTemplate>& registry() {
  static const std::vector<PromptTemplate> r = build_registry();
  return r;
}

}  // namespace

std::vector<std::string> placeholders_in(std::string_view body) {
  std::vector<std::string> names;
  scan(body, [&](std::string_view, std::string_view placeholder) {
    if (placeholder.empty()) return;
    std::string p(placeholder);
    if (std::find(names.begin(), names.end(), p) == names.end()) names.push_back(p);
  });
  return names;
}

std::string render(const PromptTemplate& tmpl, const PromptVars& vars) {
  for (const auto& name : tmpl.required_placeholders) {
    if (!vars.contains(name)) {
      throw Error(ErrorCode::kMissingPlaceholder,
                  "template '" + tmpl.name + "' needs placeholder '" + name + "'");
    }
  }
  std::string out;
  out.reserve(tmpl.body.size() + 256);
  scan(tmpl.body, [&](std::string_view literal, std::string_view placeholder) {
    if (!placeholder.empty()) {
      out += vars.at(std::string(placeholder));
    } else {
      out += literal;
    }
  });
  return out;
}

const PromptTemplate& prompt_template(std::string_view name) {
  for (const auto& t : registry()) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown prompt template '" + std::string(name) + "'");
}

std::vector<std::string> prompt_names() {
  std::vector<std::string> names;
  for (const auto& t : registry()) names.push_back(t.name);
  return names;
}

std::string PromptAssets::examples(std::string_view template_name,
                                   std::string_view domain) const {
  if (!dir_) return {};
  auto read = [](const std::filesystem::path& p) -> std::optional<std::string> {
    std::ifstream in(p);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (!domain.empty()) {
    auto specific = *dir_ / (std::string(template_name) + "." + std::string(domain) + ".txt");
    if (auto text = read(specific)) return *text;
  }
  if (auto text = read(*dir_ / (std::string(template_name) + ".txt"))) return *text;
  return {};
}

std::string format_reminder(std::string_view template_name) {
  if (template_name == "agent_step") {
    return "\nReply with one line \"Thought N: ...\" followed by one line "
           "\"Action N: Name[arg1, arg2]\" using RetrieveNode, NodeFeature, "
           "NeighbourCheck, NodeDegree or Finish.";
  }
  if (template_name == "search_end" || template_name == "judge_correctness") {
    return "\nStart your reply with [Yes] or [No].";
  }
  if (template_name == "answer_extraction") {
    return "\nReply with Finish[answer].";
  }
  return "\nPut the final answer inside double braces, e.g. {{answer}}.";
}

}  // namespace kgreason
