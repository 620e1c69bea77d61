#include "kgreason/explorer.hpp"

#include <algorithm>

#include "kgreason/error.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

const SeenEntity* ExplorationState::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &seen_[it->second];
}

void ExplorationState::see(const std::string& id, int depth) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    index_.emplace(id, seen_.size());
    seen_.push_back({id, false, depth});
    return;
  }
  auto& e = seen_[it->second];
  e.depth_discovered = std::min(e.depth_discovered, depth);
}

void ExplorationState::mark_visited(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownNode, "entity '" + id + "' was never seen");
  }
  seen_[it->second].visited = true;
}

bool ExplorationState::add_triple(Triple triple) {
  for (const auto& t : triples_) {
    if (t.same_edge(triple)) return false;
  }
  triples_.push_back(std::move(triple));
  return true;
}

bool ExplorationState::add_attribute(Attribute attribute) {
  if (std::find(attributes_.begin(), attributes_.end(), attribute) != attributes_.end()) {
    return false;
  }
  attributes_.push_back(std::move(attribute));
  return true;
}

void ExplorationState::relax_depths() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& t : triples_) {
      auto h = index_.find(t.head_id);
      auto tl = index_.find(t.tail_id);
      if (h == index_.end() || tl == index_.end()) continue;
      int bound = seen_[h->second].depth_discovered + 1;
      if (seen_[tl->second].depth_discovered > bound) {
        seen_[tl->second].depth_discovered = bound;
        changed = true;
      }
    }
  }
}

void ExplorationState::merge_from(const ExplorationState& other) {
  for (const auto& e : other.seen_) {
    see(e.id, e.depth_discovered);
    if (e.visited) mark_visited(e.id);
  }
  for (const auto& t : other.triples_) add_triple(t);
  for (const auto& a : other.attributes_) add_attribute(a);
  relax_depths();
}

std::string render_triples(const std::vector<Triple>& triples) {
  if (triples.empty()) return "None";
  std::string out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (i > 0) out += "\n";
    out += triples[i].render();
  }
  return out;
}

std::string render_attributes(const KnowledgeGraph& graph, const std::vector<Attribute>& attrs) {
  if (attrs.empty()) return "None";
  std::string out;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i > 0) out += "\n";
    const auto* node = graph.find(attrs[i].entity);
    const auto& name = node != nullptr ? graph.display_name(attrs[i].entity) : attrs[i].entity;
    out += name + ": " + attrs[i].key + " = " + attrs[i].value;
  }
  return out;
}

std::string render_thoughts(const std::vector<std::string>& thoughts) {
  if (thoughts.empty()) return "None";
  std::string out;
  for (std::size_t i = 0; i < thoughts.size(); ++i) {
    if (i > 0) out += "\n";
    out += "Thought " + std::to_string(i + 1) + ": " + thoughts[i];
  }
  return out;
}

namespace {

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = trim(std::string_view(s).substr(1, s.size() - 2));
  }
  return s;
}

std::vector<std::string> answer_items(const std::string& content) {
  std::vector<std::string> items;
  for (auto& part : split_top_level(content)) {
    auto item = unquote(part);
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

bool is_none(const std::string& s) {
  auto lower = to_lower(trim(s));
  return lower == "none" || lower.empty();
}

std::optional<std::string> bracketed(const std::string& reply) {
  return try_parse_bracketed_answer(reply, BracketStyle::kAny);
}

CompletionRequest control_request(std::string prompt, const char* tag) {
  CompletionRequest req;
  req.prompt = std::move(prompt);
  req.decoding = control_decoding();
  req.tag = tag;
  return req;
}

}  // namespace

std::vector<std::string> extract_entities(const std::string& text, const Question& q,
                                          ExploreContext& ctx) {
  const auto& tmpl = prompt_template("entity_extraction");
  auto prompt = render(tmpl, {{"examples", ctx.assets.examples(tmpl.name, q.domain)},
                              {"text", text}});
  auto content = ctx.gateway.complete_parsed(control_request(prompt, tags::kExtract),
                                             format_reminder(tmpl.name), bracketed);
  if (!content || is_none(*content)) return {};
  return answer_items(*content);
}

std::vector<std::string> resolve_entities(const std::vector<std::string>& forms,
                                          ExploreContext& ctx) {
  std::vector<std::string> ids;
  for (const auto& form : forms) {
    ctx.gateway.meter().kg_op(ops::kRetrieveNode);
    try {
      auto id = retrieve_node(ctx.graph, form, ctx.retriever);
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoMatch && e.code() != ErrorCode::kEmptyGraph) throw;
    }
  }
  return ids;
}

std::vector<std::string> prune_relations(const Question& q, const std::string& entity,
                                         const std::vector<std::string>& relations,
                                         ExploreContext& ctx) {
  if (relations.empty()) return {};
  const auto cap = std::max<std::size_t>(1, ctx.config.max_relations_per_entity);
  auto fallback = [&] {
    return std::vector<std::string>(relations.begin(),
                                    relations.begin() + std::min(cap, relations.size()));
  };
  const auto& tmpl = prompt_template("prune_relations");
  auto prompt = render(tmpl, {{"examples", ctx.assets.examples(tmpl.name, q.domain)},
                              {"question", q.text},
                              {"entity", ctx.graph.display_name(entity)},
                              {"relations", join(relations, ", ")}});
  auto content = ctx.gateway.complete_parsed(control_request(prompt, tags::kPruneRelations),
                                             format_reminder(tmpl.name), bracketed);
  if (!content) return fallback();
  auto items = answer_items(*content);
  std::vector<std::string> selected;
  for (const auto& r : relations) {
    if (selected.size() >= cap) break;
    bool named = std::any_of(items.begin(), items.end(),
                             [&](const std::string& item) { return item == r; });
    if (named) selected.push_back(r);
  }
  return selected.empty() ? fallback() : selected;
}

std::vector<std::string> prune_entities(const Question& q, const std::string& head,
                                        const std::string& relation,
                                        const std::vector<std::string>& tails,
                                        ExploreContext& ctx) {
  if (tails.empty()) return {};
  const auto cap = std::max<std::size_t>(1, ctx.config.max_neighbors_per_relation);
  std::vector<std::string> names;
  names.reserve(tails.size());
  for (const auto& t : tails) names.push_back(ctx.graph.display_name(t));

  const auto& tmpl = prompt_template("prune_entities");
  auto prompt = render(tmpl, {{"examples", ctx.assets.examples(tmpl.name, q.domain)},
                              {"question", q.text},
                              {"head_entity", ctx.graph.display_name(head)},
                              {"relation", relation},
                              {"tail_entities", join(names, ", ")}});
  auto content = ctx.gateway.complete_parsed(control_request(prompt, tags::kPruneEntities),
                                             format_reminder(tmpl.name), bracketed);
  if (!content) {
    return std::vector<std::string>(tails.begin(), tails.begin() + std::min(cap, tails.size()));
  }
  auto items = answer_items(*content);
  std::vector<std::string> selected;
  for (std::size_t i = 0; i < tails.size() && selected.size() < cap; ++i) {
    bool named = std::any_of(items.begin(), items.end(), [&](const std::string& item) {
      return item == names[i] || item == tails[i];
    });
    if (named) selected.push_back(tails[i]);
  }
  return selected;
}

std::vector<Attribute> search_attributes(const Question& q, const std::string& entity,
                                         const std::map<std::string, std::string>& features,
                                         ExploreContext& ctx) {
  if (features.empty()) return {};
  std::string listing;
  for (const auto& [k, v] : features) {
    if (!listing.empty()) listing += "; ";
    listing += k + ": " + v;
  }
  const auto& tmpl = prompt_template("search_attributes");
  auto prompt = render(tmpl, {{"examples", ctx.assets.examples(tmpl.name, q.domain)},
                              {"question", q.text},
                              {"entity", ctx.graph.display_name(entity)},
                              {"attributes", listing}});
  auto content = ctx.gateway.complete_parsed(control_request(prompt, tags::kAttributes),
                                             format_reminder(tmpl.name), bracketed);
  if (!content || is_none(*content)) return {};
  std::vector<Attribute> selected;
  auto items = answer_items(*content);
  for (const auto& [k, v] : features) {
    bool named = std::any_of(items.begin(), items.end(), [&](const std::string& item) {
      auto key = trim(std::string_view(item).substr(0, item.find(':')));
      return key == k;
    });
    if (named) selected.push_back({entity, k, v});
  }
  return selected;
}

bool end_check(const Question& q, const std::vector<std::string>& thoughts,
               const ExplorationState& state, ExploreContext& ctx) {
  const auto& tmpl = prompt_template("search_end");
  auto prompt = render(tmpl, {{"examples", ctx.assets.examples(tmpl.name, q.domain)},
                              {"question", q.text},
                              {"thoughts", render_thoughts(thoughts)},
                              {"triples", render_triples(state.found_triples())},
                              {"attributes", render_attributes(ctx.graph, state.relevant_attributes())}});
  auto first_token = [](const std::string& reply) -> std::optional<std::string> {
    auto spans = find_bracket_spans(reply, BracketStyle::kAny);
    if (spans.empty()) return std::nullopt;
    return to_lower(spans.front().content);
  };
  auto token = ctx.gateway.complete_parsed(control_request(prompt, tags::kEndCheck),
                                           format_reminder(tmpl.name), first_token);
  return token && *token == "yes";
}

ExploreOutcome explore(const Question& q, const std::vector<std::string>& anchors,
                       ExplorationState state, const std::vector<std::string>& thoughts,
                       ExploreContext& ctx) {
  if (ctx.config.search_depth < 1) {
    throw Error(ErrorCode::kInvalidConfig, "search_depth must be >= 1");
  }
  for (const auto& a : anchors) state.see(a, 0);

  ExploreOutcome out;
  auto& meter = ctx.gateway.meter();
  for (int depth = 0; depth < ctx.config.search_depth; ++depth) {
    std::vector<std::string> frontier;
    for (const auto& e : state.seen()) {
      if (!e.visited) frontier.push_back(e.id);
    }
    if (frontier.empty()) break;

    std::vector<std::string> discovered;
    for (const auto& id : frontier) {
      state.mark_visited(id);
      meter.kg_op(ops::kFetchEntity);
      ++out.cost_units;
      const auto& node = ctx.graph.node(id);

      std::map<std::string, std::string> attributes;
      for (const auto& [k, v] : node.features) {
        if (k != "name") attributes.emplace(k, v);
      }
      for (auto& a : search_attributes(q, id, attributes, ctx)) state.add_attribute(std::move(a));

      std::vector<std::string> relations;
      for (const auto& [r, tails] : node.out_edges) {
        if (!tails.empty()) relations.push_back(r);
      }
      if (relations.empty()) continue;
      for (const auto& relation : prune_relations(q, id, relations, ctx)) {
        meter.kg_op(ops::kNeighborCheck);
        ++out.cost_units;
        auto tails = neighbor_check(ctx.graph, id, relation);
        for (const auto& tail : prune_entities(q, id, relation, tails, ctx)) {
          state.add_triple(make_triple(ctx.graph, id, relation, tail));
          discovered.push_back(tail);
        }
      }
    }
    for (const auto& tail : discovered) state.see(tail, depth + 1);
    ++out.depths_run;
    out.sufficient = end_check(q, thoughts, state, ctx);
    if (out.sufficient) break;
  }
  state.relax_depths();
  meter.explore_search(out.cost_units);
  out.state = std::move(state);
  return out;
}

}  // namespace kgreason
