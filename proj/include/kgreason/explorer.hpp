#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgreason/gateway.hpp"
#include "kgreason/graph.hpp"
#include "kgreason/prompts.hpp"
#include "kgreason/question.hpp"

namespace kgreason {

struct SeenEntity {
  std::string id;
  bool visited = false;
  int depth_discovered = 0;

  bool operator==(const SeenEntity&) const = default;
};

struct Attribute {
  std::string entity;
  std::string key;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

// Working set of one exploration. Seen entities keep insertion order.
class ExplorationState {
 public:
  const std::vector<SeenEntity>& seen() const { return seen_; }
  const std::vector<Triple>& found_triples() const { return triples_; }
  const std::vector<Attribute>& relevant_attributes() const { return attributes_; }

  const SeenEntity* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }

  // Adds an unseen entity or lowers the depth of a seen one.
  void see(const std::string& id, int depth);
  void mark_visited(const std::string& id);
  // False when the (head, relation, tail) edge is already present.
  bool add_triple(Triple triple);
  bool add_attribute(Attribute attribute);

  // Lowers depths until depth(tail) <= depth(head) + 1 holds for every triple.
  void relax_depths();

  // Union: triples and attributes deduplicated, visited flags or-ed,
  // depths take the minimum.
  void merge_from(const ExplorationState& other);

  bool operator==(const ExplorationState& other) const {
    return seen_ == other.seen_ && triples_ == other.triples_ && attributes_ == other.attributes_;
  }

 private:
  std::vector<SeenEntity> seen_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Triple> triples_;
  std::vector<Attribute> attributes_;
};

struct ExploreConfig {
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  int search_depth = 3;
  std::size_t max_relations_per_entity = 3;
  std::size_t max_neighbors_per_relation = 5;
};

struct ExploreContext {
  const KnowledgeGraph& graph;
  Gateway& gateway;
  const RetrieverPolicy& retriever = default_retriever();
  const PromptAssets& assets;
  ExploreConfig config{};
};

// Surface forms from the entity-extraction prompt; [] on malformed output.
std::vector<std::string> extract_entities(const std::string& text, const Question& q,
                                          ExploreContext& ctx);

// Resolves surface forms with retrieve_node, dropping non-matches and
// duplicates. Meters one retrieve_node op per form.
std::vector<std::string> resolve_entities(const std::vector<std::string>& forms,
                                          ExploreContext& ctx);

std::vector<std::string> prune_relations(const Question& q, const std::string& entity,
                                         const std::vector<std::string>& relations,
                                         ExploreContext& ctx);

std::vector<std::string> prune_entities(const Question& q, const std::string& head,
                                        const std::string& relation,
                                        const std::vector<std::string>& tails,
                                        ExploreContext& ctx);

std::vector<Attribute> search_attributes(const Question& q, const std::string& entity,
                                         const std::map<std::string, std::string>& features,
                                         ExploreContext& ctx);

// True iff the first bracketed token of the reply is "Yes".
bool end_check(const Question& q, const std::vector<std::string>& thoughts,
               const ExplorationState& state, ExploreContext& ctx);

struct ExploreOutcome {
  ExplorationState state;
  bool sufficient = false;  // last End? check answered Yes
  int depths_run = 0;
  std::int64_t cost_units = 0;
};

// Breadth-layered search-and-prune expansion from the anchors.
ExploreOutcome explore(const Question& q, const std::vector<std::string>& anchors,
                       ExplorationState state, const std::vector<std::string>& thoughts,
                       ExploreContext& ctx);

// Prompt renderings shared with the strategy layer.
std::string render_triples(const std::vector<Triple>& triples);
std::string render_attributes(const KnowledgeGraph& graph, const std::vector<Attribute>& attrs);
std::string render_thoughts(const std::vector<std::string>& thoughts);

}  // namespace kgreason
