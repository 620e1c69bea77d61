#include <algorithm>
#include <random>

#include "kgreason/error.hpp"
#include "kgreason/graph.hpp"

namespace kgreason {

namespace {

// Modulo draw keeps the stream identical across standard libraries.
std::size_t draw(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

}  // namespace

KnowledgeGraph generate_synthetic_graph(std::uint64_t seed, const SyntheticSpec& spec) {
  if (spec.nodes == 0 || spec.node_types.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "synthetic graph needs nodes and node types");
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeRecord> records(spec.nodes);
  for (std::size_t i = 0; i < spec.nodes; ++i) {
    auto& node = records[i];
    const auto& type = spec.node_types[draw(rng, spec.node_types.size())];
    node.id = type + ":" + std::to_string(i);
    node.node_type = type;
    node.features["name"] = type + " " + std::to_string(i);
    node.features["code"] = "C" + std::to_string(draw(rng, 1000));
  }

  const std::size_t slots = (spec.nodes - 1) * spec.relations.size();
  const std::size_t per_node = std::min(spec.edges_per_node, slots);
  for (std::size_t i = 0; i < spec.nodes && !spec.relations.empty(); ++i) {
    std::size_t placed = 0;
    while (placed < per_node) {
      const auto& relation = spec.relations[draw(rng, spec.relations.size())];
      std::size_t tail = draw(rng, spec.nodes - 1);
      if (tail >= i) ++tail;  // no self loops
      auto& list = records[i].out_edges[relation];
      const auto& tail_id = records[tail].id;
      if (std::find(list.begin(), list.end(), tail_id) != list.end()) continue;
      list.push_back(tail_id);
      ++placed;
    }
  }
  return KnowledgeGraph::from_records(std::move(records));
}

}  // namespace kgreason
