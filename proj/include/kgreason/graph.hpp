#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgreason {

struct NodeRecord {
  std::string id;
  std::string node_type;
  std::map<std::string, std::string> features;
  // relation -> tail ids in load order, no duplicates per relation
  std::map<std::string, std::vector<std::string>> out_edges;

  bool operator==(const NodeRecord&) const = default;
};

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::set<std::string> relation_types;
};

struct Triple {
  std::string head_name;
  std::string relation;
  std::string tail_name;
  std::string head_id;
  std::string tail_id;

  // "head_name --> relation --> tail_name"
  std::string render() const;

  bool same_edge(const Triple& other) const {
    return head_id == other.head_id && relation == other.relation &&
           tail_id == other.tail_id;
  }
  bool operator==(const Triple&) const = default;
};

struct LoadOptions {
  // When set, every edge h -r-> t also materializes t -(prefix + r)-> h.
  std::optional<std::string> inverse_prefix;
};

// Immutable after construction; safe for concurrent readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Validates ids, referential integrity and per-relation uniqueness.
  static KnowledgeGraph from_records(std::vector<NodeRecord> records,
                                     const LoadOptions& options = {});

  std::span<const NodeRecord> nodes() const { return nodes_; }
  const GraphStats& stats() const { return stats_; }
  bool empty() const { return nodes_.empty(); }

  const NodeRecord* find(std::string_view id) const;
  const NodeRecord& node(std::string_view id) const;  // throws kUnknownNode
  std::size_t load_index(std::string_view id) const;

  // The `name` feature, or the id when the node has none.
  const std::string& display_name(std::string_view id) const;

  // Short textual schema used to fill the {graph_definition} slot.
  std::string definition() const;

 private:
  std::vector<NodeRecord> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  GraphStats stats_;
};

KnowledgeGraph load_graph(const std::filesystem::path& path,
                          const LoadOptions& options = {});
KnowledgeGraph parse_graph(std::istream& in, const LoadOptions& options = {});
void save_graph(const KnowledgeGraph& graph, std::ostream& out);
void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& path);

class RetrieverPolicy {
 public:
  virtual ~RetrieverPolicy() = default;
  // Score in [0, 1]; anything <= 0 is "no match".
  virtual double score(std::string_view query, const NodeRecord& node) const = 0;
  // True when the node is an exact hit that should win immediately.
  virtual bool exact(std::string_view query, const NodeRecord& node) const = 0;
};

// Case-folded token-overlap F1 against the node's name feature, with an
// exact (case-insensitive) full-name match short-circuit.
class LexicalRetriever final : public RetrieverPolicy {
 public:
  double score(std::string_view query, const NodeRecord& node) const override;
  bool exact(std::string_view query, const NodeRecord& node) const override;
};

const RetrieverPolicy& default_retriever();

// Highest-scoring node id; ties go to the earlier node in load order.
std::string retrieve_node(const KnowledgeGraph& graph, std::string_view query,
                          const RetrieverPolicy& retriever = default_retriever());

const std::string& node_feature(const KnowledgeGraph& graph, std::string_view id,
                                std::string_view key);
std::vector<std::string> neighbor_check(const KnowledgeGraph& graph,
                                        std::string_view id,
                                        std::string_view relation);
std::size_t node_degree(const KnowledgeGraph& graph, std::string_view id,
                        std::string_view relation);

// Every (head, relation, tail) in the graph, heads in load order.
std::vector<Triple> all_triples(const KnowledgeGraph& graph);
Triple make_triple(const KnowledgeGraph& graph, std::string_view head_id,
                   std::string_view relation, std::string_view tail_id);

struct SyntheticSpec {
  std::vector<std::string> node_types{"entity"};
  std::vector<std::string> relations{"related-to"};
  std::size_t nodes = 10;
  std::size_t edges_per_node = 2;
};

// Deterministic for a fixed seed. Each node gets exactly edges_per_node
// distinct (relation, tail) out-edges when relations are non-empty.
KnowledgeGraph generate_synthetic_graph(std::uint64_t seed,
                                        const SyntheticSpec& spec);

}  // namespace kgreason
