#include "kgreason/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgreason/error.hpp"
#include "kgreason/text.hpp"

namespace kgreason {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

NodeRecord parse_node_line(const std::string& text, std::size_t line_no) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedLine, line_error(line_no, e.what()));
  }
  if (!obj.is_object()) {
    throw Error(ErrorCode::kMalformedLine, line_error(line_no, "expected an object"));
  }
  for (const auto& [key, _] : obj.items()) {
    if (key != "id" && key != "type" && key != "features" && key != "neighbors") {
      throw Error(ErrorCode::kMalformedLine,
                  line_error(line_no, "unknown field '" + key + "'"));
    }
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = obj.find(key);
    if (it == obj.end()) {
      throw Error(ErrorCode::kMalformedLine,
                  line_error(line_no, std::string("missing field '") + key + "'"));
    }
    return *it;
  };

  NodeRecord node;
  const auto& id = require("id");
  const auto& type = require("type");
  const auto& features = require("features");
  const auto& neighbors = require("neighbors");
  if (!id.is_string() || !type.is_string() || !features.is_object() ||
      !neighbors.is_object()) {
    throw Error(ErrorCode::kMalformedLine, line_error(line_no, "field has wrong type"));
  }
  node.id = id.get<std::string>();
  node.node_type = type.get<std::string>();
  if (node.id.empty()) {
    throw Error(ErrorCode::kMalformedLine, line_error(line_no, "empty node id"));
  }
  for (const auto& [key, value] : features.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::kMalformedLine,
                  line_error(line_no, "feature '" + key + "' is not a string"));
    }
    node.features.emplace(key, value.get<std::string>());
  }
  for (const auto& [relation, tails] : neighbors.items()) {
    if (!tails.is_array()) {
      throw Error(ErrorCode::kMalformedLine,
                  line_error(line_no, "neighbors of '" + relation + "' is not a list"));
    }
    auto& list = node.out_edges[relation];
    for (const auto& tail : tails) {
      if (!tail.is_string()) {
        throw Error(ErrorCode::kMalformedLine,
                    line_error(line_no, "neighbor id is not a string"));
      }
      list.push_back(tail.get<std::string>());
    }
  }
  return node;
}

void dedupe_in_order(std::vector<std::string>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto& id : ids) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
  }
  ids = std::move(out);
}

}  // namespace

std::string Triple::render() const {
  return head_name + " --> " + relation + " --> " + tail_name;
}

KnowledgeGraph KnowledgeGraph::from_records(std::vector<NodeRecord> records,
                                            const LoadOptions& options) {
  KnowledgeGraph g;
  g.nodes_ = std::move(records);
  g.index_.reserve(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    auto [_, inserted] = g.index_.emplace(g.nodes_[i].id, i);
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateId, "duplicate node id '" + g.nodes_[i].id + "'");
    }
  }
  for (auto& node : g.nodes_) {
    for (auto& [relation, tails] : node.out_edges) {
      dedupe_in_order(tails);
      for (const auto& tail : tails) {
        if (!g.index_.contains(tail)) {
          throw Error(ErrorCode::kDanglingEdge, "node '" + node.id + "' relation '" +
                                                    relation + "' references missing node '" +
                                                    tail + "'");
        }
      }
    }
  }
  if (options.inverse_prefix) {
    // Collect first so that materialized edges are not themselves inverted.
    std::vector<std::tuple<std::size_t, std::string, std::string>> inverse;
    for (const auto& node : g.nodes_) {
      for (const auto& [relation, tails] : node.out_edges) {
        for (const auto& tail : tails) {
          inverse.emplace_back(g.index_.at(tail), *options.inverse_prefix + relation, node.id);
        }
      }
    }
    for (auto& [tail_index, relation, head] : inverse) {
      auto& list = g.nodes_[tail_index].out_edges[relation];
      if (std::find(list.begin(), list.end(), head) == list.end()) list.push_back(head);
    }
  }
  g.stats_.node_count = g.nodes_.size();
  for (const auto& node : g.nodes_) {
    for (const auto& [relation, tails] : node.out_edges) {
      g.stats_.edge_count += tails.size();
      g.stats_.relation_types.insert(relation);
    }
  }
  return g;
}

const NodeRecord* KnowledgeGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const NodeRecord& KnowledgeGraph::node(std::string_view id) const {
  const auto* n = find(id);
  if (n == nullptr) throw Error(ErrorCode::kUnknownNode, "no such node '" + std::string(id) + "'");
  return *n;
}

std::size_t KnowledgeGraph::load_index(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownNode, "no such node '" + std::string(id) + "'");
  }
  return it->second;
}

const std::string& KnowledgeGraph::display_name(std::string_view id) const {
  const auto& n = node(id);
  auto it = n.features.find("name");
  return it == n.features.end() ? n.id : it->second;
}

std::string KnowledgeGraph::definition() const {
  std::set<std::string> types;
  for (const auto& n : nodes_) types.insert(n.node_type);
  std::ostringstream out;
  out << "node types: ";
  bool first = true;
  for (const auto& t : types) {
    out << (first ? "" : ", ") << t;
    first = false;
  }
  out << "; relation types: ";
  first = true;
  for (const auto& r : stats_.relation_types) {
    out << (first ? "" : ", ") << r;
    first = false;
  }
  return out.str();
}

KnowledgeGraph parse_graph(std::istream& in, const LoadOptions& options) {
  std::vector<NodeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(parse_node_line(line, line_no));
  }
  return KnowledgeGraph::from_records(std::move(records), options);
}

KnowledgeGraph load_graph(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read graph file " + path.string());
  return parse_graph(in, options);
}

void save_graph(const KnowledgeGraph& graph, std::ostream& out) {
  for (const auto& node : graph.nodes()) {
    ordered_json obj;
    obj["id"] = node.id;
    obj["type"] = node.node_type;
    obj["features"] = ordered_json::object();
    for (const auto& [k, v] : node.features) obj["features"][k] = v;
    obj["neighbors"] = ordered_json::object();
    for (const auto& [r, tails] : node.out_edges) obj["neighbors"][r] = tails;
    out << obj.dump() << '\n';
  }
}

void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write graph file " + path.string());
  save_graph(graph, out);
}

namespace {

const std::string* name_of(const NodeRecord& node) {
  auto it = node.features.find("name");
  return it == node.features.end() ? nullptr : &it->second;
}

}  // namespace

double LexicalRetriever::score(std::string_view query, const NodeRecord& node) const {
  const auto* name = name_of(node);
  if (name == nullptr) return 0.0;
  auto q = tokenize(query);
  auto n = tokenize(*name);
  if (q.empty() || n.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : n) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : q) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double p = static_cast<double>(overlap) / static_cast<double>(q.size());
  double r = static_cast<double>(overlap) / static_cast<double>(n.size());
  return 2.0 * p * r / (p + r);
}

bool LexicalRetriever::exact(std::string_view query, const NodeRecord& node) const {
  const auto* name = name_of(node);
  return name != nullptr && to_lower(trim(query)) == to_lower(trim(*name));
}

const RetrieverPolicy& default_retriever() {
  static const LexicalRetriever retriever;
  return retriever;
}

std::string retrieve_node(const KnowledgeGraph& graph, std::string_view query,
                          const RetrieverPolicy& retriever) {
  if (graph.empty()) throw Error(ErrorCode::kEmptyGraph, "retrieve on an empty graph");
  const NodeRecord* best = nullptr;
  double best_score = 0.0;
  for (const auto& node : graph.nodes()) {
    if (retriever.exact(query, node)) return node.id;
    double s = retriever.score(query, node);
    if (s > best_score) {
      best_score = s;
      best = &node;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::kNoMatch, "no node matches '" + std::string(query) + "'");
  }
  return best->id;
}

const std::string& node_feature(const KnowledgeGraph& graph, std::string_view id,
                                std::string_view key) {
  const auto& node = graph.node(id);
  auto it = node.features.find(std::string(key));
  if (it == node.features.end()) {
    throw Error(ErrorCode::kFeatureAbsent,
                "node '" + node.id + "' has no feature '" + std::string(key) + "'");
  }
  return it->second;
}

std::vector<std::string> neighbor_check(const KnowledgeGraph& graph, std::string_view id,
                                        std::string_view relation) {
  const auto& node = graph.node(id);
  auto it = node.out_edges.find(std::string(relation));
  if (it == node.out_edges.end()) return {};
  return it->second;
}

std::size_t node_degree(const KnowledgeGraph& graph, std::string_view id,
                        std::string_view relation) {
  const auto& node = graph.node(id);
  auto it = node.out_edges.find(std::string(relation));
  return it == node.out_edges.end() ? 0 : it->second.size();
}

Triple make_triple(const KnowledgeGraph& graph, std::string_view head_id,
                   std::string_view relation, std::string_view tail_id) {
  return Triple{graph.display_name(head_id), std::string(relation),
                graph.display_name(tail_id), std::string(head_id), std::string(tail_id)};
}

std::vector<Triple> all_triples(const KnowledgeGraph& graph) {
  std::vector<Triple> out;
  for (const auto& node : graph.nodes()) {
    for (const auto& [relation, tails] : node.out_edges) {
      for (const auto& tail : tails) out.push_back(make_triple(graph, node.id, relation, tail));
    }
  }
  return out;
}

}  // namespace kgreason
