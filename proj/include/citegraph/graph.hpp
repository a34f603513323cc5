#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "citegraph/corpus.hpp"

namespace citegraph {

using NodeIndex = std::uint32_t;

enum class Direction { kOut, kIn, kBoth };

/// Set of dense node indices that iterates in insertion order.
class NodeSet {
 public:
  NodeSet() = default;
  NodeSet(std::initializer_list<NodeIndex> nodes);
  explicit NodeSet(std::span<const NodeIndex> nodes);

  /// Returns false if already present.
  bool insert(NodeIndex v);
  bool contains(NodeIndex v) const { return members_.contains(v); }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }

  auto begin() const { return order_.begin(); }
  auto end() const { return order_.end(); }
  const std::vector<NodeIndex>& items() const { return order_; }
  std::vector<NodeIndex> sorted() const;

  /// Same members, ignoring insertion order.
  bool same_members(const NodeSet& other) const;
  bool is_subset_of(const NodeSet& other) const;

 private:
  std::vector<NodeIndex> order_;
  std::unordered_set<NodeIndex> members_;
};

/// Immutable homogeneous citation graph in compressed sparse row form.
/// Edge (u, v) means paper u cites paper v.
class CitationGraph {
 public:
  CitationGraph() = default;

  /// Builds from node ids and directed edges over dense indices. Self-loops and
  /// parallel edges are dropped. Throws DataError on duplicate ids.
  static CitationGraph from_edges(std::vector<std::string> node_ids,
                                  std::vector<std::pair<NodeIndex, NodeIndex>> edges);

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t edge_count() const { return out_targets_.size(); }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::string& id_of(NodeIndex v) const;
  /// Returns false when the id is not in the graph.
  bool find(std::string_view id, NodeIndex& out) const;
  NodeIndex index_of(std::string_view id) const;  // throws DataError if absent

  std::span<const NodeIndex> out_neighbors(NodeIndex v) const;
  std::span<const NodeIndex> in_neighbors(NodeIndex v) const;
  bool has_edge(NodeIndex from, NodeIndex to) const;

  /// All (u, v) pairs ordered by u then v.
  std::vector<std::pair<NodeIndex, NodeIndex>> edges() const;

  bool operator==(const CitationGraph& other) const;

 private:
  void check(NodeIndex v) const;

  std::vector<std::string> node_ids_;
  std::unordered_map<std::string, NodeIndex> index_of_;
  std::vector<std::uint64_t> out_offsets_{0};
  std::vector<NodeIndex> out_targets_;
  std::vector<std::uint64_t> in_offsets_{0};
  std::vector<NodeIndex> in_sources_;
};

/// One node per record in input order; an edge for each citation whose target
/// is also a record. Citations to papers outside the corpus produce no edge.
CitationGraph build_graph(const std::vector<PaperRecord>& records);

/// Sorted, duplicate-free neighbor indices. Throws std::out_of_range for an invalid v.
std::vector<NodeIndex> neighbors(const CitationGraph& g, NodeIndex v, Direction direction);

/// Nodes within undirected distance k of any source, in BFS discovery order
/// (sources first). k = 0 returns the sources.
NodeSet k_hop_frontier(const CitationGraph& g, const NodeSet& sources, std::size_t k);

struct InducedSubgraph {
  CitationGraph graph;
  std::vector<NodeIndex> to_parent;  // local index -> parent index
};

/// Keeps exactly the edges with both endpoints in nodes. Local indices follow the
/// iteration order of nodes.
InducedSubgraph induced_subgraph(const CitationGraph& g, const NodeSet& nodes);

// Binary snapshot: "CGR1", u64 node count, u64 edge count, per node (u64 byte
// length + id bytes), then (node_count + 1) u64 out-offsets and edge_count u32
// targets. All integers little-endian. In-adjacency is rebuilt on load.
void write_snapshot(std::ostream& out, const CitationGraph& g);
CitationGraph read_snapshot(std::istream& in);
void write_snapshot_file(const std::string& path, const CitationGraph& g);
CitationGraph read_snapshot_file(const std::string& path);

/// One "<source id> <target id>" line per edge.
void write_edge_list(std::ostream& out, const CitationGraph& g);

}  // namespace citegraph
