#include "citegraph/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "citegraph/error.hpp"

namespace citegraph {

// --- NodeSet ---------------------------------------------------------------

NodeSet::NodeSet(std::initializer_list<NodeIndex> nodes) {
  for (NodeIndex v : nodes) insert(v);
}

NodeSet::NodeSet(std::span<const NodeIndex> nodes) {
  for (NodeIndex v : nodes) insert(v);
}

bool NodeSet::insert(NodeIndex v) {
  if (!members_.insert(v).second) return false;
  order_.push_back(v);
  return true;
}

std::vector<NodeIndex> NodeSet::sorted() const {
  std::vector<NodeIndex> out = order_;
  std::sort(out.begin(), out.end());
  return out;
}

bool NodeSet::same_members(const NodeSet& other) const {
  return size() == other.size() && is_subset_of(other);
}

bool NodeSet::is_subset_of(const NodeSet& other) const {
  return std::all_of(order_.begin(), order_.end(), [&](NodeIndex v) { return other.contains(v); });
}

// --- CitationGraph ---------------------------------------------------------

namespace {

void build_csr(std::size_t n, const std::vector<std::pair<NodeIndex, NodeIndex>>& edges,
               bool by_source, std::vector<std::uint64_t>& offsets, std::vector<NodeIndex>& targets) {
  offsets.assign(n + 1, 0);
  for (const auto& [u, v] : edges) ++offsets[(by_source ? u : v) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  targets.assign(edges.size(), 0);
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [u, v] : edges) {
    const NodeIndex key = by_source ? u : v;
    targets[cursor[key]++] = by_source ? v : u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              targets.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
  }
}

}  // namespace

CitationGraph CitationGraph::from_edges(std::vector<std::string> node_ids,
                                        std::vector<std::pair<NodeIndex, NodeIndex>> edges) {
  CitationGraph g;
  g.index_of_.reserve(node_ids.size());
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    if (!g.index_of_.emplace(node_ids[i], static_cast<NodeIndex>(i)).second) {
      throw DataError("duplicate paper id in graph build: " + node_ids[i]);
    }
  }
  g.node_ids_ = std::move(node_ids);
  const auto n = g.node_ids_.size();
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
  }
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  build_csr(n, edges, true, g.out_offsets_, g.out_targets_);
  build_csr(n, edges, false, g.in_offsets_, g.in_sources_);
  return g;
}

void CitationGraph::check(NodeIndex v) const {
  if (v >= node_ids_.size()) {
    throw std::out_of_range("node index " + std::to_string(v) + " out of range (" +
                            std::to_string(node_ids_.size()) + " nodes)");
  }
}

const std::string& CitationGraph::id_of(NodeIndex v) const {
  check(v);
  return node_ids_[v];
}

bool CitationGraph::find(std::string_view id, NodeIndex& out) const {
  const auto it = index_of_.find(std::string(id));
  if (it == index_of_.end()) return false;
  out = it->second;
  return true;
}

NodeIndex CitationGraph::index_of(std::string_view id) const {
  NodeIndex v = 0;
  if (!find(id, v)) throw DataError("unknown paper id: " + std::string(id));
  return v;
}

std::span<const NodeIndex> CitationGraph::out_neighbors(NodeIndex v) const {
  check(v);
  return std::span<const NodeIndex>(out_targets_).subspan(out_offsets_[v],
                                                           out_offsets_[v + 1] - out_offsets_[v]);
}

std::span<const NodeIndex> CitationGraph::in_neighbors(NodeIndex v) const {
  check(v);
  return std::span<const NodeIndex>(in_sources_).subspan(in_offsets_[v],
                                                         in_offsets_[v + 1] - in_offsets_[v]);
}

bool CitationGraph::has_edge(NodeIndex from, NodeIndex to) const {
  const auto out = out_neighbors(from);
  return std::binary_search(out.begin(), out.end(), to);
}

std::vector<std::pair<NodeIndex, NodeIndex>> CitationGraph::edges() const {
  std::vector<std::pair<NodeIndex, NodeIndex>> out;
  out.reserve(edge_count());
  for (NodeIndex u = 0; u < node_count(); ++u) {
    for (NodeIndex v : out_neighbors(u)) out.emplace_back(u, v);
  }
  return out;
}

bool CitationGraph::operator==(const CitationGraph& other) const {
  return node_ids_ == other.node_ids_ && out_offsets_ == other.out_offsets_ &&
         out_targets_ == other.out_targets_;
}

// --- Construction and traversal --------------------------------------------

CitationGraph build_graph(const std::vector<PaperRecord>& records) {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  std::unordered_map<std::string_view, NodeIndex> index;
  index.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!index.emplace(records[i].id, static_cast<NodeIndex>(i)).second) {
      throw DataError("duplicate paper id in graph build: " + records[i].id);
    }
    ids.push_back(records[i].id);
  }
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& cited : records[i].citations) {
      if (auto it = index.find(cited); it != index.end()) {
        edges.emplace_back(static_cast<NodeIndex>(i), it->second);
      }
    }
  }
  return CitationGraph::from_edges(std::move(ids), std::move(edges));
}

std::vector<NodeIndex> neighbors(const CitationGraph& g, NodeIndex v, Direction direction) {
  const auto out = g.out_neighbors(v);
  const auto in = g.in_neighbors(v);
  switch (direction) {
    case Direction::kOut: return {out.begin(), out.end()};
    case Direction::kIn: return {in.begin(), in.end()};
    case Direction::kBoth: break;
  }
  std::vector<NodeIndex> merged;
  merged.reserve(out.size() + in.size());
  std::set_union(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(merged));
  return merged;
}

NodeSet k_hop_frontier(const CitationGraph& g, const NodeSet& sources, std::size_t k) {
  NodeSet reached;
  std::deque<std::pair<NodeIndex, std::size_t>> queue;
  for (NodeIndex s : sources) {
    if (reached.insert(s)) queue.emplace_back(s, 0);
  }
  while (!queue.empty()) {
    const auto [v, depth] = queue.front();
    queue.pop_front();
    if (depth == k) continue;
    for (NodeIndex w : neighbors(g, v, Direction::kBoth)) {
      if (reached.insert(w)) queue.emplace_back(w, depth + 1);
    }
  }
  return reached;
}

InducedSubgraph induced_subgraph(const CitationGraph& g, const NodeSet& nodes) {
  std::unordered_map<NodeIndex, NodeIndex> local;
  local.reserve(nodes.size());
  std::vector<std::string> ids;
  ids.reserve(nodes.size());
  InducedSubgraph sub;
  sub.to_parent.reserve(nodes.size());
  for (NodeIndex v : nodes) {
    local.emplace(v, static_cast<NodeIndex>(sub.to_parent.size()));
    sub.to_parent.push_back(v);
    ids.push_back(g.id_of(v));
  }
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (NodeIndex v : nodes) {
    for (NodeIndex w : g.out_neighbors(v)) {
      if (auto it = local.find(w); it != local.end()) edges.emplace_back(local.at(v), it->second);
    }
  }
  sub.graph = CitationGraph::from_edges(std::move(ids), std::move(edges));
  return sub;
}

// --- Serialization ---------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'G', 'R', '1'};

void put_u64(std::ostream& out, std::uint64_t value) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

void put_u32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> bytes{};
  for (std::size_t i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError("truncated graph snapshot");
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return value;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError("truncated graph snapshot");
  }
  std::uint32_t value = 0;
  for (std::size_t i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const CitationGraph& g) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, g.node_count());
  put_u64(out, g.edge_count());
  for (const auto& id : g.node_ids()) {
    put_u64(out, id.size());
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  std::uint64_t offset = 0;
  put_u64(out, 0);
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    offset += g.out_neighbors(v).size();
    put_u64(out, offset);
  }
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    for (NodeIndex w : g.out_neighbors(v)) put_u32(out, w);
  }
  if (!out) throw DataError("failed writing graph snapshot");
}

CitationGraph read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a graph snapshot (bad magic)");
  }
  const std::uint64_t n = get_u64(in);
  const std::uint64_t m = get_u64(in);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t len = get_u64(in);
    if (len > (1u << 20)) throw DataError("graph snapshot id length is implausible");
    std::string id(len, '\0');
    if (!in.read(id.data(), static_cast<std::streamsize>(len))) {
      throw DataError("truncated graph snapshot");
    }
    ids.push_back(std::move(id));
  }
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = get_u64(in);
  if (offsets.front() != 0 || offsets.back() != m) throw DataError("corrupt graph snapshot offsets");
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  edges.reserve(m);
  for (std::uint64_t v = 0; v < n; ++v) {
    if (offsets[v + 1] < offsets[v]) throw DataError("corrupt graph snapshot offsets");
    for (std::uint64_t e = offsets[v]; e < offsets[v + 1]; ++e) {
      const std::uint32_t target = get_u32(in);
      if (target >= n) throw DataError("corrupt graph snapshot edge target");
      edges.emplace_back(static_cast<NodeIndex>(v), target);
    }
  }
  return CitationGraph::from_edges(std::move(ids), std::move(edges));
}

void write_snapshot_file(const std::string& path, const CitationGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write graph snapshot: " + path);
  write_snapshot(out, g);
}

CitationGraph read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open graph snapshot: " + path);
  return read_snapshot(in);
}

void write_edge_list(std::ostream& out, const CitationGraph& g) {
  for (const auto& [u, v] : g.edges()) out << g.id_of(u) << ' ' << g.id_of(v) << '\n';
}

}  // namespace citegraph
