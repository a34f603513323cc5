#include "citegraph/retriever.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "citegraph/error.hpp"

namespace citegraph {

void RetrieverConfig::validate() const {
  if (hops < 1) throw UsageError("hops must be >= 1");
  if (!(prune_threshold >= 0.0 && prune_threshold <= 1.0)) {
    throw UsageError("prune threshold sigma must lie in [0, 1]");
  }
  if (top_k < 1) throw UsageError("top_k must be >= 1");
  if (max_frontier < 1) throw UsageError("max_frontier must be >= 1");
}

const KeptNode& RetrievedSubgraph::info(NodeIndex v) const {
  const auto& order = kept.items();
  const auto it = std::find(order.begin(), order.end(), v);
  if (it == order.end()) throw std::out_of_range("node is not in the retrieved subgraph");
  return nodes[static_cast<std::size_t>(it - order.begin())];
}

NodeIndex select_seed(const QueryVector& query, const EmbeddingMatrix& embeddings,
                      const CitationGraph& graph, std::optional<NodeIndex> held_out) {
  if (query.is_zero()) throw DataError("degenerate query");
  if (embeddings.rows() != graph.node_count()) {
    throw std::invalid_argument("embedding rows do not match graph node count");
  }
  std::optional<NodeIndex> best;
  double best_score = 0.0;
  for (NodeIndex v = 0; v < graph.node_count(); ++v) {
    if (held_out && *held_out == v) continue;
    const double s = cosine(query.values, embeddings.row(v));
    if (!best || s > best_score) {
      best = v;
      best_score = s;
    }
  }
  if (!best) throw DataError("no candidate seed nodes");
  return *best;
}

RetrievedSubgraph expand_and_prune(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                   NodeIndex seed, const RetrieverConfig& config,
                                   const HopFunction& hop_function,
                                   std::optional<NodeIndex> held_out) {
  config.validate();
  if (seed >= graph.node_count()) throw std::out_of_range("seed index out of range");
  if (held_out && *held_out == seed) throw std::invalid_argument("seed cannot be the held-out node");
  if (embeddings.rows() != graph.node_count()) {
    throw std::invalid_argument("embedding rows do not match graph node count");
  }
  const std::size_t dim = embeddings.dim();

  RetrievedSubgraph result;
  result.seed = seed;
  std::unordered_set<NodeIndex> visited{seed};
  if (held_out) visited.insert(*held_out);

  {
    const auto emb = embeddings.row(seed);
    KeptNode seed_info{seed, 0.0, 0, {emb.begin(), emb.end()}};
    NodeStates single(1, dim);
    std::copy(emb.begin(), emb.end(), single.row(0).begin());
    const InducedSubgraph alone = induced_subgraph(graph, NodeSet{seed});
    seed_info.score = hop_function(1, alone.graph, single).scores.at(0);
    result.kept.insert(seed);
    result.nodes.push_back(std::move(seed_info));
  }

  for (std::size_t hop = 1; hop <= config.hops; ++hop) {
    std::vector<NodeIndex> frontier;
    for (NodeIndex v : result.kept) {
      for (NodeIndex w : neighbors(graph, v, Direction::kBoth)) {
        if (!visited.contains(w)) frontier.push_back(w);
      }
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    if (frontier.empty()) {
      result.trace.push_back({hop, 0, 0});
      break;
    }
    for (NodeIndex w : frontier) visited.insert(w);

    NodeSet working = result.kept;
    for (NodeIndex w : frontier) working.insert(w);
    const InducedSubgraph sub = induced_subgraph(graph, working);
    NodeStates inputs(working.size(), result.nodes.front().state.size());
    const std::size_t kept_rows = result.kept.size();
    for (std::size_t i = 0; i < working.size(); ++i) {
      const auto src = i < kept_rows ? std::span<const double>(result.nodes[i].state)
                                     : embeddings.row(sub.to_parent[i]);
      if (src.size() != inputs.cols()) {
        throw std::invalid_argument("state width changed across hops; GAT widths must equal the embedding width");
      }
      std::copy(src.begin(), src.end(), inputs.row(i).begin());
    }

    HopResult out = hop_function(hop, sub.graph, inputs);
    if (out.states.rows() != working.size() || out.scores.size() != working.size()) {
      throw std::logic_error("hop function returned the wrong number of rows");
    }

    std::vector<std::size_t> survivors;
    for (std::size_t i = kept_rows; i < working.size(); ++i) {
      if (out.scores[i] >= config.prune_threshold) survivors.push_back(i);
    }
    if (survivors.size() > config.max_frontier) {
      std::sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
        if (out.scores[a] != out.scores[b]) return out.scores[a] > out.scores[b];
        return sub.to_parent[a] < sub.to_parent[b];
      });
      survivors.resize(config.max_frontier);
      std::sort(survivors.begin(), survivors.end());
    }

    for (std::size_t i = 0; i < kept_rows; ++i) {
      const auto row = out.states.row(i);
      result.nodes[i].state.assign(row.begin(), row.end());
    }
    for (std::size_t i : survivors) {
      const NodeIndex v = sub.to_parent[i];
      const auto row = out.states.row(i);
      result.kept.insert(v);
      result.nodes.push_back({v, out.scores[i], hop, {row.begin(), row.end()}});
    }
    result.trace.push_back({hop, frontier.size(), frontier.size() - survivors.size()});
  }

  result.induced = induced_subgraph(graph, result.kept);
  return result;
}

RetrievedSubgraph retrieve_subgraph(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                    const QueryVector& query, NodeIndex seed,
                                    const GatWeights& weights, const ScorerParams& scorer,
                                    const RetrieverConfig& config,
                                    std::optional<NodeIndex> held_out) {
  weights.validate();
  for (std::size_t d : weights.dims()) {
    if (d != embeddings.dim()) {
      throw std::invalid_argument("retrieval requires every GAT width to equal the embedding width (" +
                                  std::to_string(embeddings.dim()) + ")");
    }
  }
  HopFunction hop_fn = [&](std::size_t hop, const CitationGraph& sub, const NodeStates& inputs) {
    const std::size_t layer = std::min(hop, kGatLayerCount) - 1;
    HopResult r;
    r.states = gat_layer_forward(sub, inputs, weights.layers[layer], weights.leaky_slope);
    r.scores = relevance_scores(r.states, query, scorer);
    return r;
  };
  return expand_and_prune(graph, embeddings, seed, config, hop_fn, held_out);
}

std::vector<double> decode(std::span<const double> state, const Decoder& decoder) {
  if (!decoder) return {state.begin(), state.end()};
  if (decoder->rows() != state.size()) throw std::invalid_argument("decoder input width mismatch");
  std::vector<double> out(decoder->cols(), 0.0);
  for (std::size_t r = 0; r < decoder->rows(); ++r) {
    const auto w = decoder->row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += state[r] * w[c];
  }
  return out;
}

RankedList decode_and_rank(const RetrievedSubgraph& subgraph, const QueryVector& query,
                           const EmbeddingMatrix& embeddings, const CitationGraph& graph,
                           const RetrieverConfig& config, const Decoder& decoder,
                           std::optional<NodeIndex> held_out) {
  config.validate();
  if (subgraph.kept.empty()) throw std::invalid_argument("decode_and_rank: empty subgraph");
  RankedList ranked;
  for (const auto& n : subgraph.nodes) {
    if (n.node == subgraph.seed || (held_out && *held_out == n.node)) continue;
    ranked.push_back({n.node, graph.id_of(n.node), cosine(decode(n.state, decoder), query.values),
                      Provenance::kGraph});
  }
  sort_ranked(ranked);
  if (ranked.size() > config.top_k) ranked.resize(config.top_k);

  if (config.fallback_to_dense && ranked.size() < config.top_k && !query.is_zero()) {
    std::unordered_set<NodeIndex> present;
    for (const auto& item : ranked) present.insert(item.node);
    std::vector<double> dense(graph.node_count());
    for (NodeIndex v = 0; v < graph.node_count(); ++v) dense[v] = cosine(query.values, embeddings.row(v));
    const RankedList pad = top_k_where(
        dense, graph.node_ids(), config.top_k - ranked.size(), Provenance::kDenseFallback,
        [&](NodeIndex v) {
          return v != subgraph.seed && !(held_out && *held_out == v) && !present.contains(v);
        });
    for (RankedItem item : pad) {
      if (!ranked.empty()) item.score = std::min(item.score, ranked.back().score);
      ranked.push_back(std::move(item));
    }
  }
  return ranked;
}

nlohmann::ordered_json retrieval_to_json(const std::string& query_id, const CitationGraph& graph,
                                         const RetrievedSubgraph& subgraph, const RankedList& ranked) {
  nlohmann::ordered_json j;
  j["query_id"] = query_id;
  j["seed"] = graph.id_of(subgraph.seed);
  j["candidates"] = to_json(ranked);
  auto trace = nlohmann::ordered_json::array();
  for (const auto& t : subgraph.trace) {
    trace.push_back({{"hop", t.hop}, {"expanded", t.expanded}, {"pruned", t.pruned}});
  }
  j["trace"] = std::move(trace);
  return j;
}

}  // namespace citegraph
