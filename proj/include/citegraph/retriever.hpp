#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citegraph/embed.hpp"
#include "citegraph/gat.hpp"
#include "citegraph/graph.hpp"
#include "citegraph/ranking.hpp"

namespace citegraph {

struct RetrieverConfig {
  std::size_t hops = 3;
  double prune_threshold = 0.5;  // sigma
  std::size_t top_k = 10;
  std::size_t max_frontier = 2048;
  bool fallback_to_dense = true;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

struct KeptNode {
  NodeIndex node = 0;
  double score = 0.0;       // relevance at the hop the node was first scored
  std::size_t hop = 0;      // 0 for the seed
  std::vector<double> state;  // latest hidden state
};

struct HopTrace {
  std::size_t hop = 0;
  std::size_t expanded = 0;  // frontier size
  std::size_t pruned = 0;    // frontier nodes below sigma or cut by max_frontier

  bool operator==(const HopTrace&) const = default;
};

struct RetrievedSubgraph {
  NodeIndex seed = 0;
  NodeSet kept;                // seed first, then survivors hop by hop
  std::vector<KeptNode> nodes;  // aligned with kept.items()
  InducedSubgraph induced;     // induced over kept, same local order
  std::vector<HopTrace> trace;

  const KeptNode& info(NodeIndex v) const;
};

/// Argmax of cosine(query, row) over all nodes except held_out; ties go to the
/// smallest index. Throws DataError("degenerate query") for a zero query.
NodeIndex select_seed(const QueryVector& query, const EmbeddingMatrix& embeddings,
                      const CitationGraph& graph, std::optional<NodeIndex> held_out = std::nullopt);

/// What one hop computes over the induced subgraph of kept ∪ frontier.
struct HopResult {
  NodeStates states;           // new state for every row
  std::vector<double> scores;  // relevance for every row
};

/// hop is 1-based. Rows of `inputs` follow the local order of `subgraph`.
using HopFunction =
    std::function<HopResult(std::size_t hop, const CitationGraph& subgraph, const NodeStates& inputs)>;

/// The expand / score / prune loop. For hop l = 1..L: the frontier is every
/// unvisited undirected neighbor of the kept set; the hop function runs over the
/// induced subgraph of kept ∪ frontier (kept rows carry their latest state,
/// frontier rows start from their embedding); frontier nodes scoring below sigma
/// are dropped; at most max_frontier survivors (highest score first) join the
/// kept set. Every node is scored once, at the hop it first appears. The seed is
/// never pruned; held_out is never visited.
RetrievedSubgraph expand_and_prune(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                   NodeIndex seed, const RetrieverConfig& config,
                                   const HopFunction& hop_function,
                                   std::optional<NodeIndex> held_out = std::nullopt);

/// expand_and_prune with GAT layer min(l, 3) at hop l followed by the logistic
/// scorer. Requires every GAT width to equal the embedding width.
RetrievedSubgraph retrieve_subgraph(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                    const QueryVector& query, NodeIndex seed,
                                    const GatWeights& weights, const ScorerParams& scorer,
                                    const RetrieverConfig& config,
                                    std::optional<NodeIndex> held_out = std::nullopt);

/// Linear map from final state width to embedding width; identity when absent.
using Decoder = std::optional<Matrix>;

std::vector<double> decode(std::span<const double> state, const Decoder& decoder);

/// Candidates are kept nodes other than the seed, scored by
/// cosine(decode(h_i), query), best first with index tie-break, truncated to
/// top_k. With fallback_to_dense a short list is padded with the best
/// dense-cosine nodes not yet present (never the seed or held_out); a padded
/// score is capped at the score above it so the list stays non-increasing.
RankedList decode_and_rank(const RetrievedSubgraph& subgraph, const QueryVector& query,
                           const EmbeddingMatrix& embeddings, const CitationGraph& graph,
                           const RetrieverConfig& config, const Decoder& decoder = std::nullopt,
                           std::optional<NodeIndex> held_out = std::nullopt);

/// {query_id, seed, candidates: [{id, score, provenance}], trace: [{hop, expanded, pruned}]}
nlohmann::ordered_json retrieval_to_json(const std::string& query_id, const CitationGraph& graph,
                                         const RetrievedSubgraph& subgraph, const RankedList& ranked);

}  // namespace citegraph
