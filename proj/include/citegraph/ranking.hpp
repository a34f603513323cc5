#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citegraph/graph.hpp"

namespace citegraph {

enum class Provenance { kGraph, kDenseFallback, kLexical, kDense, kHybrid };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct RankedItem {
  NodeIndex node = 0;
  std::string id;
  double score = 0.0;
  Provenance provenance = Provenance::kGraph;

  bool operator==(const RankedItem&) const = default;
};

/// Scores are non-increasing and ids unique.
using RankedList = std::vector<RankedItem>;

/// Top-k of a dense score vector: descending score, ties by ascending index.
/// Indices for which keep(i) is false are skipped. k = 0 means "all".
template <typename Keep>
RankedList top_k_where(std::span<const double> scores, std::span<const std::string> ids,
                       std::size_t k, Provenance provenance, Keep keep) {
  std::vector<NodeIndex> order;
  order.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (keep(static_cast<NodeIndex>(i))) order.push_back(static_cast<NodeIndex>(i));
  }
  auto better = [&](NodeIndex a, NodeIndex b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t take = (k == 0) ? order.size() : std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
  RankedList out;
  out.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    const NodeIndex i = order[r];
    out.push_back({i, ids.empty() ? std::to_string(i) : ids[i], scores[i], provenance});
  }
  return out;
}

RankedList top_k_by_score(std::span<const double> scores, std::span<const std::string> ids,
                          std::size_t k, Provenance provenance,
                          std::optional<NodeIndex> exclude = std::nullopt);

/// Sorts in place: descending score, ties by ascending node index.
void sort_ranked(RankedList& list);

std::vector<std::string> ranked_ids(const RankedList& list);

nlohmann::ordered_json to_json(const RankedList& list);

}  // namespace citegraph
