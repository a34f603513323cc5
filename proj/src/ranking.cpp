#include "citegraph/ranking.hpp"

#include <stdexcept>

namespace citegraph {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kGraph: return "graph";
    case Provenance::kDenseFallback: return "dense-fallback";
    case Provenance::kLexical: return "bm25";
    case Provenance::kDense: return "dense";
    case Provenance::kHybrid: return "hybrid";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::kGraph, Provenance::kDenseFallback, Provenance::kLexical,
                 Provenance::kDense, Provenance::kHybrid}) {
    if (to_string(p) == s) return p;
  }
  throw std::invalid_argument("unknown provenance: " + std::string(s));
}

RankedList top_k_by_score(std::span<const double> scores, std::span<const std::string> ids,
                          std::size_t k, Provenance provenance, std::optional<NodeIndex> exclude) {
  return top_k_where(scores, ids, k, provenance,
                        [&](NodeIndex i) { return !exclude || *exclude != i; });
}

void sort_ranked(RankedList& list) {
  std::sort(list.begin(), list.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node < b.node;
  });
}

std::vector<std::string> ranked_ids(const RankedList& list) {
  std::vector<std::string> ids;
  ids.reserve(list.size());
  for (const auto& item : list) ids.push_back(item.id);
  return ids;
}

nlohmann::ordered_json to_json(const RankedList& list) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& item : list) {
    nlohmann::ordered_json j;
    j["id"] = item.id;
    j["score"] = item.score;
    j["provenance"] = std::string(to_string(item.provenance));
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace citegraph
