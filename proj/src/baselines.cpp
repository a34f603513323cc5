#include "citegraph/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

Bm25Index Bm25Index::build(std::span<const std::string> texts, std::span<const std::string> ids,
                           Bm25Params params) {
  if (texts.empty()) throw DataError("BM25: cannot index an empty corpus");
  if (!ids.empty() && ids.size() != texts.size()) {
    throw std::invalid_argument("BM25: ids and texts differ in length");
  }
  Bm25Index index;
  index.params_ = params;
  index.doc_lengths_.resize(texts.size());
  if (ids.empty()) {
    for (std::size_t i = 0; i < texts.size(); ++i) index.ids_.push_back(std::to_string(i));
  } else {
    index.ids_.assign(ids.begin(), ids.end());
  }
  double total = 0.0;
  for (std::size_t d = 0; d < texts.size(); ++d) {
    const auto tokens = tokenize(texts[d]);
    index.doc_lengths_[d] = static_cast<std::uint32_t>(tokens.size());
    total += static_cast<double>(tokens.size());
    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) {
      // Documents are visited in order, so each list stays sorted by doc index.
      index.postings_[std::string(term)].push_back({static_cast<NodeIndex>(d), tf});
    }
  }
  index.avg_doc_length_ = total / static_cast<double>(texts.size());
  return index;
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const {
  const auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(doc_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<double> Bm25Index::score_all(std::string_view query) const {
  std::vector<double> scores(doc_count(), 0.0);
  if (avg_doc_length_ <= 0.0) return scores;
  for (const auto& term : tokenize(query)) {
    const auto list = postings(term);
    if (list.empty()) continue;
    const double w = idf(term);
    for (const Posting& p : list) {
      const double tf = p.tf;
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * doc_lengths_[p.doc] / avg_doc_length_);
      scores[p.doc] += w * tf / (tf + norm);
    }
  }
  return scores;
}

Bm25Index bm25_build(std::span<const std::string> texts, std::span<const std::string> ids,
                     Bm25Params params) {
  return Bm25Index::build(texts, ids, params);
}

RankedList bm25_rank(const Bm25Index& index, std::string_view query, std::size_t k,
                     std::optional<NodeIndex> exclude) {
  const auto scores = index.score_all(query);
  return top_k_where(scores, index.ids(), k, Provenance::kLexical, [&](NodeIndex d) {
    return scores[d] > 0.0 && !(exclude && *exclude == d);
  });
}

std::vector<double> dense_scores(const QueryVector& query, const EmbeddingMatrix& embeddings) {
  if (query.is_zero()) throw DataError("degenerate query");
  std::vector<double> scores(embeddings.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) scores[i] = cosine(query.values, embeddings.row(i));
  return scores;
}

RankedList dense_rank(const QueryVector& query, const EmbeddingMatrix& embeddings,
                      std::span<const std::string> ids, std::size_t k,
                      std::optional<NodeIndex> exclude) {
  const auto scores = dense_scores(query, embeddings);
  return top_k_by_score(scores, ids, k, Provenance::kDense, exclude);
}

void HybridConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("hybrid alpha must lie in [0, 1]");
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
  std::vector<double> out(scores.size(), 0.0);
  if (scores.empty()) return out;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
  return out;
}

RankedList hybrid_rank(const RankedList& bm25_full, const RankedList& dense_full,
                       const HybridConfig& config, std::size_t k) {
  config.validate();
  if (bm25_full.size() != dense_full.size()) {
    throw std::invalid_argument("hybrid_rank: candidate universes differ in size");
  }
  std::vector<double> lex;
  std::vector<double> den;
  lex.reserve(bm25_full.size());
  den.reserve(dense_full.size());
  for (const auto& item : bm25_full) lex.push_back(item.score);
  for (const auto& item : dense_full) den.push_back(item.score);
  const auto lex_n = min_max_normalize(lex);
  const auto den_n = min_max_normalize(den);

  std::map<NodeIndex, std::size_t> dense_pos;
  for (std::size_t i = 0; i < dense_full.size(); ++i) {
    if (!dense_pos.emplace(dense_full[i].node, i).second) {
      throw std::invalid_argument("hybrid_rank: duplicate document in dense list");
    }
  }
  RankedList blended;
  blended.reserve(bm25_full.size());
  std::map<NodeIndex, bool> seen;
  for (std::size_t i = 0; i < bm25_full.size(); ++i) {
    const auto& item = bm25_full[i];
    const auto it = dense_pos.find(item.node);
    if (it == dense_pos.end() || !seen.emplace(item.node, true).second) {
      throw std::invalid_argument("hybrid_rank: candidate universes differ");
    }
    const double score = config.alpha * lex_n[i] + (1.0 - config.alpha) * den_n[it->second];
    blended.push_back({item.node, item.id, score, Provenance::kHybrid});
  }
  sort_ranked(blended);
  if (k > 0 && blended.size() > k) blended.resize(k);
  return blended;
}

RankedList hybrid_search(const Bm25Index& index, std::string_view query_text,
                         const QueryVector& query, const EmbeddingMatrix& embeddings,
                         const HybridConfig& config, std::size_t k,
                         std::optional<NodeIndex> exclude) {
  if (index.doc_count() != embeddings.rows()) {
    throw std::invalid_argument("hybrid_search: BM25 index and embeddings cover different corpora");
  }
  const auto lex = index.score_all(query_text);
  const auto den = dense_scores(query, embeddings);
  const RankedList lex_full = top_k_by_score(lex, index.ids(), 0, Provenance::kLexical, exclude);
  const RankedList den_full = top_k_by_score(den, index.ids(), 0, Provenance::kDense, exclude);
  return hybrid_rank(lex_full, den_full, config, k);
}

}  // namespace citegraph
