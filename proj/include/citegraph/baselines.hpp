#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citegraph/embed.hpp"
#include "citegraph/ranking.hpp"

namespace citegraph {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  NodeIndex doc = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Okapi BM25 over an in-memory inverted index. Tokenization matches hash_embed.
class Bm25Index {
 public:
  /// Throws DataError for an empty corpus. ids may be empty (decimal indices are
  /// used) or must have one entry per text.
  static Bm25Index build(std::span<const std::string> texts, std::span<const std::string> ids = {},
                         Bm25Params params = {});

  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  std::uint32_t doc_length(NodeIndex doc) const { return doc_lengths_.at(doc); }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Postings sorted by doc index; empty for an unknown term.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t doc_frequency(std::string_view term) const { return postings(term).size(); }

  /// ln((N - df + 0.5) / (df + 0.5) + 1); always positive.
  double idf(std::string_view term) const;

  /// Score of every document. Each query token occurrence contributes
  /// IDF(t) * tf / (tf + k1 * (1 - b + b * len / avg_len)).
  std::vector<double> score_all(std::string_view query) const;

 private:
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> ids_;
  double avg_doc_length_ = 0.0;
  Bm25Params params_;
};

Bm25Index bm25_build(std::span<const std::string> texts, std::span<const std::string> ids = {},
                     Bm25Params params = {});

/// Documents with a positive score, best first, ties by index, at most k.
RankedList bm25_rank(const Bm25Index& index, std::string_view query, std::size_t k,
                     std::optional<NodeIndex> exclude = std::nullopt);

/// Every document's cosine with the query. Throws DataError for a zero query.
std::vector<double> dense_scores(const QueryVector& query, const EmbeddingMatrix& embeddings);

/// Exact-scan top-k by cosine.
RankedList dense_rank(const QueryVector& query, const EmbeddingMatrix& embeddings,
                      std::span<const std::string> ids, std::size_t k,
                      std::optional<NodeIndex> exclude = std::nullopt);

struct HybridConfig {
  double alpha = 0.5;  // weight on BM25

  void validate() const;
};

/// (x - min) / (max - min); a constant vector maps to all zeros.
std::vector<double> min_max_normalize(std::span<const double> scores);

/// Blends two rankings over the same candidate universe: each list is min-max
/// normalized, then alpha * bm25 + (1 - alpha) * dense. Throws
/// std::invalid_argument when the lists cover different documents.
RankedList hybrid_rank(const RankedList& bm25_full, const RankedList& dense_full,
                       const HybridConfig& config, std::size_t k);

/// Scores every document both ways, builds the two full lists and blends them.
RankedList hybrid_search(const Bm25Index& index, std::string_view query_text,
                         const QueryVector& query, const EmbeddingMatrix& embeddings,
                         const HybridConfig& config, std::size_t k,
                         std::optional<NodeIndex> exclude = std::nullopt);

}  // namespace citegraph
