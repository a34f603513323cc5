#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citegraph/corpus.hpp"
#include "citegraph/graph.hpp"

namespace citegraph {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;
inline constexpr std::uint64_t kDefaultHashSeed = 0x5eed;

/// Dense vector, L2-normalized unless all-zero.
struct QueryVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool is_zero() const;
};

/// Node-aligned embedding rows stored contiguously.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }

  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);

  /// Scales every non-zero row to unit L2 norm.
  void normalize_rows();

  /// Row i as a query (copied; already unit length when the matrix is normalized).
  QueryVector as_query(std::size_t i) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::vector<double> data_;
};

/// Cosine similarity; 0 when either vector is all-zero. Throws
/// std::invalid_argument on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

double l2_norm(std::span<const double> v);

/// Signed feature hashing of the bag of tokens, L2-normalized. Empty text gives
/// the zero vector.
QueryVector hash_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim,
                       std::uint64_t seed = kDefaultHashSeed);

/// hash_embed of build_text(record) for every record, in record order.
EmbeddingMatrix embed_records(const std::vector<PaperRecord>& records,
                              std::size_t dim = kDefaultEmbeddingDim,
                              std::uint64_t seed = kDefaultHashSeed);

// TSV format: header "<count>\t<dim>", then "<paper_id>\t<f1>\t...\t<fdim>".
// Rows for ids not in the graph are ignored; every graph node must have a row.
EmbeddingMatrix load_embeddings(std::istream& in, const CitationGraph& graph);
EmbeddingMatrix load_embeddings(const std::string& path, const CitationGraph& graph);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix,
                      const CitationGraph& graph);

}  // namespace citegraph
