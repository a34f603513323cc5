#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "citegraph/embed.hpp"
#include "citegraph/graph.hpp"

namespace citegraph {

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  static Matrix identity(std::size_t n);
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-node hidden states; row i belongs to local node i of the subgraph.
using NodeStates = Matrix;

struct GatLayer {
  Matrix weight;                   // d_in x d_out
  std::vector<double> attn_src;    // d_out, applied to the aggregating node
  std::vector<double> attn_dst;    // d_out, applied to the neighbor

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  bool operator==(const GatLayer&) const = default;
};

inline constexpr std::size_t kGatLayerCount = 3;
inline constexpr double kDefaultLeakySlope = 0.2;

struct GatWeights {
  std::vector<GatLayer> layers;
  double leaky_slope = kDefaultLeakySlope;

  /// (d0, d1, d2, d3).
  std::vector<std::size_t> dims() const;
  /// Throws std::invalid_argument unless there are 3 layers with chaining,
  /// finite shapes and values.
  void validate() const;

  /// Uniform in [-1/sqrt(d_in), 1/sqrt(d_in)] from a seeded generator; hidden
  /// widths default to the input width.
  static GatWeights random(std::size_t dim, std::uint64_t seed, std::size_t hidden = 0);
  /// W = I and zero attention vectors in every layer: mean aggregation.
  static GatWeights identity(std::size_t dim);

  bool operator==(const GatWeights&) const = default;
};

/// Logistic layer over [node state ; query].
struct ScorerParams {
  std::vector<double> u;
  double b = 0.0;

  static ScorerParams zeros(std::size_t input_dim) { return {std::vector<double>(input_dim), 0.0}; }
  bool operator==(const ScorerParams&) const = default;
};

struct ModelWeights {
  GatWeights gat;
  ScorerParams scorer;
};

nlohmann::json to_json(const ModelWeights& weights);
ModelWeights model_weights_from_json(const nlohmann::json& j);
void save_model_weights(const std::string& path, const ModelWeights& weights);
ModelWeights load_model_weights(const std::string& path);

/// Attention weights alpha_ij in CSR form. Row i lists N(i) ∪ {i} in ascending
/// local index with its softmax-normalized coefficients.
struct AttentionCoefficients {
  std::vector<std::size_t> offsets{0};
  std::vector<NodeIndex> neighbor;
  std::vector<double> alpha;

  std::size_t node_count() const { return offsets.size() - 1; }
  std::span<const NodeIndex> neighbors_of(std::size_t i) const {
    return {neighbor.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const double> alpha_of(std::size_t i) const {
    return {alpha.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

double leaky_relu(double x, double slope);
double elu(double x);
/// Logistic function clamped to the open interval (0, 1).
double logistic(double x);

/// Neighborhoods are undirected: j in N(i) when either i cites j or j cites i.
/// e_ij = LeakyReLU(a_src . W h_i + a_dst . W h_j), softmax over N(i) ∪ {i}
/// with max subtraction. Throws std::invalid_argument on non-finite states or a
/// width mismatch.
AttentionCoefficients attention_coefficients(const CitationGraph& subgraph, const NodeStates& states,
                                             const GatLayer& layer, double leaky_slope);

/// h'_i = ELU(sum_j alpha_ij W h_j).
NodeStates gat_layer_forward(const CitationGraph& subgraph, const NodeStates& states,
                             const GatLayer& layer, double leaky_slope);

/// Applies layers [0, layer_count) in sequence.
NodeStates gat_forward(const CitationGraph& subgraph, const NodeStates& states,
                       const GatWeights& weights, std::size_t layer_count = kGatLayerCount);

double relevance_score(std::span<const double> state, const QueryVector& query,
                       const ScorerParams& scorer);
/// s_i = logistic(u . [h_i ; q] + b), strictly inside (0, 1).
std::vector<double> relevance_scores(const NodeStates& states, const QueryVector& query,
                                     const ScorerParams& scorer);

// --- scorer training --------------------------------------------------------

/// Rows of [state ; query] with binary labels.
struct ScorerBatch {
  Matrix features;
  std::vector<double> labels;
};

/// Mean binary cross-entropy, computed through softplus for stability.
double scorer_loss(const ScorerParams& params, const ScorerBatch& batch);
/// Analytic gradient of scorer_loss: (1/n) sum (s - y) x and (1/n) sum (s - y).
ScorerParams scorer_gradient(const ScorerParams& params, const ScorerBatch& batch);
double scorer_accuracy(const ScorerParams& params, const ScorerBatch& batch, double threshold = 0.5);

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 42;
};

struct TrainResult {
  ScorerParams params;
  /// loss_trace[0] is the initial loss; loss_trace[e] the loss after epoch e.
  std::vector<double> loss_trace;
};

/// Full-batch gradient descent on scorer_loss starting from init.
TrainResult fit_scorer(const ScorerBatch& batch, const TrainConfig& config, ScorerParams init);

/// One training query: the query paper, its vector, and its in-graph citations.
struct TrainingQuery {
  NodeIndex paper = 0;
  QueryVector query;
  std::vector<NodeIndex> positives;
};

/// Layer-1 state of v computed on its one-hop ego graph, with `held_out` removed.
std::vector<double> ego_state(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                              const GatWeights& weights, NodeIndex v, NodeIndex held_out);

/// Builds (node, query) pairs: every positive plus uniformly sampled negatives
/// (never the query paper or one of its citations), then fits the scorer with
/// GAT weights frozen. Throws DataError when no positive pair exists.
TrainResult train_scorer(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                         const GatWeights& weights, const std::vector<TrainingQuery>& queries,
                         const TrainConfig& config);

/// The batch train_scorer fits; exposed for inspection and tests.
ScorerBatch build_training_batch(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                 const GatWeights& weights, const std::vector<TrainingQuery>& queries,
                                 const TrainConfig& config);

}  // namespace citegraph
