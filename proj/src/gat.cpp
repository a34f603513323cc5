#include "citegraph/gat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

// --- weights ---------------------------------------------------------------

std::vector<std::size_t> GatWeights::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().in_dim());
  for (const auto& layer : layers) d.push_back(layer.out_dim());
  return d;
}

void GatWeights::validate() const {
  if (layers.size() != kGatLayerCount) {
    throw std::invalid_argument("GAT weights must have exactly 3 layers, got " +
                                std::to_string(layers.size()));
  }
  if (!std::isfinite(leaky_slope)) throw std::invalid_argument("leaky_slope must be finite");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.in_dim() == 0 || layer.out_dim() == 0) {
      throw std::invalid_argument("GAT layer " + std::to_string(l) + " has an empty weight matrix");
    }
    if (l > 0 && layer.in_dim() != layers[l - 1].out_dim()) {
      throw std::invalid_argument("GAT layer " + std::to_string(l) + " input width " +
                                  std::to_string(layer.in_dim()) + " does not match previous output " +
                                  std::to_string(layers[l - 1].out_dim()));
    }
    if (layer.attn_src.size() != layer.out_dim() || layer.attn_dst.size() != layer.out_dim()) {
      throw std::invalid_argument("GAT layer " + std::to_string(l) +
                                  " attention vectors must match output width");
    }
    auto finite = [](double x) { return std::isfinite(x); };
    if (!std::all_of(layer.weight.data().begin(), layer.weight.data().end(), finite) ||
        !std::all_of(layer.attn_src.begin(), layer.attn_src.end(), finite) ||
        !std::all_of(layer.attn_dst.begin(), layer.attn_dst.end(), finite)) {
      throw std::invalid_argument("GAT layer " + std::to_string(l) + " has non-finite entries");
    }
  }
}

GatWeights GatWeights::random(std::size_t dim, std::uint64_t seed, std::size_t hidden) {
  if (hidden == 0) hidden = dim;
  Rng rng(seed);
  GatWeights w;
  std::size_t in = dim;
  for (std::size_t l = 0; l < kGatLayerCount; ++l) {
    GatLayer layer;
    layer.weight = Matrix(in, hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t r = 0; r < in; ++r) {
      for (std::size_t c = 0; c < hidden; ++c) layer.weight(r, c) = bound * (2.0 * uniform_unit(rng) - 1.0);
    }
    const double attn_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    layer.attn_src.resize(hidden);
    layer.attn_dst.resize(hidden);
    for (double& a : layer.attn_src) a = attn_bound * (2.0 * uniform_unit(rng) - 1.0);
    for (double& a : layer.attn_dst) a = attn_bound * (2.0 * uniform_unit(rng) - 1.0);
    w.layers.push_back(std::move(layer));
    in = hidden;
  }
  return w;
}

GatWeights GatWeights::identity(std::size_t dim) {
  GatWeights w;
  for (std::size_t l = 0; l < kGatLayerCount; ++l) {
    w.layers.push_back({Matrix::identity(dim), std::vector<double>(dim), std::vector<double>(dim)});
  }
  return w;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw DataError(std::string("weights file: ") + what + " must be a non-empty array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw DataError(std::string("weights file: ") + what + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const ModelWeights& weights) {
  nlohmann::json j;
  j["dims"] = weights.gat.dims();
  auto layers = nlohmann::json::array();
  for (const auto& layer : weights.gat.layers) {
    layers.push_back({{"W", matrix_to_json(layer.weight)},
                      {"a_src", layer.attn_src},
                      {"a_dst", layer.attn_dst}});
  }
  j["layers"] = std::move(layers);
  j["scorer"] = {{"u", weights.scorer.u}, {"b", weights.scorer.b}};
  j["leaky_slope"] = weights.gat.leaky_slope;
  return j;
}

ModelWeights model_weights_from_json(const nlohmann::json& j) {
  try {
    ModelWeights w;
    for (const auto& layer : j.at("layers")) {
      w.gat.layers.push_back({matrix_from_json(layer.at("W"), "W"),
                              layer.at("a_src").get<std::vector<double>>(),
                              layer.at("a_dst").get<std::vector<double>>()});
    }
    w.gat.leaky_slope = j.value("leaky_slope", kDefaultLeakySlope);
    if (j.contains("scorer")) {
      w.scorer.u = j["scorer"].at("u").get<std::vector<double>>();
      w.scorer.b = j["scorer"].at("b").get<double>();
    }
    w.gat.validate();
    if (j.contains("dims") && j["dims"].get<std::vector<std::size_t>>() != w.gat.dims()) {
      throw DataError("weights file: dims do not match layer shapes");
    }
    if (!w.scorer.u.empty() && w.scorer.u.size() != w.gat.dims().back() + w.gat.dims().front()) {
      throw DataError("weights file: scorer.u must have length d3 + embedding dim");
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("weights file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("weights file: ") + e.what());
  }
}

void save_model_weights(const std::string& path, const ModelWeights& weights) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write weights file: " + path);
  out << to_json(weights).dump() << '\n';
}

ModelWeights load_model_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file: " + path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("weights file is not valid JSON: " + path);
  return model_weights_from_json(j);
}

// --- forward pass ----------------------------------------------------------

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

double logistic(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  constexpr double kLow = std::numeric_limits<double>::denorm_min();
  const double high = std::nextafter(1.0, 0.0);
  return std::clamp(s, kLow, high);
}

namespace {

void check_states(const CitationGraph& subgraph, const NodeStates& states, const GatLayer& layer) {
  if (states.rows() != subgraph.node_count()) {
    throw std::invalid_argument("node state rows (" + std::to_string(states.rows()) +
                                ") do not match subgraph size (" +
                                std::to_string(subgraph.node_count()) + ")");
  }
  if (states.cols() != layer.in_dim()) {
    throw std::invalid_argument("node state width " + std::to_string(states.cols()) +
                                " does not match layer input width " + std::to_string(layer.in_dim()));
  }
  for (double x : states.data()) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite node state");
  }
}

Matrix project(const NodeStates& states, const Matrix& weight) {
  Matrix z(states.rows(), weight.cols());
  for (std::size_t i = 0; i < states.rows(); ++i) {
    auto out = z.row(i);
    const auto h = states.row(i);
    for (std::size_t r = 0; r < weight.rows(); ++r) {
      const double hr = h[r];
      if (hr == 0.0) continue;
      const auto wr = weight.row(r);
      for (std::size_t c = 0; c < weight.cols(); ++c) out[c] += hr * wr[c];
    }
  }
  return z;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

AttentionCoefficients coefficients_from_projection(const CitationGraph& subgraph, const Matrix& z,
                                                   const GatLayer& layer, double slope) {
  const std::size_t n = subgraph.node_count();
  std::vector<double> src_term(n);
  std::vector<double> dst_term(n);
  for (std::size_t i = 0; i < n; ++i) {
    src_term[i] = dot(layer.attn_src, z.row(i));
    dst_term[i] = dot(layer.attn_dst, z.row(i));
  }
  AttentionCoefficients att;
  att.offsets.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = neighbors(subgraph, static_cast<NodeIndex>(i), Direction::kBoth);
    nb.insert(std::upper_bound(nb.begin(), nb.end(), static_cast<NodeIndex>(i)), static_cast<NodeIndex>(i));
    const std::size_t start = att.alpha.size();
    double max_e = -std::numeric_limits<double>::infinity();
    for (NodeIndex j : nb) {
      const double e = leaky_relu(src_term[i] + dst_term[j], slope);
      att.neighbor.push_back(j);
      att.alpha.push_back(e);
      max_e = std::max(max_e, e);
    }
    double sum = 0.0;
    for (std::size_t k = start; k < att.alpha.size(); ++k) {
      att.alpha[k] = std::exp(att.alpha[k] - max_e);
      sum += att.alpha[k];
    }
    for (std::size_t k = start; k < att.alpha.size(); ++k) att.alpha[k] /= sum;
    att.offsets.push_back(att.alpha.size());
  }
  return att;
}

}  // namespace

AttentionCoefficients attention_coefficients(const CitationGraph& subgraph, const NodeStates& states,
                                             const GatLayer& layer, double leaky_slope) {
  check_states(subgraph, states, layer);
  return coefficients_from_projection(subgraph, project(states, layer.weight), layer, leaky_slope);
}

NodeStates gat_layer_forward(const CitationGraph& subgraph, const NodeStates& states,
                             const GatLayer& layer, double leaky_slope) {
  check_states(subgraph, states, layer);
  const Matrix z = project(states, layer.weight);
  const AttentionCoefficients att = coefficients_from_projection(subgraph, z, layer, leaky_slope);
  NodeStates out(states.rows(), layer.out_dim());
  for (std::size_t i = 0; i < states.rows(); ++i) {
    auto h = out.row(i);
    const auto nb = att.neighbors_of(i);
    const auto alpha = att.alpha_of(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto zj = z.row(nb[k]);
      for (std::size_t c = 0; c < h.size(); ++c) h[c] += alpha[k] * zj[c];
    }
    for (double& x : h) x = elu(x);
  }
  return out;
}

NodeStates gat_forward(const CitationGraph& subgraph, const NodeStates& states,
                       const GatWeights& weights, std::size_t layer_count) {
  NodeStates h = states;
  for (std::size_t l = 0; l < layer_count && l < weights.layers.size(); ++l) {
    h = gat_layer_forward(subgraph, h, weights.layers[l], weights.leaky_slope);
  }
  return h;
}

double relevance_score(std::span<const double> state, const QueryVector& query,
                       const ScorerParams& scorer) {
  if (scorer.u.size() != state.size() + query.dim()) {
    throw std::invalid_argument("scorer width " + std::to_string(scorer.u.size()) +
                                " does not match state width " + std::to_string(state.size()) +
                                " + query width " + std::to_string(query.dim()));
  }
  double z = scorer.b;
  for (std::size_t c = 0; c < state.size(); ++c) z += scorer.u[c] * state[c];
  for (std::size_t c = 0; c < query.dim(); ++c) z += scorer.u[state.size() + c] * query.values[c];
  return logistic(z);
}

std::vector<double> relevance_scores(const NodeStates& states, const QueryVector& query,
                                     const ScorerParams& scorer) {
  std::vector<double> scores(states.rows());
  for (std::size_t i = 0; i < states.rows(); ++i) scores[i] = relevance_score(states.row(i), query, scorer);
  return scores;
}

// --- training --------------------------------------------------------------

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double logit(const ScorerParams& p, std::span<const double> x) { return p.b + dot(p.u, x); }

void check_batch(const ScorerParams& params, const ScorerBatch& batch) {
  if (batch.features.rows() != batch.labels.size()) {
    throw std::invalid_argument("scorer batch: feature rows and labels differ in length");
  }
  if (batch.features.rows() > 0 && params.u.size() != batch.features.cols()) {
    throw std::invalid_argument("scorer batch: feature width does not match scorer");
  }
}

}  // namespace

double scorer_loss(const ScorerParams& params, const ScorerBatch& batch) {
  check_batch(params, batch);
  if (batch.labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    const double z = logit(params, batch.features.row(i));
    const double y = batch.labels[i];
    total += y * softplus(-z) + (1.0 - y) * softplus(z);
  }
  return total / static_cast<double>(batch.labels.size());
}

ScorerParams scorer_gradient(const ScorerParams& params, const ScorerBatch& batch) {
  check_batch(params, batch);
  ScorerParams grad = ScorerParams::zeros(params.u.size());
  const std::size_t n = batch.labels.size();
  if (n == 0) return grad;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = batch.features.row(i);
    // Unclamped logistic: the clamp in logistic() would zero tiny residuals.
    const double z = logit(params, x);
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double r = s - batch.labels[i];
    for (std::size_t c = 0; c < x.size(); ++c) grad.u[c] += r * x[c];
    grad.b += r;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : grad.u) g *= inv;
  grad.b *= inv;
  return grad;
}

double scorer_accuracy(const ScorerParams& params, const ScorerBatch& batch, double threshold) {
  check_batch(params, batch);
  if (batch.labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    const double s = logistic(logit(params, batch.features.row(i)));
    const bool predicted = s >= threshold;
    if (predicted == (batch.labels[i] >= 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.labels.size());
}

TrainResult fit_scorer(const ScorerBatch& batch, const TrainConfig& config, ScorerParams init) {
  TrainResult result{std::move(init), {}};
  result.loss_trace.reserve(config.epochs + 1);
  result.loss_trace.push_back(scorer_loss(result.params, batch));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const ScorerParams grad = scorer_gradient(result.params, batch);
    for (std::size_t c = 0; c < grad.u.size(); ++c) result.params.u[c] -= config.learning_rate * grad.u[c];
    result.params.b -= config.learning_rate * grad.b;
    result.loss_trace.push_back(scorer_loss(result.params, batch));
  }
  return result;
}

std::vector<double> ego_state(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                              const GatWeights& weights, NodeIndex v, NodeIndex held_out) {
  NodeSet ego{v};
  for (NodeIndex w : neighbors(graph, v, Direction::kBoth)) {
    if (w != held_out) ego.insert(w);
  }
  const InducedSubgraph sub = induced_subgraph(graph, ego);
  NodeStates states(ego.size(), embeddings.dim());
  for (std::size_t i = 0; i < sub.to_parent.size(); ++i) {
    const auto row = embeddings.row(sub.to_parent[i]);
    std::copy(row.begin(), row.end(), states.row(i).begin());
  }
  const NodeStates out = gat_layer_forward(sub.graph, states, weights.layers.front(), weights.leaky_slope);
  const auto first = out.row(0);
  return {first.begin(), first.end()};
}

ScorerBatch build_training_batch(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                                 const GatWeights& weights, const std::vector<TrainingQuery>& queries,
                                 const TrainConfig& config) {
  weights.validate();
  if (embeddings.rows() != graph.node_count()) {
    throw std::invalid_argument("embedding rows do not match graph node count");
  }
  const std::size_t state_dim = weights.layers.front().out_dim();
  Rng rng(config.seed);

  struct Pair {
    NodeIndex node;
    NodeIndex held_out;
    const QueryVector* query;
    double label;
  };
  std::vector<Pair> pairs;
  for (const auto& q : queries) {
    if (q.positives.empty()) continue;
    std::unordered_set<NodeIndex> excluded(q.positives.begin(), q.positives.end());
    excluded.insert(q.paper);
    for (NodeIndex p : q.positives) pairs.push_back({p, q.paper, &q.query, 1.0});
    const std::size_t wanted = q.positives.size() * config.negatives_per_positive;
    if (graph.node_count() <= excluded.size()) continue;
    std::unordered_set<NodeIndex> taken;
    std::size_t attempts = 0;
    while (taken.size() < wanted && attempts < 64 * wanted + 64) {
      ++attempts;
      const auto v = static_cast<NodeIndex>(uniform_index(rng, graph.node_count()));
      if (excluded.contains(v) || !taken.insert(v).second) continue;
      pairs.push_back({v, q.paper, &q.query, 0.0});
    }
  }
  const bool any_positive = std::any_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.label > 0.5; });
  if (!any_positive) throw DataError("scorer training: no positive (node, query) pairs available");

  const std::size_t query_dim = pairs.front().query->dim();
  ScorerBatch batch{Matrix(pairs.size(), state_dim + query_dim), std::vector<double>(pairs.size())};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto state = ego_state(graph, embeddings, weights, pairs[i].node, pairs[i].held_out);
    auto row = batch.features.row(i);
    std::copy(state.begin(), state.end(), row.begin());
    const auto& qv = pairs[i].query->values;
    if (qv.size() != query_dim) throw std::invalid_argument("training queries differ in width");
    std::copy(qv.begin(), qv.end(), row.begin() + static_cast<std::ptrdiff_t>(state_dim));
    batch.labels[i] = pairs[i].label;
  }
  return batch;
}

TrainResult train_scorer(const CitationGraph& graph, const EmbeddingMatrix& embeddings,
                         const GatWeights& weights, const std::vector<TrainingQuery>& queries,
                         const TrainConfig& config) {
  const ScorerBatch batch = build_training_batch(graph, embeddings, weights, queries, config);
  return fit_scorer(batch, config, ScorerParams::zeros(batch.features.cols()));
}

}  // namespace citegraph
