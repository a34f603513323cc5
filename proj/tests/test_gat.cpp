#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "citegraph/error.hpp"
#include "citegraph/gat.hpp"
#include "oracles/oracles.hpp"

using namespace citegraph;

namespace {

NodeStates random_states(std::size_t n, std::size_t d, Rng& rng) {
  NodeStates h(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : h.row(i)) x = 2.0 * uniform_unit(rng) - 1.0;
  }
  return h;
}

oracle::Dense to_dense(const NodeStates& h) {
  oracle::Dense out;
  for (std::size_t i = 0; i < h.rows(); ++i) out.emplace_back(h.row(i).begin(), h.row(i).end());
  return out;
}

ScorerBatch separable_batch() {
  // Label is 1 exactly when the first feature is positive.
  ScorerBatch batch{Matrix(8, 2), {}};
  const double xs[8][2] = {{1.0, 0.3}, {2.0, -0.5}, {0.5, 0.9}, {1.5, 0.0},
                           {-1.0, 0.2}, {-2.0, -0.4}, {-0.5, 0.8}, {-1.5, -0.1}};
  for (std::size_t i = 0; i < 8; ++i) {
    batch.features(i, 0) = xs[i][0];
    batch.features(i, 1) = xs[i][1];
    batch.labels.push_back(i < 4 ? 1.0 : 0.0);
  }
  return batch;
}

}  // namespace

TEST_CASE("isolated node attends only to itself") {
  const auto g = CitationGraph::from_edges({"a"}, {});
  GatLayer layer{Matrix::identity(2), {0.3, -0.2}, {0.1, 0.4}};
  NodeStates h(1, 2);
  h(0, 0) = 0.5;
  h(0, 1) = -2.0;
  const auto att = attention_coefficients(g, h, layer, 0.2);
  REQUIRE(att.alpha.size() == 1);
  CHECK(att.alpha[0] == 1.0);
  const auto out = gat_layer_forward(g, h, layer, 0.2);
  CHECK(out(0, 0) == doctest::Approx(0.5));
  CHECK(out(0, 1) == doctest::Approx(std::expm1(-2.0)));
}

TEST_CASE("symmetric pair with identical states has uniform attention") {
  const auto g = CitationGraph::from_edges({"a", "b"}, {{0, 1}});
  GatLayer layer{Matrix::identity(3), {0.7, 0.1, -0.3}, {0.2, 0.5, 0.9}};
  NodeStates h(2, 3, 0.4);
  const auto att = attention_coefficients(g, h, layer, 0.2);
  for (double a : att.alpha) CHECK(a == doctest::Approx(0.5));
}

TEST_CASE("zero input gives zero output") {
  Rng rng(41);
  const auto g = oracle::random_graph(6, 0.3, rng);
  const auto w = GatWeights::random(4, 9);
  const auto out = gat_forward(g, NodeStates(6, 4, 0.0), w);
  for (double x : out.data()) CHECK(x == 0.0);
}

TEST_CASE("attention and forward pass match the dense oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const std::size_t d = 1 + uniform_index(rng, 5);
    const auto g = oracle::random_graph(n, 0.3, rng);
    const auto w = GatWeights::random(d, 100 + trial);
    const auto h = random_states(n, d, rng);
    const auto att = attention_coefficients(g, h, w.layers[0], w.leaky_slope);
    const auto dense = oracle::dense_gat_layer(oracle::undirected_adjacency(g), to_dense(h), w.layers[0],
                                               w.leaky_slope);
    for (std::size_t i = 0; i < n; ++i) {
      const auto nb = att.neighbors_of(i);
      const auto alpha = att.alpha_of(i);
      double row_sum = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        CHECK(std::fabs(alpha[k] - dense.alpha[i][nb[k]]) < 1e-12);
        row_sum += alpha[k];
      }
      CHECK(std::fabs(row_sum - 1.0) < 1e-9);
    }
    const auto out = gat_layer_forward(g, h, w.layers[0], w.leaky_slope);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) CHECK(std::fabs(out(i, c) - dense.h[i][c]) < 1e-12);
    }
  }
}

TEST_CASE("forward pass is permutation equivariant") {
  Rng rng(43);
  const std::size_t n = 7;
  const auto g = oracle::random_graph(n, 0.3, rng);
  const auto w = GatWeights::random(3, 5);
  const auto h = random_states(n, 3, rng);
  std::vector<NodeIndex> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeIndex>(i);
  stable_shuffle(perm, rng);
  // Node i of g becomes node perm[i] of the relabeled graph.
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[perm[i]] = g.id_of(static_cast<NodeIndex>(i));
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (const auto& [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
  const auto g2 = CitationGraph::from_edges(ids, edges);
  NodeStates h2(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) h2(perm[i], c) = h(i, c);
  }
  const auto out = gat_forward(g, h, w);
  const auto out2 = gat_forward(g2, h2, w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(out(i, c) == doctest::Approx(out2(perm[i], c)).epsilon(1e-12));
  }
}

TEST_CASE("non-finite states and width mismatches are rejected") {
  const auto g = CitationGraph::from_edges({"a"}, {});
  GatLayer layer{Matrix::identity(2), {0, 0}, {0, 0}};
  NodeStates h(1, 2);
  h(0, 0) = std::nan("");
  CHECK_THROWS_AS(attention_coefficients(g, h, layer, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(gat_layer_forward(g, NodeStates(1, 3), layer, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(gat_layer_forward(g, NodeStates(2, 2), layer, 0.2), std::invalid_argument);
}

TEST_CASE("weights validation") {
  auto w = GatWeights::random(4, 1);
  CHECK_NOTHROW(w.validate());
  CHECK(w.dims() == std::vector<std::size_t>{4, 4, 4, 4});
  w.layers.pop_back();
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  auto bad = GatWeights::random(4, 1, 3);
  CHECK(bad.dims() == std::vector<std::size_t>{4, 3, 3, 3});
  bad.layers[1].weight = Matrix(4, 3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(GatWeights::random(5, 7) == GatWeights::random(5, 7));
  CHECK_FALSE(GatWeights::random(5, 7) == GatWeights::random(5, 8));
}

TEST_CASE("random weights lie in the init bound") {
  const auto w = GatWeights::random(9, 3);
  for (const auto& layer : w.layers) {
    for (double x : layer.weight.data()) CHECK(std::fabs(x) <= 1.0 / 3.0);
  }
}

TEST_CASE("weights JSON round trip") {
  ModelWeights m{GatWeights::random(3, 2), ScorerParams{{0.1, -0.2, 0.3, 0.4, 0.5, -0.6}, 0.25}};
  const auto back = model_weights_from_json(to_json(m));
  CHECK(back.gat == m.gat);
  CHECK(back.scorer == m.scorer);
  const auto path = std::filesystem::temp_directory_path() / "citegraph_weights_test.json";
  save_model_weights(path.string(), m);
  const auto loaded = load_model_weights(path.string());
  CHECK(loaded.gat == m.gat);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model_weights("/nonexistent/w.json"), DataError);
}

TEST_CASE("relevance scores") {
  NodeStates h(3, 2, 0.7);
  const QueryVector q{{0.6, 0.8}};
  for (double s : relevance_scores(h, q, ScorerParams::zeros(4))) CHECK(s == 0.5);
  ScorerParams hot = ScorerParams::zeros(4);
  hot.b = 50.0;
  for (double s : relevance_scores(h, q, hot)) {
    CHECK(s > 0.999);
    CHECK(s < 1.0);
  }
  hot.b = -800.0;
  for (double s : relevance_scores(h, q, hot)) CHECK(s > 0.0);
  CHECK_THROWS_AS(relevance_scores(h, q, ScorerParams::zeros(3)), std::invalid_argument);
}

TEST_CASE("relevance scores match the scalar formula") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_states(5, 3, rng);
    QueryVector q{{uniform_unit(rng), uniform_unit(rng)}};
    ScorerParams p = ScorerParams::zeros(5);
    for (double& u : p.u) u = 2 * uniform_unit(rng) - 1;
    p.b = uniform_unit(rng) - 0.5;
    const auto s = relevance_scores(h, q, p);
    for (std::size_t i = 0; i < 5; ++i) {
      const std::vector<double> row(h.row(i).begin(), h.row(i).end());
      CHECK(std::fabs(s[i] - oracle::dense_score(row, q.values, p)) < 1e-12);
    }
  }
}

TEST_CASE("logistic stays strictly inside the unit interval") {
  for (double x : {-1e6, -745.0, -50.0, 0.0, 40.0, 1e6}) {
    CHECK(logistic(x) > 0.0);
    CHECK(logistic(x) < 1.0);
  }
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    ScorerBatch batch{Matrix(6, 3), {}};
    for (std::size_t i = 0; i < 6; ++i) {
      for (double& x : batch.features.row(i)) x = 2 * uniform_unit(rng) - 1;
      batch.labels.push_back(uniform_unit(rng) < 0.5 ? 0.0 : 1.0);
    }
    ScorerParams p = ScorerParams::zeros(3);
    for (double& u : p.u) u = 2 * uniform_unit(rng) - 1;
    p.b = uniform_unit(rng) - 0.5;
    const auto g = scorer_gradient(p, batch);
    const double eps = 1e-6;
    for (std::size_t c = 0; c <= 3; ++c) {
      ScorerParams plus = p;
      ScorerParams minus = p;
      double& a = c < 3 ? plus.u[c] : plus.b;
      double& b = c < 3 ? minus.u[c] : minus.b;
      a += eps;
      b -= eps;
      const double numeric = (scorer_loss(plus, batch) - scorer_loss(minus, batch)) / (2 * eps);
      const double analytic = c < 3 ? g.u[c] : g.b;
      CHECK(std::fabs(analytic - numeric) / std::max(1e-8, std::fabs(analytic) + std::fabs(numeric)) < 1e-4);
    }
  }
}

TEST_CASE("training a separable batch") {
  const auto batch = separable_batch();
  TrainConfig config;
  config.epochs = 300;
  const auto result = fit_scorer(batch, config, ScorerParams::zeros(2));
  REQUIRE(result.loss_trace.size() == 301);
  for (std::size_t e = 1; e < result.loss_trace.size(); ++e) {
    CHECK(result.loss_trace[e] <= result.loss_trace[e - 1]);
  }
  CHECK(scorer_accuracy(result.params, batch) == 1.0);
}

TEST_CASE("zero epochs return the initial parameters") {
  TrainConfig config;
  config.epochs = 0;
  const ScorerParams init{{0.3, -0.1}, 0.2};
  const auto result = fit_scorer(separable_batch(), config, init);
  CHECK(result.params == init);
  CHECK(result.loss_trace.size() == 1);
}

TEST_CASE("train_scorer is deterministic and needs positives") {
  Rng rng(46);
  const auto g = oracle::random_graph(15, 0.15, rng);
  const auto emb = oracle::random_embeddings(15, 4, rng);
  const auto w = GatWeights::random(4, 3);
  std::vector<TrainingQuery> queries;
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    const auto cited = g.out_neighbors(v);
    if (!cited.empty()) queries.push_back({v, emb.as_query(v), {cited.begin(), cited.end()}});
  }
  REQUIRE_FALSE(queries.empty());
  TrainConfig config;
  config.epochs = 20;
  const auto a = train_scorer(g, emb, w, queries, config);
  const auto b = train_scorer(g, emb, w, queries, config);
  CHECK(a.params == b.params);
  CHECK(a.loss_trace == b.loss_trace);

  const auto batch = build_training_batch(g, emb, w, queries, config);
  std::size_t positives = 0;
  for (const auto& q : queries) positives += q.positives.size();
  CHECK(batch.features.cols() == 8);
  CHECK(batch.labels.size() >= positives);

  std::vector<TrainingQuery> empty{{0, emb.as_query(0), {}}};
  CHECK_THROWS_AS(train_scorer(g, emb, w, empty, config), DataError);
}
