#pragma once

// Reference implementations written straight from the formulas, with dense
// matrices and no shared helpers from the library. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "citegraph/embed.hpp"
#include "citegraph/gat.hpp"
#include "citegraph/graph.hpp"
#include "citegraph/text.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

// --- graphs ----------------------------------------------------------------

// Symmetric 0/1 adjacency from the directed edge list, no self loops.
inline std::vector<std::vector<int>> undirected_adjacency(const citegraph::CitationGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (const auto& [u, v] : g.edges()) {
    a[u][v] = 1;
    a[v][u] = 1;
  }
  return a;
}

inline citegraph::CitationGraph random_graph(std::size_t n, double p, citegraph::Rng& rng) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  std::vector<std::pair<citegraph::NodeIndex, citegraph::NodeIndex>> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u != v && citegraph::uniform_unit(rng) < p) {
        edges.emplace_back(static_cast<citegraph::NodeIndex>(u), static_cast<citegraph::NodeIndex>(v));
      }
    }
  }
  return citegraph::CitationGraph::from_edges(std::move(ids), std::move(edges));
}

inline citegraph::EmbeddingMatrix random_embeddings(std::size_t n, std::size_t dim, citegraph::Rng& rng) {
  citegraph::EmbeddingMatrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : m.row(i)) x = 2.0 * citegraph::uniform_unit(rng) - 1.0;
  }
  m.normalize_rows();
  return m;
}

// Nodes within `hops` undirected steps of seed, never passing through `blocked`.
inline std::set<citegraph::NodeIndex> bfs_ball(const citegraph::CitationGraph& g, citegraph::NodeIndex seed,
                                               std::size_t hops, int blocked = -1) {
  const auto a = undirected_adjacency(g);
  const std::size_t n = g.node_count();
  std::vector<int> dist(n, -1);
  dist[seed] = 0;
  for (std::size_t d = 0; d < hops; ++d) {
    for (std::size_t u = 0; u < n; ++u) {
      if (dist[u] != static_cast<int>(d)) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (a[u][v] && dist[v] < 0 && static_cast<int>(v) != blocked) dist[v] = static_cast<int>(d) + 1;
      }
    }
  }
  std::set<citegraph::NodeIndex> ball;
  for (std::size_t v = 0; v < n; ++v) {
    if (dist[v] >= 0) ball.insert(static_cast<citegraph::NodeIndex>(v));
  }
  return ball;
}

// --- attention ---------------------------------------------------------------

struct DenseLayerOutput {
  Dense alpha;  // n x n, zero outside N(i) ∪ {i}
  Dense h;      // n x d_out
};

// One GAT layer on a dense 0/1 adjacency (symmetric, self loop added here).
inline DenseLayerOutput dense_gat_layer(const std::vector<std::vector<int>>& adj, const Dense& h,
                                        const citegraph::GatLayer& layer, double slope) {
  const std::size_t n = h.size();
  const std::size_t din = layer.weight.rows();
  const std::size_t dout = layer.weight.cols();
  Dense z = zeros(n, dout);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dout; ++c) {
      for (std::size_t r = 0; r < din; ++r) z[i][c] += h[i][r] * layer.weight(r, c);
    }
  }
  DenseLayerOutput out{zeros(n, n), zeros(n, dout)};
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!(adj[i][j] || i == j)) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < dout; ++c) s += layer.attn_src[c] * z[i][c] + layer.attn_dst[c] * z[j][c];
      const double lr = s > 0.0 ? s : slope * s;
      e[j] = std::exp(lr);
      denom += e[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (adj[i][j] || i == j) out.alpha[i][j] = e[j] / denom;
    }
    for (std::size_t c = 0; c < dout; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += out.alpha[i][j] * z[j][c];
      out.h[i][c] = acc > 0.0 ? acc : std::exp(acc) - 1.0;
    }
  }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dense_score(const std::vector<double>& h, const std::vector<double>& q,
                          const citegraph::ScorerParams& p) {
  double z = p.b;
  for (std::size_t c = 0; c < h.size(); ++c) z += p.u[c] * h[c];
  for (std::size_t c = 0; c < q.size(); ++c) z += p.u[h.size() + c] * q[c];
  return sigmoid(z);
}

// --- retrieval loop ----------------------------------------------------------

struct OracleKept {
  citegraph::NodeIndex node;
  std::size_t hop;
  double score;
};

// The expand / score / prune loop, written with dense matrices and explicit
// node lists. Per hop l: frontier = unvisited undirected neighbors of the
// kept nodes (ascending); rows = kept (in kept order) then frontier; kept rows
// hold their latest state, frontier rows their embedding; layer min(l, 3).
inline std::vector<OracleKept> retrieval_loop(const citegraph::CitationGraph& g,
                                              const citegraph::EmbeddingMatrix& emb,
                                              const std::vector<double>& q, citegraph::NodeIndex seed,
                                              const citegraph::GatWeights& w, const citegraph::ScorerParams& p,
                                              std::size_t hops, double sigma, int held_out = -1) {
  const auto full = undirected_adjacency(g);
  const std::size_t n = g.node_count();
  auto embedding = [&](citegraph::NodeIndex v) {
    const auto r = emb.row(v);
    return std::vector<double>(r.begin(), r.end());
  };

  std::vector<OracleKept> kept;
  std::vector<std::vector<double>> state;
  std::vector<bool> visited(n, false);
  visited[seed] = true;
  if (held_out >= 0) visited[static_cast<std::size_t>(held_out)] = true;
  {
    const auto single = dense_gat_layer({{0}}, {embedding(seed)}, w.layers[0], w.leaky_slope);
    kept.push_back({seed, 0, dense_score(single.h[0], q, p)});
    state.push_back(embedding(seed));
  }
  for (std::size_t hop = 1; hop <= hops; ++hop) {
    std::vector<citegraph::NodeIndex> frontier;
    for (std::size_t v = 0; v < n; ++v) {
      if (visited[v]) continue;
      bool touches = false;
      for (const auto& k : kept) touches = touches || full[k.node][v];
      if (touches) frontier.push_back(static_cast<citegraph::NodeIndex>(v));
    }
    if (frontier.empty()) break;
    for (auto v : frontier) visited[v] = true;

    std::vector<citegraph::NodeIndex> rows;
    for (const auto& k : kept) rows.push_back(k.node);
    rows.insert(rows.end(), frontier.begin(), frontier.end());
    std::vector<std::vector<int>> adj(rows.size(), std::vector<int>(rows.size(), 0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows.size(); ++j) adj[i][j] = full[rows[i]][rows[j]];
    }
    Dense inputs = state;
    for (auto v : frontier) inputs.push_back(embedding(v));
    const auto& layer = w.layers[std::min<std::size_t>(hop, 3) - 1];
    const auto out = dense_gat_layer(adj, inputs, layer, w.leaky_slope);

    const std::size_t old = kept.size();
    for (std::size_t i = 0; i < old; ++i) state[i] = out.h[i];
    for (std::size_t i = old; i < rows.size(); ++i) {
      const double s = dense_score(out.h[i], q, p);
      if (s >= sigma) {
        kept.push_back({rows[i], hop, s});
        state.push_back(out.h[i]);
      }
    }
  }
  return kept;
}

// --- BM25 --------------------------------------------------------------------

// Whitespace-separated lowercase words only; fixtures are written to match.
inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> bm25_scores(const std::vector<std::string>& docs, const std::string& query,
                                       double k1, double b) {
  const double n = static_cast<double>(docs.size());
  std::vector<std::vector<std::string>> toks;
  double total = 0.0;
  for (const auto& d : docs) {
    toks.push_back(words(d));
    total += static_cast<double>(toks.back().size());
  }
  const double avgdl = total / n;
  std::vector<double> scores(docs.size(), 0.0);
  for (const auto& t : words(query)) {
    double df = 0.0;
    for (const auto& d : toks) df += std::count(d.begin(), d.end(), t) > 0 ? 1.0 : 0.0;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double f = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), t));
      const double dl = static_cast<double>(toks[i].size());
      scores[i] += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * dl / avgdl)) / (k1 + 1.0);
    }
  }
  return scores;
}

// --- metrics -----------------------------------------------------------------

struct Metrics {
  double recall, precision, rr, ndcg;
};

// Binary relevance; a relevant id counts once even when repeated.
inline Metrics metrics(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                       std::size_t k) {
  std::set<std::string> seen;
  std::vector<int> rel;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    const bool r = relevant.count(ranked[i]) && seen.insert(ranked[i]).second;
    rel.push_back(r ? 1 : 0);
  }
  double hits = 0.0;
  double dcg = 0.0;
  double rr = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    hits += rel[i];
    dcg += (std::pow(2.0, rel[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    if (relevant.count(ranked[i])) {
      rr = 1.0 / static_cast<double>(i + 1);
      break;
    }
  }
  std::vector<int> ideal(relevant.size(), 1);
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return {hits / static_cast<double>(relevant.size()), hits / static_cast<double>(k), rr,
          idcg > 0.0 ? dcg / idcg : 0.0};
}

}  // namespace oracle
