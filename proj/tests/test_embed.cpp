#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "citegraph/embed.hpp"
#include "citegraph/error.hpp"
#include "oracles/oracles.hpp"

using namespace citegraph;

namespace {

CitationGraph three_nodes() { return CitationGraph::from_edges({"a", "b", "c"}, {}); }

}  // namespace

TEST_CASE("cosine basics") {
  const std::vector<double> x{3.0, -4.0};
  CHECK(cosine(x, x) == doctest::Approx(1.0));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(0.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(cosine(std::vector<double>{1, 0}, std::vector<double>{r, r}) - 0.70710678) < 1e-6);
  CHECK(cosine(std::vector<double>{0, 0}, x) == 0.0);
  CHECK_THROWS_AS(cosine(std::vector<double>{1}, x), std::invalid_argument);
}

TEST_CASE("cosine is bounded, symmetric and scale invariant") {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> u(6);
    std::vector<double> v(6);
    for (auto& a : u) a = uniform_unit(rng) * 2 - 1;
    for (auto& a : v) a = uniform_unit(rng) * 2 - 1;
    const double c = cosine(u, v);
    CHECK(std::fabs(c) <= 1.0);
    CHECK(c == doctest::Approx(cosine(v, u)));
    auto w = u;
    for (auto& a : w) a *= 3.5;
    CHECK(cosine(w, v) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("hash_embed is deterministic and bag-of-words") {
  CHECK(hash_embed("").is_zero());
  CHECK(hash_embed("graph attention").values == hash_embed("graph attention").values);
  CHECK(hash_embed("graph attention").values == hash_embed("attention graph").values);
  CHECK(hash_embed("x", 16, 1).values != hash_embed("x", 16, 2).values);
  CHECK(l2_norm(hash_embed("some words here").values) == doctest::Approx(1.0));
}

TEST_CASE("hash_embed equals an independent token-count construction") {
  const std::string text = "Graph attention; graph RETRIEVAL of graph nodes";
  const std::size_t dim = 32;
  std::map<std::string, int> counts;
  for (const auto& t : oracle::words("graph attention graph retrieval of graph nodes")) ++counts[t];
  std::vector<double> expected(dim, 0.0);
  for (const auto& [token, n] : counts) {
    const auto h = fnv1a64(token, kDefaultHashSeed);
    expected[h % dim] += ((h >> 63) ? -1.0 : 1.0) * n;
  }
  double norm = 0.0;
  for (double x : expected) norm += x * x;
  norm = std::sqrt(norm);
  const auto got = hash_embed(text, dim);
  for (std::size_t i = 0; i < dim; ++i) CHECK(got.values[i] == doctest::Approx(expected[i] / norm));
}

TEST_CASE("embedding TSV round trip normalizes rows") {
  const auto g = three_nodes();
  std::istringstream in("3\t2\na\t3\t4\nb\t0\t0\nc\t1\t0\n");
  const auto m = load_embeddings(in, g);
  CHECK(m.rows() == 3);
  CHECK(m.dim() == 2);
  CHECK(m.row(0)[0] == doctest::Approx(0.6));
  CHECK(m.row(0)[1] == doctest::Approx(0.8));
  CHECK(m.row(1)[0] == 0.0);
  std::stringstream out;
  write_embeddings(out, m, g);
  const auto again = load_embeddings(out, g);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 2; ++k) CHECK(again.row(i)[k] == m.row(i)[k]);
  }
}

TEST_CASE("embedding TSV rows follow graph order, extra ids ignored") {
  const auto g = three_nodes();
  std::istringstream in("4\t1\nc\t3\nzz\t1\na\t1\nb\t2\n");
  const auto m = load_embeddings(in, g);
  CHECK(m.row(2)[0] == doctest::Approx(1.0));
}

TEST_CASE("embedding TSV errors") {
  const auto g = three_nodes();
  auto load = [&](const std::string& text) {
    std::istringstream in(text);
    return load_embeddings(in, g);
  };
  CHECK_THROWS_WITH_AS(load("2\t1\na\t1\nb\t1\n"), doctest::Contains("c"), DataError);
  CHECK_THROWS_AS(load("3\t2\na\t1\nb\t1\t1\nc\t1\t1\n"), DataError);
  CHECK_THROWS_AS(load("3\t1\na\t1\na\t1\nc\t1\n"), DataError);
  CHECK_THROWS_AS(load("3\t1\na\tx\nb\t1\nc\t1\n"), DataError);
  CHECK_THROWS_AS(load("4\t1\na\t1\nb\t1\nc\t1\n"), DataError);
  CHECK_THROWS_AS(load(""), DataError);
}

TEST_CASE("normalized rows have unit norm") {
  Rng rng(32);
  const auto m = oracle::random_embeddings(20, 7, rng);
  for (std::size_t i = 0; i < m.rows(); ++i) CHECK(std::fabs(l2_norm(m.row(i)) - 1.0) < 1e-6);
  const auto q = m.as_query(3);
  CHECK(q.values == std::vector<double>(m.row(3).begin(), m.row(3).end()));
}
