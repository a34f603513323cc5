#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "citegraph/error.hpp"
#include "citegraph/rerank.hpp"
#include "oracles/oracles.hpp"

using namespace citegraph;

namespace {

PaperRecord titled(std::string id, std::optional<std::string> title) {
  PaperRecord r;
  r.id = std::move(id);
  r.title = std::move(title);
  return r;
}

RankedList three_candidates() {
  return {{1, "p1", 0.9, Provenance::kGraph}, {2, "p2", 0.8, Provenance::kGraph},
          {3, "p3", 0.7, Provenance::kDenseFallback}};
}

std::vector<PaperRecord> four_records() {
  return {titled("p0", "Seed paper"), titled("p1", "Graph attention"), titled("p2", std::nullopt),
          titled("p3", "Dense retrieval")};
}

class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(std::string answer) : answer_(std::move(answer)) {}
  std::string complete(const ChatRequest& request) override {
    last = request;
    return answer_;
  }
  ChatRequest last;

 private:
  std::string answer_;
};

class DownClient : public ChatClient {
 public:
  std::string complete(const ChatRequest&) override { throw NetworkError("connection refused"); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("triplets cover every induced edge in hop order") {
  // p0 -> p1, p0 -> p2, p1 -> p3, p3 -> p2
  const auto g = CitationGraph::from_edges({"p0", "p1", "p2", "p3"}, {{0, 1}, {0, 2}, {1, 3}, {3, 2}});
  RetrievedSubgraph sub;
  sub.seed = 0;
  for (NodeIndex v : {0u, 1u, 2u, 3u}) sub.kept.insert(v);
  sub.nodes = {{0, 1.0, 0, {}}, {1, 0.9, 1, {}}, {2, 0.8, 1, {}}, {3, 0.7, 2, {}}};
  sub.induced = induced_subgraph(g, sub.kept);
  const auto records = four_records();
  const auto t = verbalize_triplets(sub, g, records);
  REQUIRE(t.size() == 4);
  CHECK(t[0] == Triplet{"Seed paper", "cites", "Graph attention"});
  CHECK(t[1] == Triplet{"Seed paper", "cites", "p2"});
  CHECK(t[2] == Triplet{"Graph attention", "cites", "Dense retrieval"});
  CHECK(t[3] == Triplet{"Dense retrieval", "cites", "p2"});
}

TEST_CASE("a singleton subgraph has no triplets") {
  const auto g = CitationGraph::from_edges({"a"}, {});
  RetrievedSubgraph sub;
  sub.kept.insert(0);
  sub.nodes = {{0, 1.0, 0, {}}};
  sub.induced = induced_subgraph(g, sub.kept);
  CHECK(verbalize_triplets(sub, g, {}).empty());
}

TEST_CASE("prompt structure") {
  const auto records = four_records();
  auto req = make_rerank_request("Attention over citation graphs", three_candidates(), records, {});
  const auto prompt = build_prompt(req);
  CHECK(prompt.find("Attention over citation graphs") != std::string::npos);
  CHECK(prompt.find("1. Graph attention [p1]\n") != std::string::npos);
  CHECK(prompt.find("2. p2\n") != std::string::npos);
  CHECK(prompt.find("(no graph context)") != std::string::npos);
  CHECK(prompt.find("RANKING: i1, i2, ..., ik") != std::string::npos);
  CHECK(build_prompt(req) == prompt);

  req.triplets = {{"Seed paper", "cites", "Graph attention"}};
  const auto with_context = build_prompt(req);
  CHECK(with_context.find("- (Seed paper, cites, Graph attention)") != std::string::npos);
  CHECK(with_context.find("(no graph context)") == std::string::npos);
}

TEST_CASE("prompt matches the golden file") {
  const auto records = four_records();
  const auto req = make_rerank_request("Attention over citation graphs", three_candidates(), records,
                                       {{"Seed paper", "cites", "Graph attention"},
                                        {"Graph attention", "cites", "Dense retrieval"}});
  CHECK(build_prompt(req) == read_file(std::string(CITEGRAPH_TEST_DATA) + "/golden_prompt.txt"));
}

TEST_CASE("newlines in titles cannot break candidate numbering") {
  std::vector<PaperRecord> records{titled("a", "x"), titled("b", "two\nlines")};
  const RankedList one{{1, "b", 1.0, Provenance::kGraph}};
  const auto prompt = build_prompt(make_rerank_request("q", one, records, {}));
  CHECK(prompt.find("1. two lines [b]\n") != std::string::npos);
}

TEST_CASE("request validation") {
  RerankRequest req;
  CHECK_THROWS_AS(req.validate(), std::invalid_argument);
  req.candidates = {{"a", ""}};
  req.temperature = 0.7;
  CHECK_THROWS_AS(req.validate(), std::invalid_argument);
}

TEST_CASE("parse_ranking") {
  CHECK(parse_ranking("RANKING: 2, 2, 9, 1", 3).order == std::vector<std::size_t>{2, 1, 3});
  CHECK_FALSE(parse_ranking("RANKING: 2, 2, 9, 1", 3).fallback);
  CHECK(parse_ranking("Sure!\nranking: 3 1 2\nBecause...", 3).order == std::vector<std::size_t>{3, 1, 2});
  const auto none = parse_ranking("I cannot help with that.", 3);
  CHECK(none.fallback);
  CHECK(none.order == std::vector<std::size_t>{1, 2, 3});
  CHECK(parse_ranking("RANKING: none", 2).fallback);
  CHECK(parse_ranking("RANKING: 99999999999999999999999, 2", 2).order == std::vector<std::size_t>{2, 1});
  CHECK(parse_ranking("", 0).order.empty());
}

TEST_CASE("parse_ranking always returns a permutation") {
  Rng rng(81);
  const std::string alphabet = "RANKING:0123456789, \nxyz-";
  for (int i = 0; i < 3000; ++i) {
    std::string s = uniform_unit(rng) < 0.5 ? "RANKING:" : "";
    const auto len = uniform_index(rng, 30);
    for (std::uint64_t j = 0; j < len; ++j) s.push_back(alphabet[uniform_index(rng, alphabet.size())]);
    const std::size_t n = uniform_index(rng, 12);
    auto order = parse_ranking(s, n).order;
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), std::size_t{1});
    CHECK(order == expected);
  }
}

TEST_CASE("chat JSON helpers") {
  ChatRequest req{"m", {{"user", "hi"}}, 0.0, 64};
  const auto j = chat_request_json(req);
  CHECK(j["model"] == "m");
  CHECK(j["messages"][0]["content"] == "hi");
  CHECK(j["max_tokens"] == 64);
  CHECK(chat_response_content(R"({"choices":[{"message":{"content":"ok"}}]})") == "ok");
  CHECK(chat_response_content(R"({"message":{"role":"assistant","content":"ok2"}})") == "ok2");
  CHECK_THROWS_AS(chat_response_content("<html>"), NetworkError);
  CHECK_THROWS_AS(chat_response_content(R"({"error":"x"})"), NetworkError);
}

TEST_CASE("rerank applies the model permutation") {
  const auto records = four_records();
  const auto original = three_candidates();
  const auto req = make_rerank_request("q", original, records, {});

  SUBCASE("identity answer keeps the order") {
    EchoChatClient echo;
    const auto r = rerank(echo, req, original);
    CHECK_FALSE(r.fallback);
    CHECK(ranked_ids(r.ranked) == ranked_ids(original));
    CHECK(r.response.rfind("RANKING: 1, 2, 3", 0) == 0);
  }
  SUBCASE("reversal") {
    ScriptedClient client("RANKING: 3, 2, 1");
    const auto r = rerank(client, req, original);
    CHECK(ranked_ids(r.ranked) == std::vector<std::string>{"p3", "p2", "p1"});
    CHECK(r.ranked[0].score == doctest::Approx(1.0));
    CHECK(r.ranked[1].score == doctest::Approx(0.5));
    CHECK(r.ranked[0].provenance == Provenance::kDenseFallback);
    REQUIRE(client.last.messages.size() == 2);
    CHECK(client.last.temperature == 0.0);
    CHECK(client.last.model == std::string(kDefaultRerankModel));
  }
  SUBCASE("unusable answer falls back") {
    ScriptedClient client("no idea");
    const auto r = rerank(client, req, original);
    CHECK(r.fallback);
    CHECK(r.ranked == original);
  }
  SUBCASE("network failure falls back") {
    DownClient down;
    const auto r = rerank(down, req, original);
    CHECK(r.fallback);
    CHECK(r.ranked == original);
    CHECK(r.response.empty());
  }
  SUBCASE("mismatched request is a contract error") {
    EchoChatClient echo;
    RankedList shorter(original.begin(), original.begin() + 2);
    CHECK_THROWS_AS(rerank(echo, req, shorter), std::invalid_argument);
  }
}
