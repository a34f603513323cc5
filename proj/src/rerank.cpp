#include "citegraph/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "citegraph/error.hpp"

namespace citegraph {

namespace {

std::string display_name(NodeIndex v, const CitationGraph& graph, std::span<const PaperRecord> records) {
  if (v < records.size() && records[v].title && !records[v].title->empty()) return *records[v].title;
  return graph.id_of(v);
}

constexpr std::string_view kCandidatesHeader = "Candidate papers:";

// Candidate lines must stay single lines; the answer numbering depends on it.
std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

}  // namespace

std::vector<Triplet> verbalize_triplets(const RetrievedSubgraph& subgraph, const CitationGraph& graph,
                                        std::span<const PaperRecord> records) {
  struct Edge {
    std::size_t hop;
    NodeIndex source;
    NodeIndex target;
  };
  std::unordered_map<NodeIndex, std::size_t> hop_of;
  for (const auto& n : subgraph.nodes) hop_of.emplace(n.node, n.hop);
  std::vector<Edge> edges;
  const auto& local = subgraph.induced;
  for (const auto& [u, v] : local.graph.edges()) {
    const NodeIndex source = local.to_parent[u];
    edges.push_back({hop_of.at(source), source, local.to_parent[v]});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.hop, a.source, a.target) < std::tie(b.hop, b.source, b.target);
  });
  std::vector<Triplet> triplets;
  triplets.reserve(edges.size());
  for (const auto& e : edges) {
    triplets.push_back({display_name(e.source, graph, records), "cites",
                        display_name(e.target, graph, records)});
  }
  return triplets;
}

void RerankRequest::validate() const {
  if (candidates.empty()) throw std::invalid_argument("rerank request has no candidates");
  if (temperature != 0.0) throw std::invalid_argument("rerank temperature must be 0");
}

RerankRequest make_rerank_request(std::string query_text, const RankedList& ranked,
                                  std::span<const PaperRecord> records, std::vector<Triplet> triplets) {
  RerankRequest request;
  request.query_text = std::move(query_text);
  for (const auto& item : ranked) {
    std::string title;
    if (item.node < records.size() && records[item.node].title) title = *records[item.node].title;
    request.candidates.push_back({item.id, std::move(title)});
  }
  request.triplets = std::move(triplets);
  return request;
}

std::string build_prompt(const RerankRequest& request) {
  std::ostringstream p;
  p << "You are helping a researcher choose citations for a paper.\n"
    << "Rank the candidate papers below by how likely the query paper is to cite them.\n\n"
    << "Query paper:\n"
    << request.query_text << "\n\n"
    << kCandidatesHeader << "\n";
  for (std::size_t i = 0; i < request.candidates.size(); ++i) {
    const auto& c = request.candidates[i];
    p << (i + 1) << ". ";
    if (c.title.empty()) {
      p << one_line(c.id);
    } else {
      p << one_line(c.title) << " [" << one_line(c.id) << "]";
    }
    p << "\n";
  }
  p << "\nCitation graph context:\n";
  if (request.triplets.empty()) {
    p << "(no graph context)\n";
  } else {
    for (const auto& t : request.triplets) {
      p << "- (" << one_line(t.subject) << ", " << t.predicate << ", " << one_line(t.object) << ")\n";
    }
  }
  p << "\nAnswer with one line of the form\n"
    << "RANKING: i1, i2, ..., ik\n"
    << "listing every candidate number exactly once, most relevant first.\n"
    << "Then give a brief rationale on the following lines.\n";
  return p.str();
}

ParsedRanking parse_ranking(std::string_view response, std::size_t candidate_count) {
  ParsedRanking result;
  auto identity = [&] {
    result.order.clear();
    for (std::size_t i = 1; i <= candidate_count; ++i) result.order.push_back(i);
  };

  std::string upper(response);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  const std::size_t at = upper.find("RANKING:");
  if (at == std::string::npos) {
    identity();
    result.fallback = true;
    return result;
  }
  std::size_t line_end = response.find('\n', at);
  if (line_end == std::string_view::npos) line_end = response.size();
  const std::string_view line = response.substr(at + 8, line_end - at - 8);

  std::vector<bool> used(candidate_count + 1, false);
  for (std::size_t i = 0; i < line.size();) {
    if (!std::isdigit(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t value = 0;
    bool overflow = false;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
      if (value > 1'000'000) overflow = true;
      value = value * 10 + static_cast<std::size_t>(line[j] - '0');
      ++j;
    }
    if (!overflow && value >= 1 && value <= candidate_count && !used[value]) {
      used[value] = true;
      result.order.push_back(value);
    }
    i = j;
  }
  if (result.order.empty()) {
    identity();
    result.fallback = candidate_count > 0;
    return result;
  }
  for (std::size_t i = 1; i <= candidate_count; ++i) {
    if (!used[i]) result.order.push_back(i);
  }
  return result;
}

nlohmann::json chat_request_json(const ChatRequest& request) {
  auto messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

std::string chat_response_content(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw NetworkError("chat endpoint returned non-JSON body");
  if (auto it = j.find("choices"); it != j.end() && it->is_array() && !it->empty()) {
    const auto& choice = it->front();
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      return choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
  }
  if (auto it = j.find("message"); it != j.end() && it->is_object() && it->contains("content") &&
                                   (*it)["content"].is_string()) {
    return (*it)["content"].get<std::string>();
  }
  if (auto it = j.find("content"); it != j.end() && it->is_string()) return it->get<std::string>();
  throw NetworkError("chat endpoint response has no assistant content");
}

std::string EchoChatClient::complete(const ChatRequest& request) {
  std::size_t count = 0;
  for (const auto& m : request.messages) {
    if (m.role != "user") continue;
    const std::size_t start = m.content.find(kCandidatesHeader);
    if (start == std::string::npos) continue;
    std::istringstream lines(m.content.substr(start + kCandidatesHeader.size()));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line) && !line.empty()) ++count;
  }
  std::string answer = "RANKING:";
  for (std::size_t i = 1; i <= count; ++i) answer += (i == 1 ? " " : ", ") + std::to_string(i);
  answer += "\nKeeping the retriever's order.";
  return answer;
}

RerankResult rerank(ChatClient& client, const RerankRequest& request, const RankedList& original) {
  request.validate();
  if (request.candidates.size() != original.size()) {
    throw std::invalid_argument("rerank: request candidates do not match the ranked list");
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (request.candidates[i].id != original[i].id) {
      throw std::invalid_argument("rerank: candidate order does not match the ranked list");
    }
  }
  ChatRequest chat;
  chat.model = request.model;
  chat.temperature = request.temperature;
  chat.max_tokens = request.max_tokens;
  chat.messages = {{"system", "You rank candidate citations for research papers. Follow the answer format exactly."},
                   {"user", build_prompt(request)}};

  RerankResult result;
  try {
    result.response = client.complete(chat);
  } catch (const NetworkError&) {
    result.ranked = original;
    result.fallback = true;
    return result;
  }
  const ParsedRanking parsed = parse_ranking(result.response, original.size());
  if (parsed.fallback) {
    result.ranked = original;
    result.fallback = true;
    return result;
  }
  result.ranked.reserve(original.size());
  for (std::size_t pos = 0; pos < parsed.order.size(); ++pos) {
    RankedItem item = original[parsed.order[pos] - 1];
    item.score = 1.0 / static_cast<double>(pos + 1);
    result.ranked.push_back(std::move(item));
  }
  return result;
}

}  // namespace citegraph
