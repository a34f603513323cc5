#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citegraph/corpus.hpp"
#include "citegraph/ranking.hpp"
#include "citegraph/retriever.hpp"

namespace citegraph {

struct Triplet {
  std::string subject;
  std::string predicate = "cites";
  std::string object;

  bool operator==(const Triplet&) const = default;
};

/// One triplet per induced edge of the retrieved subgraph, ordered by
/// (source hop, source index, target index). Titles are used when the record
/// has one, ids otherwise. `records` is aligned with graph node indices.
std::vector<Triplet> verbalize_triplets(const RetrievedSubgraph& subgraph, const CitationGraph& graph,
                                        std::span<const PaperRecord> records);

struct RerankCandidate {
  std::string id;
  std::string title;  // may be empty
};

inline constexpr std::string_view kDefaultRerankModel = "meta-llama/Meta-Llama-3-8B-Instruct";

struct RerankRequest {
  std::string query_text;
  std::vector<RerankCandidate> candidates;
  std::vector<Triplet> triplets;
  std::string model = std::string(kDefaultRerankModel);
  int max_tokens = 512;
  double temperature = 0.0;

  /// Throws std::invalid_argument for an empty candidate list or a non-zero temperature.
  void validate() const;
};

/// Candidates and titles for the items of a ranked list.
RerankRequest make_rerank_request(std::string query_text, const RankedList& ranked,
                                  std::span<const PaperRecord> records, std::vector<Triplet> triplets);

/// Deterministic prompt: instruction, query, numbered candidates, graph context
/// and the required "RANKING: i1, i2, ..., ik" answer line.
std::string build_prompt(const RerankRequest& request);

struct ParsedRanking {
  std::vector<std::size_t> order;  // 1-based permutation of 1..candidate_count
  bool fallback = false;           // true when no usable RANKING line was found
};

/// Reads the first "RANKING:" line, keeps in-range indices at first occurrence and
/// appends the missing ones in original order. Without a usable line the result
/// is the identity permutation with fallback set. Never throws.
ParsedRanking parse_ranking(std::string_view response, std::size_t candidate_count);

// --- chat-completion transport ---------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
};

/// {model, messages: [{role, content}], temperature, max_tokens}
nlohmann::json chat_request_json(const ChatRequest& request);

/// Assistant text from an OpenAI-style ({choices[0].message.content}) or
/// Ollama-style ({message.content}) response. Throws NetworkError otherwise.
std::string chat_response_content(std::string_view body);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the assistant message. Throws NetworkError on transport failure.
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct HttpClientConfig {
  std::string url;    // full endpoint URL, e.g. http://localhost:8000/v1/chat/completions
  std::string token;  // bearer token; may be empty
  std::chrono::seconds timeout{60};
  int retries = 2;    // extra attempts after the first
};

inline constexpr const char* kLlmUrlEnv = "CITEGRAPH_LLM_URL";
inline constexpr const char* kLlmTokenEnv = "CITEGRAPH_LLM_TOKEN";

/// Reads CITEGRAPH_LLM_URL and CITEGRAPH_LLM_TOKEN. Throws UsageError when the
/// URL is unset.
HttpClientConfig http_config_from_env();

/// POSTs chat requests over HTTP(S) with bounded retries.
class HttpChatClient : public ChatClient {
 public:
  /// Throws UsageError for a malformed URL or an unsupported scheme.
  explicit HttpChatClient(HttpClientConfig config);
  ~HttpChatClient() override;

  std::string complete(const ChatRequest& request) override;

 private:
  struct Endpoint;
  HttpClientConfig config_;
  std::unique_ptr<Endpoint> endpoint_;
};

/// Offline client that always answers with the identity ranking for the
/// candidates in the prompt. Used for deterministic dry runs.
class EchoChatClient : public ChatClient {
 public:
  std::string complete(const ChatRequest& request) override;
};

struct RerankResult {
  RankedList ranked;
  bool fallback = false;
  std::string response;  // raw assistant text, empty on network failure
};

/// Applies the model's permutation to `original`; reranked scores are
/// 1 / position and provenance is kept. A network failure or an unparseable
/// answer returns `original` unchanged with fallback set.
RerankResult rerank(ChatClient& client, const RerankRequest& request, const RankedList& original);

}  // namespace citegraph
