#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "citegraph/baselines.hpp"
#include "citegraph/corpus.hpp"
#include "citegraph/embed.hpp"
#include "citegraph/gat.hpp"
#include "citegraph/graph.hpp"
#include "citegraph/metrics.hpp"
#include "citegraph/rerank.hpp"
#include "citegraph/retriever.hpp"

namespace citegraph {

inline constexpr std::string_view kMethodBm25 = "bm25";
inline constexpr std::string_view kMethodDense = "dense";
inline constexpr std::string_view kMethodHybrid = "hybrid";
inline constexpr std::string_view kMethodAttn = "attn";
inline constexpr std::string_view kMethodAttnLlm = "attn+llm";

enum class LlmMode { kOff, kMock, kHttp };

struct RunConfig {
  std::string corpus;      // JSONL
  std::string embeddings;  // TSV; empty means hash embeddings
  std::string weights;     // model JSON; empty means seeded random GAT and a zero scorer
  std::string output;

  RetrieverConfig retriever;
  HybridConfig hybrid;
  Bm25Params bm25;
  std::size_t k = kDefaultCutoff;
  std::uint64_t seed = 42;
  std::size_t subset = 1000;
  std::size_t llm_subset = 100;
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t threads = 1;  // 0 uses every hardware thread
  std::vector<std::string> methods{std::string(kMethodBm25), std::string(kMethodDense),
                                   std::string(kMethodHybrid), std::string(kMethodAttn)};
  LlmMode llm = LlmMode::kMock;
  std::string llm_model = std::string(kDefaultRerankModel);

  std::size_t train_queries = 2000;
  TrainConfig train;

  /// Throws UsageError for out-of-range values or unknown methods.
  void validate() const;
};

/// Sets one field from its config-file key. Throws UsageError for an unknown
/// key or a malformed value.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; blank lines and lines starting with '#' are skipped.
void apply_config_stream(RunConfig& config, std::istream& in, const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::string& path);

std::vector<std::string> parse_method_list(std::string_view text);
LlmMode parse_llm_mode(std::string_view text);

/// Records (aligned with graph nodes), ingest report and graph.
struct Corpus {
  std::vector<PaperRecord> records;
  IngestReport report;
  CitationGraph graph;
  std::vector<std::string> texts;  // build_text per node
};

Corpus load_corpus(const std::string& path);
Corpus make_corpus(std::vector<PaperRecord> records, IngestReport report = {});

/// The TSV when config.embeddings is set, hash embeddings otherwise.
EmbeddingMatrix corpus_embeddings(const RunConfig& config, const Corpus& corpus);

/// Loaded from config.weights when set; otherwise a seeded random GAT of width
/// embedding_dim and a zero scorer.
ModelWeights corpus_weights(const RunConfig& config, std::size_t embedding_dim);

/// Papers usable as queries: at least one in-corpus citation and a non-zero embedding.
std::vector<NodeIndex> eligible_queries(const Corpus& corpus, const EmbeddingMatrix& embeddings);

/// Seeded shuffle of the eligible papers. The first `evaluation_size` form the
/// evaluation split in shuffled order, the remainder is the training pool.
struct QuerySplit {
  std::vector<NodeIndex> evaluation;
  std::vector<NodeIndex> training;
};
QuerySplit split_queries(std::vector<NodeIndex> eligible, std::size_t evaluation_size, std::uint64_t seed);

std::vector<TrainingQuery> make_training_queries(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                                                 std::span<const NodeIndex> papers);

RelevantSet relevant_citations(const CitationGraph& graph, NodeIndex paper);

/// Everything one attention retrieval produces for a query.
struct AttnOutcome {
  RetrievedSubgraph subgraph;
  RankedList ranked;
};

AttnOutcome run_attention(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                          const ModelWeights& weights, const RetrieverConfig& config,
                          const QueryVector& query, std::optional<NodeIndex> held_out);

struct MethodReport {
  std::string method;
  EvalReport report;
  std::size_t fallback_count = 0;  // reranks that kept the original order
};

struct Evaluation {
  std::size_t k = kDefaultCutoff;
  std::uint64_t seed = 0;
  std::size_t eligible_count = 0;
  std::vector<MethodReport> methods;  // in config.methods order
};

/// Evaluates every configured method on the seeded evaluation split. attn+llm
/// uses the first llm_subset queries of the split and needs a client.
Evaluation run_evaluation(const RunConfig& config, const Corpus& corpus, const EmbeddingMatrix& embeddings,
                          const ModelWeights& weights, ChatClient* llm);

/// Stable text: fixed key order and 6-decimal metrics.
std::string evaluation_json(const Evaluation& evaluation);
std::string evaluation_table(const Evaluation& evaluation);

/// Client for config.llm; nullptr when off.
std::unique_ptr<ChatClient> make_chat_client(const RunConfig& config);

// --- subcommands -----------------------------------------------------------
// Each writes human-readable output to `out` and returns the process exit code.

int cmd_build(const RunConfig& config, std::ostream& out);
int cmd_embed(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);

struct RetrieveRequest {
  std::optional<std::string> query_text;
  std::optional<std::string> paper_id;  // held out of its own retrieval
  bool rerank = false;
};

int cmd_retrieve(const RunConfig& config, const RetrieveRequest& request, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);

}  // namespace citegraph
