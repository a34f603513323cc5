#include "citegraph/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string bad_value(std::string_view key, std::string_view value) {
  return "invalid value for " + std::string(key) + ": '" + std::string(value) + "'";
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw UsageError(bad_value(key, value));
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError(bad_value(key, value));
}

bool is_known_method(std::string_view m) {
  return m == kMethodBm25 || m == kMethodDense || m == kMethodHybrid || m == kMethodAttn ||
         m == kMethodAttnLlm;
}

bool has_method(const RunConfig& config, std::string_view m) {
  return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what + " path");
}

RetrieverConfig retriever_for(const RunConfig& config) {
  RetrieverConfig rc = config.retriever;
  rc.top_k = config.k;
  return rc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed: " + path);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

// --- configuration ----------------------------------------------------------

void RunConfig::validate() const {
  if (k == 0) throw UsageError("k must be >= 1");
  retriever_for(*this).validate();
  hybrid.validate();
  if (!(bm25.k1 >= 0.0)) throw UsageError("bm25_k1 must be >= 0");
  if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) throw UsageError("bm25_b must lie in [0, 1]");
  if (subset == 0) throw UsageError("subset must be >= 1");
  if (dim == 0) throw UsageError("dim must be >= 1");
  if (methods.empty()) throw UsageError("no evaluation methods selected");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (!is_known_method(m)) throw UsageError("unknown method: " + m);
    if (!seen.insert(m).second) throw UsageError("method listed twice: " + m);
  }
  if (!(train.learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (train.negatives_per_positive == 0) throw UsageError("negatives_per_positive must be >= 1");
}

std::vector<std::string> parse_method_list(std::string_view text) {
  std::vector<std::string> methods;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const auto item = trim(text.substr(start, comma - start));
    if (!item.empty()) {
      if (!is_known_method(item)) throw UsageError("unknown method: " + std::string(item));
      methods.emplace_back(item);
    }
    start = comma + 1;
  }
  if (methods.empty()) throw UsageError("empty method list");
  return methods;
}

LlmMode parse_llm_mode(std::string_view text) {
  if (text == "off") return LlmMode::kOff;
  if (text == "mock") return LlmMode::kMock;
  if (text == "http") return LlmMode::kHttp;
  throw UsageError("llm mode must be off, mock or http: " + std::string(text));
}

void apply_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "corpus") {
    c.corpus = value;
  } else if (key == "embeddings") {
    c.embeddings = value;
  } else if (key == "weights") {
    c.weights = value;
  } else if (key == "output") {
    c.output = value;
  } else if (key == "k") {
    c.k = parse_number<std::size_t>(key, value);
  } else if (key == "hops") {
    c.retriever.hops = parse_number<std::size_t>(key, value);
  } else if (key == "sigma" || key == "prune_threshold") {
    c.retriever.prune_threshold = parse_number<double>(key, value);
  } else if (key == "max_frontier") {
    c.retriever.max_frontier = parse_number<std::size_t>(key, value);
  } else if (key == "fallback_to_dense") {
    c.retriever.fallback_to_dense = parse_bool(key, value);
  } else if (key == "alpha") {
    c.hybrid.alpha = parse_number<double>(key, value);
  } else if (key == "bm25_k1") {
    c.bm25.k1 = parse_number<double>(key, value);
  } else if (key == "bm25_b") {
    c.bm25.b = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "subset") {
    c.subset = parse_number<std::size_t>(key, value);
  } else if (key == "llm_subset") {
    c.llm_subset = parse_number<std::size_t>(key, value);
  } else if (key == "dim") {
    c.dim = parse_number<std::size_t>(key, value);
  } else if (key == "threads") {
    c.threads = parse_number<std::size_t>(key, value);
  } else if (key == "methods" || key == "method") {
    c.methods = parse_method_list(value);
  } else if (key == "llm") {
    c.llm = parse_llm_mode(value);
  } else if (key == "llm_model") {
    c.llm_model = value;
  } else if (key == "train_queries") {
    c.train_queries = parse_number<std::size_t>(key, value);
  } else if (key == "epochs") {
    c.train.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "learning_rate") {
    c.train.learning_rate = parse_number<double>(key, value);
  } else if (key == "negatives_per_positive") {
    c.train.negatives_per_positive = parse_number<std::size_t>(key, value);
  } else {
    throw UsageError("unknown config key: " + std::string(key));
  }
}

void apply_config_stream(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_value(config, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  apply_config_stream(config, in, path);
}

// --- artifacts -------------------------------------------------------------

Corpus make_corpus(std::vector<PaperRecord> records, IngestReport report) {
  if (records.empty()) throw DataError("corpus has no usable records");
  Corpus c;
  c.graph = build_graph(records);
  c.texts.reserve(records.size());
  for (const auto& r : records) c.texts.push_back(build_text(r));
  c.records = std::move(records);
  c.report = report;
  return c;
}

Corpus load_corpus(const std::string& path) {
  require_path(path, "corpus");
  auto parsed = parse_records_file(path);
  return make_corpus(std::move(parsed.records), parsed.report);
}

EmbeddingMatrix corpus_embeddings(const RunConfig& config, const Corpus& corpus) {
  if (!config.embeddings.empty()) return load_embeddings(config.embeddings, corpus.graph);
  return embed_records(corpus.records, config.dim);
}

ModelWeights corpus_weights(const RunConfig& config, std::size_t embedding_dim) {
  if (config.weights.empty()) {
    ModelWeights w;
    w.gat = GatWeights::random(embedding_dim, config.seed);
    w.scorer = ScorerParams::zeros(2 * embedding_dim);
    return w;
  }
  ModelWeights w = load_model_weights(config.weights);
  for (std::size_t d : w.gat.dims()) {
    if (d != embedding_dim) {
      throw DataError("weights in " + config.weights + " do not match embedding width " +
                      std::to_string(embedding_dim));
    }
  }
  if (w.scorer.u.empty()) w.scorer = ScorerParams::zeros(2 * embedding_dim);
  if (w.scorer.u.size() != 2 * embedding_dim) {
    throw DataError("scorer in " + config.weights + " expects " + std::to_string(w.scorer.u.size()) +
                    " inputs, need " + std::to_string(2 * embedding_dim));
  }
  return w;
}

std::vector<NodeIndex> eligible_queries(const Corpus& corpus, const EmbeddingMatrix& embeddings) {
  std::vector<NodeIndex> out;
  for (NodeIndex v = 0; v < corpus.graph.node_count(); ++v) {
    if (!corpus.graph.out_neighbors(v).empty() && l2_norm(embeddings.row(v)) > 0.0) out.push_back(v);
  }
  return out;
}

QuerySplit split_queries(std::vector<NodeIndex> eligible, std::size_t evaluation_size, std::uint64_t seed) {
  Rng rng(seed);
  stable_shuffle(eligible, rng);
  const std::size_t n = std::min(evaluation_size, eligible.size());
  QuerySplit split;
  split.evaluation.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(n));
  split.training.assign(eligible.begin() + static_cast<std::ptrdiff_t>(n), eligible.end());
  return split;
}

std::vector<TrainingQuery> make_training_queries(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                                                 std::span<const NodeIndex> papers) {
  std::vector<TrainingQuery> out;
  out.reserve(papers.size());
  for (NodeIndex p : papers) {
    const auto cited = corpus.graph.out_neighbors(p);
    out.push_back({p, embeddings.as_query(p), {cited.begin(), cited.end()}});
  }
  return out;
}

RelevantSet relevant_citations(const CitationGraph& graph, NodeIndex paper) {
  RelevantSet out;
  for (NodeIndex v : graph.out_neighbors(paper)) out.insert(graph.id_of(v));
  return out;
}

AttnOutcome run_attention(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                          const ModelWeights& weights, const RetrieverConfig& config,
                          const QueryVector& query, std::optional<NodeIndex> held_out) {
  const NodeIndex seed = select_seed(query, embeddings, corpus.graph, held_out);
  AttnOutcome out;
  out.subgraph = retrieve_subgraph(corpus.graph, embeddings, query, seed, weights.gat, weights.scorer,
                                   config, held_out);
  out.ranked = decode_and_rank(out.subgraph, query, embeddings, corpus.graph, config, std::nullopt, held_out);
  return out;
}

std::unique_ptr<ChatClient> make_chat_client(const RunConfig& config) {
  switch (config.llm) {
    case LlmMode::kOff:
      return nullptr;
    case LlmMode::kMock:
      return std::make_unique<EchoChatClient>();
    case LlmMode::kHttp:
      return std::make_unique<HttpChatClient>(http_config_from_env());
  }
  return nullptr;
}

// --- evaluation ------------------------------------------------------------

Evaluation run_evaluation(const RunConfig& config, const Corpus& corpus, const EmbeddingMatrix& embeddings,
                          const ModelWeights& weights, ChatClient* llm) {
  config.validate();
  if (has_method(config, kMethodAttnLlm) && llm == nullptr) {
    throw UsageError("attn+llm needs an LLM client; set llm to mock or http");
  }
  const auto eligible = eligible_queries(corpus, embeddings);
  const QuerySplit split = split_queries(eligible, config.subset, config.seed);
  const auto& queries = split.evaluation;
  if (queries.empty()) throw DataError("no paper has an in-corpus citation to evaluate against");
  const std::size_t n = queries.size();
  const std::size_t llm_n = std::min(config.llm_subset, n);

  std::optional<Bm25Index> bm25;
  if (has_method(config, kMethodBm25) || has_method(config, kMethodHybrid)) {
    bm25 = Bm25Index::build(corpus.texts, corpus.graph.node_ids(), config.bm25);
  }
  const bool need_attn = has_method(config, kMethodAttn) || has_method(config, kMethodAttnLlm);
  const RetrieverConfig rc = retriever_for(config);
  const auto& ids = corpus.graph.node_ids();

  // lists[m][slot]; results are gathered by query slot so thread timing never
  // affects the output.
  std::vector<std::vector<RankedList>> lists(config.methods.size(), std::vector<RankedList>(n));
  std::vector<char> fell_back(n, 0);
  std::vector<std::exception_ptr> errors(n);

  auto run_slot = [&](std::size_t slot) {
    const NodeIndex paper = queries[slot];
    const QueryVector q = embeddings.as_query(paper);
    const std::string& text = corpus.texts[paper];
    std::optional<AttnOutcome> attn;
    if (need_attn) attn = run_attention(corpus, embeddings, weights, rc, q, paper);
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const std::string& method = config.methods[m];
      RankedList& list = lists[m][slot];
      if (method == kMethodBm25) {
        list = bm25_rank(*bm25, text, config.k, paper);
      } else if (method == kMethodDense) {
        list = dense_rank(q, embeddings, ids, config.k, paper);
      } else if (method == kMethodHybrid) {
        list = hybrid_search(*bm25, text, q, embeddings, config.hybrid, config.k, paper);
      } else if (method == kMethodAttn) {
        list = attn->ranked;
      } else if (method == kMethodAttnLlm) {
        if (slot >= llm_n || attn->ranked.empty()) {
          list = attn->ranked;
          continue;
        }
        auto request = make_rerank_request(text, attn->ranked, corpus.records,
                                           verbalize_triplets(attn->subgraph, corpus.graph, corpus.records));
        request.model = config.llm_model;
        auto result = rerank(*llm, request, attn->ranked);
        fell_back[slot] = result.fallback ? 1 : 0;
        list = std::move(result.ranked);
      }
    }
  };

  std::size_t workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t slot = next++; slot < n; slot = next++) {
      try {
        run_slot(slot);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Evaluation ev;
  ev.k = config.k;
  ev.seed = config.seed;
  ev.eligible_count = eligible.size();
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const bool llm_method = config.methods[m] == kMethodAttnLlm;
    const std::size_t count = llm_method ? llm_n : n;
    std::map<std::string, RankedList> run;
    std::map<std::string, QueryJudgment> judgments;
    MethodReport mr;
    mr.method = config.methods[m];
    for (std::size_t slot = 0; slot < count; ++slot) {
      const std::string& id = corpus.graph.id_of(queries[slot]);
      run.emplace(id, std::move(lists[m][slot]));
      judgments.emplace(id, QueryJudgment{id, relevant_citations(corpus.graph, queries[slot])});
      if (llm_method) mr.fallback_count += static_cast<std::size_t>(fell_back[slot]);
    }
    mr.report = evaluate(run, judgments, config.k);
    ev.methods.push_back(std::move(mr));
  }
  return ev;
}

std::string evaluation_json(const Evaluation& ev) {
  std::string out = "{\n";
  out += "  \"k\": " + std::to_string(ev.k) + ",\n";
  out += "  \"seed\": " + std::to_string(ev.seed) + ",\n";
  out += "  \"eligible_queries\": " + std::to_string(ev.eligible_count) + ",\n";
  out += "  \"methods\": [";
  for (std::size_t i = 0; i < ev.methods.size(); ++i) {
    const auto& m = ev.methods[i];
    const std::string body = eval_report_json(m.report);
    out += i == 0 ? "\n" : ",\n";
    out += "    {\"method\": " + nlohmann::json(m.method).dump() + ", " + body.substr(1, body.size() - 2);
    if (m.method == kMethodAttnLlm) out += ", \"rerank_fallbacks\": " + std::to_string(m.fallback_count);
    out += "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

std::string evaluation_table(const Evaluation& ev) {
  const std::string k = std::to_string(ev.k);
  std::string out = pad("method", 10) + pad("recall@" + k, 12) + pad("prec@" + k, 12) + pad("mrr", 10) +
                    pad("ndcg@" + k, 10) + "queries\n";
  for (const auto& m : ev.methods) {
    const auto& r = m.report;
    out += pad(m.method, 10) + pad(format_fixed(r.recall_at_k, 4), 12) + pad(format_fixed(r.precision_at_k, 4), 12) +
           pad(format_fixed(r.mrr, 4), 10) + pad(format_fixed(r.ndcg_at_k, 4), 10) + std::to_string(r.query_count) +
           "\n";
  }
  return out;
}

// --- subcommands -----------------------------------------------------------

int cmd_build(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = load_corpus(config.corpus);
  const auto report = to_json(corpus.report);
  if (!config.output.empty()) {
    write_snapshot_file(config.output, corpus.graph);
    write_text_file(config.output + ".report.json", report.dump(2) + "\n");
  }
  out << report.dump(2) << "\n";
  out << "nodes " << corpus.graph.node_count() << " edges " << corpus.graph.edge_count() << " (directed)\n";
  return 0;
}

int cmd_embed(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = load_corpus(config.corpus);
  if (!config.embeddings.empty()) {
    const auto m = load_embeddings(config.embeddings, corpus.graph);
    out << "embeddings ok: " << m.rows() << " rows, dim " << m.dim() << "\n";
    return 0;
  }
  require_path(config.output, "output");
  const auto m = embed_records(corpus.records, config.dim);
  std::ofstream f(config.output);
  if (!f) throw DataError("cannot write " + config.output);
  write_embeddings(f, m, corpus.graph);
  if (!f) throw DataError("write failed: " + config.output);
  out << "wrote " << m.rows() << " hash embeddings of dim " << m.dim() << " to " << config.output << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  require_path(config.output, "output");
  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingMatrix embeddings = corpus_embeddings(config, corpus);
  ModelWeights weights = corpus_weights(config, embeddings.dim());

  auto split = split_queries(eligible_queries(corpus, embeddings), config.subset, config.seed);
  if (split.training.empty()) {
    throw DataError("no training queries remain after the evaluation split; lower subset");
  }
  if (split.training.size() > config.train_queries) split.training.resize(config.train_queries);
  const auto queries = make_training_queries(corpus, embeddings, split.training);

  TrainConfig tc = config.train;
  tc.seed = config.seed;
  const ScorerBatch batch = build_training_batch(corpus.graph, embeddings, weights.gat, queries, tc);
  const TrainResult result = fit_scorer(batch, tc, ScorerParams::zeros(batch.features.cols()));
  weights.scorer = result.params;
  save_model_weights(config.output, weights);

  out << "training queries " << queries.size() << ", pairs " << batch.labels.size() << "\n";
  out << "loss " << format_fixed(result.loss_trace.front(), 6) << " -> "
      << format_fixed(result.loss_trace.back(), 6) << " over " << tc.epochs << " epochs\n";
  out << "train accuracy " << format_fixed(scorer_accuracy(result.params, batch), 4) << "\n";
  out << "wrote " << config.output << "\n";
  return 0;
}

int cmd_retrieve(const RunConfig& config, const RetrieveRequest& request, std::ostream& out) {
  config.validate();
  if (request.query_text.has_value() == request.paper_id.has_value()) {
    throw UsageError("give exactly one of --query or --paper-id");
  }
  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingMatrix embeddings = corpus_embeddings(config, corpus);
  const ModelWeights weights = corpus_weights(config, embeddings.dim());

  QueryVector query;
  std::optional<NodeIndex> held_out;
  std::string query_id;
  std::string query_text;
  if (request.paper_id) {
    const NodeIndex p = corpus.graph.index_of(*request.paper_id);
    query = embeddings.as_query(p);
    held_out = p;
    query_id = *request.paper_id;
    query_text = corpus.texts[p];
  } else {
    if (!config.embeddings.empty()) {
      throw UsageError("free-text queries need hash embeddings; use --paper-id with an embeddings file");
    }
    query_text = *request.query_text;
    query = hash_embed(query_text, embeddings.dim());
  }

  const AttnOutcome attn = run_attention(corpus, embeddings, weights, retriever_for(config), query, held_out);
  auto j = retrieval_to_json(query_id, corpus.graph, attn.subgraph, attn.ranked);
  if (request.rerank) {
    auto client = make_chat_client(config);
    if (!client) throw UsageError("--rerank needs llm set to mock or http");
    if (attn.ranked.empty()) {
      j["reranked"] = to_json(attn.ranked);
      j["rerank_fallback"] = true;
    } else {
      auto rr = make_rerank_request(query_text, attn.ranked, corpus.records,
                                    verbalize_triplets(attn.subgraph, corpus.graph, corpus.records));
      rr.model = config.llm_model;
      const auto result = rerank(*client, rr, attn.ranked);
      j["reranked"] = to_json(result.ranked);
      j["rerank_fallback"] = result.fallback;
    }
  }
  const std::string text = j.dump(2) + "\n";
  if (config.output.empty()) {
    out << text;
  } else {
    write_text_file(config.output, text);
    out << "wrote " << config.output << "\n";
  }
  return 0;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  config.validate();
  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingMatrix embeddings = corpus_embeddings(config, corpus);
  const ModelWeights weights = corpus_weights(config, embeddings.dim());
  std::unique_ptr<ChatClient> client;
  if (has_method(config, kMethodAttnLlm)) client = make_chat_client(config);

  const Evaluation ev = run_evaluation(config, corpus, embeddings, weights, client.get());
  const std::string json = evaluation_json(ev);
  out << evaluation_table(ev);
  if (config.output.empty()) {
    out << json;
  } else {
    write_text_file(config.output, json);
    out << "wrote " << config.output << "\n";
  }
  return 0;
}

}  // namespace citegraph
