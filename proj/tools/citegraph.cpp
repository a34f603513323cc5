#include <algorithm>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "citegraph/error.hpp"
#include "citegraph/pipeline.hpp"

namespace {

using citegraph::RunConfig;

// Flag values are collected as strings and replayed through the config parser
// after --config, so flags always win and share its validation.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> values;
};

void add_value_flag(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
                    const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.values.emplace_back(key, v); }, help);
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "key = value config file");
  add_value_flag(app, o, "--corpus", "corpus", "corpus JSONL");
  add_value_flag(app, o, "--embeddings", "embeddings", "embedding TSV (default: hash embeddings)");
  add_value_flag(app, o, "--weights", "weights", "model weights JSON");
  add_value_flag(app, o, "--output,-o", "output", "output path");
  add_value_flag(app, o, "--seed", "seed", "RNG seed");
  add_value_flag(app, o, "--dim", "dim", "hash embedding width");
}

void add_retrieval(CLI::App* app, Overrides& o) {
  add_value_flag(app, o, "--k", "k", "cutoff / candidates returned");
  add_value_flag(app, o, "--sigma", "sigma", "pruning threshold in [0, 1]");
  add_value_flag(app, o, "--hops", "hops", "expansion hops");
  add_value_flag(app, o, "--max-frontier", "max_frontier", "survivors kept per hop");
  add_value_flag(app, o, "--llm", "llm", "off, mock or http");
  add_value_flag(app, o, "--model", "llm_model", "chat model id");
}

RunConfig resolve(const Overrides& o) {
  RunConfig config;
  if (!o.config_path.empty()) citegraph::apply_config_file(config, o.config_path);
  for (const auto& [key, value] : o.values) citegraph::apply_config_value(config, key, value);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citegraph: citation graph retrieval and evaluation"};
  app.require_subcommand(1);

  Overrides o;
  citegraph::RetrieveRequest retrieve_request;
  std::string query_text;
  std::string paper_id;

  auto* build = app.add_subcommand("build", "parse the corpus, write a graph snapshot and ingest report");
  add_common(build, o);

  auto* embed = app.add_subcommand("embed", "write hash embeddings, or validate --embeddings");
  add_common(embed, o);

  auto* train = app.add_subcommand("train", "fit the relevance scorer");
  add_common(train, o);
  add_value_flag(train, o, "--subset", "subset", "evaluation queries held back from training");
  add_value_flag(train, o, "--epochs", "epochs", "gradient steps");
  add_value_flag(train, o, "--lr", "learning_rate", "learning rate");
  add_value_flag(train, o, "--train-queries", "train_queries", "maximum training queries");

  auto* retrieve = app.add_subcommand("retrieve", "retrieve and rank candidates for one query");
  add_common(retrieve, o);
  add_retrieval(retrieve, o);
  retrieve->add_option("--query", query_text, "free-text query (hash embeddings only)");
  retrieve->add_option("--paper-id", paper_id, "use a corpus paper as the query, held out");
  retrieve->add_flag("--rerank", retrieve_request.rerank, "rerank the candidates with the LLM");

  auto* rerank_cmd = app.add_subcommand("rerank", "retrieve, then rerank with the LLM");
  add_common(rerank_cmd, o);
  add_retrieval(rerank_cmd, o);
  rerank_cmd->add_option("--query", query_text, "free-text query (hash embeddings only)");
  rerank_cmd->add_option("--paper-id", paper_id, "use a corpus paper as the query, held out");

  auto* evaluate = app.add_subcommand("evaluate", "compare retrieval methods on held-out papers");
  add_common(evaluate, o);
  add_retrieval(evaluate, o);
  add_value_flag(evaluate, o, "--alpha", "alpha", "hybrid weight on BM25");
  add_value_flag(evaluate, o, "--method", "methods", "comma list of bm25,dense,hybrid,attn,attn+llm");
  add_value_flag(evaluate, o, "--subset", "subset", "evaluation queries");
  add_value_flag(evaluate, o, "--llm-subset", "llm_subset", "queries reranked for attn+llm");
  add_value_flag(evaluate, o, "--threads", "threads", "worker threads, 0 for all cores");
  bool eval_rerank = false;
  evaluate->add_flag("--rerank", eval_rerank, "also evaluate attn+llm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(citegraph::ExitCode::kUsage);
  }

  try {
    RunConfig config = resolve(o);
    if (build->parsed()) return citegraph::cmd_build(config, std::cout);
    if (embed->parsed()) return citegraph::cmd_embed(config, std::cout);
    if (train->parsed()) return citegraph::cmd_train(config, std::cout);
    if (retrieve->parsed() || rerank_cmd->parsed()) {
      if (!query_text.empty()) retrieve_request.query_text = query_text;
      if (!paper_id.empty()) retrieve_request.paper_id = paper_id;
      if (rerank_cmd->parsed()) retrieve_request.rerank = true;
      return citegraph::cmd_retrieve(config, retrieve_request, std::cout);
    }
    if (evaluate->parsed()) {
      if (eval_rerank && std::find(config.methods.begin(), config.methods.end(), "attn+llm") == config.methods.end()) {
        config.methods.emplace_back("attn+llm");
      }
      return citegraph::cmd_evaluate(config, std::cout);
    }
  } catch (const citegraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(citegraph::ExitCode::kData);
  }
  return static_cast<int>(citegraph::ExitCode::kUsage);
}
