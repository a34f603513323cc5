#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "citegraph/ranking.hpp"

namespace citegraph {

inline constexpr std::size_t kDefaultCutoff = 10;

using RelevantSet = std::unordered_set<std::string>;

struct QueryJudgment {
  std::string query_id;
  RelevantSet relevant;  // in-corpus citations of the query paper
};

// Relevance is binary. Each relevant id counts once even if repeated in `ranked`.

/// hits in the top k / |relevant|. Throws std::invalid_argument when relevant is empty.
double recall_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// hits in the top k / k, also when fewer than k results were returned.
double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// 1-based position of the first relevant item within the top k, or 0 for a miss.
std::size_t first_relevant_rank(std::span<const std::string> ranked, const RelevantSet& relevant,
                                std::size_t k);

/// Mean of 1/rank over queries; rank 0 (a miss) contributes 0. Throws on an empty input.
double mrr(std::span<const std::size_t> first_ranks);

/// DCG@k / IDCG@k with gains 2^rel - 1 and discounts log2(i + 1).
double ndcg_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

struct QueryMetrics {
  std::string query_id;
  double recall = 0.0;
  double precision = 0.0;
  double reciprocal_rank = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::size_t k = kDefaultCutoff;
  double recall_at_k = 0.0;
  double precision_at_k = 0.0;
  double mrr = 0.0;
  double ndcg_at_k = 0.0;
  std::size_t query_count = 0;
  std::size_t excluded_count = 0;
  std::vector<QueryMetrics> per_query;  // included queries, in query-id order
};

/// Means over every query in `run` whose judgment has a non-empty relevant set;
/// queries with empty relevant sets are counted in excluded_count. Throws
/// DataError when a query has no judgment or when no query is left to average.
EvalReport evaluate(const std::map<std::string, RankedList>& run,
                    const std::map<std::string, QueryJudgment>& judgments, std::size_t k);

/// {k, recall_at_k, precision_at_k, mrr, ndcg_at_k, query_count, excluded_count},
/// metric values fixed at 6 decimals.
std::string eval_report_json(const EvalReport& report);
/// query_id,recall,precision,rr,ndcg
void write_per_query_csv(std::ostream& out, const EvalReport& report);

}  // namespace citegraph
