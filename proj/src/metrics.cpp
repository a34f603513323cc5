#include "citegraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

namespace {

// Marks which of the first k positions hold a not-yet-seen relevant id.
std::vector<bool> hit_mask(std::span<const std::string> ranked, const RelevantSet& relevant,
                           std::size_t k) {
  const std::size_t n = std::min(k, ranked.size());
  std::vector<bool> hits(n, false);
  std::unordered_set<std::string_view> counted;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.contains(ranked[i]) && counted.insert(ranked[i]).second) hits[i] = true;
  }
  return hits;
}

std::size_t hit_count(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  const auto hits = hit_mask(ranked, relevant, k);
  return static_cast<std::size_t>(std::count(hits.begin(), hits.end(), true));
}

void require_relevant(const RelevantSet& relevant, const char* metric) {
  if (relevant.empty()) {
    throw std::invalid_argument(std::string(metric) + ": relevant set is empty");
  }
}

}  // namespace

double recall_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_relevant(relevant, "recall_at_k");
  return static_cast<double>(hit_count(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision_at_k: k must be >= 1");
  return static_cast<double>(hit_count(ranked, relevant, k)) / static_cast<double>(k);
}

std::size_t first_relevant_rank(std::span<const std::string> ranked, const RelevantSet& relevant,
                                std::size_t k) {
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.contains(ranked[i])) return i + 1;
  }
  return 0;
}

double mrr(std::span<const std::size_t> first_ranks) {
  if (first_ranks.empty()) throw std::invalid_argument("mrr: no queries");
  double sum = 0.0;
  for (std::size_t r : first_ranks) {
    if (r > 0) sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(first_ranks.size());
}

double ndcg_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_relevant(relevant, "ndcg_at_k");
  const auto hits = hit_mask(ranked, relevant, k);
  double dcg = 0.0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(relevant.size(), k);
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

EvalReport evaluate(const std::map<std::string, RankedList>& run,
                    const std::map<std::string, QueryJudgment>& judgments, std::size_t k) {
  if (k == 0) throw UsageError("k must be >= 1");
  EvalReport report;
  report.k = k;
  std::vector<std::size_t> ranks;
  for (const auto& [query_id, list] : run) {
    const auto it = judgments.find(query_id);
    if (it == judgments.end()) throw DataError("no judgment for query " + query_id);
    const RelevantSet& relevant = it->second.relevant;
    if (relevant.empty()) {
      ++report.excluded_count;
      continue;
    }
    const auto ids = ranked_ids(list);
    QueryMetrics m;
    m.query_id = query_id;
    m.recall = recall_at_k(ids, relevant, k);
    m.precision = precision_at_k(ids, relevant, k);
    const std::size_t rank = first_relevant_rank(ids, relevant, k);
    m.reciprocal_rank = rank > 0 ? 1.0 / static_cast<double>(rank) : 0.0;
    m.ndcg = ndcg_at_k(ids, relevant, k);
    ranks.push_back(rank);
    report.recall_at_k += m.recall;
    report.precision_at_k += m.precision;
    report.ndcg_at_k += m.ndcg;
    report.per_query.push_back(std::move(m));
  }
  report.query_count = report.per_query.size();
  if (report.query_count == 0) throw DataError("evaluation has no queries with relevant citations");
  const double n = static_cast<double>(report.query_count);
  report.recall_at_k /= n;
  report.precision_at_k /= n;
  report.ndcg_at_k /= n;
  report.mrr = mrr(ranks);
  return report;
}

std::string eval_report_json(const EvalReport& r) {
  std::string out = "{";
  out += "\"k\": " + std::to_string(r.k);
  out += ", \"recall_at_k\": " + format_fixed(r.recall_at_k, 6);
  out += ", \"precision_at_k\": " + format_fixed(r.precision_at_k, 6);
  out += ", \"mrr\": " + format_fixed(r.mrr, 6);
  out += ", \"ndcg_at_k\": " + format_fixed(r.ndcg_at_k, 6);
  out += ", \"query_count\": " + std::to_string(r.query_count);
  out += ", \"excluded_count\": " + std::to_string(r.excluded_count);
  out += "}";
  return out;
}

void write_per_query_csv(std::ostream& out, const EvalReport& report) {
  out << "query_id,recall,precision,rr,ndcg\n";
  for (const auto& m : report.per_query) {
    out << m.query_id << ',' << format_fixed(m.recall, 6) << ',' << format_fixed(m.precision, 6) << ','
        << format_fixed(m.reciprocal_rank, 6) << ',' << format_fixed(m.ndcg, 6) << '\n';
  }
}

}  // namespace citegraph
