#include "citegraph/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

bool QueryVector::is_zero() const {
  for (double x : values) {
    if (x != 0.0) return false;
  }
  return true;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

std::span<const double> EmbeddingMatrix::row(std::size_t i) const {
  if (i >= rows_) throw std::out_of_range("embedding row out of range");
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

std::span<double> EmbeddingMatrix::row(std::size_t i) {
  if (i >= rows_) throw std::out_of_range("embedding row out of range");
  return std::span<double>(data_).subspan(i * dim_, dim_);
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    const double norm = l2_norm(r);
    if (norm == 0.0) continue;
    for (double& x : r) x /= norm;
  }
  normalized_ = true;
}

QueryVector EmbeddingMatrix::as_query(std::size_t i) const {
  const auto r = row(i);
  QueryVector q{{r.begin(), r.end()}};
  if (!normalized_) {
    const double norm = l2_norm(q.values);
    if (norm > 0.0) {
      for (double& x : q.values) x /= norm;
    }
  }
  return q;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

QueryVector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("hash_embed: dim must be >= 1");
  QueryVector q{std::vector<double>(dim, 0.0)};
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = fnv1a64(token, seed);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    q.values[h % dim] += sign;
  }
  const double norm = l2_norm(q.values);
  if (norm > 0.0) {
    for (double& x : q.values) x /= norm;
  }
  return q;
}

EmbeddingMatrix embed_records(const std::vector<PaperRecord>& records, std::size_t dim,
                              std::uint64_t seed) {
  EmbeddingMatrix m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const QueryVector q = hash_embed(build_text(records[i]), dim, seed);
    std::copy(q.values.begin(), q.values.end(), m.row(i).begin());
  }
  m.normalize_rows();
  return m;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::size_t parse_count(std::string_view field, const char* what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError(std::string("embedding file: bad ") + what + " in header");
  }
  return value;
}

}  // namespace

EmbeddingMatrix load_embeddings(std::istream& in, const CitationGraph& graph) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding file: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_tabs(line);
  if (header.size() != 2) throw DataError("embedding file: header must be <count>\\t<dim>");
  const std::size_t count = parse_count(header[0], "count");
  const std::size_t dim = parse_count(header[1], "dim");
  if (dim == 0) throw DataError("embedding file: dim must be >= 1");

  EmbeddingMatrix m(graph.node_count(), dim);
  std::vector<bool> filled(graph.node_count(), false);
  std::unordered_set<std::string> seen;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++lines;
    const auto fields = split_tabs(line);
    if (fields.size() != dim + 1) {
      throw DataError("embedding file: dim mismatch on line " + std::to_string(lines + 1) +
                      " (expected " + std::to_string(dim) + " values, got " +
                      std::to_string(fields.size() - 1) + ")");
    }
    const std::string id(fields[0]);
    if (!seen.insert(id).second) throw DataError("embedding file: duplicate id " + id);
    NodeIndex v = 0;
    if (!graph.find(id, v)) continue;
    auto row = m.row(v);
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string_view f = fields[k + 1];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(value)) {
        throw DataError("embedding file: bad value for id " + id);
      }
      row[k] = value;
    }
    filled[v] = true;
  }
  if (lines != count) {
    throw DataError("embedding file: header says " + std::to_string(count) + " rows, found " +
                    std::to_string(lines));
  }
  std::vector<std::string> missing;
  for (NodeIndex v = 0; v < graph.node_count(); ++v) {
    if (!filled[v]) missing.push_back(graph.id_of(v));
  }
  if (!missing.empty()) {
    std::string msg = "embedding file: " + std::to_string(missing.size()) + " graph ids missing:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  m.normalize_rows();
  return m;
}

EmbeddingMatrix load_embeddings(const std::string& path, const CitationGraph& graph) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  return load_embeddings(in, graph);
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix,
                      const CitationGraph& graph) {
  if (matrix.rows() != graph.node_count()) {
    throw std::invalid_argument("write_embeddings: row count does not match graph");
  }
  out << matrix.rows() << '\t' << matrix.dim() << '\n';
  for (NodeIndex v = 0; v < graph.node_count(); ++v) {
    out << graph.id_of(v);
    for (double x : matrix.row(v)) out << '\t' << format_double(x);
    out << '\n';
  }
}

}  // namespace citegraph
