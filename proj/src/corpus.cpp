#include "citegraph/corpus.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include "citegraph/error.hpp"
#include "citegraph/text.hpp"

namespace citegraph {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kMonths = {"jan", "feb", "mar", "apr", "may", "jun",
                                                      "jul", "aug", "sep", "oct", "nov", "dec"};
constexpr std::array<std::string_view, 12> kMonthNames = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Month number for a leading alphabetic run of at least three letters, else 0.
int month_from_word(std::string_view word) {
  if (word.size() < 3) return 0;
  std::string prefix;
  for (std::size_t i = 0; i < 3; ++i) {
    prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(word[i]))));
  }
  for (std::size_t m = 0; m < kMonths.size(); ++m) {
    if (kMonths[m] == prefix) return static_cast<int>(m) + 1;
  }
  return 0;
}

std::size_t skip_separators(std::string_view s, std::size_t pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '-' || s[pos] == '/' || s[pos] == ',' ||
                            s[pos] == '.' || s[pos] == '\t')) {
    ++pos;
  }
  return pos;
}

std::optional<int> first_four_digit_year(std::string_view s) {
  for (std::size_t i = 0; i + 4 <= s.size(); ++i) {
    if (i > 0 && is_digit(s[i - 1])) continue;
    if (!(is_digit(s[i]) && is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]))) {
      continue;
    }
    if (i + 4 < s.size() && is_digit(s[i + 4])) continue;
    return (s[i] - '0') * 1000 + (s[i + 1] - '0') * 100 + (s[i + 2] - '0') * 10 + (s[i + 3] - '0');
  }
  return std::nullopt;
}

// Python's json module writes bare NaN/Infinity for missing floats; nlohmann
// rejects them. Rewrite such tokens outside string literals to null.
std::string sanitize_nonfinite(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < line.size()) {
        out.push_back(line[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    const std::string_view rest = line.substr(i);
    if (rest.starts_with("NaN")) {
      out += "null";
      i += 2;
    } else if (rest.starts_with("-Infinity")) {
      out += "null";
      i += 8;
    } else if (rest.starts_with("Infinity")) {
      out += "null";
      i += 7;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

const json* find_field(const json& object, std::string_view key) {
  if (auto it = object.find(std::string(key)); it != object.end()) return &*it;
  for (auto it = object.begin(); it != object.end(); ++it) {
    const std::string& k = it.key();
    if (k.size() != key.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < k.size() && same; ++i) {
      same = std::tolower(static_cast<unsigned char>(k[i])) ==
             std::tolower(static_cast<unsigned char>(key[i]));
    }
    if (same) return &*it;
  }
  return nullptr;
}

std::optional<std::string> scalar_string(const json& value) {
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (trim(s).empty()) return std::nullopt;
    return s;
  }
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    if (d == std::floor(d) && std::fabs(d) < 9.0e15) {
      return std::to_string(static_cast<std::int64_t>(d));
    }
    return format_double(d);
  }
  return std::nullopt;
}

std::optional<std::string> text_field(const json& object, std::string_view key) {
  const json* value = find_field(object, key);
  if (value == nullptr || value->is_null()) return std::nullopt;
  if (value->is_array()) {
    std::string joined;
    for (const auto& item : *value) {
      if (auto s = scalar_string(item)) {
        if (!joined.empty()) joined.push_back(' ');
        joined += *s;
      }
    }
    if (joined.empty()) return std::nullopt;
    return joined;
  }
  return scalar_string(*value);
}

std::optional<std::string> member_string(const json& object, std::string_view key) {
  const json* value = find_field(object, key);
  if (value == nullptr) return std::nullopt;
  return scalar_string(*value);
}

std::vector<AuthorRef> parse_authors(const json* raw) {
  std::vector<AuthorRef> authors;
  if (raw == nullptr || raw->is_null()) return authors;
  auto one = [&](const json& item) {
    if (item.is_object()) {
      authors.push_back({member_string(item, "name"), member_string(item, "id"),
                         member_string(item, "org")});
    } else if (auto name = scalar_string(item)) {
      authors.push_back({std::move(name), std::nullopt, std::nullopt});
    }
  };
  if (raw->is_array()) {
    for (const auto& item : *raw) one(item);
  } else {
    one(*raw);
  }
  return authors;
}

VenueRef parse_venue(const json* raw) {
  if (raw == nullptr || raw->is_null()) return {};
  if (raw->is_object()) return {member_string(*raw, "name"), member_string(*raw, "id")};
  return {scalar_string(*raw), std::nullopt};
}

void flatten_citations(const json& value, std::vector<std::string>& out,
                       std::unordered_set<std::string>& seen, CitationStats& stats) {
  if (value.is_array()) {
    for (const auto& item : value) flatten_citations(item, out, seen, stats);
    return;
  }
  if (value.is_number()) ++stats.coerced_from_int;
  std::optional<std::string> id;
  if (value.is_string() || value.is_number()) id = scalar_string(value);
  if (!id) {
    ++stats.null_dropped;
    return;
  }
  if (!seen.insert(*id).second) {
    ++stats.deduped;
    return;
  }
  out.push_back(std::move(*id));
}

json optional_to_json(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

IngestReport& IngestReport::operator+=(const IngestReport& other) {
  records_parsed += other.records_parsed;
  records_dropped += other.records_dropped;
  citations_coerced_from_int += other.citations_coerced_from_int;
  citations_null_dropped += other.citations_null_dropped;
  citations_deduped += other.citations_deduped;
  citations_self_dropped += other.citations_self_dropped;
  dates_partial += other.dates_partial;
  dates_range_collapsed += other.dates_range_collapsed;
  dates_unparsed += other.dates_unparsed;
  duplicate_ids += other.duplicate_ids;
  return *this;
}

nlohmann::ordered_json to_json(const IngestReport& r) {
  nlohmann::ordered_json j;
  j["records_parsed"] = r.records_parsed;
  j["records_dropped"] = r.records_dropped;
  j["citations_coerced_from_int"] = r.citations_coerced_from_int;
  j["citations_null_dropped"] = r.citations_null_dropped;
  j["citations_deduped"] = r.citations_deduped;
  j["citations_self_dropped"] = r.citations_self_dropped;
  j["dates_partial"] = r.dates_partial;
  j["dates_range_collapsed"] = r.dates_range_collapsed;
  j["dates_unparsed"] = r.dates_unparsed;
  j["duplicate_ids"] = r.duplicate_ids;
  return j;
}

std::vector<std::string> normalize_citations(const json& raw, CitationStats* stats) {
  CitationStats local;
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  if (!raw.is_null()) flatten_citations(raw, out, seen, local);
  if (stats != nullptr) {
    stats->coerced_from_int += local.coerced_from_int;
    stats->null_dropped += local.null_dropped;
    stats->deduped += local.deduped;
  }
  return out;
}

ParsedDate parse_pub_date_detailed(std::string_view raw) {
  const std::string_view s = trim(raw);
  if (s.empty()) return {PartialDate::unknown(), DateShape::kEmpty};

  const bool leading_year = s.size() >= 4 && is_digit(s[0]) && is_digit(s[1]) && is_digit(s[2]) &&
                            is_digit(s[3]) && (s.size() == 4 || !is_digit(s[4]));
  if (!leading_year) {
    if (auto year = first_four_digit_year(s)) {
      return {PartialDate{year, std::nullopt}, DateShape::kYearOnlyFallback};
    }
    return {PartialDate::unknown(), DateShape::kUnparsed};
  }

  const int year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
  std::size_t pos = skip_separators(s, 4);
  if (pos >= s.size()) return {PartialDate{year, std::nullopt}, DateShape::kYear};

  int month = 0;
  std::size_t word_end = pos;
  if (is_alpha(s[pos])) {
    while (word_end < s.size() && is_alpha(s[word_end])) ++word_end;
    month = month_from_word(s.substr(pos, word_end - pos));
  } else if (is_digit(s[pos])) {
    while (word_end < s.size() && is_digit(s[word_end])) ++word_end;
    if (word_end - pos <= 2) {
      int value = 0;
      for (std::size_t i = pos; i < word_end; ++i) value = value * 10 + (s[i] - '0');
      if (value >= 1 && value <= 12) month = value;
    }
  }
  if (month == 0) return {PartialDate{year, std::nullopt}, DateShape::kYearOnlyFallback};

  // A hyphen followed by another month (or a year) marks a range.
  std::size_t after = word_end;
  while (after < s.size() && s[after] == ' ') ++after;
  if (after < s.size() && s[after] == '-') {
    std::size_t next = after + 1;
    while (next < s.size() && s[next] == ' ') ++next;
    std::size_t end = next;
    while (end < s.size() && is_alpha(s[end])) ++end;
    const bool month_follows = end > next && month_from_word(s.substr(next, end - next)) != 0;
    const bool year_follows = first_four_digit_year(s.substr(next)).has_value() && next < s.size() &&
                              is_digit(s[next]) && s.size() - next >= 4;
    if (month_follows || year_follows) {
      return {PartialDate{year, month}, DateShape::kMonthRange};
    }
  }
  return {PartialDate{year, month}, DateShape::kYearMonth};
}

PartialDate parse_pub_date(std::string_view raw) { return parse_pub_date_detailed(raw).date; }

std::string format_pub_date(const PartialDate& date) {
  if (!date.year) return {};
  std::string out = std::to_string(*date.year);
  if (date.month && *date.month >= 1 && *date.month <= 12) {
    out.push_back(' ');
    out += kMonthNames[static_cast<std::size_t>(*date.month - 1)];
  }
  return out;
}

std::string build_text(const PaperRecord& record) {
  std::string text;
  for (const auto* field : {&record.title, &record.abstract, &record.keywords, &record.doi}) {
    if (!*field || field->value().empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += field->value();
  }
  return text;
}

std::optional<PaperRecord> record_from_json(const json& object, IngestReport& report) {
  if (!object.is_object()) return std::nullopt;
  const json* id_field = find_field(object, "publication_ID");
  if (id_field == nullptr) return std::nullopt;
  auto id = scalar_string(*id_field);
  if (!id) return std::nullopt;

  PaperRecord record;
  record.id = std::move(*id);
  record.title = text_field(object, "title");
  record.abstract = text_field(object, "abstract");
  record.keywords = text_field(object, "keywords");
  record.doi = text_field(object, "doi");
  record.journal = text_field(object, "journal");
  record.language = text_field(object, "language");

  CitationStats stats;
  if (const json* raw = find_field(object, "Citations")) {
    record.citations = normalize_citations(*raw, &stats);
  }
  report.citations_coerced_from_int += stats.coerced_from_int;
  report.citations_null_dropped += stats.null_dropped;
  report.citations_deduped += stats.deduped;
  std::erase_if(record.citations, [&](const std::string& c) {
    if (c != record.id) return false;
    ++report.citations_self_dropped;
    return true;
  });

  if (const json* raw = find_field(object, "pubDate"); raw != nullptr && !raw->is_null()) {
    const auto text = raw->is_string() ? raw->get<std::string>() : scalar_string(*raw).value_or("");
    const ParsedDate parsed = parse_pub_date_detailed(text);
    record.pub_date = parsed.date;
    switch (parsed.shape) {
      case DateShape::kYearMonth: ++report.dates_partial; break;
      case DateShape::kMonthRange: ++report.dates_range_collapsed; break;
      case DateShape::kUnparsed: ++report.dates_unparsed; break;
      default: break;
    }
  }

  record.authors = parse_authors(find_field(object, "authors"));
  record.venue = parse_venue(find_field(object, "venue"));
  return record;
}

ParseResult parse_records(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    json object = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (object.is_discarded()) object = json::parse(sanitize_nonfinite(line), nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
      ++result.report.records_dropped;
      continue;
    }
    IngestReport line_report;
    auto record = record_from_json(object, line_report);
    if (!record) {
      ++result.report.records_dropped;
      continue;
    }
    if (!seen_ids.insert(record->id).second) {
      ++result.report.records_dropped;
      ++result.report.duplicate_ids;
      continue;
    }
    result.report += line_report;
    ++result.report.records_parsed;
    result.records.push_back(std::move(*record));
  }
  if (in.bad()) throw DataError("failed while reading corpus stream");
  return result;
}

ParseResult parse_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return parse_records(in);
}

nlohmann::ordered_json to_json(const PaperRecord& r) {
  nlohmann::ordered_json j;
  j["publication_ID"] = r.id;
  j["Citations"] = r.citations;
  const std::string date = format_pub_date(r.pub_date);
  j["pubDate"] = date.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(date);
  j["language"] = optional_to_json(r.language);
  j["title"] = optional_to_json(r.title);
  j["journal"] = optional_to_json(r.journal);
  j["abstract"] = optional_to_json(r.abstract);
  j["keywords"] = optional_to_json(r.keywords);
  auto authors = nlohmann::ordered_json::array();
  for (const auto& a : r.authors) {
    nlohmann::ordered_json entry;
    entry["name"] = optional_to_json(a.name);
    entry["id"] = optional_to_json(a.id);
    entry["org"] = optional_to_json(a.org);
    authors.push_back(std::move(entry));
  }
  j["authors"] = std::move(authors);
  nlohmann::ordered_json venue;
  venue["name"] = optional_to_json(r.venue.name);
  venue["id"] = optional_to_json(r.venue.id);
  j["venue"] = std::move(venue);
  j["doi"] = optional_to_json(r.doi);
  return j;
}

void write_records(std::ostream& out, const std::vector<PaperRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace citegraph
