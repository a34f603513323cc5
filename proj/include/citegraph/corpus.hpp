#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace citegraph {

struct AuthorRef {
  std::optional<std::string> name;  // often a hash; passed through verbatim
  std::optional<std::string> id;
  std::optional<std::string> org;

  bool operator==(const AuthorRef&) const = default;
};

struct VenueRef {
  std::optional<std::string> name;
  std::optional<std::string> id;

  bool operator==(const VenueRef&) const = default;
};

/// Year with an optional month. A date with no year is "unknown".
struct PartialDate {
  std::optional<int> year;
  std::optional<int> month;  // 1-12

  bool known() const { return year.has_value(); }
  static PartialDate unknown() { return {}; }
  bool operator==(const PartialDate&) const = default;
};

struct PaperRecord {
  std::string id;
  std::optional<std::string> title;
  std::optional<std::string> abstract;
  std::optional<std::string> keywords;
  std::optional<std::string> doi;
  std::optional<std::string> journal;
  std::optional<std::string> language;
  std::vector<std::string> citations;  // unique, never contains id
  PartialDate pub_date;
  std::vector<AuthorRef> authors;
  VenueRef venue;

  bool operator==(const PaperRecord&) const = default;
};

struct IngestReport {
  std::size_t records_parsed = 0;
  std::size_t records_dropped = 0;
  std::size_t citations_coerced_from_int = 0;
  std::size_t citations_null_dropped = 0;
  std::size_t citations_deduped = 0;
  std::size_t citations_self_dropped = 0;
  std::size_t dates_partial = 0;
  std::size_t dates_range_collapsed = 0;
  std::size_t dates_unparsed = 0;
  std::size_t duplicate_ids = 0;  // included in records_dropped

  IngestReport& operator+=(const IngestReport& other);
  bool operator==(const IngestReport&) const = default;
};

nlohmann::ordered_json to_json(const IngestReport& report);

/// Counters touched while normalizing one Citations value.
struct CitationStats {
  std::size_t coerced_from_int = 0;
  std::size_t null_dropped = 0;
  std::size_t deduped = 0;
};

/// Flattens a raw Citations value into unique string ids in first-occurrence
/// order. Integers (and integral floats) become canonical decimal strings;
/// nulls and empty strings are dropped; a bare scalar is a one-element list.
std::vector<std::string> normalize_citations(const nlohmann::json& raw,
                                             CitationStats* stats = nullptr);

/// How parse_pub_date classified its input.
enum class DateShape { kEmpty, kYear, kYearMonth, kMonthRange, kYearOnlyFallback, kUnparsed };

struct ParsedDate {
  PartialDate date;
  DateShape shape = DateShape::kEmpty;
};

/// Recognizes "yyyy", "yyyy MMM", "yyyy MMM dd" and "yyyy MMM-MMM" (space or
/// hyphen after the year). Month ranges collapse to their first month. Any other
/// string keeps its first 4-digit year if it has one. Never throws.
ParsedDate parse_pub_date_detailed(std::string_view raw);
PartialDate parse_pub_date(std::string_view raw);

/// "yyyy" or "yyyy Mon"; empty for an unknown date. parse_pub_date inverts it.
std::string format_pub_date(const PartialDate& date);

/// title, abstract, keywords, doi joined by single spaces; absent or empty
/// fields are skipped.
std::string build_text(const PaperRecord& record);

struct ParseResult {
  std::vector<PaperRecord> records;
  IngestReport report;
};

/// Reads JSON Lines. Bad lines, lines without an id, and repeated ids are
/// counted as dropped and skipped. Throws DataError if the stream fails.
ParseResult parse_records(std::istream& in);
ParseResult parse_records_file(const std::string& path);

/// Parses one JSON object into a record; std::nullopt when it has no usable id.
std::optional<PaperRecord> record_from_json(const nlohmann::json& object, IngestReport& report);

/// Cleaned record in canonical field order, readable by parse_records.
nlohmann::ordered_json to_json(const PaperRecord& record);
void write_records(std::ostream& out, const std::vector<PaperRecord>& records);

}  // namespace citegraph
