#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mobnet/geo.hpp"

namespace mobnet {

using UserId = std::uint64_t;
using TweetId = std::uint64_t;
/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class PlaceType { kCountry, kAdmin, kCity, kNeighborhood, kPoi };

std::string_view to_string(PlaceType t) noexcept;
std::optional<PlaceType> parse_place_type(std::string_view s) noexcept;

struct Place {
  std::string place_id;
  std::string name;
  PlaceType type = PlaceType::kPoi;
  BoundingBox bbox;
  std::string country_code;  // ISO 3166-1 alpha-2 or empty

  friend bool operator==(const Place&, const Place&) = default;
};

struct TweetRecord {
  TweetId tweet_id = 0;
  UserId user_id = 0;
  Timestamp timestamp = 0;
  std::optional<GeoPoint> point;
  std::optional<Place> place;

  friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

/// Total order used for timelines: user, then time, then tweet id.
inline bool timeline_less(const TweetRecord& a, const TweetRecord& b) noexcept {
  if (a.user_id != b.user_id) return a.user_id < b.user_id;
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.tweet_id < b.tweet_id;
}

enum class TimestampFormat { kEpochSeconds, kRfc3339 };

enum class RejectReason { kNoLocation, kMalformed };

struct ParseError {
  RejectReason reason;
  std::string detail;
};

using ParseOutcome = std::variant<TweetRecord, ParseError>;

/// Parses one record line. The layout is 13 tab-separated columns:
///
///   tweet_id  user_id  timestamp  lat  lon  place_id  place_name  place_type
///   south  west  north  east  country_code
///
/// lat/lon are both empty or both set. An empty place_id means no place; then
/// the remaining place columns must be empty too.
ParseOutcome parse_record(std::string_view line,
                          TimestampFormat format = TimestampFormat::kEpochSeconds);

/// Inverse of parse_record; timestamps are always written as epoch seconds
/// and doubles in shortest round-trip form.
std::string format_record(const TweetRecord& r);
void append_record(std::string& out, const TweetRecord& r);

/// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)"; a space may replace
/// the T. Fractions are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view s) noexcept;

struct IngestStats {
  std::uint64_t lines = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected_no_location = 0;
  std::uint64_t rejected_malformed = 0;
  std::uint64_t duplicates_dropped = 0;

  IngestStats& operator+=(const IngestStats& o);
};

/// Reads every file, parsing in parallel batches, and hands accepted records
/// to `sink` in file order. Throws std::runtime_error if a file cannot be
/// opened.
IngestStats read_records(const std::vector<std::filesystem::path>& inputs, TimestampFormat format,
                         unsigned threads, const std::function<void(TweetRecord&&)>& sink);

}  // namespace mobnet
