#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobnet/external_sort.hpp"
#include "mobnet/geo.hpp"
#include "mobnet/ingest.hpp"

namespace mobnet {

/// Rule thresholds. Comparisons: gap <= max_gap_seconds, distance >
/// min_distance_km, speed > max_speed_kmh drops, counts > max_* drop.
struct Thresholds {
  std::int64_t max_gap_seconds = 72 * 3600;
  double min_distance_km = 50.0;
  double max_speed_kmh = 1000.0;
  std::uint64_t max_user_tweets = 1000;
  std::uint64_t max_user_events = 100;
};

/// Where a record "is": its exact coordinates when present, otherwise the
/// centroid of its tagged place.
struct LocRef {
  GeoPoint point;
  std::optional<Place> place;
};

struct TravelEvent {
  UserId user_id = 0;
  LocRef origin;
  LocRef destination;
  Timestamp timestamp = 0;  // time of the second record
  double distance_km = 0.0;
  double elapsed_h = 0.0;
};

struct UserSummary {
  UserId user_id = 0;
  std::uint64_t geotagged_tweet_count = 0;
  std::uint64_t travel_event_count = 0;  // after the speed filter
};

enum class Verdict { kKeep, kDrop };

LocRef effective_location(const TweetRecord& r);

/// Same place id, nested place boxes, or a bare point inside the other
/// side's place box.
bool same_location(const LocRef& a, const LocRef& b);

/// Consecutive pairs only: A->B->C yields A->B and B->C.
std::vector<TravelEvent> detect_events(std::span<const TweetRecord> timeline,
                                       const Thresholds& t = {});

Verdict speed_filter(const TravelEvent& e, const Thresholds& t = {});
Verdict user_filters(const UserSummary& s, const Thresholds& t = {});

struct UserOutcome {
  UserSummary summary;
  std::uint64_t detected_events = 0;
  std::uint64_t speed_dropped = 0;
  bool user_dropped = false;
  /// Events that survive every filter; empty when the user is dropped.
  std::vector<TravelEvent> kept_events;
};

/// detect -> speed filter -> per-user counts -> user filters.
UserOutcome process_timeline(const UserTimeline& timeline, const Thresholds& t = {});

/// Endpoint as persisted in the event stream: enough to resolve it to a
/// gazetteer entry and a country without the original record.
struct EventEndpoint {
  std::string place_id;  // empty for bare coordinates
  GeoPoint point;        // effective location
  GeoPoint match_point;  // place centroid when a place is present, else `point`
  std::string country_code;

  bool has_place() const noexcept { return !place_id.empty(); }
};

struct EventRow {
  UserId user_id = 0;
  Timestamp timestamp = 0;
  EventEndpoint origin;
  EventEndpoint destination;
  double distance_km = 0.0;
  double elapsed_h = 0.0;
};

EventEndpoint to_endpoint(const LocRef& loc);
EventRow to_row(const TravelEvent& e);

/// Header line of the persisted event stream (tab-separated).
std::string_view event_stream_header();
void append_event_row(std::string& out, const EventRow& row);
/// Returns nullopt for the header, blank lines and malformed rows.
std::optional<EventRow> parse_event_row(std::string_view line);

}  // namespace mobnet
