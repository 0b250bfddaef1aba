#pragma once

// Reference implementations used only by tests. They are written
// independently of the library and favour obviousness over speed.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mobnet/external_sort.hpp"
#include "mobnet/gazetteer.hpp"
#include "mobnet/geo.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/network.hpp"
#include "mobnet/report.hpp"
#include "mobnet/travel.hpp"

namespace oracle {

/// Great-circle distance via the atan2 form of the spherical law of
/// cosines, evaluated in long double on unit vectors.
long double great_circle_km(double lat1, double lon1, double lat2, double lon2);

/// Longitude halfway along the eastward arc from west to east, located by
/// bisecting on the arc lengths to both edges. Result in (-180, 180].
double box_mid_lon(double west, double east);

/// Closed-box containment by enumerating the box as up to two plain
/// intervals.
bool box_contains(double s, double w, double n, double e, double lat, double lon);

/// Linear scan over every entry passing `keep`, ordered by (distance, id).
std::vector<std::pair<std::uint64_t, double>> scan_within(
    const std::vector<mobnet::GazetteerEntry>& entries, const mobnet::EntryPredicate& keep,
    const mobnet::GeoPoint& p, double radius_km);

/// Brute-force two-pass match: returns the matched geoname id and the pass
/// (1 or 2), or nullopt.
std::optional<std::pair<std::uint64_t, int>> two_pass_match(
    const std::vector<mobnet::GazetteerEntry>& entries, const mobnet::GeoPoint& p,
    std::uint64_t min_city_population, double radius_km);

/// One event as seen by the rule oracle: indices into the timeline.
struct RuleEvent {
  std::size_t from = 0;
  std::size_t to = 0;
  double distance_km = 0.0;
  bool speed_kept = false;
};

struct RuleOutcome {
  std::vector<RuleEvent> detected;
  std::uint64_t kept_after_speed = 0;
  bool user_dropped = false;
};

/// The travel rules applied literally to every adjacent pair.
RuleOutcome literal_rules(const std::vector<mobnet::TweetRecord>& timeline,
                          std::uint64_t raw_record_count, const mobnet::Thresholds& t);

/// Haversine written from the textbook formula, for exact-boundary searches.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Searches ulp-by-ulp for a second point due north of (lat, lon) whose
/// library haversine distance is exactly `target_km`.
std::optional<mobnet::GeoPoint> point_at_exact_distance(const mobnet::GeoPoint& from,
                                                        double target_km);

/// Pair counts via a hash map, for network arithmetic checks.
std::map<std::pair<std::string, std::string>, std::uint64_t> count_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs, bool directed);

/// Heaviest intra-continent edge by exhaustive scan; ties to the smallest
/// (a, b).
std::map<std::string, mobnet::ContinentTopEdge> top_edges(
    const std::vector<std::pair<std::pair<std::string, std::string>, std::uint64_t>>& undirected,
    const mobnet::CountryTable& info);

/// Random record helpers.
mobnet::TweetRecord point_record(mobnet::TweetId id, mobnet::UserId user, mobnet::Timestamp ts,
                                 double lat, double lon);
mobnet::Place make_place(std::string id, double s, double w, double n, double e,
                         std::string country = "US",
                         mobnet::PlaceType type = mobnet::PlaceType::kCity);

/// Random timeline of at most `max_len` records drawn around a small pool of
/// nested and disjoint places so every rule branch is exercised.
std::vector<mobnet::TweetRecord> random_timeline(std::mt19937_64& rng, mobnet::UserId user,
                                                 std::size_t max_len);

}  // namespace oracle
