#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mobnet/gazetteer.hpp"
#include "mobnet/network.hpp"
#include "mobnet/travel.hpp"

namespace mobnet {

struct CountryInfo {
  std::string country_code;
  std::string name;
  std::string continent;  // AF AS EU NA OC SA AN
  std::uint64_t population = 0;
};

bool is_continent_code(std::string_view c) noexcept;
std::string_view continent_name(std::string_view code) noexcept;

struct CountryTable {
  std::map<std::string, CountryInfo> countries;
  std::size_t skipped_malformed = 0;

  const CountryInfo* find(std::string_view code) const;
};

/// Geonames countryInfo.txt: '#' comment lines, tab-separated columns with
/// ISO (0), Country (4), Population (7) and Continent (8).
CountryTable parse_country_info(std::istream& in);
CountryTable load_country_info(const std::filesystem::path& path);

/// Home country of one user: the most frequent country over their records;
/// ties go to the country seen first.
std::optional<std::string> modal_country(std::span<const std::string> record_countries);

struct PenetrationRow {
  std::uint64_t users = 0;
  std::uint64_t population = 0;
  double ratio = 0.0;
  bool anomaly = false;  // ratio > 1: population table does not fit the data
};

struct PenetrationReport {
  std::map<std::string, PenetrationRow> rows;
  std::size_t missing_country_info = 0;  // country absent or population 0
  std::size_t below_min_users = 0;
};

PenetrationReport penetration(const std::map<std::string, std::uint64_t>& user_home_counts,
                              const CountryTable& info, std::uint64_t min_users = 5000);

struct ContinentTopPenetration {
  std::string country_code;
  double ratio = 0.0;
};

/// Highest-penetration country per continent among the emitted rows.
std::map<std::string, ContinentTopPenetration> top_penetration_by_continent(
    const PenetrationReport& r, const CountryTable& info);

struct ContinentTopEdge {
  std::string a;
  std::string b;
  std::uint64_t weight = 0;
};

/// Heaviest edge with both endpoints on the continent. Equal weights resolve
/// to the lexicographically smallest edge. Throws on a directed network.
std::map<std::string, ContinentTopEdge> top_edges_by_continent(const CountryNetwork& undirected,
                                                               const CountryTable& info);

/// Log2-spaced bins: [0,1), [1,2), [2,4), [4,8), ... up to the largest value.
struct Histogram {
  std::vector<std::uint64_t> lower_edges;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const noexcept;
  bool empty() const noexcept { return counts.empty(); }
};

Histogram log_histogram(std::span<const std::uint64_t> values);

struct UserHistograms {
  Histogram tweets_per_user;
  Histogram events_per_user;
};

UserHistograms histograms(std::span<const UserSummary> summaries);
nlohmann::ordered_json to_json(const UserHistograms& h);

/// Table rows in display order: A H L P R S T U V, then "Other" for classes
/// outside the nine, then "None" for unmatched places.
inline constexpr std::array<std::string_view, 11> kMatchTypeLabels = {
    "A", "H", "L", "P", "R", "S", "T", "U", "V", "Other", "None"};

std::string_view match_type_label(const MatchResult& m) noexcept;

struct MatchTypeRow {
  std::uint64_t places = 0;
  std::uint64_t events = 0;

  friend bool operator==(const MatchTypeRow&, const MatchTypeRow&) = default;
};

/// Unique-place and event counts per gazetteer feature class. An event counts
/// once for each distinct class among its two endpoints.
class MatchTypeBreakdown {
public:
  void add_place(const MatchResult& m);
  /// For rows read back from places.csv; throws on an unknown label.
  void add_place(std::string_view label);
  void add_event(const MatchResult& origin, const MatchResult& dest);
  void merge(const MatchTypeBreakdown& other);

  const MatchTypeRow& row(std::string_view label) const;
  std::uint64_t total_places() const noexcept;

  void write_csv(std::ostream& out) const;

  friend bool operator==(const MatchTypeBreakdown&, const MatchTypeBreakdown&) = default;

private:
  std::array<MatchTypeRow, kMatchTypeLabels.size()> rows_{};
};

MatchTypeBreakdown match_type_breakdown(
    std::span<const MatchResult> place_matches,
    std::span<const std::pair<MatchResult, MatchResult>> event_matches);

struct GeoJsonExport {
  nlohmann::ordered_json collection;
  std::size_t skipped_edges = 0;
};

/// One LineString feature per edge, carrying origin, dest and weight.
template <typename Key>
GeoJsonExport export_geojson(const TravelNetwork<Key>& n,
                             const std::function<std::optional<GeoPoint>(const Key&)>& coords);

/// Representative point per country from the gazetteer: its PCL* entry when
/// present, else its most populous populated place.
std::map<std::string, GeoPoint> country_points(const Gazetteer& gazetteer);

void write_penetration_csv(std::ostream& out, const PenetrationReport& r, const CountryTable& info);
void write_top_edges_csv(std::ostream& out, const std::map<std::string, ContinentTopEdge>& top);
void write_top_penetration_csv(std::ostream& out,
                               const std::map<std::string, ContinentTopPenetration>& top);

}  // namespace mobnet
