#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mobnet/geo.hpp"

namespace mobnet {

using GeonameId = std::uint64_t;

struct GazetteerEntry {
  GeonameId geoname_id = 0;
  std::string name;
  GeoPoint point;
  char feature_class = '\0';  // '\0' when the dump leaves it blank
  std::string feature_code;
  std::string country_code;
  std::uint64_t population = 0;
};

/// True for the nine Geonames classes A,H,L,P,R,S,T,U,V.
bool is_known_feature_class(char c) noexcept;

struct GazetteerParseResult {
  std::vector<GazetteerEntry> entries;
  std::size_t skipped_malformed = 0;
  std::size_t skipped_duplicate_id = 0;
  std::size_t unknown_feature_class = 0;
};

/// Parses one line of the Geonames allCountries tab-separated dump.
std::optional<GazetteerEntry> parse_gazetteer_line(std::string_view line);

/// Malformed lines and repeated geoname ids are skipped and counted.
GazetteerParseResult parse_gazetteer(std::istream& in);
GazetteerParseResult load_gazetteer(const std::filesystem::path& path);

struct Neighbor {
  const GazetteerEntry* entry = nullptr;
  double distance_km = 0.0;
};

using EntryPredicate = std::function<bool(const GazetteerEntry&)>;

/// Populated places (class P) with at least `min_population` inhabitants.
EntryPredicate city_predicate(std::uint64_t min_population);
EntryPredicate any_entry_predicate();

/// Fixed-size lat/lon grid over a shared, immutable entry table.
///
/// Radius queries visit every cell intersecting the bounding window of the
/// spherical cap around the query point, so results match a linear scan
/// exactly, including across cell borders, the antimeridian and the poles.
/// Ties on distance resolve to the lowest geoname id.
class SpatialIndex {
public:
  SpatialIndex(std::shared_ptr<const std::vector<GazetteerEntry>> entries,
               const EntryPredicate& keep, double cell_size_deg = 1.0);

  std::size_t size() const noexcept { return size_; }
  double cell_size() const noexcept { return cell_size_; }

  /// Nearest entry strictly closer than `radius_km`.
  std::optional<Neighbor> nearest_within(const GeoPoint& p, double radius_km) const;

  /// All entries strictly closer than `radius_km`, ordered by (distance, id).
  std::vector<Neighbor> within(const GeoPoint& p, double radius_km) const;

private:
  template <typename Visit>
  void visit_window(const GeoPoint& p, double radius_km, Visit&& visit) const;

  std::size_t cell_of(const GeoPoint& p) const noexcept;

  std::shared_ptr<const std::vector<GazetteerEntry>> entries_;
  double cell_size_;
  int lat_bands_;
  int lon_bands_;
  std::vector<std::vector<std::uint32_t>> cells_;
  std::size_t size_ = 0;
};

SpatialIndex build_index(std::shared_ptr<const std::vector<GazetteerEntry>> entries,
                         const EntryPredicate& keep);

enum class MatchStatus { kMatchedCityPass, kMatchedFullPass, kUnmatched };

std::string_view to_string(MatchStatus s) noexcept;

struct MatchResult {
  MatchStatus status = MatchStatus::kUnmatched;
  const GazetteerEntry* entry = nullptr;
  std::optional<double> distance_km;

  bool matched() const noexcept { return entry != nullptr; }
};

/// Two-pass lookup: the city index first, the full index only when no city
/// lies within the radius.
MatchResult match_place(const GeoPoint& centroid, const SpatialIndex& city_index,
                        const SpatialIndex& full_index, double radius_km = 50.0);

struct MatchOptions {
  std::uint64_t min_city_population = 1000;
  double radius_km = 50.0;
  double cell_size_deg = 1.0;
};

/// Loaded gazetteer plus both matching indices.
class Gazetteer {
public:
  Gazetteer(std::vector<GazetteerEntry> entries, MatchOptions options = {});

  const std::vector<GazetteerEntry>& entries() const noexcept { return *entries_; }
  const GazetteerEntry* find(GeonameId id) const;
  const SpatialIndex& city_index() const noexcept { return city_index_; }
  const SpatialIndex& full_index() const noexcept { return full_index_; }
  const MatchOptions& options() const noexcept { return options_; }

  MatchResult match(const GeoPoint& p) const;

private:
  std::shared_ptr<const std::vector<GazetteerEntry>> entries_;
  MatchOptions options_;
  std::unordered_map<GeonameId, std::size_t> by_id_;
  SpatialIndex city_index_;
  SpatialIndex full_index_;
};

/// Memoizes matches per tagged place. Lookups take a shared lock; inserts
/// take an exclusive one. The key includes the query point, so a place id
/// reported with two different boxes never aliases.
class PlaceMatcher {
public:
  explicit PlaceMatcher(const Gazetteer& gazetteer) : gazetteer_(&gazetteer) {}

  MatchResult match_place(std::string_view place_id, const GeoPoint& centroid) const;
  MatchResult match_point(const GeoPoint& p) const { return gazetteer_->match(p); }

  const Gazetteer& gazetteer() const noexcept { return *gazetteer_; }
  std::size_t memo_size() const;

private:
  const Gazetteer* gazetteer_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, MatchResult> memo_;
};

}  // namespace mobnet
