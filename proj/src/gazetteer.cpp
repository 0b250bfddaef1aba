#include "mobnet/gazetteer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "text_util.hpp"

namespace mobnet {

namespace {

constexpr std::size_t kGeonamesFieldCount = 19;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Pads the search window so rounding in the cap bound never drops a border hit.
constexpr double kWindowPadDeg = 1e-7;

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.distance_km != b.distance_km) return a.distance_km < b.distance_km;
  return a.entry->geoname_id < b.entry->geoname_id;
}

}  // namespace

bool is_known_feature_class(char c) noexcept {
  switch (c) {
    case 'A': case 'H': case 'L': case 'P': case 'R':
    case 'S': case 'T': case 'U': case 'V':
      return true;
    default:
      return false;
  }
}

std::optional<GazetteerEntry> parse_gazetteer_line(std::string_view line) {
  thread_local std::vector<std::string_view> fields;
  detail::split(detail::strip_cr(line), '\t', fields);
  if (fields.size() != kGeonamesFieldCount) return std::nullopt;

  const auto id = detail::parse_number<GeonameId>(fields[0]);
  const auto lat = detail::parse_number<double>(fields[4]);
  const auto lon = detail::parse_number<double>(fields[5]);
  if (!id || *id == 0 || !lat || !lon || !GeoPoint::valid(*lat, *lon)) return std::nullopt;
  if (fields[6].size() > 1) return std::nullopt;

  std::uint64_t population = 0;
  if (!fields[14].empty()) {
    const auto pop = detail::parse_number<std::uint64_t>(fields[14]);
    if (!pop) return std::nullopt;
    population = *pop;
  }

  GazetteerEntry e;
  e.geoname_id = *id;
  e.name = std::string(fields[1]);
  e.point = GeoPoint(*lat, *lon);
  e.feature_class = fields[6].empty() ? '\0' : fields[6].front();
  e.feature_code = std::string(fields[7]);
  e.country_code = std::string(fields[8]);
  e.population = population;
  return e;
}

GazetteerParseResult parse_gazetteer(std::istream& in) {
  GazetteerParseResult result;
  std::unordered_set<GeonameId> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::strip_cr(line).empty()) continue;
    auto entry = parse_gazetteer_line(line);
    if (!entry) {
      ++result.skipped_malformed;
      continue;
    }
    if (!seen.insert(entry->geoname_id).second) {
      ++result.skipped_duplicate_id;
      continue;
    }
    if (!is_known_feature_class(entry->feature_class)) ++result.unknown_feature_class;
    result.entries.push_back(std::move(*entry));
  }
  return result;
}

GazetteerParseResult load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gazetteer: " + path.string());
  return parse_gazetteer(in);
}

EntryPredicate city_predicate(std::uint64_t min_population) {
  return [min_population](const GazetteerEntry& e) {
    return e.feature_class == 'P' && e.population >= min_population;
  };
}

EntryPredicate any_entry_predicate() {
  return [](const GazetteerEntry&) { return true; };
}

SpatialIndex::SpatialIndex(std::shared_ptr<const std::vector<GazetteerEntry>> entries,
                           const EntryPredicate& keep, double cell_size_deg)
    : entries_(std::move(entries)), cell_size_(cell_size_deg) {
  if (!(cell_size_deg > 0.0) || cell_size_deg > 90.0) {
    throw std::invalid_argument("cell size must be in (0, 90] degrees");
  }
  lat_bands_ = static_cast<int>(std::ceil(180.0 / cell_size_));
  lon_bands_ = static_cast<int>(std::ceil(360.0 / cell_size_));
  cells_.resize(static_cast<std::size_t>(lat_bands_) * static_cast<std::size_t>(lon_bands_));
  for (std::size_t i = 0; i < entries_->size(); ++i) {
    const auto& e = (*entries_)[i];
    if (!keep(e)) continue;
    cells_[cell_of(e.point)].push_back(static_cast<std::uint32_t>(i));
    ++size_;
  }
}

std::size_t SpatialIndex::cell_of(const GeoPoint& p) const noexcept {
  const int row = std::min(static_cast<int>(std::floor((p.lat() + 90.0) / cell_size_)), lat_bands_ - 1);
  const int col = std::min(static_cast<int>(std::floor((p.lon() + 180.0) / cell_size_)), lon_bands_ - 1);
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(lon_bands_) +
         static_cast<std::size_t>(col);
}

template <typename Visit>
void SpatialIndex::visit_window(const GeoPoint& p, double radius_km, Visit&& visit) const {
  const double angular = radius_km / kEarthRadiusKm;  // radians
  const double dlat = angular * kRadToDeg + kWindowPadDeg;
  const double lat_lo = std::max(-90.0, p.lat() - dlat);
  const double lat_hi = std::min(90.0, p.lat() + dlat);

  // Longitude half-width of the cap; the whole circle once the cap reaches a pole.
  bool all_lons = angular >= std::numbers::pi / 2.0 || std::fabs(p.lat()) + dlat >= 90.0;
  double dlon = 180.0;
  if (!all_lons) {
    const double ratio = std::sin(angular) / std::cos(p.lat() / kRadToDeg);
    if (ratio >= 1.0) {
      all_lons = true;
    } else {
      dlon = std::asin(ratio) * kRadToDeg + kWindowPadDeg;
    }
  }

  const int row_lo = std::max(0, static_cast<int>(std::floor((lat_lo + 90.0) / cell_size_)));
  const int row_hi = std::min(lat_bands_ - 1, static_cast<int>(std::floor((lat_hi + 90.0) / cell_size_)));

  int col_lo = 0;
  int col_count = lon_bands_;
  if (!all_lons) {
    col_lo = static_cast<int>(std::floor((p.lon() - dlon + 180.0) / cell_size_));
    const int col_hi = static_cast<int>(std::floor((p.lon() + dlon + 180.0) / cell_size_));
    col_count = std::min(lon_bands_, col_hi - col_lo + 1);
  }

  for (int row = row_lo; row <= row_hi; ++row) {
    for (int k = 0; k < col_count; ++k) {
      const int col = ((col_lo + k) % lon_bands_ + lon_bands_) % lon_bands_;
      const auto& cell = cells_[static_cast<std::size_t>(row) * static_cast<std::size_t>(lon_bands_) +
                                static_cast<std::size_t>(col)];
      for (std::uint32_t idx : cell) visit((*entries_)[idx]);
    }
  }
}

std::optional<Neighbor> SpatialIndex::nearest_within(const GeoPoint& p, double radius_km) const {
  if (!(radius_km > 0.0)) throw std::invalid_argument("radius must be positive");
  std::optional<Neighbor> best;
  visit_window(p, radius_km, [&](const GazetteerEntry& e) {
    const Neighbor candidate{&e, haversine_km(p, e.point)};
    if (candidate.distance_km >= radius_km) return;
    if (!best || closer(candidate, *best)) best = candidate;
  });
  return best;
}

std::vector<Neighbor> SpatialIndex::within(const GeoPoint& p, double radius_km) const {
  if (!(radius_km > 0.0)) throw std::invalid_argument("radius must be positive");
  std::vector<Neighbor> hits;
  visit_window(p, radius_km, [&](const GazetteerEntry& e) {
    const double d = haversine_km(p, e.point);
    if (d < radius_km) hits.push_back({&e, d});
  });
  std::sort(hits.begin(), hits.end(), closer);
  return hits;
}

SpatialIndex build_index(std::shared_ptr<const std::vector<GazetteerEntry>> entries,
                         const EntryPredicate& keep) {
  return SpatialIndex(std::move(entries), keep);
}

std::string_view to_string(MatchStatus s) noexcept {
  switch (s) {
    case MatchStatus::kMatchedCityPass: return "matched-city-pass";
    case MatchStatus::kMatchedFullPass: return "matched-full-pass";
    case MatchStatus::kUnmatched: return "unmatched";
  }
  return "unmatched";
}

MatchResult match_place(const GeoPoint& centroid, const SpatialIndex& city_index,
                        const SpatialIndex& full_index, double radius_km) {
  if (auto hit = city_index.nearest_within(centroid, radius_km)) {
    return {MatchStatus::kMatchedCityPass, hit->entry, hit->distance_km};
  }
  if (auto hit = full_index.nearest_within(centroid, radius_km)) {
    return {MatchStatus::kMatchedFullPass, hit->entry, hit->distance_km};
  }
  return {};
}

Gazetteer::Gazetteer(std::vector<GazetteerEntry> entries, MatchOptions options)
    : entries_(std::make_shared<const std::vector<GazetteerEntry>>(std::move(entries))),
      options_(options),
      city_index_(entries_, city_predicate(options.min_city_population), options.cell_size_deg),
      full_index_(entries_, any_entry_predicate(), options.cell_size_deg) {
  by_id_.reserve(entries_->size());
  for (std::size_t i = 0; i < entries_->size(); ++i) {
    if (!by_id_.emplace((*entries_)[i].geoname_id, i).second) {
      throw std::invalid_argument("duplicate geoname id " +
                                  std::to_string((*entries_)[i].geoname_id));
    }
  }
}

const GazetteerEntry* Gazetteer::find(GeonameId id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &(*entries_)[it->second];
}

MatchResult Gazetteer::match(const GeoPoint& p) const {
  return match_place(p, city_index_, full_index_, options_.radius_km);
}

MatchResult PlaceMatcher::match_place(std::string_view place_id, const GeoPoint& centroid) const {
  std::string key(place_id);
  key.push_back('\x1f');
  detail::append_double(key, centroid.lat());
  key.push_back(',');
  detail::append_double(key, centroid.lon());
  {
    std::shared_lock lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const MatchResult result = gazetteer_->match(centroid);
  std::unique_lock lock(mutex_);
  memo_.emplace(std::move(key), result);
  return result;
}

std::size_t PlaceMatcher::memo_size() const {
  std::shared_lock lock(mutex_);
  return memo_.size();
}

}  // namespace mobnet
