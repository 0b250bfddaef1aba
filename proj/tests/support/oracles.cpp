#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace oracle {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
constexpr long double kRadiusL = 6371.0088L;

struct Interval {
  double lo;
  double hi;
};

// A box's longitude set as plain closed intervals inside [-180, 180].
std::vector<Interval> lon_pieces(double w, double e) {
  if (w <= e) return {{w, e}};
  return {{w, 180.0}, {-180.0, e}};
}

bool lon_member(const std::vector<Interval>& pieces, double lon) {
  // -180 and 180 are the same meridian.
  const std::vector<double> aliases =
      std::abs(lon) == 180.0 ? std::vector<double>{-180.0, 180.0} : std::vector<double>{lon};
  for (double a : aliases) {
    for (const auto& iv : pieces) {
      if (a >= iv.lo && a <= iv.hi) return true;
    }
  }
  return false;
}

bool box_in_box(const mobnet::BoundingBox& outer, const mobnet::BoundingBox& inner) {
  if (inner.south() < outer.south() || inner.north() > outer.north()) return false;
  const auto out = lon_pieces(outer.west(), outer.east());
  for (const auto& piece : lon_pieces(inner.west(), inner.east())) {
    bool covered = false;
    for (const auto& o : out) {
      if (piece.lo >= o.lo && piece.hi <= o.hi) covered = true;
    }
    // A piece touching only the antimeridian edge can be covered by the
    // outer piece on the other side of it.
    if (!covered && piece.lo == piece.hi && std::abs(piece.lo) == 180.0) {
      covered = lon_member(out, piece.lo);
    }
    if (!covered) return false;
  }
  return true;
}

mobnet::GeoPoint oracle_centroid(const mobnet::BoundingBox& b) {
  return mobnet::GeoPoint((b.south() + b.north()) / 2.0, box_mid_lon(b.west(), b.east()));
}

bool oracle_same_location(const mobnet::TweetRecord& a, const mobnet::TweetRecord& b,
                          const mobnet::GeoPoint& pa, const mobnet::GeoPoint& pb) {
  if (a.place && b.place) {
    if (a.place->place_id == b.place->place_id) return true;
    return box_in_box(a.place->bbox, b.place->bbox) || box_in_box(b.place->bbox, a.place->bbox);
  }
  if (a.place && !b.place) {
    return box_contains(a.place->bbox.south(), a.place->bbox.west(), a.place->bbox.north(),
                        a.place->bbox.east(), pb.lat(), pb.lon());
  }
  if (b.place && !a.place) {
    return box_contains(b.place->bbox.south(), b.place->bbox.west(), b.place->bbox.north(),
                        b.place->bbox.east(), pa.lat(), pa.lon());
  }
  return false;
}

}  // namespace

long double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  const long double p1 = lat1 * kPiL / 180.0L;
  const long double p2 = lat2 * kPiL / 180.0L;
  const long double l1 = lon1 * kPiL / 180.0L;
  const long double l2 = lon2 * kPiL / 180.0L;
  const long double x1 = std::cos(p1) * std::cos(l1), y1 = std::cos(p1) * std::sin(l1),
                    z1 = std::sin(p1);
  const long double x2 = std::cos(p2) * std::cos(l2), y2 = std::cos(p2) * std::sin(l2),
                    z2 = std::sin(p2);
  const long double cx = y1 * z2 - z1 * y2;
  const long double cy = z1 * x2 - x1 * z2;
  const long double cz = x1 * y2 - y1 * x2;
  const long double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const long double dot = x1 * x2 + y1 * y2 + z1 * z2;
  return kRadiusL * std::atan2(cross, dot);
}

double box_mid_lon(double west, double east) {
  // Eastward arc length from `from` to `to`, in [0, 360).
  auto east_arc = [](double from, double to) {
    double d = to - from;
    while (d < 0) d += 360.0;
    while (d >= 360.0) d -= 360.0;
    return d;
  };
  const double span = west <= east ? east - west : east_arc(west, east);
  double lo = 0.0;
  double hi = span;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (mid < span - mid) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double lon = west + hi;
  if (lon > 180.0) lon -= 360.0;
  if (lon <= -180.0) lon += 360.0;
  return lon;
}

bool box_contains(double s, double w, double n, double e, double lat, double lon) {
  if (lat < s || lat > n) return false;
  return lon_member(lon_pieces(w, e), lon);
}

std::vector<std::pair<std::uint64_t, double>> scan_within(
    const std::vector<mobnet::GazetteerEntry>& entries, const mobnet::EntryPredicate& keep,
    const mobnet::GeoPoint& p, double radius_km) {
  std::vector<std::pair<std::uint64_t, double>> out;
  for (const auto& e : entries) {
    if (!keep(e)) continue;
    const double d = mobnet::haversine_km(p, e.point);
    if (d < radius_km) out.emplace_back(e.geoname_id, d);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  return out;
}

std::optional<std::pair<std::uint64_t, int>> two_pass_match(
    const std::vector<mobnet::GazetteerEntry>& entries, const mobnet::GeoPoint& p,
    std::uint64_t min_city_population, double radius_km) {
  auto best = [&](auto&& pred) -> std::optional<std::uint64_t> {
    std::optional<std::uint64_t> id;
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
      if (!pred(e)) continue;
      const double d = mobnet::haversine_km(p, e.point);
      if (d >= radius_km) continue;
      if (d < dist || (d == dist && e.geoname_id < *id)) {
        dist = d;
        id = e.geoname_id;
      }
    }
    return id;
  };
  if (auto id = best([&](const mobnet::GazetteerEntry& e) {
        return e.feature_class == 'P' && e.population >= min_city_population;
      })) {
    return std::pair{*id, 1};
  }
  if (auto id = best([](const mobnet::GazetteerEntry&) { return true; })) return std::pair{*id, 2};
  return std::nullopt;
}

RuleOutcome literal_rules(const std::vector<mobnet::TweetRecord>& timeline,
                          std::uint64_t raw_record_count, const mobnet::Thresholds& t) {
  RuleOutcome out;
  auto loc = [](const mobnet::TweetRecord& r) {
    return r.point ? *r.point : oracle_centroid(r.place->bbox);
  };
  for (std::size_t i = 0; i + 1 < timeline.size(); ++i) {
    const auto& a = timeline[i];
    const auto& b = timeline[i + 1];
    const auto pa = loc(a);
    const auto pb = loc(b);
    // Rule 1: within the time window.
    const std::int64_t gap = b.timestamp - a.timestamp;
    if (!(gap <= t.max_gap_seconds)) continue;
    // Rule 2: different, non-nested locations.
    if (oracle_same_location(a, b, pa, pb)) continue;
    // Rule 3: far enough apart.
    const double d = haversine_km(pa.lat(), pa.lon(), pb.lat(), pb.lon());
    if (!(d > t.min_distance_km)) continue;
    RuleEvent e{i, i + 1, d, false};
    // Rule 4: plausible speed.
    const double hours = static_cast<double>(gap) / 3600.0;
    e.speed_kept = hours > 0.0 && !(d / hours > t.max_speed_kmh);
    out.kept_after_speed += e.speed_kept ? 1 : 0;
    out.detected.push_back(e);
  }
  out.user_dropped = raw_record_count > t.max_user_tweets || out.kept_after_speed > t.max_user_events;
  return out;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double rad = std::numbers::pi / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * rad / 2), 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) *
                       std::pow(std::sin((lon2 - lon1) * rad / 2), 2);
  return 2 * 6371.0088 * std::asin(std::sqrt(std::min(1.0, a)));
}

std::optional<mobnet::GeoPoint> point_at_exact_distance(const mobnet::GeoPoint& from,
                                                        double target_km) {
  const double deg_guess = target_km / (6371.0088 * std::numbers::pi / 180.0);
  double lo = from.lat();
  double hi = std::min(90.0, from.lat() + 2.0 * deg_guess);
  auto dist = [&](double lat) { return mobnet::haversine_km(from, mobnet::GeoPoint(lat, from.lon())); };
  if (dist(hi) < target_km) return std::nullopt;
  // Distance grows with latitude here, so bisect down to adjacent doubles.
  while (std::nextafter(lo, hi) < hi) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (dist(mid) < target_km) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double lat = hi;
  for (int k = 0; k < 64; ++k) {
    if (dist(lat) == target_km) return mobnet::GeoPoint(lat, from.lon());
    lat = std::nextafter(lat, 90.0);
  }
  // Latitude steps overshoot; from just short of the target, nudge east.
  // Near due north the distance moves far less than one ulp per longitude ulp.
  auto dist_east = [&](double lon) { return mobnet::haversine_km(from, mobnet::GeoPoint(lo, lon)); };
  double west = from.lon();
  double east = from.lon() + 1e-3;
  if (east > 180.0 || dist_east(east) < target_km) return std::nullopt;
  while (std::nextafter(west, east) < east) {
    const double mid = west + (east - west) / 2.0;
    if (mid <= west || mid >= east) break;
    if (dist_east(mid) < target_km) {
      west = mid;
    } else {
      east = mid;
    }
  }
  if (dist_east(east) == target_km) return mobnet::GeoPoint(lo, east);
  return std::nullopt;
}

std::map<std::pair<std::string, std::string>, std::uint64_t> count_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs, bool directed) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (auto [a, b] : pairs) {
    if (a == b) continue;
    if (!directed && b < a) std::swap(a, b);
    ++counts[a + '\n' + b];
  }
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (const auto& [k, v] : counts) {
    const auto cut = k.find('\n');
    out[{k.substr(0, cut), k.substr(cut + 1)}] = v;
  }
  return out;
}

std::map<std::string, mobnet::ContinentTopEdge> top_edges(
    const std::vector<std::pair<std::pair<std::string, std::string>, std::uint64_t>>& undirected,
    const mobnet::CountryTable& info) {
  std::map<std::string, mobnet::ContinentTopEdge> best;
  for (const auto& [edge, w] : undirected) {
    const auto* a = info.find(edge.first);
    const auto* b = info.find(edge.second);
    if (a == nullptr || b == nullptr || a->continent != b->continent) continue;
    auto it = best.find(a->continent);
    const bool better =
        it == best.end() || w > it->second.weight ||
        (w == it->second.weight &&
         std::pair(edge.first, edge.second) < std::pair(it->second.a, it->second.b));
    if (better) best[a->continent] = mobnet::ContinentTopEdge{edge.first, edge.second, w};
  }
  return best;
}

mobnet::TweetRecord point_record(mobnet::TweetId id, mobnet::UserId user, mobnet::Timestamp ts,
                                 double lat, double lon) {
  mobnet::TweetRecord r;
  r.tweet_id = id;
  r.user_id = user;
  r.timestamp = ts;
  r.point = mobnet::GeoPoint(lat, lon);
  return r;
}

mobnet::Place make_place(std::string id, double s, double w, double n, double e,
                         std::string country, mobnet::PlaceType type) {
  mobnet::Place p;
  p.place_id = std::move(id);
  p.name = p.place_id;
  p.type = type;
  p.bbox = mobnet::BoundingBox(s, w, n, e);
  p.country_code = std::move(country);
  return p;
}

std::vector<mobnet::TweetRecord> random_timeline(std::mt19937_64& rng, mobnet::UserId user,
                                                 std::size_t max_len) {
  // Pool: a metro box with two nested districts, two separate cities 40 and
  // 80 km away, a far city, and a box straddling the antimeridian.
  static const std::vector<mobnet::Place> pool = {
      make_place("metro", 40.0, -74.5, 41.2, -73.4),
      make_place("district-a", 40.70, -74.02, 40.80, -73.93),
      make_place("district-b", 40.55, -74.10, 40.65, -73.90),
      make_place("city-40", 41.40, -74.0, 41.50, -73.9),
      make_place("city-80", 41.75, -74.0, 41.85, -73.9),
      make_place("far", 34.0, -118.5, 34.2, -118.2),
      make_place("dateline", -17.5, 178.0, -16.0, -179.0, "FJ"),
  };
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::int64_t> special_gaps = {0, 1, 3600, 72 * 3600 - 1, 72 * 3600,
                                                  72 * 3600 + 1};

  const std::size_t n = len_dist(rng);
  std::vector<mobnet::TweetRecord> out;
  mobnet::Timestamp ts = 1'400'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      ts += u(rng) < 0.3 ? special_gaps[pick(rng) % special_gaps.size()]
                         : static_cast<std::int64_t>(u(rng) * 100.0 * 3600.0);
    }
    mobnet::TweetRecord r;
    r.tweet_id = 1'000 + i;
    r.user_id = user;
    r.timestamp = ts;
    const mobnet::Place& p = pool[pick(rng)];
    const double form = u(rng);
    if (form < 0.6) r.place = p;
    if (form >= 0.4) {
      // Mostly inside the chosen box, sometimes just outside it.
      const double lat = p.bbox.south() + (u(rng) * 1.2 - 0.1) * (p.bbox.north() - p.bbox.south());
      double lon = p.bbox.west() + (u(rng) * 1.2 - 0.1) * p.bbox.lon_span();
      if (lon > 180.0) lon -= 360.0;
      r.point = mobnet::GeoPoint(std::clamp(lat, -90.0, 90.0), lon);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace oracle
