#include "mobnet/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mobnet {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool in_lat_range(double v) { return v >= -90.0 && v <= 90.0; }
bool in_lon_range(double v) { return v >= -180.0 && v <= 180.0; }

struct LonInterval {
  double west;
  double east;
  bool wraps;
};

// -180 and 180 name the same meridian; fold the representations that would
// otherwise make a box look like it wraps when it does not.
LonInterval normalized(const BoundingBox& b) {
  LonInterval iv{b.west(), b.east(), b.crosses_antimeridian()};
  if (iv.wraps && iv.east == -180.0) {
    iv.east = 180.0;
    iv.wraps = iv.west > iv.east;
  }
  if (iv.wraps && iv.west == 180.0) {
    iv.west = -180.0;
    iv.wraps = iv.west > iv.east;
  }
  return iv;
}

bool lon_in(const LonInterval& iv, double lon) {
  if (iv.wraps) return lon >= iv.west || lon <= iv.east;
  if (lon >= iv.west && lon <= iv.east) return true;
  if (lon == 180.0) return iv.west <= -180.0;
  if (lon == -180.0) return iv.east >= 180.0;
  return false;
}

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!valid(lat, lon)) {
    throw std::invalid_argument("coordinates out of range: " + std::to_string(lat) + "," +
                                std::to_string(lon));
  }
}

bool GeoPoint::valid(double lat, double lon) noexcept {
  return in_lat_range(lat) && in_lon_range(lon);
}

BoundingBox::BoundingBox(double south, double west, double north, double east)
    : south_(south), west_(west), north_(north), east_(east) {
  if (!valid(south, west, north, east)) {
    throw std::invalid_argument("invalid bounding box");
  }
}

bool BoundingBox::valid(double south, double west, double north, double east) noexcept {
  return in_lat_range(south) && in_lat_range(north) && in_lon_range(west) &&
         in_lon_range(east) && south <= north;
}

double BoundingBox::lon_span() const noexcept {
  return crosses_antimeridian() ? east_ - west_ + 360.0 : east_ - west_;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  // Absolute differences keep the result bit-identical under argument swap.
  const double dlat = std::fabs(b.lat() - a.lat()) * kDegToRad;
  const double dlon = std::fabs(b.lon() - a.lon()) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  const double h = s_lat * s_lat + std::cos(a.lat() * kDegToRad) * std::cos(b.lat() * kDegToRad) *
                                       s_lon * s_lon;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

GeoPoint centroid(const BoundingBox& box) noexcept {
  const double lat = (box.south() + box.north()) / 2.0;
  double lon;
  if (box.crosses_antimeridian()) {
    lon = box.west() + box.lon_span() / 2.0;
    if (lon > 180.0) lon -= 360.0;
  } else {
    lon = (box.west() + box.east()) / 2.0;
  }
  return GeoPoint(lat, lon);
}

bool contains(const BoundingBox& outer, const GeoPoint& inner) noexcept {
  if (inner.lat() < outer.south() || inner.lat() > outer.north()) return false;
  return lon_in(normalized(outer), inner.lon());
}

bool contains(const BoundingBox& outer, const BoundingBox& inner) noexcept {
  if (inner.south() < outer.south() || inner.north() > outer.north()) return false;
  const LonInterval o = normalized(outer);
  const LonInterval i = normalized(inner);
  if (!o.wraps && o.west <= -180.0 && o.east >= 180.0) return true;
  if (o.wraps) {
    if (i.wraps) return o.west <= i.west && i.east <= o.east;
    return o.west <= i.west || i.east <= o.east;
  }
  if (i.wraps) return false;
  return o.west <= i.west && i.east <= o.east;
}

}  // namespace mobnet
