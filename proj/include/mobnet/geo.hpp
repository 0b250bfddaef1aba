#pragma once

#include <compare>

namespace mobnet {

/// Mean Earth radius (IUGG) used for every distance in the pipeline.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// A validated latitude/longitude pair in degrees.
class GeoPoint {
public:
  GeoPoint() = default;
  /// Throws std::invalid_argument when lat is outside [-90, 90] or lon
  /// outside [-180, 180] (NaN included).
  GeoPoint(double lat, double lon);

  static bool valid(double lat, double lon) noexcept;

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

/// Axis-aligned lat/lon box. west > east means the box crosses the
/// antimeridian and spans west -> 180 -> east.
class BoundingBox {
public:
  BoundingBox() = default;
  /// Throws std::invalid_argument on out-of-range edges or south > north.
  BoundingBox(double south, double west, double north, double east);

  static bool valid(double south, double west, double north, double east) noexcept;

  double south() const noexcept { return south_; }
  double west() const noexcept { return west_; }
  double north() const noexcept { return north_; }
  double east() const noexcept { return east_; }

  bool crosses_antimeridian() const noexcept { return west_ > east_; }
  /// Eastward longitude extent in degrees, in [0, 360].
  double lon_span() const noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

private:
  double south_ = 0.0;
  double west_ = 0.0;
  double north_ = 0.0;
  double east_ = 0.0;
};

/// Great-circle distance (haversine) in kilometers.
double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Midpoint of the latitude range and of the eastward longitude span.
/// Longitudes are returned in (-180, 180].
GeoPoint centroid(const BoundingBox& box) noexcept;

/// Closed-set containment; boundary points count as inside.
bool contains(const BoundingBox& outer, const GeoPoint& inner) noexcept;
bool contains(const BoundingBox& outer, const BoundingBox& inner) noexcept;

}  // namespace mobnet
