#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <string>

namespace geopipe {

// WGS-84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / M_PI; }

/// Normalizes a longitude in degrees to [-180, 180).
double normalize_lon_deg(double lon);

/// Geodetic position. Latitude/longitude in degrees, altitude in meters
/// (ellipsoidal height is not modeled; alt is carried through untouched).
struct GeoPoint {
  double lat = 0.0;  ///< degrees, [-90, 90]
  double lon = 0.0;  ///< degrees, normalized to [-180, 180)
  double alt = 0.0;  ///< meters

  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg, double alt_m = 0.0);

  bool operator==(const GeoPoint&) const = default;
};

/// Ego pose in the local map frame (x east, y north, z up).
struct LocalPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  std::int64_t timestamp_us = 0;
  std::string frame_id;
};

/// Geodetic anchor of one map location (its south-western reference point).
struct MapAnchor {
  std::string location_name;
  GeoPoint origin;
};

/// Radii of curvature at a given latitude: meridian (north-south) and
/// prime vertical (east-west, multiply by cos(lat) for longitude arcs).
struct LocalRadii {
  double meridian;
  double prime_vertical;
};
LocalRadii wgs84_radii(double lat_deg);

/// Ground-plane distance and compass bearing of a local pose. Bearing is
/// measured clockwise from the map +y axis (north); the origin maps to
/// bearing 0 by convention.
struct BearingDistance {
  double bearing_rad;
  double distance_m;
};
BearingDistance planar_bearing_distance(const LocalPose& pose);

/// Direct geodesic problem on WGS-84 (Vincenty): destination after moving
/// `distance_m` along initial bearing `bearing_rad` from `origin`.
/// Altitude of the result is copied from the origin.
/// Throws GeodesicConvergenceError if the series does not converge
/// (cannot happen for distances under 20 km).
GeoPoint geodesic_direct(const GeoPoint& origin, double bearing_rad,
                         double distance_m);

struct InverseSolution {
  double distance_m = 0.0;
  /// True when the iterative solver failed (near-antipodal pair) and the
  /// value is a spherical great-circle fallback.
  bool approximate = false;
};

/// Inverse geodesic problem: shortest ellipsoidal surface distance.
/// Symmetric in its arguments; altitude is ignored.
InverseSolution geodesic_inverse_full(const GeoPoint& a, const GeoPoint& b);
double geodesic_inverse(const GeoPoint& a, const GeoPoint& b);

/// Local-map pose -> geodetic coordinates through the anchor: the planar
/// displacement becomes (bearing, distance) and is pushed through the
/// direct geodesic. Altitude is taken from pose.z.
GeoPoint pose_to_geo(const MapAnchor& anchor, const LocalPose& pose);

/// Metric east/north offset of `p` relative to `ref` on the local tangent
/// plane at `ref` (equirectangular approximation with ellipsoidal radii).
/// Accurate to centimeters for offsets up to a few kilometers.
Eigen::Vector2d east_north_offset(const GeoPoint& ref, const GeoPoint& p);

/// Inverse of east_north_offset.
GeoPoint offset_to_geo(const GeoPoint& ref, double east_m, double north_m);

}  // namespace geopipe
