#include "geopipe/geodesy.hpp"

#include <cmath>

#include "geopipe/errors.hpp"

namespace geopipe {

namespace {
constexpr double kVincentyTol = 1e-12;  // radians
constexpr int kVincentyMaxIter = 200;
// Mean radius for the spherical fallback, (2a + b) / 3.
constexpr double kMeanRadius = (2.0 * kWgs84A + kWgs84B) / 3.0;
}  // namespace

double normalize_lon_deg(double lon) {
  double x = std::fmod(lon + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  return x - 180.0;
}

GeoPoint::GeoPoint(double lat_deg, double lon_deg, double alt_m)
    : lat(lat_deg), lon(normalize_lon_deg(lon_deg)), alt(alt_m) {
  if (lat < -90.0 || lat > 90.0) {
    throw SchemaError("latitude out of [-90, 90]: " + std::to_string(lat_deg));
  }
}

LocalRadii wgs84_radii(double lat_deg) {
  const double s = std::sin(deg2rad(lat_deg));
  const double w2 = 1.0 - kWgs84E2 * s * s;
  const double w = std::sqrt(w2);
  return {kWgs84A * (1.0 - kWgs84E2) / (w2 * w), kWgs84A / w};
}

BearingDistance planar_bearing_distance(const LocalPose& pose) {
  const double d = std::hypot(pose.x, pose.y);
  if (d == 0.0) return {0.0, 0.0};
  return {std::atan2(pose.x, pose.y), d};
}

GeoPoint geodesic_direct(const GeoPoint& origin, double bearing_rad,
                         double distance_m) {
  if (distance_m < 0.0) {
    throw SchemaError("geodesic_direct: negative distance");
  }
  if (distance_m == 0.0) return origin;

  const double phi1 = deg2rad(origin.lat);
  const double alpha1 = bearing_rad;
  const double s = distance_m;

  const double sin_alpha1 = std::sin(alpha1);
  const double cos_alpha1 = std::cos(alpha1);

  const double tan_u1 = (1.0 - kWgs84F) * std::tan(phi1);
  const double cos_u1 = 1.0 / std::sqrt(1.0 + tan_u1 * tan_u1);
  const double sin_u1 = tan_u1 * cos_u1;

  const double sigma1 = std::atan2(tan_u1, cos_alpha1);
  const double sin_alpha = cos_u1 * sin_alpha1;
  const double cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
  const double u_sq =
      cos_sq_alpha * (kWgs84A * kWgs84A - kWgs84B * kWgs84B) / (kWgs84B * kWgs84B);
  const double big_a =
      1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
  const double big_b =
      u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));

  double sigma = s / (kWgs84B * big_a);
  double sin_sigma = 0.0, cos_sigma = 0.0, cos_2sigma_m = 0.0;
  int iter = 0;
  while (true) {
    cos_2sigma_m = std::cos(2.0 * sigma1 + sigma);
    sin_sigma = std::sin(sigma);
    cos_sigma = std::cos(sigma);
    const double delta_sigma =
        big_b * sin_sigma *
        (cos_2sigma_m +
         big_b / 4.0 *
             (cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m) -
              big_b / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sin_sigma * sin_sigma) *
                  (-3.0 + 4.0 * cos_2sigma_m * cos_2sigma_m)));
    const double sigma_next = s / (kWgs84B * big_a) + delta_sigma;
    const double change = std::abs(sigma_next - sigma);
    sigma = sigma_next;
    if (change < kVincentyTol) break;
    if (++iter >= kVincentyMaxIter) {
      throw GeodesicConvergenceError("geodesic_direct did not converge");
    }
  }
  cos_2sigma_m = std::cos(2.0 * sigma1 + sigma);
  sin_sigma = std::sin(sigma);
  cos_sigma = std::cos(sigma);

  const double tmp = sin_u1 * sin_sigma - cos_u1 * cos_sigma * cos_alpha1;
  const double phi2 = std::atan2(
      sin_u1 * cos_sigma + cos_u1 * sin_sigma * cos_alpha1,
      (1.0 - kWgs84F) * std::sqrt(sin_alpha * sin_alpha + tmp * tmp));
  const double lambda = std::atan2(
      sin_sigma * sin_alpha1, cos_u1 * cos_sigma - sin_u1 * sin_sigma * cos_alpha1);
  const double big_c =
      kWgs84F / 16.0 * cos_sq_alpha * (4.0 + kWgs84F * (4.0 - 3.0 * cos_sq_alpha));
  const double big_l =
      lambda - (1.0 - big_c) * kWgs84F * sin_alpha *
                   (sigma + big_c * sin_sigma *
                                (cos_2sigma_m + big_c * cos_sigma *
                                                    (-1.0 + 2.0 * cos_2sigma_m *
                                                                cos_2sigma_m)));

  GeoPoint out;
  out.lat = rad2deg(phi2);
  out.lon = normalize_lon_deg(origin.lon + rad2deg(big_l));
  out.alt = origin.alt;
  return out;
}

InverseSolution geodesic_inverse_full(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double big_l = deg2rad(normalize_lon_deg(b.lon - a.lon));

  if (phi1 == phi2 && big_l == 0.0) return {0.0, false};

  const double tan_u1 = (1.0 - kWgs84F) * std::tan(phi1);
  const double cos_u1 = 1.0 / std::sqrt(1.0 + tan_u1 * tan_u1);
  const double sin_u1 = tan_u1 * cos_u1;
  const double tan_u2 = (1.0 - kWgs84F) * std::tan(phi2);
  const double cos_u2 = 1.0 / std::sqrt(1.0 + tan_u2 * tan_u2);
  const double sin_u2 = tan_u2 * cos_u2;

  double lambda = big_l;
  double sin_sigma = 0.0, cos_sigma = 0.0, sigma = 0.0;
  double cos_sq_alpha = 0.0, cos_2sigma_m = 0.0;
  bool converged = false;
  bool antipodal = false;
  for (int iter = 0; iter < kVincentyMaxIter; ++iter) {
    const double sin_lambda = std::sin(lambda);
    const double cos_lambda = std::cos(lambda);
    const double t1 = cos_u2 * sin_lambda;
    const double t2 = cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lambda;
    sin_sigma = std::sqrt(t1 * t1 + t2 * t2);
    cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lambda;
    if (sin_sigma == 0.0) {
      if (cos_sigma > 0.0) return {0.0, false};  // coincident points
      antipodal = true;  // diametrically opposite: series breaks down
      break;
    }
    sigma = std::atan2(sin_sigma, cos_sigma);
    const double sin_alpha = cos_u1 * cos_u2 * sin_lambda / sin_sigma;
    cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
    // Equatorial line: cos_sq_alpha = 0.
    cos_2sigma_m =
        cos_sq_alpha != 0.0 ? cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha : 0.0;
    const double big_c =
        kWgs84F / 16.0 * cos_sq_alpha * (4.0 + kWgs84F * (4.0 - 3.0 * cos_sq_alpha));
    const double lambda_next =
        big_l + (1.0 - big_c) * kWgs84F * sin_alpha *
                    (sigma + big_c * sin_sigma *
                                 (cos_2sigma_m + big_c * cos_sigma *
                                                     (-1.0 + 2.0 * cos_2sigma_m *
                                                                 cos_2sigma_m)));
    const double change = std::abs(lambda_next - lambda);
    lambda = lambda_next;
    if (change < kVincentyTol) {
      converged = true;
      break;
    }
  }

  if (!converged || antipodal) {
    // Near-antipodal pair: spherical great-circle fallback, flagged.
    const double d = std::acos(std::clamp(
        std::sin(phi1) * std::sin(phi2) +
            std::cos(phi1) * std::cos(phi2) * std::cos(big_l),
        -1.0, 1.0));
    return {d * kMeanRadius, true};
  }

  const double u_sq =
      cos_sq_alpha * (kWgs84A * kWgs84A - kWgs84B * kWgs84B) / (kWgs84B * kWgs84B);
  const double big_a =
      1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
  const double big_b =
      u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
  const double delta_sigma =
      big_b * sin_sigma *
      (cos_2sigma_m +
       big_b / 4.0 *
           (cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m) -
            big_b / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sin_sigma * sin_sigma) *
                (-3.0 + 4.0 * cos_2sigma_m * cos_2sigma_m)));
  return {kWgs84B * big_a * (sigma - delta_sigma), false};
}

double geodesic_inverse(const GeoPoint& a, const GeoPoint& b) {
  return geodesic_inverse_full(a, b).distance_m;
}

GeoPoint pose_to_geo(const MapAnchor& anchor, const LocalPose& pose) {
  const auto bd = planar_bearing_distance(pose);
  GeoPoint g = geodesic_direct(anchor.origin, bd.bearing_rad, bd.distance_m);
  g.alt = pose.z;
  return g;
}

Eigen::Vector2d east_north_offset(const GeoPoint& ref, const GeoPoint& p) {
  const LocalRadii r = wgs84_radii(ref.lat);
  const double dlat = deg2rad(p.lat - ref.lat);
  const double dlon = deg2rad(normalize_lon_deg(p.lon - ref.lon));
  return {dlon * r.prime_vertical * std::cos(deg2rad(ref.lat)), dlat * r.meridian};
}

GeoPoint offset_to_geo(const GeoPoint& ref, double east_m, double north_m) {
  const LocalRadii r = wgs84_radii(ref.lat);
  GeoPoint out;
  out.lat = ref.lat + rad2deg(north_m / r.meridian);
  out.lon = normalize_lon_deg(
      ref.lon + rad2deg(east_m / (r.prime_vertical * std::cos(deg2rad(ref.lat)))));
  out.alt = ref.alt;
  return out;
}

}  // namespace geopipe
