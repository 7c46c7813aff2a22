#pragma once

#include <Eigen/Core>

#include "geopipe/geodesy.hpp"
#include "geopipe/image.hpp"

namespace geopipe {

inline constexpr double kDefaultGsd = 0.15;  // meters per pixel
inline constexpr int kDefaultCropSize = 400;

/// Georeferenced satellite mosaic. `anchor` is the geodetic position of
/// pixel (0, 0); image y grows southward.
struct SatMosaic {
  ImageRgb8 pixels;
  GeoPoint anchor;
  double gsd = kDefaultGsd;

  void validate() const;
};

/// Affine latitude/longitude -> mosaic pixel mapping through the local
/// tangent plane at the anchor. Throws OutOfFootprintError when the point
/// falls outside the raster.
Eigen::Vector2d geo_to_pixel(const SatMosaic& mosaic, const GeoPoint& p);

/// Same mapping without the footprint check (crops need off-raster values).
Eigen::Vector2d geo_to_pixel_unchecked(const SatMosaic& mosaic, const GeoPoint& p);

/// Inverse of geo_to_pixel.
GeoPoint pixel_to_geo(const SatMosaic& mosaic, double x, double y);

/// Square crop centered at `ego`, rotated so the ego forward direction
/// (compass yaw, radians) points toward the +x edge of the output; the +y
/// edge is the vehicle's right-hand side. Out-of-footprint pixels are filled
/// with mid-gray and `padded` is set. Throws OutOfFootprintError when the
/// crop lies fully outside the mosaic.
struct PoseCrop {
  ImageRgb8 pixels;
  bool padded = false;
};
PoseCrop pose_crop(const SatMosaic& mosaic, const GeoPoint& ego, double yaw_rad,
                   int size);

inline constexpr std::uint8_t kCropFillValue = 128;

}  // namespace geopipe
