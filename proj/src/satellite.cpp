#include "geopipe/satellite.hpp"

#include <cmath>

#include "geopipe/errors.hpp"

namespace geopipe {

void SatMosaic::validate() const {
  if (!(gsd > 0.0)) throw SchemaError("mosaic gsd must be > 0");
  if (pixels.empty()) throw SchemaError("mosaic raster is empty");
}

Eigen::Vector2d geo_to_pixel_unchecked(const SatMosaic& mosaic, const GeoPoint& p) {
  const Eigen::Vector2d en = east_north_offset(mosaic.anchor, p);
  return {en.x() / mosaic.gsd, -en.y() / mosaic.gsd};
}

Eigen::Vector2d geo_to_pixel(const SatMosaic& mosaic, const GeoPoint& p) {
  const Eigen::Vector2d px = geo_to_pixel_unchecked(mosaic, p);
  if (px.x() < 0.0 || px.x() >= mosaic.pixels.width() || px.y() < 0.0 ||
      px.y() >= mosaic.pixels.height()) {
    throw OutOfFootprintError("point outside mosaic footprint");
  }
  return px;
}

GeoPoint pixel_to_geo(const SatMosaic& mosaic, double x, double y) {
  return offset_to_geo(mosaic.anchor, x * mosaic.gsd, -y * mosaic.gsd);
}

PoseCrop pose_crop(const SatMosaic& mosaic, const GeoPoint& ego, double yaw_rad,
                   int size) {
  mosaic.validate();
  if (size <= 0) throw SchemaError("pose_crop: size must be > 0");

  const Eigen::Vector2d center = geo_to_pixel_unchecked(mosaic, ego);
  // Mosaic-pixel directions of the vehicle axes (pixel y grows southward).
  const Eigen::Vector2d fwd(std::sin(yaw_rad), -std::cos(yaw_rad));
  const Eigen::Vector2d right(std::cos(yaw_rad), std::sin(yaw_rad));

  PoseCrop out;
  out.pixels = ImageRgb8(size, size, 3, kCropFillValue);
  const double half = size / 2.0;
  const int w = mosaic.pixels.width(), h = mosaic.pixels.height();
  bool any_inside = false;

  for (int j = 0; j < size; ++j) {
    std::uint8_t* row = out.pixels.row(j);
    const double dy = (j + 0.5) - half;
    for (int i = 0; i < size; ++i) {
      const double dx = (i + 0.5) - half;
      // src is in pixel-index coordinates (anchor = center of pixel 0,0).
      const Eigen::Vector2d src = center + dx * fwd + dy * right;
      if (src.x() < 0.0 || src.x() > w - 1.0 || src.y() < 0.0 ||
          src.y() > h - 1.0) {
        out.padded = true;
        continue;
      }
      any_inside = true;
      const auto rgb =
          bilinear_rgb(mosaic.pixels, src.x() + 0.5, src.y() + 0.5, false);
      row[3 * i + 0] = static_cast<std::uint8_t>(std::lround(rgb[0]));
      row[3 * i + 1] = static_cast<std::uint8_t>(std::lround(rgb[1]));
      row[3 * i + 2] = static_cast<std::uint8_t>(std::lround(rgb[2]));
    }
  }
  if (!any_inside) {
    throw OutOfFootprintError("pose_crop: crop fully outside mosaic");
  }
  return out;
}

}  // namespace geopipe
