#include "geopipe/panorama.hpp"

#include <algorithm>
#include <cmath>

#include "geopipe/errors.hpp"
#include "geopipe/parallel.hpp"

namespace geopipe {

double wrap_angle(double a) {
  double x = std::fmod(a + M_PI, 2.0 * M_PI);
  if (x < 0.0) x += 2.0 * M_PI;
  return x - M_PI;
}

Eigen::Vector2d dir_to_equirect(double theta, double phi, int width, int height) {
  theta = wrap_angle(theta);
  return {width * (theta + M_PI) / (2.0 * M_PI),
          height * (M_PI / 2.0 - phi) / M_PI};
}

Eigen::Vector2d equirect_to_dir(double x, double y, int width, int height) {
  return {2.0 * M_PI * x / width - M_PI, M_PI / 2.0 - M_PI * y / height};
}

Eigen::Vector3d angles_to_dir(double theta, double phi) {
  const double cp = std::cos(phi);
  return {cp * std::sin(theta), -std::sin(phi), cp * std::cos(theta)};
}

Eigen::Vector2d dir_to_angles(const Eigen::Vector3d& d) {
  return {std::atan2(d.x(), d.z()),
          std::asin(std::clamp(-d.y(), -1.0, 1.0))};
}

Eigen::Quaterniond tile_rotation(double heading_deg, double pitch_deg) {
  return Eigen::Quaterniond(
      Eigen::AngleAxisd(deg2rad(heading_deg), Eigen::Vector3d::UnitY()) *
      Eigen::AngleAxisd(deg2rad(pitch_deg), Eigen::Vector3d::UnitX()));
}

EquirectPanorama::EquirectPanorama(int width, int height)
    : pixels(width, height, 3), mask(width, height, 1, 0) {
  if (width != 2 * height) {
    throw SchemaError("panorama width must be 2 * height");
  }
}

std::vector<double> canonical_headings() {
  std::vector<double> h(kStitchHeadingCount);
  for (int i = 0; i < kStitchHeadingCount; ++i) h[i] = i * kStitchHeadingStepDeg;
  return h;
}

namespace {

// Canonical owner of an azimuth (degrees in [0, 360)): the angularly nearest
// heading of the 18-tile layout.
int owner_heading_index(double theta_rad) {
  double deg = rad2deg(theta_rad);
  if (deg < 0.0) deg += 360.0;
  const long idx = std::lround(deg / kStitchHeadingStepDeg);
  return static_cast<int>(idx % kStitchHeadingCount);
}

// Inverse-warp of one tile into the panorama. `ownership` restricts writes
// to the tile's canonical azimuth band (used by stitch); otherwise the whole
// forward frustum is written.
void warp_tile(EquirectPanorama& pano, const PerspectiveTile& tile, bool ownership,
               int row_begin, int row_end) {
  const int wp = pano.pixels.width();
  const int hp = pano.pixels.height();
  const Intrinsics& k = tile.intrinsics;
  const Eigen::Matrix3d cam_from_pano =
      tile_rotation(tile.heading_deg, tile.pitch_deg).toRotationMatrix().transpose();
  const int own_idx = owner_heading_index(deg2rad(tile.heading_deg));

  // Column band: for pitch 0 the frustum's azimuth span is exactly
  // heading +- hfov/2 independent of elevation.
  int col_begin = 0, col_count = wp;
  if (tile.pitch_deg == 0.0) {
    const double half =
        ownership ? deg2rad(kStitchHeadingStepDeg) / 2.0 : k.hfov() / 2.0;
    const double theta0 = deg2rad(tile.heading_deg) - half;
    const double theta1 = deg2rad(tile.heading_deg) + half;
    const double x0 = wp * (theta0 + M_PI) / (2.0 * M_PI);
    const double x1 = wp * (theta1 + M_PI) / (2.0 * M_PI);
    col_begin = static_cast<int>(std::floor(x0)) - 1;
    col_count = std::min(wp, static_cast<int>(std::ceil(x1 - x0)) + 3);
  }

  // Row band: elevation cannot exceed the vertical half fov for pitch 0.
  int y_begin = row_begin, y_end = row_end;
  if (tile.pitch_deg == 0.0) {
    const double phi_max = std::atan(k.height / (2.0 * k.fy));
    const int lo = static_cast<int>(
        std::floor(hp * (M_PI / 2.0 - phi_max) / M_PI)) - 1;
    const int hi = static_cast<int>(
        std::ceil(hp * (M_PI / 2.0 + phi_max) / M_PI)) + 1;
    y_begin = std::max(row_begin, lo);
    y_end = std::min(row_end, hi);
  }

  for (int iy = y_begin; iy < y_end; ++iy) {
    const double phi = M_PI / 2.0 - M_PI * (iy + 0.5) / hp;
    const double cos_phi = std::cos(phi);
    const double sin_phi = std::sin(phi);
    std::uint8_t* out_row = pano.pixels.row(iy);
    std::uint8_t* mask_row = pano.mask.row(iy);
    for (int j = col_begin; j < col_begin + col_count; ++j) {
      const int ix = ((j % wp) + wp) % wp;
      const double theta = 2.0 * M_PI * (ix + 0.5) / wp - M_PI;
      if (ownership && owner_heading_index(theta) != own_idx) continue;
      const Eigen::Vector3d dir(cos_phi * std::sin(theta), -sin_phi,
                                cos_phi * std::cos(theta));
      const Eigen::Vector3d c = cam_from_pano * dir;
      if (c.z() <= 0.0) continue;
      const double u = k.fx * c.x() / c.z() + k.cx;
      const double v = k.fy * c.y() / c.z() + k.cy;
      if (u < 0.0 || u >= k.width || v < 0.0 || v >= k.height) continue;
      const auto rgb = bilinear_rgb(tile.pixels, u, v, false);
      out_row[3 * ix + 0] = static_cast<std::uint8_t>(std::lround(rgb[0]));
      out_row[3 * ix + 1] = static_cast<std::uint8_t>(std::lround(rgb[1]));
      out_row[3 * ix + 2] = static_cast<std::uint8_t>(std::lround(rgb[2]));
      mask_row[ix] = kMaskOn;
    }
  }
}

}  // namespace

void project_tile(EquirectPanorama& pano, const PerspectiveTile& tile) {
  if (tile.pixels.width() != tile.intrinsics.width ||
      tile.pixels.height() != tile.intrinsics.height) {
    throw SizeMismatchError("project_tile: tile raster does not match intrinsics");
  }
  warp_tile(pano, tile, /*ownership=*/false, 0, pano.pixels.height());
}

EquirectPanorama stitch(const std::vector<PerspectiveTile>& tiles, int width,
                        int height, const GeoPoint& capture,
                        const std::string& pano_id, int jobs) {
  EquirectPanorama pano(width, height);
  pano.pano_id = pano_id;
  pano.capture = capture;

  // Match tiles against the canonical heading layout.
  std::vector<const PerspectiveTile*> by_slot(kStitchHeadingCount, nullptr);
  bool odd_tiles = false;
  for (const auto& t : tiles) {
    if (t.pixels.width() != t.intrinsics.width ||
        t.pixels.height() != t.intrinsics.height) {
      throw SizeMismatchError("stitch: tile raster does not match intrinsics");
    }
    const double slot = t.heading_deg / kStitchHeadingStepDeg;
    const int idx = static_cast<int>(std::lround(slot));
    if (t.pitch_deg != 0.0 || std::abs(slot - idx) > 1e-9 || idx < 0 ||
        idx >= kStitchHeadingCount || by_slot[idx] != nullptr) {
      odd_tiles = true;
      continue;
    }
    by_slot[idx] = &t;
  }

  for (int i = 0; i < kStitchHeadingCount; ++i) {
    if (by_slot[i] == nullptr) continue;
    const PerspectiveTile& t = *by_slot[i];
    parallel_chunks(height, jobs, [&](int begin, int end) {
      warp_tile(pano, t, /*ownership=*/true, begin, end);
    });
    pano.headings_present.push_back(t.heading_deg);
  }
  pano.complete = !odd_tiles &&
                  pano.headings_present.size() == kStitchHeadingCount;
  return pano;
}

SynthesizedView synthesize_view(const EquirectPanorama& pano, const Intrinsics& k,
                                const Pose& pose, int jobs, SampleMode mode) {
  if (pano.pixels.empty()) throw SchemaError("synthesize_view: empty panorama");
  SynthesizedView out;
  out.image = ImageRgb8(k.width, k.height, 3);
  out.validity = Mask(k.width, k.height, 1, 0);

  const int wp = pano.pixels.width();
  const int hp = pano.pixels.height();
  const Eigen::Matrix3d r = pose.rotation.toRotationMatrix();

  parallel_chunks(k.height, jobs, [&](int begin, int end) {
    for (int v = begin; v < end; ++v) {
      std::uint8_t* img_row = out.image.row(v);
      std::uint8_t* val_row = out.validity.row(v);
      for (int u = 0; u < k.width; ++u) {
        const Eigen::Vector3d ray = pixel_to_ray(k, u + 0.5, v + 0.5);
        const Eigen::Vector3d d = r * ray;
        const double theta = std::atan2(d.x(), d.z());
        const double phi = std::asin(std::clamp(-d.y(), -1.0, 1.0));
        const double x = wp * (theta + M_PI) / (2.0 * M_PI);
        const double y = hp * (M_PI / 2.0 - phi) / M_PI;
        if (mode == SampleMode::kNearest) {
          const int ix = ((static_cast<int>(std::floor(x)) % wp) + wp) % wp;
          const int iy = std::clamp(static_cast<int>(std::floor(y)), 0, hp - 1);
          img_row[3 * u + 0] = pano.pixels.at(ix, iy, 0);
          img_row[3 * u + 1] = pano.pixels.at(ix, iy, 1);
          img_row[3 * u + 2] = pano.pixels.at(ix, iy, 2);
          val_row[u] = pano.mask.at(ix, iy) != 0 ? kMaskOn : 0;
          continue;
        }
        const MaskedSample s =
            bilinear_rgb_masked(pano.pixels, pano.mask, x, y, /*wrap_x=*/true);
        img_row[3 * u + 0] = static_cast<std::uint8_t>(std::lround(s.rgb[0]));
        img_row[3 * u + 1] = static_cast<std::uint8_t>(std::lround(s.rgb[1]));
        img_row[3 * u + 2] = static_cast<std::uint8_t>(std::lround(s.rgb[2]));
        val_row[u] = s.valid ? kMaskOn : 0;
      }
    }
  });
  return out;
}

}  // namespace geopipe
