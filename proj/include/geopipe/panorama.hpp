#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geopipe/camera.hpp"
#include "geopipe/geodesy.hpp"
#include "geopipe/image.hpp"

namespace geopipe {

// Equirectangular convention: azimuth theta in [-pi, pi) measured clockwise
// from north, elevation phi in [-pi/2, pi/2] up-positive.
//   x = W (theta + pi) / (2 pi),  y = H (pi/2 - phi) / pi

/// Spherical angles -> continuous pixel coordinates.
Eigen::Vector2d dir_to_equirect(double theta, double phi, int width, int height);

/// Continuous pixel coordinates -> spherical angles (exact inverse).
Eigen::Vector2d equirect_to_dir(double x, double y, int width, int height);

/// Angles -> unit direction in the panorama frame (+X east, +Y down, +Z north).
Eigen::Vector3d angles_to_dir(double theta, double phi);

/// Unit direction -> (theta, phi).
Eigen::Vector2d dir_to_angles(const Eigen::Vector3d& d);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// One perspective tile fetched from a provider at a fixed heading/pitch.
struct PerspectiveTile {
  ImageRgb8 pixels;
  Intrinsics intrinsics;
  double heading_deg = 0.0;  ///< [0, 360), compass
  double pitch_deg = 0.0;    ///< up-positive; 0 for conformant tiles
};

/// Camera->panorama rotation of a tile camera at (heading, pitch).
Eigen::Quaterniond tile_rotation(double heading_deg, double pitch_deg);

struct EquirectPanorama {
  ImageRgb8 pixels;  ///< width = 2 * height
  Mask mask;         ///< true wherever a pixel was written
  std::string pano_id;
  GeoPoint capture;
  std::optional<std::string> capture_date;
  std::vector<double> headings_present;
  bool complete = true;  ///< false when stitch ran with missing/odd headings

  EquirectPanorama() = default;
  EquirectPanorama(int width, int height);
};

inline constexpr int kDefaultPanoWidth = 4096;
inline constexpr int kDefaultPanoHeight = 2048;
inline constexpr int kStitchHeadingCount = 18;
inline constexpr double kStitchHeadingStepDeg = 20.0;

/// The canonical stitched heading set {0, 20, ..., 340}.
std::vector<double> canonical_headings();

/// Projects one tile into the panorama (inverse warp over the tile's whole
/// forward frustum): each panorama pixel whose center direction lands inside
/// the tile samples the tile bilinearly and turns its mask bit on. Pixels
/// outside the frustum are untouched.
void project_tile(EquirectPanorama& pano, const PerspectiveTile& tile);

/// Composites tiles into a panorama. Each panorama column belongs to the
/// canonical heading angularly nearest to it; only the owning tile writes
/// there, which keeps seam locations deterministic. Missing or non-canonical
/// headings leave their band unwritten and clear `complete`.
EquirectPanorama stitch(const std::vector<PerspectiveTile>& tiles, int width,
                        int height, const GeoPoint& capture,
                        const std::string& pano_id, int jobs = 1);

/// Renders a pinhole view from the panorama. Per output pixel the camera ray
/// is rotated by pose.rotation, converted to (theta, phi) and sampled with
/// azimuth wraparound. `validity` is false wherever any sampled panorama
/// pixel is unmasked. kNearest snaps to the nearest source pixel, which
/// keeps values bit-exact for exactness tests.
enum class SampleMode { kBilinear, kNearest };

struct SynthesizedView {
  ImageRgb8 image;
  Mask validity;
};
SynthesizedView synthesize_view(const EquirectPanorama& pano, const Intrinsics& k,
                                const Pose& pose, int jobs = 1,
                                SampleMode mode = SampleMode::kBilinear);

}  // namespace geopipe
