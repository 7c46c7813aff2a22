#pragma once

#include <Eigen/Geometry>
#include <optional>
#include <vector>

#include "geopipe/geodesy.hpp"

namespace geopipe {

// Camera frame: +Z optical axis, +X right, +Y down.
// Panorama (global) frame: +Z north, +X east, +Y down. Both right-handed.

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  double hfov() const { return 2.0 * std::atan(width / (2.0 * fx)); }
};

struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Pinhole intrinsics from a horizontal field of view: fx = fy =
/// width / (2 tan(hfov/2)), principal point at the image center.
Intrinsics intrinsics_from_fov(double hfov_rad, int width, int height);

/// Unit ray through continuous pixel (u, v); (cx, cy) maps to (0, 0, 1).
Eigen::Vector3d pixel_to_ray(const Intrinsics& k, double u, double v);

/// Inverse of pixel_to_ray. Empty when the direction points behind the
/// camera (Z <= 0).
std::optional<Eigen::Vector2d> project_to_pixel(const Intrinsics& k,
                                                const Eigen::Vector3d& dir);

/// Rotates a direction into the parent frame; translation is ignored.
Eigen::Vector3d rotate_ray(const Pose& pose, const Eigen::Vector3d& dir);

/// Fixed basis change from the map frame (x east, y north, z up) to the
/// panorama frame (x east, y down, z north).
Eigen::Quaterniond pano_from_map_rotation();

/// Virtual camera for one frame: rotation takes camera-frame rays to the
/// north-aligned panorama frame (ego orientation composed with the onboard
/// camera orientation); translation is the ego->panorama east/north offset
/// expressed in the ego frame, with the z component pinned to 2 m.
Pose virtual_camera_for_frame(const GeoPoint& ego_geo, const GeoPoint& pano_geo,
                              const LocalPose& ego_pose,
                              const Eigen::Quaterniond& cam_rotation);

inline constexpr double kVirtualCameraHeight = 2.0;

struct FrustumBounds {
  double x_min, x_max;
  double y_min, y_max;
  double z_min, z_max;
};

/// Per-pixel, per-depth normalized 3D sample points of a camera frustum.
/// coords holds (height, width, depth, 3) float32 values in [0, 1],
/// flattened row-major.
struct FrustumGrid {
  std::vector<float> coords;
  std::vector<double> depth_bins;
  FrustumBounds bounds;
  int width = 0;
  int height = 0;

  float at(int u, int v, int k, int axis) const {
    const std::size_t d = depth_bins.size();
    return coords[((static_cast<std::size_t>(v) * width + u) * d + k) * 3 + axis];
  }
};

/// World point per pixel/depth: pose * (ray(u,v) * d_k), then per-axis
/// (p - min) / (max - min), clamped to [0, 1]. depth_bins must be strictly
/// increasing and non-empty.
FrustumGrid frustum_coords(const Intrinsics& k, const Pose& pose,
                           const std::vector<double>& depth_bins,
                           const FrustumBounds& bounds);

}  // namespace geopipe
