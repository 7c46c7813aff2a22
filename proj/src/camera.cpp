#include "geopipe/camera.hpp"

#include <cmath>

#include "geopipe/errors.hpp"

namespace geopipe {

void Intrinsics::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw SchemaError("intrinsics: focal must be > 0");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw SchemaError("intrinsics: principal point outside image");
  }
}

Intrinsics intrinsics_from_fov(double hfov_rad, int width, int height) {
  if (!(hfov_rad > 0.0 && hfov_rad < M_PI)) {
    throw SchemaError("intrinsics_from_fov: hfov outside (0, pi)");
  }
  Intrinsics k;
  k.fx = width / (2.0 * std::tan(hfov_rad / 2.0));
  k.fy = k.fx;
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  k.width = width;
  k.height = height;
  k.validate();
  return k;
}

Eigen::Vector3d pixel_to_ray(const Intrinsics& k, double u, double v) {
  const Eigen::Vector3d d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  return d.normalized();
}

std::optional<Eigen::Vector2d> project_to_pixel(const Intrinsics& k,
                                                const Eigen::Vector3d& dir) {
  if (dir.z() <= 0.0) return std::nullopt;
  return Eigen::Vector2d(k.fx * dir.x() / dir.z() + k.cx,
                         k.fy * dir.y() / dir.z() + k.cy);
}

Eigen::Vector3d rotate_ray(const Pose& pose, const Eigen::Vector3d& dir) {
  return pose.rotation * dir;
}

Eigen::Quaterniond pano_from_map_rotation() {
  Eigen::Matrix3d m;
  // rows: pano axes expressed in map coordinates
  m << 1, 0, 0,   // east
       0, 0, -1,  // down = -up
       0, 1, 0;   // north
  return Eigen::Quaterniond(m);
}

Pose virtual_camera_for_frame(const GeoPoint& ego_geo, const GeoPoint& pano_geo,
                              const LocalPose& ego_pose,
                              const Eigen::Quaterniond& cam_rotation) {
  const Eigen::Vector2d en = east_north_offset(ego_geo, pano_geo);
  Eigen::Vector3d t =
      ego_pose.rotation.conjugate() * Eigen::Vector3d(en.x(), en.y(), 0.0);
  t.z() = kVirtualCameraHeight;

  Pose out;
  out.rotation = pano_from_map_rotation() * ego_pose.rotation * cam_rotation;
  out.translation = t;
  return out;
}

FrustumGrid frustum_coords(const Intrinsics& k, const Pose& pose,
                           const std::vector<double>& depth_bins,
                           const FrustumBounds& bounds) {
  if (depth_bins.empty()) throw SchemaError("frustum_coords: empty depth_bins");
  for (std::size_t i = 1; i < depth_bins.size(); ++i) {
    if (!(depth_bins[i] > depth_bins[i - 1])) {
      throw SchemaError("frustum_coords: depth_bins not strictly increasing");
    }
  }
  if (!(bounds.x_min < bounds.x_max) || !(bounds.y_min < bounds.y_max) ||
      !(bounds.z_min < bounds.z_max)) {
    throw SchemaError("frustum_coords: bounds min must be < max");
  }

  FrustumGrid g;
  g.depth_bins = depth_bins;
  g.bounds = bounds;
  g.width = k.width;
  g.height = k.height;
  g.coords.resize(static_cast<std::size_t>(k.width) * k.height *
                  depth_bins.size() * 3);

  const Eigen::Matrix3d r = pose.rotation.toRotationMatrix();
  const double mins[3] = {bounds.x_min, bounds.y_min, bounds.z_min};
  const double inv_span[3] = {1.0 / (bounds.x_max - bounds.x_min),
                              1.0 / (bounds.y_max - bounds.y_min),
                              1.0 / (bounds.z_max - bounds.z_min)};
  std::size_t idx = 0;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d ray = pixel_to_ray(k, u + 0.5, v + 0.5);
      for (double d : depth_bins) {
        const Eigen::Vector3d p = r * (ray * d) + pose.translation;
        for (int axis = 0; axis < 3; ++axis) {
          const double n = (p[axis] - mins[axis]) * inv_span[axis];
          g.coords[idx++] = static_cast<float>(std::clamp(n, 0.0, 1.0));
        }
      }
    }
  }
  return g;
}

}  // namespace geopipe
