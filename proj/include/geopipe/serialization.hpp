#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geopipe/camera.hpp"
#include "geopipe/geodesy.hpp"
#include "geopipe/provider.hpp"
#include "geopipe/reliability.hpp"
#include "geopipe/retrieval.hpp"
#include "geopipe/satellite.hpp"

namespace geopipe {

/// One georeferenced frame record: pose converted to geodetic coordinates.
struct GeoRecord {
  std::string frame_id;
  GeoPoint geo;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  std::int64_t timestamp_us = 0;
};

// Pose file: JSON array of
//   {frame_id, x, y, z, qw, qx, qy, qz, timestamp_us}
std::vector<LocalPose> load_poses(const std::filesystem::path& path);
void save_poses(const std::filesystem::path& path,
                const std::vector<LocalPose>& poses);

// Geo file: JSON array of {frame_id, lat, lon, alt, qw, qx, qy, qz,
// timestamp_us}, order preserved.
std::vector<GeoRecord> load_geo_records(const std::filesystem::path& path);
void save_geo_records(const std::filesystem::path& path,
                      const std::vector<GeoRecord>& records);

// Anchor registry: JSON map location_name -> {lat, lon}.
std::map<std::string, GeoPoint> load_anchors(const std::filesystem::path& path);

// Camera calibration: {fx, fy, cx, cy, width, height, qw, qx, qy, qz,
// tx, ty, tz}; rotation is the camera-in-ego orientation.
struct CameraCalibration {
  Intrinsics intrinsics;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};
CameraCalibration load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path,
                      const CameraCalibration& calib);

// Manifest: {"panos": {id: {lat, lon, files}}, "frames": {frame_id:
// {pano_id|null, distance_m, label}}}; keys sorted, byte-stable.
std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

// Gate parameters: {w1, w2, b, s, eps}.
GateParams load_gate_params(const std::filesystem::path& path);
void save_gate_params(const std::filesystem::path& path, const GateParams& params);

// Feature/label CSV: frame_id, diff_mean, dist_feat, label.
struct FeatureRow {
  std::string frame_id;
  GateFeatures features;
  int label = 0;
};
std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path);
void save_feature_csv(const std::filesystem::path& path,
                      const std::vector<FeatureRow>& rows);

// Mock world: JSON array of {pano_id, lat, lon, alignment?, capture_date?}.
std::vector<MockPano> load_mock_world(const std::filesystem::path& path);
void save_mock_world(const std::filesystem::path& path,
                     const std::vector<MockPano>& world);

// Satellite mosaic sidecar: {lat, lon, gsd}.
SatMosaic load_mosaic(const std::filesystem::path& png_path,
                      const std::filesystem::path& sidecar_path);
void save_mosaic(const std::filesystem::path& png_path,
                 const std::filesystem::path& sidecar_path, const SatMosaic& mosaic);

}  // namespace geopipe
