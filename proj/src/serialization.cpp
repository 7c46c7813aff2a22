#include "geopipe/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geopipe/errors.hpp"
#include "geopipe/png_io.hpp"

namespace geopipe {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open " + path.string());
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    throw SchemaError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

double require_number(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw SchemaError(ctx + ": missing numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

Eigen::Quaterniond quat_from(const json& j, const std::string& ctx) {
  Eigen::Quaterniond q(require_number(j, "qw", ctx), require_number(j, "qx", ctx),
                       require_number(j, "qy", ctx), require_number(j, "qz", ctx));
  if (std::abs(q.norm() - 1.0) > 1e-9) {
    throw SchemaError(ctx + ": quaternion not unit norm");
  }
  return q;
}

void quat_to(json& j, const Eigen::Quaterniond& q) {
  j["qw"] = q.w();
  j["qx"] = q.x();
  j["qy"] = q.y();
  j["qz"] = q.z();
}

}  // namespace

std::vector<LocalPose> load_poses(const fs::path& path) {
  const json root = read_json_file(path);
  if (!root.is_array()) throw SchemaError(path.string() + ": expected an array");
  std::vector<LocalPose> out;
  out.reserve(root.size());
  for (const auto& j : root) {
    LocalPose p;
    p.frame_id = j.value("frame_id", "");
    if (p.frame_id.empty()) throw SchemaError("pose record missing frame_id");
    p.x = require_number(j, "x", p.frame_id);
    p.y = require_number(j, "y", p.frame_id);
    p.z = require_number(j, "z", p.frame_id);
    p.rotation = quat_from(j, p.frame_id);
    p.timestamp_us = j.value("timestamp_us", std::int64_t{0});
    out.push_back(std::move(p));
  }
  return out;
}

void save_poses(const fs::path& path, const std::vector<LocalPose>& poses) {
  json root = json::array();
  for (const auto& p : poses) {
    json j;
    j["frame_id"] = p.frame_id;
    j["x"] = p.x;
    j["y"] = p.y;
    j["z"] = p.z;
    quat_to(j, p.rotation);
    j["timestamp_us"] = p.timestamp_us;
    root.push_back(std::move(j));
  }
  write_text_file(path, root.dump(2) + "\n");
}

std::vector<GeoRecord> load_geo_records(const fs::path& path) {
  const json root = read_json_file(path);
  if (!root.is_array()) throw SchemaError(path.string() + ": expected an array");
  std::vector<GeoRecord> out;
  out.reserve(root.size());
  for (const auto& j : root) {
    GeoRecord r;
    r.frame_id = j.value("frame_id", "");
    if (r.frame_id.empty()) throw SchemaError("geo record missing frame_id");
    r.geo = GeoPoint(require_number(j, "lat", r.frame_id),
                     require_number(j, "lon", r.frame_id),
                     j.value("alt", 0.0));
    r.rotation = quat_from(j, r.frame_id);
    r.timestamp_us = j.value("timestamp_us", std::int64_t{0});
    out.push_back(std::move(r));
  }
  return out;
}

void save_geo_records(const fs::path& path, const std::vector<GeoRecord>& records) {
  json root = json::array();
  for (const auto& r : records) {
    json j;
    j["frame_id"] = r.frame_id;
    j["lat"] = r.geo.lat;
    j["lon"] = r.geo.lon;
    j["alt"] = r.geo.alt;
    quat_to(j, r.rotation);
    j["timestamp_us"] = r.timestamp_us;
    root.push_back(std::move(j));
  }
  write_text_file(path, root.dump(2) + "\n");
}

std::map<std::string, GeoPoint> load_anchors(const fs::path& path) {
  const json root = read_json_file(path);
  if (!root.is_object()) throw SchemaError(path.string() + ": expected an object");
  std::map<std::string, GeoPoint> out;
  for (const auto& [name, j] : root.items()) {
    out.emplace(name, GeoPoint(require_number(j, "lat", name),
                               require_number(j, "lon", name)));
  }
  return out;
}

CameraCalibration load_calibration(const fs::path& path) {
  const json j = read_json_file(path);
  CameraCalibration c;
  c.intrinsics.fx = require_number(j, "fx", "calibration");
  c.intrinsics.fy = require_number(j, "fy", "calibration");
  c.intrinsics.cx = require_number(j, "cx", "calibration");
  c.intrinsics.cy = require_number(j, "cy", "calibration");
  c.intrinsics.width = static_cast<int>(require_number(j, "width", "calibration"));
  c.intrinsics.height = static_cast<int>(require_number(j, "height", "calibration"));
  c.intrinsics.validate();
  c.rotation = quat_from(j, "calibration");
  c.translation = Eigen::Vector3d(require_number(j, "tx", "calibration"),
                                  require_number(j, "ty", "calibration"),
                                  require_number(j, "tz", "calibration"));
  return c;
}

void save_calibration(const fs::path& path, const CameraCalibration& calib) {
  json j;
  j["fx"] = calib.intrinsics.fx;
  j["fy"] = calib.intrinsics.fy;
  j["cx"] = calib.intrinsics.cx;
  j["cy"] = calib.intrinsics.cy;
  j["width"] = calib.intrinsics.width;
  j["height"] = calib.intrinsics.height;
  quat_to(j, calib.rotation);
  j["tx"] = calib.translation.x();
  j["ty"] = calib.translation.y();
  j["tz"] = calib.translation.z();
  write_text_file(path, j.dump(2) + "\n");
}

std::string manifest_to_json(const Manifest& manifest) {
  json root;
  root["panos"] = json::object();
  for (const auto& [id, rec] : manifest.panos) {
    json j;
    j["lat"] = rec.location.lat;
    j["lon"] = rec.location.lon;
    j["files"] = rec.files;
    root["panos"][id] = std::move(j);
  }
  root["frames"] = json::object();
  for (const auto& [id, a] : manifest.frames) {
    json j;
    j["pano_id"] = a.pano_id.empty() ? json() : json(a.pano_id);
    j["distance_m"] = std::isfinite(a.distance_m) ? json(a.distance_m) : json();
    j["label"] = to_string(a.label);
    root["frames"][id] = std::move(j);
  }
  return root.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid manifest JSON: ") + e.what());
  }
  Manifest m;
  const json panos = root.value("panos", json::object());
  for (const auto& [id, j] : panos.items()) {
    PanoRecord rec;
    rec.location = GeoPoint(require_number(j, "lat", id),
                            require_number(j, "lon", id));
    if (j.contains("files")) {
      rec.files = j.at("files").get<std::map<std::string, std::string>>();
    }
    m.panos.emplace(id, std::move(rec));
  }
  const json frames = root.value("frames", json::object());
  for (const auto& [id, j] : frames.items()) {
    FrameAssignment a;
    if (j.contains("pano_id") && j.at("pano_id").is_string()) {
      a.pano_id = j.at("pano_id").get<std::string>();
    }
    if (j.contains("distance_m") && j.at("distance_m").is_number()) {
      a.distance_m = j.at("distance_m").get<double>();
    }
    a.label = reliability_label_from_string(j.value("label", "unlabeled"));
    m.frames.emplace(id, a);
  }
  m.validate();
  return m;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  write_text_file(path, manifest_to_json(manifest));
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return manifest_from_json(ss.str());
}

GateParams load_gate_params(const fs::path& path) {
  const json j = read_json_file(path);
  GateParams p;
  p.w1 = require_number(j, "w1", "gate params");
  p.w2 = require_number(j, "w2", "gate params");
  p.bias = require_number(j, "b", "gate params");
  p.s = j.value("s", kDefaultDistanceScale);
  p.eps = j.value("eps", kDefaultZnccEps);
  if (!(p.s > 0.0) || !(p.eps > 0.0)) {
    throw SchemaError("gate params: s and eps must be > 0");
  }
  return p;
}

void save_gate_params(const fs::path& path, const GateParams& params) {
  json j;
  j["w1"] = params.w1;
  j["w2"] = params.w2;
  j["b"] = params.bias;
  j["s"] = params.s;
  j["eps"] = params.eps;
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<FeatureRow> load_feature_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open " + path.string());
  std::vector<FeatureRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("frame_id", 0) == 0) {
      first = false;
      continue;  // header
    }
    first = false;
    std::stringstream ss(line);
    std::string field;
    FeatureRow r;
    if (!std::getline(ss, r.frame_id, ',')) {
      throw SchemaError("bad CSV row: " + line);
    }
    try {
      std::getline(ss, field, ',');
      r.features.diff_mean = std::stod(field);
      std::getline(ss, field, ',');
      r.features.dist_feat = std::stod(field);
      std::getline(ss, field, ',');
      r.label = std::stoi(field);
    } catch (const std::exception&) {
      throw SchemaError("bad CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_feature_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
  std::ostringstream out;
  out << "frame_id,diff_mean,dist_feat,label\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.frame_id << ',' << r.features.diff_mean << ',' << r.features.dist_feat
        << ',' << r.label << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<MockPano> load_mock_world(const fs::path& path) {
  const json root = read_json_file(path);
  if (!root.is_array()) throw SchemaError(path.string() + ": expected an array");
  std::vector<MockPano> world;
  for (const auto& j : root) {
    MockPano p;
    p.pano_id = j.value("pano_id", "");
    if (p.pano_id.empty()) throw SchemaError("mock pano missing pano_id");
    p.location = GeoPoint(require_number(j, "lat", p.pano_id),
                          require_number(j, "lon", p.pano_id));
    p.mode = alignment_mode_from_string(j.value("alignment", "aligned"));
    if (j.contains("capture_date") && j.at("capture_date").is_string()) {
      p.capture_date = j.at("capture_date").get<std::string>();
    }
    world.push_back(std::move(p));
  }
  return world;
}

void save_mock_world(const fs::path& path, const std::vector<MockPano>& world) {
  json root = json::array();
  for (const auto& p : world) {
    json j;
    j["pano_id"] = p.pano_id;
    j["lat"] = p.location.lat;
    j["lon"] = p.location.lon;
    j["alignment"] = to_string(p.mode);
    if (p.capture_date) j["capture_date"] = *p.capture_date;
    root.push_back(std::move(j));
  }
  write_text_file(path, root.dump(2) + "\n");
}

SatMosaic load_mosaic(const fs::path& png_path, const fs::path& sidecar_path) {
  const json j = read_json_file(sidecar_path);
  SatMosaic m;
  m.pixels = read_png_rgb8(png_path);
  m.anchor = GeoPoint(require_number(j, "lat", "mosaic"),
                      require_number(j, "lon", "mosaic"));
  m.gsd = j.value("gsd", kDefaultGsd);
  m.validate();
  return m;
}

void save_mosaic(const fs::path& png_path, const fs::path& sidecar_path,
                 const SatMosaic& mosaic) {
  write_png_rgb8(png_path, mosaic.pixels);
  json j;
  j["lat"] = mosaic.anchor.lat;
  j["lon"] = mosaic.anchor.lon;
  j["gsd"] = mosaic.gsd;
  write_text_file(sidecar_path, j.dump(2) + "\n");
}

}  // namespace geopipe
