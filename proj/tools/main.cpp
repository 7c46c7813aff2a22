#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "geopipe/errors.hpp"
#include "geopipe/pipeline.hpp"
#include "geopipe/png_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geopipe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitProvider = 3;
constexpr int kExitNoRetrieval = 4;

struct GlobalOpts {
  std::string config_path;
  bool json_out = false;
  std::uint64_t seed = 0;
};

void emit(const GlobalOpts& g, const json& payload, const std::string& plain) {
  if (g.json_out) {
    std::cout << payload.dump(2) << "\n";
  } else if (!plain.empty()) {
    std::cout << plain << "\n";
  }
}

// Compass yaw of the ego forward axis (+y at identity).
double yaw_from_rotation(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d f = q * Eigen::Vector3d::UnitY();
  return std::atan2(f.x(), f.y());
}

int cmd_poses_to_geo(const GlobalOpts& g, const PipelineConfig& cfg,
                     const std::string& poses_path, const std::string& location,
                     const std::string& out_path) {
  const auto anchors = load_anchors(cfg.anchors_path);
  const auto it = anchors.find(location);
  if (it == anchors.end()) {
    throw SchemaError("location not in anchor registry: " + location);
  }
  const MapAnchor anchor{location, it->second};
  const std::vector<LocalPose> poses = load_poses(poses_path);
  std::vector<GeoRecord> records;
  records.reserve(poses.size());
  for (const LocalPose& p : poses) {
    GeoRecord r;
    r.frame_id = p.frame_id;
    r.geo = pose_to_geo(anchor, p);
    r.rotation = p.rotation;
    r.timestamp_us = p.timestamp_us;
    records.push_back(std::move(r));
  }
  save_geo_records(out_path, records);
  emit(g, json{{"frames", records.size()}, {"location", location},
               {"out", out_path}},
       "wrote " + std::to_string(records.size()) + " records to " + out_path);
  return kExitOk;
}

int cmd_curate(const GlobalOpts& g, const PipelineConfig& cfg,
               const std::string& geo_path, const std::string& manifest_path) {
  const std::vector<GeoRecord> frames = load_geo_records(geo_path);
  const std::unique_ptr<Provider> provider = make_provider(cfg);
  const CurateStats stats = curate(frames, *provider, cfg, manifest_path);
  emit(g,
       json{{"frames", stats.frames},
            {"distinct_panos", stats.distinct_panos},
            {"panos_fetched", stats.panos_fetched},
            {"panos_cached", stats.panos_cached},
            {"none_frames", stats.none_frames},
            {"tile_requests", stats.tile_requests},
            {"metadata_requests", stats.metadata_requests},
            {"manifest", manifest_path}},
       "curated " + std::to_string(stats.frames) + " frames, " +
           std::to_string(stats.distinct_panos) + " panoramas (" +
           std::to_string(stats.tile_requests) + " tile requests)");
  return kExitOk;
}

int cmd_retrieve(const GlobalOpts& g, const PipelineConfig& cfg,
                 const std::string& manifest_path, const std::string& query_path,
                 const std::string& out_path) {
  const Manifest manifest = load_manifest(manifest_path);
  std::vector<PanoEntry> entries;
  for (const auto& [id, rec] : manifest.panos) entries.push_back({id, rec.location});
  const RetrievalIndex index = RetrievalIndex::build(std::move(entries));

  std::ifstream f(query_path);
  if (!f) throw SchemaError("cannot open " + query_path);
  json queries;
  try {
    f >> queries;
  } catch (const json::exception& e) {
    throw SchemaError("invalid query JSON: " + std::string(e.what()));
  }
  if (!queries.is_array()) throw SchemaError("query file must be a JSON array");

  json results = json::array();
  try {
    for (const auto& q : queries) {
      const GeoPoint p(q.at("lat").get<double>(), q.at("lon").get<double>());
      const RetrievalResult r = index.nearest(p, cfg.threshold_m);
      json row;
      row["frame_id"] = q.value("frame_id", "");
      row["pano_id"] = r.is_none() ? json() : json(r.pano_id);
      row["distance_m"] =
          std::isfinite(r.distance_m) ? json(r.distance_m) : json();
      results.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw SchemaError("bad query record: " + std::string(e.what()));
  }
  const std::string text = results.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    out << text;
    emit(g, json{{"queries", results.size()}, {"out", out_path}},
         "wrote " + std::to_string(results.size()) + " results to " + out_path);
  }
  return kExitOk;
}

int cmd_render(const GlobalOpts& g, const PipelineConfig& cfg,
               const std::string& manifest_path, const std::string& geo_path,
               const std::string& frame_id, const std::string& calib_path,
               const std::string& out_view, const std::string& out_validity) {
  const Manifest manifest = load_manifest(manifest_path);
  const std::vector<GeoRecord> records = load_geo_records(geo_path);
  const CameraCalibration calib = load_calibration(calib_path);
  const SynthesizedView view = render_frame(manifest, records, frame_id, calib,
                                            cfg.cache_dir, cfg.effective_jobs());
  write_png_rgb8(out_view, view.image);
  write_png_mask1(out_validity, view.validity);
  emit(g, json{{"frame", frame_id}, {"view", out_view}, {"validity", out_validity}},
       "rendered " + frame_id + " to " + out_view);
  return kExitOk;
}

int cmd_crop_sat(const GlobalOpts& g, const std::string& mosaic_png,
                 const std::string& mosaic_meta, std::optional<double> lat,
                 std::optional<double> lon, std::optional<double> yaw_deg,
                 const std::string& geo_path, const std::string& frame_id,
                 int size, const std::string& out_path) {
  const SatMosaic mosaic = load_mosaic(mosaic_png, mosaic_meta);
  GeoPoint ego;
  double yaw_rad = 0.0;
  if (!geo_path.empty()) {
    const auto records = load_geo_records(geo_path);
    const auto it = std::find_if(records.begin(), records.end(),
                                 [&](const GeoRecord& r) {
                                   return r.frame_id == frame_id;
                                 });
    if (it == records.end()) {
      throw SchemaError("frame not in geo records: " + frame_id);
    }
    ego = it->geo;
    yaw_rad = yaw_from_rotation(it->rotation);
  } else if (lat && lon && yaw_deg) {
    ego = GeoPoint(*lat, *lon);
    yaw_rad = deg2rad(*yaw_deg);
  } else {
    throw SchemaError("crop-sat needs --lat/--lon/--yaw-deg or --geo/--frame");
  }
  const PoseCrop crop = pose_crop(mosaic, ego, yaw_rad, size);
  write_png_rgb8(out_path, crop.pixels);
  emit(g, json{{"out", out_path}, {"padded", crop.padded}, {"size", size}},
       "wrote crop to " + out_path + (crop.padded ? " (padded)" : ""));
  return kExitOk;
}

int cmd_score(const GlobalOpts& g, const PipelineConfig& cfg,
              const std::string& onboard_path, const std::string& geo_img_path,
              double distance_m, const std::string& mask_path) {
  GateParams params;
  if (!cfg.gate_params_path.empty()) {
    params = load_gate_params(cfg.gate_params_path);
  }
  const ImageF onboard = to_gray(read_png_rgb8(onboard_path));
  const ImageF geo_raw = to_gray(read_png_rgb8(geo_img_path));
  const ImageF geo =
      align_geo_to_onboard(geo_raw, onboard.width(), onboard.height());
  Mask mask;
  const Mask* mask_ptr = nullptr;
  if (!mask_path.empty()) {
    mask = read_png_mask(mask_path);
    if (mask.width() != onboard.width() || mask.height() != onboard.height()) {
      throw SchemaError("validity mask size does not match the onboard image");
    }
    mask_ptr = &mask;
  }
  const GateFeatures f = gate_features(onboard, geo, distance_m, params, mask_ptr);
  const double w = gate_score(f, params);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", w);
  emit(g, json{{"w", w}, {"diff_mean", f.diff_mean}, {"dist_feat", f.dist_feat}},
       buf);
  return kExitOk;
}

int cmd_calibrate(const GlobalOpts& g, const std::string& features_path,
                  bool synthetic, const std::string& out_path, int epochs,
                  double lr) {
  std::vector<LabeledFeatures> samples;
  if (synthetic) {
    samples = synthetic_gate_samples(200, 0.1, g.seed);
  } else if (!features_path.empty()) {
    for (const FeatureRow& row : load_feature_csv(features_path)) {
      samples.push_back({row.features, row.label});
    }
  } else {
    throw SchemaError("calibrate needs --features or --synthetic");
  }
  const CalibrationResult res = calibrate(samples, epochs, lr, g.seed);
  save_gate_params(out_path, res.params);
  const double bce = gate_bce(samples, res.params);
  emit(g,
       json{{"bce", bce},
            {"epochs", epochs},
            {"samples", samples.size()},
            {"out", out_path}},
       "calibrated on " + std::to_string(samples.size()) +
           " samples, final bce " + std::to_string(bce));
  return kExitOk;
}

int cmd_storage_report(const GlobalOpts& g, const std::string& manifest_path,
                       std::size_t frames, std::size_t cameras,
                       std::size_t tile_bytes, std::size_t crop_bytes) {
  const Manifest manifest = load_manifest(manifest_path);
  const StorageReport r =
      storage_report(manifest, frames, cameras, tile_bytes, crop_bytes);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "reduction %.4f", r.reduction_fraction);
  emit(g,
       json{{"used_panos", r.used_panos},
            {"dedup_bytes", r.dedup_bytes},
            {"naive_bytes", r.naive_bytes},
            {"reduction_fraction", r.reduction_fraction}},
       buf);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOpts g;
  CLI::App app{"geographic street-view curation pipeline"};
  app.require_subcommand(1);
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_flag("--json", g.json_out, "machine-readable JSON output");
  app.add_option("--seed", g.seed, "seed for randomized initialization");

  // Shared pipeline options; flags override env and config file.
  std::optional<std::string> opt_anchors, opt_cache, opt_provider, opt_world,
      opt_gate_params;
  std::optional<double> opt_threshold, opt_fov;
  std::optional<int> opt_pano_width, opt_pano_height, opt_tile_size, opt_jobs;
  bool keep_tiles = false;

  auto add_pipeline_opts = [&](CLI::App* sub) {
    sub->add_option("--anchors", opt_anchors, "anchor registry JSON");
    sub->add_option("--cache", opt_cache, "panorama cache directory");
    sub->add_option("--threshold", opt_threshold, "retrieval threshold, meters");
    sub->add_option("--provider", opt_provider, "mock|http");
    sub->add_option("--mock-world", opt_world, "mock world JSON");
    sub->add_option("--gate-params", opt_gate_params, "gate parameters JSON");
    sub->add_option("--pano-width", opt_pano_width, "panorama width, pixels");
    sub->add_option("--pano-height", opt_pano_height, "panorama height, pixels");
    sub->add_option("--fov", opt_fov, "tile horizontal fov, degrees");
    sub->add_option("--tile-size", opt_tile_size, "tile size, pixels");
    sub->add_option("--jobs", opt_jobs, "worker threads (0 = logical CPUs)");
    sub->add_flag("--keep-tiles", keep_tiles, "retain fetched tiles in the cache");
  };

  // poses-to-geo
  std::string poses_path, location, out_path;
  CLI::App* poses = app.add_subcommand("poses-to-geo",
                                       "convert local poses to geodetic records");
  poses->add_option("--poses", poses_path, "pose JSON")->required();
  poses->add_option("--location", location, "anchor registry key")->required();
  poses->add_option("--out", out_path, "output geo JSON")->required();
  add_pipeline_opts(poses);

  // curate
  std::string geo_path, manifest_path;
  CLI::App* curate_cmd =
      app.add_subcommand("curate", "fetch, stitch and map panoramas");
  curate_cmd->add_option("--geo", geo_path, "geo records JSON")->required();
  curate_cmd->add_option("--manifest", manifest_path, "output manifest JSON")
      ->required();
  add_pipeline_opts(curate_cmd);

  // retrieve
  std::string query_path, retrieve_out;
  CLI::App* retrieve_cmd =
      app.add_subcommand("retrieve", "nearest-panorama queries");
  retrieve_cmd->add_option("--manifest", manifest_path, "manifest JSON")
      ->required();
  retrieve_cmd->add_option("--query", query_path, "query JSON array")->required();
  retrieve_cmd->add_option("--out", retrieve_out, "output path (default stdout)");
  add_pipeline_opts(retrieve_cmd);

  // render
  std::string frame_id, calib_path, out_view, out_validity;
  CLI::App* render_cmd =
      app.add_subcommand("render", "synthesize the aligned street view");
  render_cmd->add_option("--manifest", manifest_path, "manifest JSON")->required();
  render_cmd->add_option("--geo", geo_path, "geo records JSON")->required();
  render_cmd->add_option("--frame", frame_id, "frame id")->required();
  render_cmd->add_option("--calibration", calib_path, "camera calibration JSON")
      ->required();
  render_cmd->add_option("--out-view", out_view, "output view PNG")->required();
  render_cmd->add_option("--out-validity", out_validity, "output validity PNG")
      ->required();
  add_pipeline_opts(render_cmd);

  // crop-sat
  std::string mosaic_png, mosaic_meta, crop_out;
  std::optional<double> lat, lon, yaw_deg;
  int crop_size = kDefaultCropSize;
  CLI::App* crop_cmd = app.add_subcommand("crop-sat", "pose-aware satellite crop");
  crop_cmd->add_option("--mosaic", mosaic_png, "mosaic PNG")->required();
  crop_cmd->add_option("--mosaic-meta", mosaic_meta, "mosaic sidecar JSON")
      ->required();
  crop_cmd->add_option("--lat", lat, "ego latitude");
  crop_cmd->add_option("--lon", lon, "ego longitude");
  crop_cmd->add_option("--yaw-deg", yaw_deg, "ego compass yaw, degrees");
  crop_cmd->add_option("--geo", geo_path, "geo records JSON (with --frame)");
  crop_cmd->add_option("--frame", frame_id, "frame id (with --geo)");
  crop_cmd->add_option("--size", crop_size, "crop size, pixels");
  crop_cmd->add_option("--out", crop_out, "output PNG")->required();
  add_pipeline_opts(crop_cmd);

  // score
  std::string onboard_path, geo_img_path, mask_path;
  double distance_m = 0.0;
  CLI::App* score_cmd = app.add_subcommand("score", "reliability gate score");
  score_cmd->add_option("--onboard", onboard_path, "onboard image PNG")
      ->required();
  score_cmd->add_option("--geo-image", geo_img_path, "retrieved image PNG")
      ->required();
  score_cmd->add_option("--distance", distance_m, "GPS distance, meters")
      ->required();
  score_cmd->add_option("--mask", mask_path, "validity mask PNG");
  add_pipeline_opts(score_cmd);

  // calibrate
  std::string features_path, params_out;
  bool synthetic = false;
  int epochs = 500;
  double lr = 0.1;
  CLI::App* calib_cmd = app.add_subcommand("calibrate", "fit gate parameters");
  calib_cmd->add_option("--features", features_path, "feature/label CSV");
  calib_cmd->add_flag("--synthetic", synthetic, "use the synthetic sample set");
  calib_cmd->add_option("--out", params_out, "output params JSON")->required();
  calib_cmd->add_option("--epochs", epochs, "training epochs");
  calib_cmd->add_option("--lr", lr, "learning rate");

  // storage-report
  std::size_t frames_count = 0, cameras = 6, tile_bytes = 0, crop_bytes = 0;
  CLI::App* report_cmd =
      app.add_subcommand("storage-report", "dedup vs naive storage");
  report_cmd->add_option("--manifest", manifest_path, "manifest JSON")->required();
  report_cmd->add_option("--frames", frames_count, "frame count")->required();
  report_cmd->add_option("--cameras", cameras, "cameras per frame");
  report_cmd->add_option("--tile-bytes", tile_bytes, "bytes per tile")->required();
  report_cmd->add_option("--crop-bytes", crop_bytes, "bytes per crop")
      ->required();

  // Global options remain usable after the subcommand name.
  for (CLI::App* sub : app.get_subcommands(
           [](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSchema;
  }

  try {
    PipelineConfig cfg = load_pipeline_config(g.config_path);
    apply_env_overrides(cfg);
    if (opt_anchors) cfg.anchors_path = *opt_anchors;
    if (opt_cache) cfg.cache_dir = *opt_cache;
    if (opt_threshold) cfg.threshold_m = *opt_threshold;
    if (opt_provider) cfg.provider = *opt_provider;
    if (opt_world) cfg.mock_world_path = *opt_world;
    if (opt_gate_params) cfg.gate_params_path = *opt_gate_params;
    if (opt_pano_width) cfg.pano_width = *opt_pano_width;
    if (opt_pano_height) cfg.pano_height = *opt_pano_height;
    if (opt_fov) cfg.tile_fov_deg = *opt_fov;
    if (opt_tile_size) cfg.tile_size = *opt_tile_size;
    if (opt_jobs) cfg.jobs = *opt_jobs;
    if (keep_tiles) cfg.keep_tiles = true;

    if (poses->parsed()) {
      return cmd_poses_to_geo(g, cfg, poses_path, location, out_path);
    }
    if (curate_cmd->parsed()) return cmd_curate(g, cfg, geo_path, manifest_path);
    if (retrieve_cmd->parsed()) {
      return cmd_retrieve(g, cfg, manifest_path, query_path, retrieve_out);
    }
    if (render_cmd->parsed()) {
      return cmd_render(g, cfg, manifest_path, geo_path, frame_id, calib_path,
                        out_view, out_validity);
    }
    if (crop_cmd->parsed()) {
      return cmd_crop_sat(g, mosaic_png, mosaic_meta, lat, lon, yaw_deg, geo_path,
                          frame_id, crop_size, crop_out);
    }
    if (score_cmd->parsed()) {
      return cmd_score(g, cfg, onboard_path, geo_img_path, distance_m, mask_path);
    }
    if (calib_cmd->parsed()) {
      return cmd_calibrate(g, features_path, synthetic, params_out, epochs, lr);
    }
    if (report_cmd->parsed()) {
      return cmd_storage_report(g, manifest_path, frames_count, cameras,
                                tile_bytes, crop_bytes);
    }
    return kExitSchema;
  } catch (const NoRetrievalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoRetrieval;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
