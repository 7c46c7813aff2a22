#include "geopipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "geopipe/errors.hpp"
#include "geopipe/parallel.hpp"

namespace geopipe {

namespace {
using nlohmann::json;
namespace fs = std::filesystem;
}  // namespace

int PipelineConfig::effective_jobs() const {
  return jobs > 0 ? jobs : default_jobs();
}

PipelineConfig load_pipeline_config(const fs::path& config_file) {
  PipelineConfig c;
  if (config_file.empty()) return c;
  std::ifstream f(config_file);
  if (!f) throw SchemaError("cannot open config: " + config_file.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw SchemaError("invalid config JSON: " + std::string(e.what()));
  }
  c.anchors_path = j.value("anchors", std::string());
  c.cache_dir = j.value("cache_dir", std::string("cache"));
  c.threshold_m = j.value("threshold_m", kDefaultRetrievalThreshold);
  c.pano_width = j.value("pano_width", kDefaultPanoWidth);
  c.pano_height = j.value("pano_height", kDefaultPanoHeight);
  c.tile_fov_deg = j.value("tile_fov_deg", 60.0);
  c.tile_size = j.value("tile_size", 640);
  c.gate_params_path = j.value("gate_params", std::string());
  c.provider = j.value("provider", std::string("mock"));
  c.mock_world_path = j.value("mock_world", std::string());
  c.keep_tiles = j.value("keep_tiles", false);
  c.jobs = j.value("jobs", 0);
  c.http.metadata_url = j.value("metadata_url", std::string());
  c.http.tile_url = j.value("tile_url", std::string());
  c.http.api_key = j.value("api_key", std::string());
  c.http.rate_limit_rps = j.value("rate_limit_rps", 10.0);
  return c;
}

void apply_env_overrides(PipelineConfig& config) {
  auto env = [](const char* name) { return std::getenv(name); };
  if (const char* v = env("GEOPIPE_ANCHORS")) config.anchors_path = v;
  if (const char* v = env("GEOPIPE_CACHE")) config.cache_dir = v;
  if (const char* v = env("GEOPIPE_THRESHOLD")) config.threshold_m = std::atof(v);
  if (const char* v = env("GEOPIPE_PROVIDER")) config.provider = v;
  if (const char* v = env("GEOPIPE_MOCK_WORLD")) config.mock_world_path = v;
  if (const char* v = env("GEOPIPE_GATE_PARAMS")) config.gate_params_path = v;
  if (const char* v = env("GEOPIPE_JOBS")) config.jobs = std::atoi(v);
  if (const char* v = env("GEOPIPE_PROVIDER_KEY")) config.http.api_key = v;
  if (const char* v = env("GEOPIPE_METADATA_URL")) config.http.metadata_url = v;
  if (const char* v = env("GEOPIPE_TILE_URL")) config.http.tile_url = v;
}

std::unique_ptr<Provider> make_provider(const PipelineConfig& config) {
  if (config.provider == "mock") {
    std::vector<MockPano> world;
    if (!config.mock_world_path.empty()) {
      world = load_mock_world(config.mock_world_path);
    }
    return std::make_unique<MockProvider>(std::move(world));
  }
  if (config.provider == "http") {
    return std::make_unique<HttpProvider>(config.http);
  }
  throw SchemaError("unknown provider: " + config.provider);
}

CurateStats curate(const std::vector<GeoRecord>& frames, Provider& provider,
                   const PipelineConfig& config, const fs::path& manifest_path) {
  CurateStats stats;
  stats.frames = frames.size();
  const std::uint64_t tiles_before = provider.tile_requests();
  const std::uint64_t meta_before = provider.metadata_requests();

  // Metadata per frame; collect in-range panoramas once each.
  std::vector<PanoMeta> metas(frames.size());
  std::unordered_map<std::string, PanoMeta> distinct;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    metas[i] = provider.metadata(frames[i].geo);
    if (metas[i].status != PanoMeta::Status::kOk) continue;
    if (geodesic_inverse(frames[i].geo, metas[i].location) > config.threshold_m) {
      continue;  // beyond threshold: never fetched
    }
    distinct.emplace(metas[i].pano_id, metas[i]);
  }
  stats.distinct_panos = distinct.size();

  // Deduplicated fetch/stitch across a worker pool.
  std::vector<const PanoMeta*> todo;
  todo.reserve(distinct.size());
  for (const auto& [id, meta] : distinct) todo.push_back(&meta);
  StitchOptions opt;
  opt.pano_width = config.pano_width;
  opt.pano_height = config.pano_height;
  opt.fov_deg = config.tile_fov_deg;
  opt.tile_size = config.tile_size;
  opt.keep_tiles = config.keep_tiles;
  opt.jobs = 1;  // parallelism comes from the pano-level pool

  std::atomic<std::size_t> fetched{0}, cached{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  parallel_chunks(static_cast<int>(todo.size()), config.effective_jobs(),
                  [&](int begin, int end) {
                    for (int i = begin; i < end; ++i) {
                      try {
                        const EnsureResult r = ensure_pano(
                            config.cache_dir, *todo[i], provider, opt);
                        (r.fetched ? fetched : cached).fetch_add(1);
                      } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!first_error) first_error = std::current_exception();
                      }
                    }
                  });
  if (first_error) std::rethrow_exception(first_error);
  stats.panos_fetched = fetched.load();
  stats.panos_cached = cached.load();

  // Assignment over the fetched panorama set.
  std::vector<PanoEntry> entries;
  entries.reserve(distinct.size());
  for (const auto& [id, meta] : distinct) entries.push_back({id, meta.location});
  std::sort(entries.begin(), entries.end(),
            [](const PanoEntry& a, const PanoEntry& b) {
              return a.pano_id < b.pano_id;
            });
  const RetrievalIndex index = RetrievalIndex::build(std::move(entries));

  std::vector<FrameQuery> queries;
  queries.reserve(frames.size());
  for (const auto& f : frames) queries.push_back({f.frame_id, f.geo});
  Manifest manifest = assign_frames(index, queries, config.threshold_m);

  for (auto& [id, rec] : manifest.panos) {
    const CachePaths paths = cache_paths(config.cache_dir, id);
    rec.files["pano"] = paths.pano_png.generic_string();
    rec.files["mask"] = paths.mask_png.generic_string();
    rec.files["meta"] = paths.meta_json.generic_string();
  }
  for (const auto& [id, a] : manifest.frames) {
    if (a.pano_id.empty()) ++stats.none_frames;
  }

  save_manifest(manifest_path, manifest);
  stats.tile_requests = provider.tile_requests() - tiles_before;
  stats.metadata_requests = provider.metadata_requests() - meta_before;
  return stats;
}

SynthesizedView render_frame(const Manifest& manifest,
                             const std::vector<GeoRecord>& records,
                             const std::string& frame_id,
                             const CameraCalibration& calib,
                             const fs::path& cache_dir, int jobs) {
  const auto frame_it = manifest.frames.find(frame_id);
  if (frame_it == manifest.frames.end()) {
    throw SchemaError("frame not in manifest: " + frame_id);
  }
  if (frame_it->second.pano_id.empty()) {
    throw NoRetrievalError("frame " + frame_id + " has no retrieved panorama");
  }
  const auto rec_it =
      std::find_if(records.begin(), records.end(),
                   [&](const GeoRecord& r) { return r.frame_id == frame_id; });
  if (rec_it == records.end()) {
    throw SchemaError("frame not in geo records: " + frame_id);
  }
  const std::string& pano_id = frame_it->second.pano_id;
  const EquirectPanorama pano = load_cached_pano(cache_dir, pano_id);

  LocalPose ego;
  ego.rotation = rec_it->rotation;
  const Pose cam = virtual_camera_for_frame(rec_it->geo, pano.capture, ego,
                                            calib.rotation);
  return synthesize_view(pano, calib.intrinsics, cam, jobs);
}

}  // namespace geopipe
