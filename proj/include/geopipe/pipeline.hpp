#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "geopipe/errors.hpp"
#include "geopipe/provider.hpp"
#include "geopipe/retrieval.hpp"
#include "geopipe/serialization.hpp"

namespace geopipe {

/// End-to-end curation settings. Resolution order: command-line flags over
/// environment variables over the config file over these defaults.
struct PipelineConfig {
  std::filesystem::path anchors_path;
  std::filesystem::path cache_dir = "cache";
  double threshold_m = kDefaultRetrievalThreshold;
  int pano_width = kDefaultPanoWidth;
  int pano_height = kDefaultPanoHeight;
  double tile_fov_deg = 60.0;
  int tile_size = 640;
  std::filesystem::path gate_params_path;
  std::string provider = "mock";  // mock | http
  std::filesystem::path mock_world_path;
  bool keep_tiles = false;
  int jobs = 0;  ///< 0 = logical CPUs
  HttpProviderConfig http;

  int effective_jobs() const;
};

/// Loads config file values (same keys as the flags), then environment
/// overrides (GEOPIPE_*).
PipelineConfig load_pipeline_config(const std::filesystem::path& config_file);
void apply_env_overrides(PipelineConfig& config);

std::unique_ptr<Provider> make_provider(const PipelineConfig& config);

struct CurateStats {
  std::size_t frames = 0;
  std::size_t distinct_panos = 0;
  std::size_t panos_fetched = 0;
  std::size_t panos_cached = 0;
  std::size_t none_frames = 0;
  std::uint64_t tile_requests = 0;
  std::uint64_t metadata_requests = 0;
};

/// Metadata lookup per frame, deduplicated fetch/stitch of every in-range
/// panorama, then frame assignment with the threshold/NONE rule. The
/// manifest is written to `manifest_path`; reruns are byte-identical and
/// fetch nothing.
CurateStats curate(const std::vector<GeoRecord>& frames, Provider& provider,
                   const PipelineConfig& config,
                   const std::filesystem::path& manifest_path);

/// Renders the aligned street-view image for one frame through the virtual
/// camera. Throws Error subclasses; a NONE frame raises NoRetrievalError.
struct NoRetrievalError : Error {
  using Error::Error;
};
SynthesizedView render_frame(const Manifest& manifest,
                             const std::vector<GeoRecord>& records,
                             const std::string& frame_id,
                             const CameraCalibration& calib,
                             const std::filesystem::path& cache_dir, int jobs = 1);

}  // namespace geopipe
