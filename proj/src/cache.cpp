#include <fstream>
#include <map>
#include <memory>
#include <mutex>

#include <nlohmann/json.hpp>

#include "geopipe/errors.hpp"
#include "geopipe/png_io.hpp"
#include "geopipe/provider.hpp"

namespace geopipe {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::mutex& pano_mutex(const std::string& pano_id) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> registry;
  std::lock_guard<std::mutex> lock(registry_mu);
  auto& p = registry[pano_id];
  if (!p) p = std::make_unique<std::mutex>();
  return *p;
}

json load_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw CacheCorruptionError("sidecar unreadable: " + path.string() + ": " +
                               e.what());
  }
  return j;
}

void save_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

// Verifies sidecar integrity; returns the parsed sidecar on success.
json verify_cache(const CachePaths& paths, const std::string& pano_id) {
  const json side = load_json(paths.meta_json);
  if (side.value("pano_id", "") != pano_id) {
    throw CacheCorruptionError("sidecar pano_id mismatch in " +
                               paths.meta_json.string());
  }
  if (!fs::exists(paths.pano_png) || !fs::exists(paths.mask_png)) {
    throw CacheCorruptionError("cached raster missing for " + pano_id);
  }
  const auto& sums = side.at("checksums");
  if (file_crc32_hex(paths.pano_png) != sums.at("pano.png").get<std::string>() ||
      file_crc32_hex(paths.mask_png) != sums.at("mask.png").get<std::string>()) {
    throw CacheCorruptionError("checksum mismatch for cached panorama " + pano_id);
  }
  return side;
}

}  // namespace

CachePaths cache_paths(const fs::path& cache_dir, const std::string& pano_id) {
  CachePaths p;
  p.dir = cache_dir / pano_id;
  p.pano_png = p.dir / "pano.png";
  p.mask_png = p.dir / "mask.png";
  p.meta_json = p.dir / "meta.json";
  return p;
}

EnsureResult ensure_pano(const fs::path& cache_dir, const PanoMeta& meta,
                         Provider& provider, const StitchOptions& options,
                         CorruptionPolicy policy) {
  if (meta.status != PanoMeta::Status::kOk || meta.pano_id.empty()) {
    throw SchemaError("ensure_pano: metadata has no panorama");
  }
  std::lock_guard<std::mutex> lock(pano_mutex(meta.pano_id));
  const CachePaths paths = cache_paths(cache_dir, meta.pano_id);

  if (fs::exists(paths.meta_json)) {
    try {
      verify_cache(paths, meta.pano_id);
      return {paths, false};
    } catch (const CacheCorruptionError&) {
      if (policy == CorruptionPolicy::kThrow) throw;
      fs::remove(paths.pano_png);
      fs::remove(paths.mask_png);
      fs::remove(paths.meta_json);
    }
  }

  const std::vector<double> headings = canonical_headings();
  const std::vector<PerspectiveTile> tiles =
      fetch_tiles(provider, meta, headings, options.fov_deg, options.tile_size);
  EquirectPanorama pano =
      stitch(tiles, options.pano_width, options.pano_height, meta.location,
             meta.pano_id, options.jobs);
  pano.capture_date = meta.capture_date;

  fs::create_directories(paths.dir);
  write_png_rgb8(paths.pano_png, pano.pixels);
  write_png_mask1(paths.mask_png, pano.mask);
  if (options.keep_tiles) {
    fs::create_directories(paths.dir / "tiles");
    for (const auto& t : tiles) {
      char name[32];
      std::snprintf(name, sizeof(name), "%03d.png",
                    static_cast<int>(std::lround(t.heading_deg)));
      write_png_rgb8(paths.dir / "tiles" / name, t.pixels);
    }
  }

  json side;
  side["pano_id"] = meta.pano_id;
  side["lat"] = meta.location.lat;
  side["lon"] = meta.location.lon;
  side["capture_date"] = meta.capture_date ? json(*meta.capture_date) : json();
  side["width"] = options.pano_width;
  side["height"] = options.pano_height;
  side["headings_present"] = pano.headings_present;
  side["checksums"] = {{"pano.png", file_crc32_hex(paths.pano_png)},
                       {"mask.png", file_crc32_hex(paths.mask_png)}};
  // Written last: its presence marks a complete cache entry.
  save_json(paths.meta_json, side);
  return {paths, true};
}

EquirectPanorama load_cached_pano(const fs::path& cache_dir,
                                  const std::string& pano_id) {
  const CachePaths paths = cache_paths(cache_dir, pano_id);
  if (!fs::exists(paths.meta_json)) {
    throw Error("panorama not cached: " + pano_id);
  }
  const json side = verify_cache(paths, pano_id);

  EquirectPanorama pano;
  pano.pixels = read_png_rgb8(paths.pano_png);
  pano.mask = read_png_mask(paths.mask_png);
  pano.pano_id = pano_id;
  pano.capture = GeoPoint(side.at("lat").get<double>(), side.at("lon").get<double>());
  if (side.contains("capture_date") && side.at("capture_date").is_string()) {
    pano.capture_date = side.at("capture_date").get<std::string>();
  }
  if (side.contains("headings_present")) {
    pano.headings_present = side.at("headings_present").get<std::vector<double>>();
  }
  pano.complete = pano.headings_present.size() == kStitchHeadingCount;
  return pano;
}

}  // namespace geopipe
