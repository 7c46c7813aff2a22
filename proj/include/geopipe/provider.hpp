#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geopipe/geodesy.hpp"
#include "geopipe/panorama.hpp"

namespace geopipe {

struct PanoMeta {
  enum class Status { kOk, kNone };
  Status status = Status::kNone;
  std::string pano_id;
  GeoPoint location;
  std::optional<std::string> capture_date;

  static PanoMeta none() { return {}; }
};

struct TileRequest {
  std::string pano_id;                ///< preferred lookup key when non-empty
  std::optional<GeoPoint> location;   ///< fallback when pano_id is empty
  double heading_deg = 0.0;           ///< [0, 360)
  double pitch_deg = 0.0;
  double fov_deg = 60.0;              ///< (0, 120]
  int size = 640;                     ///< square output

  void validate() const;
};

/// Geographic image source: a metadata lookup that resolves the nearest
/// panorama for a position, and a tile fetch that renders one perspective
/// view of it. Request counters are tracked for the dedup guarantees.
class Provider {
 public:
  virtual ~Provider() = default;

  PanoMeta metadata(const GeoPoint& query) {
    metadata_requests_.fetch_add(1, std::memory_order_relaxed);
    return do_metadata(query);
  }
  ImageRgb8 fetch_tile(const TileRequest& req) {
    req.validate();
    tile_requests_.fetch_add(1, std::memory_order_relaxed);
    return do_fetch_tile(req);
  }

  std::uint64_t metadata_requests() const { return metadata_requests_.load(); }
  std::uint64_t tile_requests() const { return tile_requests_.load(); }

 protected:
  virtual PanoMeta do_metadata(const GeoPoint& query) = 0;
  virtual ImageRgb8 do_fetch_tile(const TileRequest& req) = 0;

 private:
  std::atomic<std::uint64_t> metadata_requests_{0};
  std::atomic<std::uint64_t> tile_requests_{0};
};

/// Fetches one tile per heading at pitch 0. Tiles that fail with transport
/// errors are retried once more as a batch; a remaining failure raises
/// PartialFetchError (TransportError when every tile failed).
std::vector<PerspectiveTile> fetch_tiles(Provider& provider, const PanoMeta& meta,
                                         const std::vector<double>& headings,
                                         double fov_deg, int size);

// ---------------------------------------------------------------------------
// Mock provider: analytic direction-encoded sphere.
//
// R and G encode azimuth/elevation as triangle waves (periods below), B is a
// low-frequency checker; all three are continuous on the sphere so the
// stitch/synthesize round trip is interpolation-friendly. Decoding picks the
// pre-image nearest to a reference direction, giving sub-0.1 degree angular
// resolution for alignment tests.
// ---------------------------------------------------------------------------

namespace mock_scene {

inline constexpr double kThetaPeriodRad = M_PI / 4.0;   // 45 degrees
inline constexpr double kPhiPeriodRad = M_PI / 8.0;     // 22.5 degrees

/// Scene value of a view direction, before 8-bit quantization.
std::array<double, 3> encode_dir(double theta, double phi);

/// Decodes a quantized (R, G) pair back to angles, resolving the triangle
/// wave ambiguity toward the reference direction.
Eigen::Vector2d decode_dir(std::uint8_t r, std::uint8_t g, double theta_ref,
                           double phi_ref);

/// Angle in radians between the direction decoded from `rgb` and `ref`.
double decode_error_rad(const std::array<std::uint8_t, 3>& rgb,
                        const Eigen::Vector3d& ref);

}  // namespace mock_scene

/// How a mock panorama's scene relates to the query position; the three
/// misaligned modes mirror the failure cases a live provider produces.
enum class AlignmentMode { kAligned, kIndoor, kWrongLevel, kParallelRoad };
std::string to_string(AlignmentMode mode);
AlignmentMode alignment_mode_from_string(const std::string& s);

struct MockPano {
  std::string pano_id;
  GeoPoint location;
  AlignmentMode mode = AlignmentMode::kAligned;
  std::optional<std::string> capture_date;
};

class MockProvider : public Provider {
 public:
  explicit MockProvider(std::vector<MockPano> world) : world_(std::move(world)) {}

  /// Renders the analytic scene exactly through the pinhole camera model;
  /// bit-identical for identical requests.
  static ImageRgb8 render_tile(const TileRequest& req, AlignmentMode mode);

  /// Ground-truth onboard view: the aligned scene rendered with arbitrary
  /// camera rotation (used by gate tests as the vehicle-side image).
  static ImageRgb8 render_view(const Intrinsics& k, const Pose& pose);

 protected:
  PanoMeta do_metadata(const GeoPoint& query) override;
  ImageRgb8 do_fetch_tile(const TileRequest& req) override;

 private:
  const MockPano* find(const TileRequest& req) const;
  std::vector<MockPano> world_;
};

// ---------------------------------------------------------------------------
// HTTP provider: generic URL-template client.
// ---------------------------------------------------------------------------

struct HttpProviderConfig {
  /// Templates with {lat},{lon},{pano_id},{heading},{pitch},{fov},{size},{key}.
  std::string metadata_url;
  std::string tile_url;
  std::string api_key;
  int max_attempts = 3;
  double backoff_base_s = 0.5;   ///< exponential: base * 2^attempt
  double rate_limit_rps = 10.0;  ///< token bucket
  double timeout_s = 10.0;

  /// Reads GEOPIPE_PROVIDER_KEY, GEOPIPE_METADATA_URL, GEOPIPE_TILE_URL.
  static HttpProviderConfig from_env();
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  ~HttpProvider() override;

 protected:
  PanoMeta do_metadata(const GeoPoint& query) override;
  ImageRgb8 do_fetch_tile(const TileRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Deduplicating panorama cache.
// ---------------------------------------------------------------------------

struct StitchOptions {
  int pano_width = kDefaultPanoWidth;
  int pano_height = kDefaultPanoHeight;
  double fov_deg = 60.0;
  int tile_size = 640;
  bool keep_tiles = false;
  int jobs = 1;
};

struct CachePaths {
  std::filesystem::path dir;
  std::filesystem::path pano_png;
  std::filesystem::path mask_png;
  std::filesystem::path meta_json;
};
CachePaths cache_paths(const std::filesystem::path& cache_dir,
                       const std::string& pano_id);

enum class CorruptionPolicy { kThrow, kRefetch };

struct EnsureResult {
  CachePaths paths;
  bool fetched = false;  ///< false when the cache already had the panorama
};

/// Idempotent fetch-and-stitch: when the panorama is cached (sidecar present
/// and checksums match) no provider request is issued; otherwise the 18
/// canonical tiles are fetched, stitched and persisted. Repeated calls
/// produce byte-identical files. Writers are serialized per pano_id.
EnsureResult ensure_pano(const std::filesystem::path& cache_dir,
                         const PanoMeta& meta, Provider& provider,
                         const StitchOptions& options,
                         CorruptionPolicy policy = CorruptionPolicy::kThrow);

/// Loads a cached panorama, verifying the sidecar checksums.
EquirectPanorama load_cached_pano(const std::filesystem::path& cache_dir,
                                  const std::string& pano_id);

}  // namespace geopipe
