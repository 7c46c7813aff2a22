#include "geopipe/provider.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "geopipe/errors.hpp"
#include "geopipe/png_io.hpp"

namespace geopipe {

void TileRequest::validate() const {
  if (!(fov_deg > 0.0 && fov_deg <= 120.0)) {
    throw SchemaError("tile request: fov outside (0, 120]");
  }
  if (!(heading_deg >= 0.0 && heading_deg < 360.0)) {
    throw SchemaError("tile request: heading outside [0, 360)");
  }
  if (size <= 0) throw SchemaError("tile request: size must be > 0");
  if (pano_id.empty() && !location.has_value()) {
    throw SchemaError("tile request: needs pano_id or location");
  }
}

std::vector<PerspectiveTile> fetch_tiles(Provider& provider, const PanoMeta& meta,
                                         const std::vector<double>& headings,
                                         double fov_deg, int size) {
  if (meta.status != PanoMeta::Status::kOk) {
    throw SchemaError("fetch_tiles: metadata has no panorama");
  }
  const Intrinsics k = intrinsics_from_fov(deg2rad(fov_deg), size, size);

  std::vector<PerspectiveTile> tiles(headings.size());
  std::vector<std::size_t> pending(headings.size());
  for (std::size_t i = 0; i < headings.size(); ++i) pending[i] = i;

  std::string last_error;
  for (int pass = 0; pass < 2 && !pending.empty(); ++pass) {
    std::vector<std::size_t> failed;
    for (const std::size_t i : pending) {
      TileRequest req;
      req.pano_id = meta.pano_id;
      req.location = meta.location;
      req.heading_deg = headings[i];
      req.fov_deg = fov_deg;
      req.size = size;
      try {
        tiles[i].pixels = provider.fetch_tile(req);
        tiles[i].intrinsics = k;
        tiles[i].heading_deg = headings[i];
        tiles[i].pitch_deg = 0.0;
      } catch (const TransportError& e) {
        last_error = e.what();
        failed.push_back(i);
      }
    }
    pending = std::move(failed);
  }
  if (!pending.empty()) {
    if (pending.size() == headings.size()) {
      throw TransportError("fetch_tiles: all tiles failed: " + last_error);
    }
    throw PartialFetchError("fetch_tiles: " + std::to_string(pending.size()) +
                            " tiles failed after retry: " + last_error);
  }
  return tiles;
}

// ---------------------------------------------------------------------------
// Mock analytic scene
// ---------------------------------------------------------------------------

namespace mock_scene {

namespace {

double triangle01(double t) {
  const double f = t - std::floor(t);
  return 2.0 * std::abs(f - 0.5);
}

std::array<double, 3> scene_value(double theta, double phi, AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::kWrongLevel:
      phi += deg2rad(12.0);
      break;
    case AlignmentMode::kParallelRoad:
      theta += deg2rad(15.0);
      break;
    case AlignmentMode::kIndoor:
      // Unrelated texture: no usable direction encoding.
      return {0.5 + 0.5 * std::sin(13.0 * theta + 1.0) * std::cos(5.0 * phi),
              0.5 + 0.5 * std::sin(11.0 * phi + 2.0),
              0.5 + 0.5 * std::cos(7.0 * theta) * std::sin(3.0 * phi + 1.0)};
    case AlignmentMode::kAligned:
      break;
  }
  // B: coarse checker plus a fine texture term. The fine term is what makes
  // windowed ZNCC sensitive to angular shifts; smooth ramps alone look
  // locally affine to a 9x9 window.
  return {triangle01(theta / kThetaPeriodRad),
          triangle01(phi / kPhiPeriodRad),
          0.5 + 0.11 * std::sin(8.0 * theta) * std::sin(8.0 * phi) +
              0.36 * std::sin(64.0 * theta + 1.0) * std::cos(64.0 * phi)};
}

// Triangle-wave pre-image nearest to a reference, in wave periods.
double nearest_preimage(double value01, double ref_periods) {
  const double off = value01 / 2.0;
  double best = 0.0;
  double best_err = std::numeric_limits<double>::infinity();
  const double n0 = std::floor(ref_periods);
  for (double n = n0 - 1.0; n <= n0 + 1.0; n += 1.0) {
    for (const double sign : {-1.0, 1.0}) {
      const double cand = n + 0.5 + sign * off;
      const double err = std::abs(cand - ref_periods);
      if (err < best_err) {
        best_err = err;
        best = cand;
      }
    }
  }
  return best;
}

}  // namespace

std::array<double, 3> encode_dir(double theta, double phi) {
  return scene_value(theta, phi, AlignmentMode::kAligned);
}

Eigen::Vector2d decode_dir(std::uint8_t r, std::uint8_t g, double theta_ref,
                           double phi_ref) {
  const double theta =
      kThetaPeriodRad * nearest_preimage(r / 255.0, theta_ref / kThetaPeriodRad);
  const double phi =
      kPhiPeriodRad * nearest_preimage(g / 255.0, phi_ref / kPhiPeriodRad);
  return {theta, phi};
}

double decode_error_rad(const std::array<std::uint8_t, 3>& rgb,
                        const Eigen::Vector3d& ref) {
  const Eigen::Vector2d a = dir_to_angles(ref);
  const Eigen::Vector2d dec = decode_dir(rgb[0], rgb[1], a.x(), a.y());
  const Eigen::Vector3d d = angles_to_dir(dec.x(), dec.y());
  return std::acos(std::clamp(d.dot(ref.normalized()), -1.0, 1.0));
}

}  // namespace mock_scene

std::string to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::kAligned: return "aligned";
    case AlignmentMode::kIndoor: return "indoor";
    case AlignmentMode::kWrongLevel: return "wrong_level";
    case AlignmentMode::kParallelRoad: return "parallel_road";
  }
  return "aligned";
}

AlignmentMode alignment_mode_from_string(const std::string& s) {
  if (s == "aligned") return AlignmentMode::kAligned;
  if (s == "indoor") return AlignmentMode::kIndoor;
  if (s == "wrong_level") return AlignmentMode::kWrongLevel;
  if (s == "parallel_road") return AlignmentMode::kParallelRoad;
  throw SchemaError("unknown alignment mode: " + s);
}

namespace {

std::array<std::uint8_t, 3> quantize(const std::array<double, 3>& v) {
  return {static_cast<std::uint8_t>(std::lround(std::clamp(v[0], 0.0, 1.0) * 255.0)),
          static_cast<std::uint8_t>(std::lround(std::clamp(v[1], 0.0, 1.0) * 255.0)),
          static_cast<std::uint8_t>(std::lround(std::clamp(v[2], 0.0, 1.0) * 255.0))};
}

ImageRgb8 render_scene(const Intrinsics& k, const Eigen::Quaterniond& rotation,
                       AlignmentMode mode) {
  ImageRgb8 img(k.width, k.height, 3);
  const Eigen::Matrix3d r = rotation.toRotationMatrix();
  for (int v = 0; v < k.height; ++v) {
    std::uint8_t* row = img.row(v);
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d d = r * pixel_to_ray(k, u + 0.5, v + 0.5);
      const Eigen::Vector2d a = dir_to_angles(d);
      const auto rgb = quantize(mock_scene::scene_value(a.x(), a.y(), mode));
      row[3 * u + 0] = rgb[0];
      row[3 * u + 1] = rgb[1];
      row[3 * u + 2] = rgb[2];
    }
  }
  return img;
}

}  // namespace

ImageRgb8 MockProvider::render_tile(const TileRequest& req, AlignmentMode mode) {
  const Intrinsics k = intrinsics_from_fov(deg2rad(req.fov_deg), req.size, req.size);
  return render_scene(k, tile_rotation(req.heading_deg, req.pitch_deg), mode);
}

ImageRgb8 MockProvider::render_view(const Intrinsics& k, const Pose& pose) {
  return render_scene(k, pose.rotation, AlignmentMode::kAligned);
}

PanoMeta MockProvider::do_metadata(const GeoPoint& query) {
  if (world_.empty()) return PanoMeta::none();
  const MockPano* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& p : world_) {
    const double d = geodesic_inverse(query, p.location);
    if (d < best_dist || (d == best_dist && best && p.pano_id < best->pano_id)) {
      best_dist = d;
      best = &p;
    }
  }
  PanoMeta meta;
  meta.status = PanoMeta::Status::kOk;
  meta.pano_id = best->pano_id;
  meta.location = best->location;
  meta.capture_date = best->capture_date;
  return meta;
}

const MockPano* MockProvider::find(const TileRequest& req) const {
  if (!req.pano_id.empty()) {
    for (const auto& p : world_) {
      if (p.pano_id == req.pano_id) return &p;
    }
    return nullptr;
  }
  const MockPano* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& p : world_) {
    const double d = geodesic_inverse(*req.location, p.location);
    if (d < best_dist) {
      best_dist = d;
      best = &p;
    }
  }
  return best;
}

ImageRgb8 MockProvider::do_fetch_tile(const TileRequest& req) {
  const MockPano* pano = find(req);
  if (pano == nullptr) {
    throw TransportError("mock provider: unknown panorama " + req.pano_id);
  }
  return render_tile(req, pano->mode);
}

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

namespace {

class TokenBucket {
 public:
  explicit TokenBucket(double rate_per_s)
      : rate_(rate_per_s), tokens_(rate_per_s), last_(Clock::now()) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    while (true) {
      double wait_s = 0.0;
      {
        std::lock_guard<std::mutex> lock(mu_);
        const auto now = Clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(rate_, tokens_ + elapsed * rate_);
        if (tokens_ >= 1.0) {
          tokens_ -= 1.0;
          return;
        }
        wait_s = (1.0 - tokens_) / rate_;
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    }
  }

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

void replace_all(std::string& s, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
}

std::string fmt_double(double v, const char* fmt = "%.8f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw SchemaError("provider url has no scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpProviderConfig HttpProviderConfig::from_env() {
  HttpProviderConfig c;
  if (const char* v = std::getenv("GEOPIPE_PROVIDER_KEY")) c.api_key = v;
  if (const char* v = std::getenv("GEOPIPE_METADATA_URL")) c.metadata_url = v;
  if (const char* v = std::getenv("GEOPIPE_TILE_URL")) c.tile_url = v;
  return c;
}

struct HttpProvider::Impl {
  HttpProviderConfig cfg;
  TokenBucket bucket;

  explicit Impl(HttpProviderConfig c) : cfg(std::move(c)), bucket(cfg.rate_limit_rps) {}

  std::string expand(std::string tmpl, const GeoPoint* loc,
                     const TileRequest* req) const {
    replace_all(tmpl, "{key}", cfg.api_key);
    if (loc != nullptr) {
      replace_all(tmpl, "{lat}", fmt_double(loc->lat));
      replace_all(tmpl, "{lon}", fmt_double(loc->lon));
    }
    if (req != nullptr) {
      replace_all(tmpl, "{pano_id}", req->pano_id);
      replace_all(tmpl, "{heading}", fmt_double(req->heading_deg, "%.4f"));
      replace_all(tmpl, "{pitch}", fmt_double(req->pitch_deg, "%.4f"));
      replace_all(tmpl, "{fov}", fmt_double(req->fov_deg, "%.4f"));
      replace_all(tmpl, "{size}", std::to_string(req->size));
    }
    return tmpl;
  }

  std::string get_with_retries(const std::string& url) {
    const SplitUrl split = split_url(url);
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(
            cfg.backoff_base_s * std::pow(2.0, attempt - 1)));
      }
      bucket.acquire();
      httplib::Client client(split.base);
      client.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_s));
      client.set_read_timeout(std::chrono::duration<double>(cfg.timeout_s));
      auto res = client.Get(split.path);
      if (res && res->status >= 200 && res->status < 300) return res->body;
      if (res && res->status >= 400 && res->status < 500) {
        throw TransportError("http " + std::to_string(res->status) + " for " + url);
      }
      last_error = res ? "http " + std::to_string(res->status)
                       : "transport failure (" +
                             std::string(httplib::to_string(res.error())) + ")";
    }
    throw TransportError("request failed after " +
                         std::to_string(cfg.max_attempts) + " attempts: " +
                         last_error + " for " + url);
  }
};

HttpProvider::HttpProvider(HttpProviderConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  if (impl_->cfg.metadata_url.empty() || impl_->cfg.tile_url.empty()) {
    throw SchemaError("http provider: metadata/tile url templates required");
  }
}

HttpProvider::~HttpProvider() = default;

PanoMeta HttpProvider::do_metadata(const GeoPoint& query) {
  const std::string body =
      impl_->get_with_retries(impl_->expand(impl_->cfg.metadata_url, &query, nullptr));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("metadata response is not JSON: ") + e.what());
  }
  std::string status = j.value("status", "");
  for (auto& ch : status) ch = static_cast<char>(std::tolower(ch));
  if (status != "ok") return PanoMeta::none();

  PanoMeta meta;
  meta.status = PanoMeta::Status::kOk;
  if (!j.contains("pano_id") || !j.contains("location")) {
    throw SchemaError("metadata response missing pano_id/location");
  }
  meta.pano_id = j.at("pano_id").get<std::string>();
  const auto& loc = j.at("location");
  const double lon = loc.contains("lng") ? loc.at("lng").get<double>()
                                         : loc.at("lon").get<double>();
  meta.location = GeoPoint(loc.at("lat").get<double>(), lon);
  if (j.contains("date") && j.at("date").is_string()) {
    meta.capture_date = j.at("date").get<std::string>();
  }
  return meta;
}

ImageRgb8 HttpProvider::do_fetch_tile(const TileRequest& req) {
  const GeoPoint loc = req.location.value_or(GeoPoint());
  const std::string body =
      impl_->get_with_retries(impl_->expand(impl_->cfg.tile_url, &loc, &req));
  try {
    return decode_png_rgb8(reinterpret_cast<const std::uint8_t*>(body.data()),
                           body.size());
  } catch (const Error& e) {
    throw TransportError(std::string("tile decode failed: ") + e.what());
  }
}

}  // namespace geopipe
