#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "geopipe/geodesy.hpp"

namespace geopipe::testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline GeoPoint random_point(std::mt19937_64& g, double lat_span = 60.0) {
  std::uniform_real_distribution<double> lat(-lat_span, lat_span);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  return GeoPoint(lat(g), lon(g));
}

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("geopipe_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace geopipe::testing
