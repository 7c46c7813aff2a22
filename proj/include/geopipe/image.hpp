#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace geopipe {

/// Row-major interleaved raster. Pixel centers sit at integer + 0.5 in the
/// continuous coordinate system used by all sampling functions.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
  const T* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }

  T& at(int x, int y, int c = 0) { return row(y)[x * channels_ + c]; }
  const T& at(int x, int y, int c = 0) const { return row(y)[x * channels_ + c]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using ImageRgb8 = Raster<std::uint8_t>;   // channels = 3
using ImageGray8 = Raster<std::uint8_t>;  // channels = 1
using ImageF = Raster<float>;             // channels = 1, values in [0, 1]
using Mask = Raster<std::uint8_t>;        // channels = 1, 0 or 255

inline constexpr std::uint8_t kMaskOn = 255;

/// Bilinear RGB sample at continuous (x, y). x wraps modulo width when
/// `wrap_x`, otherwise taps clamp to the border; y always clamps.
std::array<double, 3> bilinear_rgb(const ImageRgb8& img, double x, double y,
                                   bool wrap_x = false);

/// Bilinear sample of a masked RGB raster. `valid` is false when any tap
/// with nonzero weight is unmasked.
struct MaskedSample {
  std::array<double, 3> rgb;
  bool valid;
};
MaskedSample bilinear_rgb_masked(const ImageRgb8& img, const Mask& mask, double x,
                                 double y, bool wrap_x = false);

double bilinear_gray(const ImageF& img, double x, double y);

/// ITU-R 601 luma, normalized to [0, 1].
ImageF to_gray(const ImageRgb8& img);

/// Bilinear resize of a single-channel float raster.
ImageF resize_bilinear(const ImageF& img, int out_width, int out_height);

/// PSNR in dB between two equally sized RGB rasters over the pixels where
/// `include` is nonzero (all pixels when `include` is null).
double psnr_rgb(const ImageRgb8& a, const ImageRgb8& b, const Mask* include = nullptr);

/// Shrinks the set of on-pixels by `radius` (Chebyshev metric).
Mask erode(const Mask& m, int radius);

}  // namespace geopipe
