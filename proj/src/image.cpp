#include "geopipe/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geopipe/errors.hpp"

namespace geopipe {

namespace {

struct Taps {
  int x0, x1, y0, y1;
  double fx, fy;
};

Taps make_taps(int w, int h, double x, double y, bool wrap_x) {
  const double u = x - 0.5;
  const double v = y - 0.5;
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  Taps t;
  t.fx = u - fu;
  t.fy = v - fv;
  int x0 = static_cast<int>(fu);
  int x1 = x0 + 1;
  if (wrap_x) {
    auto wrap = [w](int i) {
      i %= w;
      return i < 0 ? i + w : i;
    };
    t.x0 = wrap(x0);
    t.x1 = wrap(x1);
  } else {
    t.x0 = std::clamp(x0, 0, w - 1);
    t.x1 = std::clamp(x1, 0, w - 1);
  }
  t.y0 = std::clamp(static_cast<int>(fv), 0, h - 1);
  t.y1 = std::clamp(static_cast<int>(fv) + 1, 0, h - 1);
  return t;
}

}  // namespace

std::array<double, 3> bilinear_rgb(const ImageRgb8& img, double x, double y,
                                   bool wrap_x) {
  const Taps t = make_taps(img.width(), img.height(), x, y, wrap_x);
  std::array<double, 3> out{};
  const double w00 = (1 - t.fx) * (1 - t.fy), w10 = t.fx * (1 - t.fy);
  const double w01 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
  for (int c = 0; c < 3; ++c) {
    out[c] = w00 * img.at(t.x0, t.y0, c) + w10 * img.at(t.x1, t.y0, c) +
             w01 * img.at(t.x0, t.y1, c) + w11 * img.at(t.x1, t.y1, c);
  }
  return out;
}

MaskedSample bilinear_rgb_masked(const ImageRgb8& img, const Mask& mask, double x,
                                 double y, bool wrap_x) {
  const Taps t = make_taps(img.width(), img.height(), x, y, wrap_x);
  const double w[4] = {(1 - t.fx) * (1 - t.fy), t.fx * (1 - t.fy),
                       (1 - t.fx) * t.fy, t.fx * t.fy};
  const int xs[4] = {t.x0, t.x1, t.x0, t.x1};
  const int ys[4] = {t.y0, t.y0, t.y1, t.y1};
  MaskedSample s{{0.0, 0.0, 0.0}, true};
  for (int k = 0; k < 4; ++k) {
    if (w[k] == 0.0) continue;
    if (mask.at(xs[k], ys[k]) == 0) s.valid = false;
    for (int c = 0; c < 3; ++c) s.rgb[c] += w[k] * img.at(xs[k], ys[k], c);
  }
  return s;
}

double bilinear_gray(const ImageF& img, double x, double y) {
  const Taps t = make_taps(img.width(), img.height(), x, y, false);
  return (1 - t.fx) * (1 - t.fy) * img.at(t.x0, t.y0) +
         t.fx * (1 - t.fy) * img.at(t.x1, t.y0) +
         (1 - t.fx) * t.fy * img.at(t.x0, t.y1) + t.fx * t.fy * img.at(t.x1, t.y1);
}

ImageF to_gray(const ImageRgb8& img) {
  ImageF out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* src = img.row(y);
    float* dst = out.row(y);
    for (int x = 0; x < img.width(); ++x) {
      const double r = src[3 * x + 0], g = src[3 * x + 1], b = src[3 * x + 2];
      dst[x] = static_cast<float>((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
    }
  }
  return out;
}

ImageF resize_bilinear(const ImageF& img, int out_width, int out_height) {
  ImageF out(out_width, out_height, 1);
  const double sx = static_cast<double>(img.width()) / out_width;
  const double sy = static_cast<double>(img.height()) / out_height;
  for (int y = 0; y < out_height; ++y) {
    float* dst = out.row(y);
    for (int x = 0; x < out_width; ++x) {
      dst[x] = static_cast<float>(
          bilinear_gray(img, (x + 0.5) * sx, (y + 0.5) * sy));
    }
  }
  return out;
}

double psnr_rgb(const ImageRgb8& a, const ImageRgb8& b, const Mask* include) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw SizeMismatchError("psnr_rgb: raster sizes differ");
  }
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (include && include->at(x, y) == 0) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum_sq += d * d;
      }
      n += 3;
    }
  }
  if (n == 0) return 0.0;
  const double mse = sum_sq / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

Mask erode(const Mask& m, int radius) {
  Mask out(m.width(), m.height(), 1, 0);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool on = true;
      for (int dy = -radius; on && dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= m.height()) {
          on = false;
          break;
        }
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= m.width() || m.at(xx, yy) == 0) {
            on = false;
            break;
          }
        }
      }
      out.at(x, y) = on ? kMaskOn : 0;
    }
  }
  return out;
}

}  // namespace geopipe
