#include "geopipe/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "geopipe/errors.hpp"
#include "geopipe/parallel.hpp"

namespace geopipe {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Summed-area table with one guard row/column of zeros.
struct Integral {
  int w, h;
  std::vector<double> s;

  explicit Integral(const ImageF& img, const ImageF* other = nullptr)
      : w(img.width()), h(img.height()), s((w + 1) * (h + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      const float* row = img.row(y);
      const float* row2 = other ? other->row(y) : nullptr;
      double acc = 0.0;
      for (int x = 0; x < w; ++x) {
        acc += row2 ? static_cast<double>(row[x]) * row2[x]
                    : static_cast<double>(row[x]);
        s[(y + 1) * (w + 1) + (x + 1)] = s[y * (w + 1) + (x + 1)] + acc;
      }
    }
  }

  // Sum over [x0, x1) x [y0, y1).
  double box(int x0, int y0, int x1, int y1) const {
    return s[y1 * (w + 1) + x1] - s[y0 * (w + 1) + x1] - s[y1 * (w + 1) + x0] +
           s[y0 * (w + 1) + x0];
  }
};

constexpr double kVarianceFloor = 1e-14;

// Deterministic standard normal: Box-Muller over mt19937 draws, so results
// do not depend on the standard library's normal_distribution.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(static_cast<std::uint32_t>(seed)) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform() {
    return (static_cast<double>(rng_()) + 0.5) / 4294967296.0;
  }
  std::mt19937 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

Raster<double> zncc_map(const ImageF& a, const ImageF& b, int kernel, double eps,
                        int jobs) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw SizeMismatchError("zncc_map: raster sizes differ");
  }
  if (kernel < 3 || kernel % 2 == 0) {
    throw SchemaError("zncc_map: kernel must be odd and >= 3");
  }
  const int w = a.width(), h = a.height(), r = kernel / 2;

  const Integral sa(a), sb(b), saa(a, &a), sbb(b, &b), sab(a, &b);
  Raster<double> out(w, h, 1);

  parallel_chunks(h, jobs, [&](int begin, int end) {
    for (int y = begin; y < end; ++y) {
      const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
      double* dst = out.row(y);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
        const double n = static_cast<double>((x1 - x0) * (y1 - y0));
        const double ma = sa.box(x0, y0, x1, y1) / n;
        const double mb = sb.box(x0, y0, x1, y1) / n;
        const double va = std::max(0.0, saa.box(x0, y0, x1, y1) / n - ma * ma);
        const double vb = std::max(0.0, sbb.box(x0, y0, x1, y1) / n - mb * mb);
        double z = 0.0;
        if (va > kVarianceFloor && vb > kVarianceFloor) {
          const double cov = sab.box(x0, y0, x1, y1) / n - ma * mb;
          z = cov / (std::sqrt(va * vb) + eps);
        }
        dst[x] = std::clamp(z, -1.0, 1.0);
      }
    }
  });
  return out;
}

ImageF align_geo_to_onboard(const ImageF& geo, int onboard_width,
                            int onboard_height) {
  if (geo.width() == onboard_width && geo.height() == onboard_height) return geo;
  const double scale = std::max(static_cast<double>(onboard_width) / geo.width(),
                                static_cast<double>(onboard_height) / geo.height());
  const int rw = std::max(onboard_width,
                          static_cast<int>(std::lround(geo.width() * scale)));
  const int rh = std::max(onboard_height,
                          static_cast<int>(std::lround(geo.height() * scale)));
  const ImageF resized = resize_bilinear(geo, rw, rh);

  ImageF out(onboard_width, onboard_height, 1);
  const int off_x = (rw - onboard_width) / 2;
  const int off_y = (rh - onboard_height) / 2;
  for (int y = 0; y < onboard_height; ++y) {
    const float* src = resized.row(y + off_y);
    float* dst = out.row(y);
    std::copy(src + off_x, src + off_x + onboard_width, dst);
  }
  return out;
}

GateFeatures gate_features(const ImageF& onboard, const ImageF& geo, double d_gps_m,
                           const GateParams& params, const Mask* valid) {
  if (d_gps_m < 0.0) throw SchemaError("gate_features: negative distance");
  const Raster<double> z = zncc_map(onboard, geo, kDefaultZnccKernel, params.eps);
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < z.height(); ++y) {
    const double* row = z.row(y);
    for (int x = 0; x < z.width(); ++x) {
      if (valid && valid->at(x, y) == 0) continue;
      sum += (1.0 - row[x]) / 2.0;
      ++n;
    }
  }
  GateFeatures f;
  f.diff_mean = n == 0 ? 0.0 : sum / static_cast<double>(n);
  f.dist_feat = std::tanh(d_gps_m / params.s);
  return f;
}

double gate_score(const GateFeatures& f, const GateParams& params) {
  return sigmoid(params.w1 * f.diff_mean + params.w2 * f.dist_feat + params.bias);
}

double gate_bce(const std::vector<LabeledFeatures>& samples,
                const GateParams& params) {
  double loss = 0.0;
  for (const auto& s : samples) {
    const double z =
        params.w1 * s.features.diff_mean + params.w2 * s.features.dist_feat +
        params.bias;
    // Numerically stable: log(1 + exp(-|z|)) + max(z, 0) - z * y
    loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) -
            z * static_cast<double>(s.label);
  }
  return loss / static_cast<double>(samples.size());
}

GateGradient gate_bce_gradient(const std::vector<LabeledFeatures>& samples,
                               const GateParams& params) {
  GateGradient g;
  for (const auto& s : samples) {
    const double p = sigmoid(params.w1 * s.features.diff_mean +
                             params.w2 * s.features.dist_feat + params.bias);
    const double e = p - static_cast<double>(s.label);
    g.dw1 += e * s.features.diff_mean;
    g.dw2 += e * s.features.dist_feat;
    g.dbias += e;
  }
  const double n = static_cast<double>(samples.size());
  g.dw1 /= n;
  g.dw2 /= n;
  g.dbias /= n;
  return g;
}

CalibrationResult calibrate(const std::vector<LabeledFeatures>& samples,
                            int epochs, double lr, std::uint64_t seed) {
  if (samples.empty()) throw SingleClassError("calibrate: no samples");
  bool has0 = false, has1 = false;
  for (const auto& s : samples) (s.label != 0 ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw SingleClassError("calibrate: both label classes required");
  }

  CalibrationResult res;
  NormalSampler normal(seed);
  res.params.w1 = 0.01 * normal();
  res.params.w2 = 0.01 * normal();
  res.params.bias = 0.0;

  res.loss_per_epoch.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    res.loss_per_epoch.push_back(gate_bce(samples, res.params));
    const GateGradient g = gate_bce_gradient(samples, res.params);
    res.params.w1 -= lr * g.dw1;
    res.params.w2 -= lr * g.dw2;
    res.params.bias -= lr * g.dbias;
  }
  return res;
}

std::vector<LabeledFeatures> synthetic_gate_samples(int n_per_class, double sigma,
                                                    std::uint64_t seed) {
  NormalSampler normal(seed);
  std::vector<LabeledFeatures> out;
  out.reserve(2 * n_per_class);
  auto clamp_feat = [](double v) { return std::clamp(v, 0.0, 0.999999); };
  for (int i = 0; i < n_per_class; ++i) {
    LabeledFeatures s;
    s.features.diff_mean = clamp_feat(0.0 + sigma * normal());
    s.features.dist_feat = clamp_feat(0.0 + sigma * normal());
    s.label = 1;
    out.push_back(s);
  }
  for (int i = 0; i < n_per_class; ++i) {
    LabeledFeatures s;
    s.features.diff_mean = clamp_feat(1.0 + sigma * normal());
    s.features.dist_feat = clamp_feat(1.0 + sigma * normal());
    s.label = 0;
    out.push_back(s);
  }
  return out;
}

}  // namespace geopipe
