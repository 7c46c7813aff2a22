#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "geopipe/errors.hpp"
#include "geopipe/reliability.hpp"
#include "support.hpp"

using namespace geopipe;

namespace {

ImageF image_from(const std::vector<std::vector<double>>& rows) {
  ImageF img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      img.at(x, y) = static_cast<float>(rows[y][x]);
    }
  }
  return img;
}

// Scalar brute-force ZNCC at one pixel: direct window means, no tables.
double brute_zncc(const ImageF& a, const ImageF& b, int cy, int cx, int k,
                  double eps) {
  const int r = k / 2;
  const int y0 = std::max(0, cy - r), y1 = std::min(a.height(), cy + r + 1);
  const int x0 = std::max(0, cx - r), x1 = std::min(a.width(), cx + r + 1);
  double ma = 0.0, mb = 0.0;
  int n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      ma += a.at(x, y);
      mb += b.at(x, y);
      ++n;
    }
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double da = a.at(x, y) - ma, db = b.at(x, y) - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
  }
  cov /= n;
  va /= n;
  vb /= n;
  if (va < 1e-14 || vb < 1e-14) return 0.0;
  return cov / (std::sqrt(va * vb) + eps);
}

const std::vector<std::vector<double>> kPatchA = {
    {0.0, 0.1, 0.2, 0.3, 0.4},
    {0.5, 0.4, 0.3, 0.2, 0.1},
    {0.9, 0.8, 0.7, 0.6, 0.5},
    {0.1, 0.3, 0.5, 0.7, 0.9},
    {0.2, 0.4, 0.6, 0.8, 1.0}};
const std::vector<std::vector<double>> kPatchB = {
    {0.5, 0.2, 0.9, 0.1, 0.3},
    {0.4, 0.6, 0.1, 0.8, 0.2},
    {0.7, 0.3, 0.5, 0.9, 0.6},
    {0.2, 0.8, 0.4, 0.1, 0.7},
    {0.6, 0.5, 0.3, 0.2, 0.8}};

ImageF random_image(std::mt19937_64& g, int w, int h, double lo = 0.05,
                    double hi = 0.95) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageF img(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(u(g));
  }
  return img;
}

}  // namespace

TEST_CASE("zncc precomputed 5x5 values") {
  const ImageF a = image_from(kPatchA);
  const ImageF b = image_from(kPatchB);

  // Frozen from the scalar formula evaluated independently (numpy float64
  // statistics over the float32-quantized raster values).
  const Raster<double> z5 = zncc_map(a, b, 5, 1e-6);
  CHECK(std::abs(z5.at(2, 2) - 0.16548625196276776) < 1e-9);
  CHECK(std::abs(z5.at(0, 0) - 0.11067813552998605) < 1e-9);  // shrunken window
  const Raster<double> z3 = zncc_map(a, b, 3, 1e-6);
  CHECK(std::abs(z3.at(3, 1) - 0.221249489097454) < 1e-9);

  SUBCASE("the in-test scalar oracle agrees everywhere") {
    for (int k : {3, 5}) {
      const Raster<double> z = zncc_map(a, b, k, 1e-6);
      for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
          CHECK(std::abs(z.at(x, y) - brute_zncc(a, b, y, x, k, 1e-6)) < 1e-7);
        }
      }
    }
  }
}

TEST_CASE("zncc limiting cases") {
  auto g = testing::rng(55);
  const ImageF a = random_image(g, 24, 16);

  SUBCASE("self correlation is ~1") {
    const Raster<double> z = zncc_map(a, a, 9, 1e-6);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) {
        CHECK(z.at(x, y) > 0.999);
        CHECK(z.at(x, y) <= 1.0);
      }
    }
  }
  SUBCASE("negated image correlates to ~-1") {
    ImageF neg(24, 16, 1);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) neg.at(x, y) = 1.0f - a.at(x, y);
    }
    const Raster<double> z = zncc_map(a, neg, 9, 1e-6);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) CHECK(z.at(x, y) < -0.999);
    }
  }
  SUBCASE("bounds hold with eps = 0 on non-constant windows") {
    const ImageF b = random_image(g, 24, 16);
    const Raster<double> z = zncc_map(a, b, 7, 0.0);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) {
        CHECK(z.at(x, y) >= -1.0);
        CHECK(z.at(x, y) <= 1.0);
      }
    }
  }
  SUBCASE("constant windows define zncc = 0") {
    ImageF flat(24, 16, 1, 0.5f);
    const Raster<double> z = zncc_map(flat, a, 9, 1e-6);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) CHECK(z.at(x, y) == 0.0);
    }
  }
  SUBCASE("positive affine invariance within 1e-6") {
    const ImageF b = random_image(g, 24, 16);
    ImageF scaled(24, 16, 1);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) {
        scaled.at(x, y) = 0.37f * a.at(x, y) + 0.21f;
      }
    }
    // eps = 0: the stabilizer scales with the window deviation, so exact
    // invariance only holds for the pure statistic.
    const Raster<double> z0 = zncc_map(a, b, 9, 0.0);
    const Raster<double> z1 = zncc_map(scaled, b, 9, 0.0);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 24; ++x) {
        CHECK(std::abs(z0.at(x, y) - z1.at(x, y)) < 1e-6);
      }
    }
  }
  SUBCASE("size mismatch throws") {
    CHECK_THROWS_AS(zncc_map(a, random_image(g, 8, 8), 9, 1e-6),
                    SizeMismatchError);
  }
  SUBCASE("even or tiny kernels are rejected") {
    CHECK_THROWS_AS(zncc_map(a, a, 4, 1e-6), SchemaError);
    CHECK_THROWS_AS(zncc_map(a, a, 1, 1e-6), SchemaError);
  }
}

TEST_CASE("align_geo_to_onboard") {
  auto g = testing::rng(56);
  SUBCASE("same size passes through") {
    const ImageF a = random_image(g, 32, 24);
    const ImageF out = align_geo_to_onboard(a, 32, 24);
    CHECK(out == a);
  }
  SUBCASE("2x larger, same aspect: pure downscale") {
    ImageF big(64, 48, 1);
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 64; ++x) {
        big.at(x, y) = static_cast<float>(x) / 64.0f;
      }
    }
    const ImageF out = align_geo_to_onboard(big, 32, 24);
    CHECK(out.width() == 32);
    CHECK(out.height() == 24);
    // A horizontal ramp stays a ramp with the same endpoints.
    CHECK(out.at(0, 10) == doctest::Approx(big.at(0, 10)).epsilon(0.05));
    CHECK(out.at(31, 10) == doctest::Approx(big.at(62, 20)).epsilon(0.05));
  }
  SUBCASE("wider aspect: height-matched scale, symmetric horizontal crop") {
    ImageF wide(96, 24, 1);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 96; ++x) {
        wide.at(x, y) = static_cast<float>(x) / 96.0f;
      }
    }
    const ImageF out = align_geo_to_onboard(wide, 32, 24);
    CHECK(out.width() == 32);
    CHECK(out.height() == 24);
    // Height scale = 1, so 32 columns are cropped from the middle of 96.
    CHECK(out.at(16, 12) == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("gate features") {
  auto g = testing::rng(57);
  const ImageF a = random_image(g, 32, 32);
  GateParams params;

  SUBCASE("identical images at zero distance") {
    const GateFeatures f = gate_features(a, a, 0.0, params);
    CHECK(f.diff_mean < 1e-3);
    CHECK(f.dist_feat == 0.0);
  }
  SUBCASE("distance equal to the scale gives tanh(1)") {
    const GateFeatures f = gate_features(a, a, params.s, params);
    CHECK(f.dist_feat == doctest::Approx(0.7615941559557649).epsilon(1e-12));
  }
  SUBCASE("negated image pushes diff_mean to ~1") {
    ImageF neg(32, 32, 1);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) neg.at(x, y) = 1.0f - a.at(x, y);
    }
    const GateFeatures f = gate_features(a, neg, 0.0, params);
    CHECK(f.diff_mean > 0.999);
  }
  SUBCASE("negative distance is rejected") {
    CHECK_THROWS_AS(gate_features(a, a, -1.0, params), SchemaError);
  }
  SUBCASE("mask restricts the spatial mean") {
    ImageF b = a;
    for (int y = 0; y < 32; ++y) {
      for (int x = 16; x < 32; ++x) b.at(x, y) = 1.0f - b.at(x, y);
    }
    Mask left(32, 32, 1, 0);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 8; ++x) left.at(x, y) = kMaskOn;
    }
    const GateFeatures masked = gate_features(a, b, 0.0, params, &left);
    const GateFeatures full = gate_features(a, b, 0.0, params);
    CHECK(masked.diff_mean < 0.05);
    CHECK(full.diff_mean > 0.2);
  }
}

TEST_CASE("gate_score") {
  SUBCASE("zero parameters give exactly one half") {
    GateParams p;
    p.w1 = p.w2 = p.bias = 0.0;
    CHECK(gate_score(GateFeatures{0.7, 0.3}, p) == 0.5);
  }
  SUBCASE("reference sigmoid evaluations") {
    GateParams p;  // defaults w = (-8, -4), b = 4
    CHECK(gate_score(GateFeatures{0.0, 0.0}, p) ==
          doctest::Approx(0.9820137900379085).epsilon(1e-12));
    CHECK(gate_score(GateFeatures{1.0, 1.0}, p) ==
          doctest::Approx(0.0003353501304664781).epsilon(1e-9));
  }
  SUBCASE("strictly decreasing in both features for negative weights") {
    GateParams p;
    double prev = 1.1;
    for (int i = 0; i <= 10; ++i) {
      const double w = gate_score(GateFeatures{i / 10.0, 0.3}, p);
      CHECK(w < prev);
      CHECK(w > 0.0);
      CHECK(w < 1.0);
      prev = w;
    }
    prev = 1.1;
    for (int i = 0; i <= 10; ++i) {
      const double w = gate_score(GateFeatures{0.3, i / 10.0}, p);
      CHECK(w < prev);
      prev = w;
    }
  }
}

TEST_CASE("calibration") {
  const std::vector<LabeledFeatures> samples = synthetic_gate_samples(200, 0.1, 0);

  SUBCASE("synthetic set is deterministic and in range") {
    const auto again = synthetic_gate_samples(200, 0.1, 0);
    REQUIRE(again.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(samples[i].features.diff_mean == again[i].features.diff_mean);
      CHECK(samples[i].features.dist_feat == again[i].features.dist_feat);
      CHECK(samples[i].features.diff_mean >= 0.0);
      CHECK(samples[i].features.diff_mean <= 1.0);
      CHECK(samples[i].features.dist_feat >= 0.0);
      CHECK(samples[i].features.dist_feat < 1.0);
    }
  }

  SUBCASE("reaches low BCE and separates the classes") {
    const CalibrationResult res = calibrate(samples, 500, 0.1, 0);
    CHECK(gate_bce(samples, res.params) < 0.2);
    // Loss is monotone non-increasing at this learning rate.
    for (std::size_t i = 1; i < res.loss_per_epoch.size(); ++i) {
      CHECK(res.loss_per_epoch[i] <= res.loss_per_epoch[i - 1] + 1e-12);
    }
    // AUC by rank statistic.
    std::vector<std::pair<double, int>> scored;
    for (const auto& s : samples) {
      scored.push_back({gate_score(s.features, res.params), s.label});
    }
    std::sort(scored.begin(), scored.end());
    double rank_sum = 0.0;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (scored[i].second == 1) {
        rank_sum += static_cast<double>(i + 1);
        ++n1;
      }
    }
    const std::size_t n0 = scored.size() - n1;
    const double auc =
        (rank_sum - n1 * (n1 + 1) / 2.0) / static_cast<double>(n1 * n0);
    CHECK(auc > 0.95);
  }

  SUBCASE("single-class input is rejected") {
    std::vector<LabeledFeatures> ones;
    for (int i = 0; i < 10; ++i) {
      ones.push_back({GateFeatures{0.1, 0.1}, 1});
    }
    CHECK_THROWS_AS(calibrate(ones, 10, 0.1, 0), SingleClassError);
    CHECK_THROWS_AS(calibrate({}, 10, 0.1, 0), SingleClassError);
  }

  SUBCASE("analytic gradient matches central finite differences") {
    GateParams p;
    p.w1 = 0.37;
    p.w2 = -1.2;
    p.bias = 0.45;
    const GateGradient g = gate_bce_gradient(samples, p);
    const double h = 1e-6;
    auto fd = [&](auto setter) {
      GateParams lo = p, hi = p;
      setter(lo, -h);
      setter(hi, +h);
      return (gate_bce(samples, hi) - gate_bce(samples, lo)) / (2 * h);
    };
    const double fd_w1 = fd([](GateParams& q, double d) { q.w1 += d; });
    const double fd_w2 = fd([](GateParams& q, double d) { q.w2 += d; });
    const double fd_b = fd([](GateParams& q, double d) { q.bias += d; });
    CHECK(std::abs(g.dw1 - fd_w1) / std::max(1e-12, std::abs(fd_w1)) < 1e-5);
    CHECK(std::abs(g.dw2 - fd_w2) / std::max(1e-12, std::abs(fd_w2)) < 1e-5);
    CHECK(std::abs(g.dbias - fd_b) / std::max(1e-12, std::abs(fd_b)) < 1e-5);
  }

  SUBCASE("deterministic for a fixed seed") {
    const CalibrationResult a = calibrate(samples, 50, 0.1, 7);
    const CalibrationResult b = calibrate(samples, 50, 0.1, 7);
    CHECK(a.params.w1 == b.params.w1);
    CHECK(a.params.w2 == b.params.w2);
    CHECK(a.params.bias == b.params.bias);
  }
}
