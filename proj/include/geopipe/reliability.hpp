#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "geopipe/image.hpp"

namespace geopipe {

inline constexpr int kDefaultZnccKernel = 9;
inline constexpr double kDefaultZnccEps = 1e-6;
inline constexpr double kDefaultDistanceScale = 10.0;  // meters

/// Logistic gate parameters mapping [appearance difference, bounded distance]
/// to a reliability weight in [0, 1].
struct GateParams {
  double w1 = -8.0;  ///< weight on the appearance-difference feature
  double w2 = -4.0;  ///< weight on the distance feature
  double bias = 4.0;
  double s = kDefaultDistanceScale;  ///< distance scale, meters
  double eps = kDefaultZnccEps;     ///< ZNCC stabilizer
};

struct GateFeatures {
  double diff_mean = 0.0;  ///< mean of (1 - ZNCC) / 2 over valid pixels, [0, 1]
  double dist_feat = 0.0;  ///< tanh(d_gps / s), [0, 1)
};

/// Windowed zero-normalized cross-correlation, one value per pixel:
///   E[(x - mx)(y - my)] / (sqrt(E[(x-mx)^2] E[(y-my)^2]) + eps)
/// over a kernel x kernel box, shrunk at image borders. Windows that are
/// constant on either side correlate to 0. Kernel must be odd and >= 3;
/// rasters must agree in size (SizeMismatchError otherwise).
Raster<double> zncc_map(const ImageF& a, const ImageF& b,
                        int kernel = kDefaultZnccKernel,
                        double eps = kDefaultZnccEps, int jobs = 1);

/// Resizes `geo` with the aspect-preserving scale that covers `onboard`
/// size, then center-crops the overhang.
ImageF align_geo_to_onboard(const ImageF& geo, int onboard_width,
                            int onboard_height);

/// Gate features of an aligned image pair. `valid` restricts the spatial
/// mean to masked pixels (all pixels when null).
GateFeatures gate_features(const ImageF& onboard, const ImageF& geo, double d_gps_m,
                           const GateParams& params, const Mask* valid = nullptr);

/// w = sigmoid(w1 * diff_mean + w2 * dist_feat + bias), always in (0, 1).
double gate_score(const GateFeatures& f, const GateParams& params);

struct LabeledFeatures {
  GateFeatures features;
  int label = 0;  ///< 1 = valid, 0 = invalid/missing
};

/// Mean binary cross-entropy of the gate on a labeled sample set.
double gate_bce(const std::vector<LabeledFeatures>& samples,
                const GateParams& params);

/// Analytic gradient of gate_bce with respect to (w1, w2, bias).
struct GateGradient {
  double dw1 = 0.0, dw2 = 0.0, dbias = 0.0;
};
GateGradient gate_bce_gradient(const std::vector<LabeledFeatures>& samples,
                               const GateParams& params);

struct CalibrationResult {
  GateParams params;
  std::vector<double> loss_per_epoch;
};

/// Full-batch gradient descent on the BCE objective. Deterministic for a
/// fixed seed; throws SingleClassError unless both classes are present.
CalibrationResult calibrate(const std::vector<LabeledFeatures>& samples,
                            int epochs = 500, double lr = 0.1,
                            std::uint64_t seed = 0);

/// The synthetic separable calibration set: `n_per_class` valid samples near
/// (0, 0) and as many invalid near (1, 1), isotropic Gaussian sigma, clamped
/// into the feature ranges. Deterministic for a fixed seed.
std::vector<LabeledFeatures> synthetic_gate_samples(int n_per_class = 200,
                                                    double sigma = 0.1,
                                                    std::uint64_t seed = 0);

}  // namespace geopipe
