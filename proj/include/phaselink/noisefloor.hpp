#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaselink/quality.hpp"

namespace phaselink {

/// One phase linking variant: solver class plus weight scheme.
struct MethodSpec {
  Method method = Method::PT;
  WeightScheme scheme = WeightScheme::EW;

  std::string name() const;              // "pt-ew", "ed-ml", ...
  static MethodSpec parse(const std::string& name);
  static std::vector<MethodSpec> all();  // the six PT/ED x EW/CW/ML variants

  bool operator==(const MethodSpec&) const = default;
};

struct NoiseRunConfig {
  std::vector<int> stack_sizes;
  int ensemble_size = 10000;  // M, must exceed max stack size
  int n_ensembles = 200;      // K; >= 30 recommended for stable error bars
  std::uint64_t seed = 0;
  std::vector<MethodSpec> methods = MethodSpec::all();
  double beta = 1e-4;  // spectral regularization before linking
  int threads = 0;     // 0: hardware concurrency
};

struct NoisePoint {
  int n = 0;
  double mean_f = 0.0;
  double stderr_f = 0.0;
  MethodSpec method;
};

/// Monte-Carlo estimate of the pure-noise normalized fit: for each stack size
/// and each of K independent ensembles of M i.i.d. CN(0, I) vectors, estimate
/// the coherence matrix, regularize, run each configured method and evaluate
/// the normalized fit; reports the per-N mean and standard error. Ensemble e
/// draws from a counter-derived subseed, so results are bit-identical for any
/// thread count.
std::vector<NoisePoint> simulate_noise_points(const NoiseRunConfig& cfg);

/// Least-squares fit of (aN + b)/(N + c) by Levenberg-Marquardt. Needs at
/// least 4 points with distinct N. nRMSE is the RMSE scaled by the range of
/// the fitted values.
NoiseFloorModel fit_rational(const std::vector<NoisePoint>& points);

/// The six published noise-floor parameter sets, the default F_noise source.
const std::vector<NoiseFloorModel>& builtin_models();

/// Throws UnknownMethodScheme for combinations without published parameters.
const NoiseFloorModel& builtin_model(Method method, WeightScheme scheme);

}  // namespace phaselink
