#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaselink/coherence.hpp"
#include "phaselink/stack.hpp"
#include "phaselink/types.hpp"

namespace phaselink {

/// Synthetic covariance families covering the coefficient regimes:
/// consistent (rank_one_plus_noise), decorrelated (exp_decorrelation) and
/// pure noise.
struct CovarianceSpec {
  enum class Kind { PureNoise, RankOnePlusNoise, ExpDecorrelation };
  Kind kind = Kind::PureNoise;
  int n = 0;
  RVector true_phases;       // empty means all zero
  double gamma0 = 1.0;       // peak coherence, in [0,1]
  double tau_decorr = 10.0;  // e-folding lag, acquisitions
  double epsilon = 0.0;      // noise blend for rank_one_plus_noise
};

/// pure_noise: I. exp_decorrelation: Gamma_ij = gamma0 exp(-|i-j|/tau) with
/// the phase pattern Lambda(theta) Lambda(theta)^H, unit diagonal.
/// rank_one_plus_noise: (1-eps) v v^H + eps I with v = Lambda(theta).
/// Throws NotPSD if the constructed matrix fails the PSD check.
CoherenceMatrix build_covariance(const CovarianceSpec& spec);

/// M samples L z with L the Cholesky factor of C (pivoted fallback for
/// semidefinite input) and z standard circular complex Gaussian.
/// Deterministic per seed.
PixelEnsemble sample_ensemble(const CoherenceMatrix& c, int m, std::uint64_t seed);

struct Region {
  int x0 = 0, y0 = 0, width = 0, height = 0;
  CovarianceSpec covariance;
};

struct SceneSpec {
  int width = 0, height = 0;
  int n_acquisitions = 0;
  std::uint64_t seed = 0;
  std::vector<Region> regions;  // must tile the grid exactly
  int threads = 0;
};

/// Ground truth record for one region of a rendered scene.
struct RegionTruth {
  Region region;
  RVector true_phases;
};

struct RenderedScene {
  SlcStack stack;
  std::vector<RegionTruth> truth;
};

/// Per-pixel independent draws from the pixel's region covariance; pixel
/// (x, y) uses the subseed hash(seed, x, y), so the raster is independent of
/// scheduling. Throws RegionGapOrOverlap unless regions tile the grid.
RenderedScene render_scene(const SceneSpec& spec);

/// Writes the stack header+data and a ground-truth CSV sidecar
/// (region, x0, y0, width, height, kind, theta_0..theta_{N-1}).
void write_scene(const RenderedScene& scene, const std::string& header_path,
                 const std::string& truth_csv_path);

}  // namespace phaselink
