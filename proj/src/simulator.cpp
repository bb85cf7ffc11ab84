#include "phaselink/simulator.hpp"

#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "phaselink/parallel.hpp"
#include "phaselink/rng.hpp"

namespace phaselink {

namespace {

RVector phases_or_zero(const CovarianceSpec& spec) {
  if (spec.true_phases.size() == 0) return RVector::Zero(spec.n);
  if (spec.true_phases.size() != spec.n)
    throw DimensionMismatch("true_phases length does not match N");
  return spec.true_phases;
}

const char* kind_name(CovarianceSpec::Kind kind) {
  switch (kind) {
    case CovarianceSpec::Kind::PureNoise: return "pure_noise";
    case CovarianceSpec::Kind::RankOnePlusNoise: return "rank_one_plus_noise";
    case CovarianceSpec::Kind::ExpDecorrelation: return "exp_decorrelation";
  }
  return "?";
}

// Cholesky-like factor of a PSD matrix: plain LLT where possible, otherwise
// an LDLT with negative pivots clamped to zero (rank-deficient covariances,
// e.g. exact rank one, are valid sampling targets).
CMatrix sampling_factor(const CMatrix& c) {
  Eigen::LLT<CMatrix> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  Eigen::LDLT<CMatrix> ldlt(c);
  if (ldlt.info() != Eigen::Success)
    throw CholeskyFailure("covariance factorization failed");
  const Eigen::Index n = c.rows();
  CVector sqrt_d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = ldlt.vectorD()[i];
    if (d < -1e-9 * static_cast<double>(n))
      throw CholeskyFailure("covariance is indefinite beyond tolerance");
    sqrt_d[i] = std::sqrt(std::max(d, 0.0));
  }
  CMatrix l = ldlt.matrixL();
  return ldlt.transpositionsP().transpose() * CMatrix(l * sqrt_d.asDiagonal());
}

}  // namespace

CoherenceMatrix build_covariance(const CovarianceSpec& spec) {
  if (spec.n < 2) throw DimensionMismatch("covariance needs N >= 2");
  const RVector theta = phases_or_zero(spec);

  CMatrix v(spec.n, spec.n);
  switch (spec.kind) {
    case CovarianceSpec::Kind::PureNoise:
      v = CMatrix::Identity(spec.n, spec.n);
      break;
    case CovarianceSpec::Kind::RankOnePlusNoise: {
      if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0))
        throw UsageError("epsilon must lie in [0, 1]");
      const CVector phasor = unit_phasors(theta);
      v = (1.0 - spec.epsilon) * (phasor * phasor.adjoint());
      v += spec.epsilon * CMatrix::Identity(spec.n, spec.n);
      break;
    }
    case CovarianceSpec::Kind::ExpDecorrelation: {
      if (!(spec.gamma0 >= 0.0 && spec.gamma0 <= 1.0))
        throw UsageError("gamma0 must lie in [0, 1]");
      if (!(spec.tau_decorr > 0.0)) throw UsageError("tau_decorr must be positive");
      for (int i = 0; i < spec.n; ++i) {
        v(i, i) = cdouble(1.0, 0.0);
        for (int j = i + 1; j < spec.n; ++j) {
          const double mag = spec.gamma0 * std::exp(-std::abs(i - j) / spec.tau_decorr);
          v(i, j) = mag * std::polar(1.0, theta[i] - theta[j]);
          v(j, i) = std::conj(v(i, j));
        }
      }
      break;
    }
  }

  try {
    return CoherenceMatrix(std::move(v));
  } catch (const Error& e) {
    throw NotPSD(std::string("constructed covariance failed validation: ") + e.what());
  }
}

PixelEnsemble sample_ensemble(const CoherenceMatrix& c, int m, std::uint64_t seed) {
  if (m < 1) throw UsageError("need at least one sample");
  const int n = c.n();
  const CMatrix factor = sampling_factor(c.entries());

  Rng rng(seed);
  CMatrix z(n, m);
  for (int col = 0; col < m; ++col)
    for (int row = 0; row < n; ++row) z(row, col) = rng.complex_normal();

  PixelEnsemble ensemble;
  ensemble.samples = factor * z;
  return ensemble;
}

RenderedScene render_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.n_acquisitions < 2)
    throw UsageError("scene needs positive dimensions and N >= 2");

  // Regions must tile the grid exactly.
  std::vector<int> owner(static_cast<std::size_t>(spec.width) * spec.height, -1);
  for (std::size_t r = 0; r < spec.regions.size(); ++r) {
    const Region& region = spec.regions[r];
    if (region.covariance.n != spec.n_acquisitions)
      throw DimensionMismatch("region covariance N does not match the scene");
    for (int y = region.y0; y < region.y0 + region.height; ++y)
      for (int x = region.x0; x < region.x0 + region.width; ++x) {
        if (x < 0 || x >= spec.width || y < 0 || y >= spec.height)
          throw RegionGapOrOverlap("region extends outside the scene");
        auto& cell = owner[static_cast<std::size_t>(y) * spec.width + x];
        if (cell != -1) throw RegionGapOrOverlap("regions overlap");
        cell = static_cast<int>(r);
      }
  }
  for (int cell : owner)
    if (cell == -1) throw RegionGapOrOverlap("regions do not cover the scene");

  // One sampling factor per region.
  std::vector<CMatrix> factors;
  RenderedScene scene;
  for (const Region& region : spec.regions) {
    const CoherenceMatrix c = build_covariance(region.covariance);
    factors.push_back(sampling_factor(c.entries()));
    scene.truth.push_back({region, phases_or_zero(region.covariance)});
  }

  SlcStack& stack = scene.stack;
  stack.width = spec.width;
  stack.height = spec.height;
  stack.n_acquisitions = spec.n_acquisitions;
  stack.data.resize(stack.band_size() * spec.n_acquisitions);

  const int n = spec.n_acquisitions;
  parallel_for(static_cast<std::int64_t>(spec.width) * spec.height, spec.threads,
               [&](std::int64_t index) {
                 const int x = static_cast<int>(index % spec.width);
                 const int y = static_cast<int>(index / spec.width);
                 // Pixel subseed depends only on (seed, x, y), never on the
                 // worker that draws it.
                 Rng rng(subseed(spec.seed, static_cast<std::uint64_t>(x),
                                 static_cast<std::uint64_t>(y)));
                 CVector z(n);
                 for (int i = 0; i < n; ++i) z[i] = rng.complex_normal();
                 const CVector sample = factors[owner[index]] * z;
                 for (int band = 0; band < n; ++band)
                   stack.data[band * stack.band_size() + index] =
                       std::complex<float>(static_cast<float>(sample[band].real()),
                                           static_cast<float>(sample[band].imag()));
               });
  return scene;
}

void write_scene(const RenderedScene& scene, const std::string& header_path,
                 const std::string& truth_csv_path) {
  write_stack(scene.stack, header_path);

  std::ofstream csv(truth_csv_path);
  if (!csv) throw IoError("cannot write " + truth_csv_path);
  csv << "region,x0,y0,width,height,kind";
  for (int i = 0; i < scene.stack.n_acquisitions; ++i) csv << ",theta_" << i;
  csv << "\n";
  csv.precision(17);
  for (std::size_t r = 0; r < scene.truth.size(); ++r) {
    const RegionTruth& t = scene.truth[r];
    csv << r << "," << t.region.x0 << "," << t.region.y0 << "," << t.region.width
        << "," << t.region.height << "," << kind_name(t.region.covariance.kind);
    for (int i = 0; i < t.true_phases.size(); ++i) csv << "," << t.true_phases[i];
    csv << "\n";
  }
}

}  // namespace phaselink
