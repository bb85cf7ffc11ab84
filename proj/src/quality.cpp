#include "phaselink/quality.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace phaselink {

namespace {

std::atomic<std::uint64_t> g_clamp_fit{0};
std::atomic<std::uint64_t> g_clamp_gof{0};
std::atomic<std::uint64_t> g_clamp_wishart{0};
std::atomic<std::uint64_t> g_clamp_ambiguity{0};

double lambda_max_of(const CMatrix& z) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(z, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw EigensolverFailure("eigenvalue computation failed");
  return eig.eigenvalues().maxCoeff();
}

// log det of a Hermitian positive semidefinite matrix; -inf for singular
// input. Throws if `require_pd` and a pivot is not positive.
double logdet_psd(const CMatrix& a, bool require_pd, const char* what) {
  Eigen::LDLT<CMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularSigma(std::string(what) + ": LDLT factorization failed");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double d = ldlt.vectorD()[i];
    if (d <= 0.0) {
      if (require_pd)
        throw SingularSigma(std::string(what) + " is not positive definite");
      return -std::numeric_limits<double>::infinity();
    }
    logdet += std::log(d);
  }
  return logdet;
}

}  // namespace

const char* to_string(Method method) {
  return method == Method::PT ? "pt" : "ed";
}

ObjectiveBounds objective_bounds_pt(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                    const PhaseHistory& theta) {
  ObjectiveBounds bounds;
  bounds.method = Method::PT;
  bounds.scheme = w.scheme;
  bounds.f = pt_objective(w, pair, theta);
  bounds.f_max = w.abs_offdiag_sum();
  bounds.f_min = 0.0;
  bounds.degenerate = bounds.f_max - bounds.f_min < 1e-12;
  return bounds;
}

ObjectiveBounds objective_bounds_ed(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                    std::optional<double> lambda_max,
                                    const EdBoundsOptions& opts) {
  const int n = w.n();
  ObjectiveBounds bounds;
  bounds.method = Method::ED;
  bounds.scheme = w.scheme;

  const CMatrix z = weighted_phasor_matrix(w, pair);
  bounds.f = lambda_max ? *lambda_max : lambda_max_of(z);

  switch (w.scheme) {
    case WeightScheme::CW:
      bounds.f_max = static_cast<double>(n);
      bounds.f_min = 1.0;
      break;
    case WeightScheme::EW:
      if (opts.ew_certain_bound) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(z, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success)
          throw EigensolverFailure("eigenvalue computation failed");
        bounds.f_max = eig.eigenvalues().cwiseAbs().sum();
      } else {
        bounds.f_max = static_cast<double>(n);
      }
      bounds.f_min = 1.0;
      break;
    case WeightScheme::ML: {
      bounds.f_max = -1.0;
      double trace = 0.0;
      for (int i = 0; i < n; ++i) trace += z(i, i).real();
      bounds.f_min = trace / static_cast<double>(n);
      break;
    }
    case WeightScheme::Custom:
      throw UnknownMethodScheme("no ED bounds are defined for custom weights");
  }
  bounds.degenerate = bounds.f_max - bounds.f_min < 1e-12;
  return bounds;
}

double normalized_fit(const ObjectiveBounds& bounds) {
  if (bounds.degenerate || bounds.f_max - bounds.f_min < 1e-12)
    throw DegenerateBounds("objective bounds are degenerate (f_max == f_min)");
  double fit = (bounds.f - bounds.f_min) / (bounds.f_max - bounds.f_min);
  if (fit < 0.0 || fit > 1.0) {
    g_clamp_fit.fetch_add(1, std::memory_order_relaxed);
    fit = std::clamp(fit, 0.0, 1.0);
  }
  return fit;
}

double noise_floor(const NoiseFloorModel& model, int n) {
  if (n < 2) throw TooFewAcquisitions("noise floor is defined for N >= 2");
  return (model.a * n + model.b) / (n + model.c);
}

double gamma_gof(double fit, double fit_noise) {
  if (!(fit_noise >= 0.0 && fit_noise < 1.0))
    throw InvalidNoiseFloor("noise floor must lie in [0, 1), got " +
                            std::to_string(fit_noise));
  double value = (fit - fit_noise) / (1.0 - fit_noise);
  if (value < 0.0) return 0.0;  // the definition's max(., 0)
  if (value > 1.0) {
    g_clamp_gof.fetch_add(1, std::memory_order_relaxed);
    value = 1.0;
  }
  return value;
}

double gamma_gof_wishart(const CoherenceMatrix& c, const PhaseMagnitudePair& pair,
                         const PhaseHistory& theta) {
  const int n = c.n();
  if (pair.n() != n || theta.size() != n)
    throw DimensionMismatch("Wishart coefficient: size mismatch");

  // Sigma = Lambda(theta) Gamma Lambda(theta)^H = Gamma o (v v^H).
  const CVector v = unit_phasors(theta.phases);
  const CMatrix vvh = v * v.adjoint();
  const CMatrix sigma = (pair.magnitudes.array() * vvh.array()).matrix();

  Eigen::LDLT<CMatrix> sigma_ldlt(sigma);
  if (sigma_ldlt.info() != Eigen::Success)
    throw SingularSigma("Sigma factorization failed");
  double logdet_sigma = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = sigma_ldlt.vectorD()[i];
    if (d <= 0.0) throw SingularSigma("Sigma is not positive definite");
    logdet_sigma += std::log(d);
  }

  const double logdet_c = logdet_psd(c.entries(), false, "C");
  const double trace = sigma_ldlt.solve(c.entries()).trace().real();

  // Everything stays in log space until this single exponentiation; explicit
  // determinant products under/overflow already around N = 44.
  double value = std::exp(logdet_c - logdet_sigma + static_cast<double>(n) - trace);
  if (value < 0.0 || value > 1.0) {
    g_clamp_wishart.fetch_add(1, std::memory_order_relaxed);
    value = std::clamp(value, 0.0, 1.0);
  }
  return value;
}

double gamma_ambiguity(const LinkingResult& result, const ObjectiveBounds& primary,
                       const ObjectiveBounds& secondary, AmbiguityVariant variant,
                       const NoiseFloorModel* noise_model) {
  if (!result.secondary)
    throw MissingSecondary("ambiguity needs a secondary solution");

  if (variant == AmbiguityVariant::Auto)
    variant = primary.scheme == WeightScheme::ML ? AmbiguityVariant::GofBased
                                                 : AmbiguityVariant::ObjectiveBased;

  double value;
  if (variant == AmbiguityVariant::GofBased) {
    if (noise_model == nullptr)
      throw UsageError("gof-based ambiguity needs a noise-floor model");
    const double fn = noise_floor(*noise_model, result.primary.size());
    const double g1 = gamma_gof(normalized_fit(primary), fn);
    const double g2 = gamma_gof(normalized_fit(secondary), fn);
    if (g1 == 0.0)
      throw UndefinedAmbiguity("primary goodness of fit is zero");
    value = (g1 - g2) / g1;
  } else {
    if (primary.f == 0.0)
      throw UndefinedAmbiguity("primary objective is zero");
    value = (primary.f - secondary.f) / primary.f;
  }

  if (value < 0.0) {
    g_clamp_ambiguity.fetch_add(1, std::memory_order_relaxed);
    value = 0.0;
  }
  return value;
}

LegacyIndicators legacy_indicators(const CoherenceMatrix& c, const PhaseMagnitudePair& pair,
                                   const PhaseHistory& theta) {
  const int n = c.n();
  if (pair.n() != n || theta.size() != n)
    throw DimensionMismatch("legacy indicators: size mismatch");

  LegacyIndicators out;
  double cos_sum = 0.0, weighted_sum = 0.0, gamma_sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double residual =
          std::cos(pair.phase(i, j) - (theta.phases[i] - theta.phases[j]));
      cos_sum += residual;
      weighted_sum += pair.magnitudes(i, j) * residual;
      gamma_sum += pair.magnitudes(i, j);
    }
  out.gamma_pta = 2.0 * cos_sum / (static_cast<double>(n) * n - n);
  out.gamma_ptaw = gamma_sum > 0.0 ? weighted_sum / gamma_sum : 0.0;

  Eigen::FullPivLU<RMatrix> lu(pair.magnitudes);
  if (!lu.isInvertible())
    throw SingularMagnitudeMatrix("magnitude matrix is singular; regularize first");
  const RMatrix inverse = lu.inverse();
  const CMatrix whitened = -(inverse.array() * c.entries().array()).matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(whitened, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw EigensolverFailure("eigenvalue computation failed");
  out.lambda_emi = eig.eigenvalues().minCoeff();
  return out;
}

ClampCounters clamp_counters() {
  return {g_clamp_fit.load(), g_clamp_gof.load(), g_clamp_wishart.load(),
          g_clamp_ambiguity.load()};
}

void reset_clamp_counters() {
  g_clamp_fit = 0;
  g_clamp_gof = 0;
  g_clamp_wishart = 0;
  g_clamp_ambiguity = 0;
}

}  // namespace phaselink
