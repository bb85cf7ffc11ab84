#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "phaselink/coherence.hpp"
#include "phaselink/linking.hpp"
#include "phaselink/types.hpp"
#include "phaselink/weights.hpp"

namespace phaselink {

enum class Method { PT, ED };

const char* to_string(Method method);

/// Achieved objective with its theoretical bounds.
///
///   PT (all weights):  f = sum W_ij cos(.),        f_max = sum |W_ij|, f_min = 0
///   ED coherence-wt.:  f = lambda_max(C),          f_max = N,          f_min = 1
///   ED equal-wt.:      f = lambda_max(Phi),        f_max = N,          f_min = 1
///   ED max.-likelihood: f = lambda_max(-G^-1 o C), f_max = -1,         f_min = tr(-G^-1 o C)/N
///
/// For ED-EW the certain bound sum|lambda_i| is available behind an option.
struct ObjectiveBounds {
  double f = 0.0;
  double f_max = 0.0;
  double f_min = 0.0;
  Method method = Method::PT;
  WeightScheme scheme = WeightScheme::EW;
  bool degenerate = false;  // f_max - f_min < 1e-12
};

struct EdBoundsOptions {
  /// Use sum|lambda_i| instead of N as the ED-EW upper bound.
  bool ew_certain_bound = false;
};

ObjectiveBounds objective_bounds_pt(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                    const PhaseHistory& theta);

/// `lambda_max` is the ED objective from ed_link; pass nullopt to recompute.
ObjectiveBounds objective_bounds_ed(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                    std::optional<double> lambda_max = std::nullopt,
                                    const EdBoundsOptions& opts = {});

/// Normalized fit F = (f - f_min) / (f_max - f_min), clamped to [0, 1].
/// Throws DegenerateBounds on degenerate input. Clamp events are counted.
double normalized_fit(const ObjectiveBounds& bounds);

/// Rational noise-floor model F_noise(N) = (a N + b) / (N + c).
struct NoiseFloorModel {
  double a = 0.0, b = 0.0, c = 0.0;
  double nrmse = 0.0;
  Method method = Method::PT;
  WeightScheme scheme = WeightScheme::EW;
};

double noise_floor(const NoiseFloorModel& model, int n);

/// gamma_GOF = max((F - F_noise) / (1 - F_noise), 0), clamped at 1.
double gamma_gof(double fit, double fit_noise);

/// Wishart goodness of fit:
/// det(C)/det(Sigma) * exp(N - tr(Sigma^-1 C)) with Sigma = Lambda(theta) Gamma Lambda(theta)^H,
/// evaluated through log-determinants and a solve, exponentiated once and
/// clamped to [0, 1]. Requires an invertible (regularized) Gamma.
double gamma_gof_wishart(const CoherenceMatrix& c, const PhaseMagnitudePair& pair,
                         const PhaseHistory& theta);

enum class AmbiguityVariant { Auto, GofBased, ObjectiveBased };

/// gamma_A, the relative primary/secondary gap: (g1 - g2)/g1 on
/// goodness-of-fit values (ML methods) or (f1 - f2)/f1 on raw objectives
/// (everything else). Auto follows that rule. Negative round-off is clamped
/// to 0; a zero denominator raises UndefinedAmbiguity.
double gamma_ambiguity(const LinkingResult& result, const ObjectiveBounds& primary,
                       const ObjectiveBounds& secondary,
                       AmbiguityVariant variant = AmbiguityVariant::Auto,
                       const NoiseFloorModel* noise_model = nullptr);

/// Literature indicators for side-by-side comparison.
struct LegacyIndicators {
  double gamma_pta = 0.0;   // equal-weighted residual-cosine mean
  double gamma_ptaw = 0.0;  // coherence-weighted residual-cosine mean
  double lambda_emi = 0.0;  // smallest eigenvalue of -Gamma^-1 o C
};

LegacyIndicators legacy_indicators(const CoherenceMatrix& c, const PhaseMagnitudePair& pair,
                                   const PhaseHistory& theta);

/// Per-pixel coefficient record produced by the pipeline.
struct QualityReport {
  double gamma_cp = 0.0;
  double gamma_gof = 0.0;
  std::optional<double> gamma_gof_wishart;
  double gamma_amb = 0.0;
  bool degenerate = false;
  bool not_converged = false;
  bool rejected = false;
};

/// Monotone counters for range clamps (rare by design; exposed so runs can
/// report them).
struct ClampCounters {
  std::uint64_t normalized_fit = 0;
  std::uint64_t gof = 0;
  std::uint64_t wishart = 0;
  std::uint64_t ambiguity = 0;
};

ClampCounters clamp_counters();
void reset_clamp_counters();

}  // namespace phaselink
