#pragma once

#include <optional>

#include "phaselink/errors.hpp"
#include "phaselink/types.hpp"

namespace phaselink {

/// Multi-temporal samples of one distributed-scatterer pixel ensemble.
/// Column m of `samples` is the length-N complex vector of ensemble member m.
struct PixelEnsemble {
  CMatrix samples;  // N x M

  int n_acquisitions() const { return static_cast<int>(samples.rows()); }
  int n_samples() const { return static_cast<int>(samples.cols()); }
};

/// N x N sample coherence matrix. Hermitian by construction (mirrored from the
/// upper triangle), diagonal exactly 1, off-diagonal magnitudes <= 1 and
/// smallest eigenvalue >= -1e-9 * N, both up to the stated slack.
class CoherenceMatrix {
 public:
  /// Validates and normalizes `raw`: the strict upper triangle is kept, the
  /// lower triangle is replaced by its conjugate, the diagonal is set to 1.
  explicit CoherenceMatrix(CMatrix raw);

  int n() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& entries() const { return entries_; }
  cdouble operator()(int i, int j) const { return entries_(i, j); }

 private:
  CMatrix entries_;
};

/// Element-wise polar decomposition of a coherence matrix: unit phasors Phi
/// and magnitudes Gamma, C = Gamma o Phi. Zero-magnitude entries carry the
/// phasor 1+0i.
struct PhaseMagnitudePair {
  CMatrix phasors;     // Phi, unit modulus
  RMatrix magnitudes;  // Gamma, in [0,1]

  int n() const { return static_cast<int>(phasors.rows()); }
  double phase(int i, int j) const { return std::arg(phasors(i, j)); }
};

/// Sample coherence (complex Pearson correlation with zero mean):
/// C_ij = sum_m w_i conj(w_j) / sqrt(sum|w_i|^2 sum|w_j|^2).
/// Accumulates in double precision. Throws ZeroEnergyAcquisition if some
/// acquisition has no energy across the ensemble.
CoherenceMatrix estimate_coherence(const PixelEnsemble& ensemble);

PhaseMagnitudePair decompose(const CoherenceMatrix& c);

/// Closure phase phi_ij + phi_jk - phi_ik over a triplet, wrapped to (-pi, pi].
double closure_phase(const PhaseMagnitudePair& pair, int i, int j, int k);

/// Average cosine of all closure phases, in [-1, 1]. Requires N >= 3.
double closure_mean(const PhaseMagnitudePair& pair);

/// Closure phase coefficient: max(closure_mean, 0).
double closure_coefficient(const PhaseMagnitudePair& pair);

/// If every closure cosine equals 1 (within 1e-9), the phase information is
/// rank one and column p carries all of it; returns that column re-referenced
/// to p. Otherwise returns nullopt.
std::optional<PhaseHistory> rank_one_extract(const PhaseMagnitudePair& pair, int p);

/// Spectral regularization (1-beta) C + beta I, beta in [0, 1).
CoherenceMatrix regularize(const CoherenceMatrix& c, double beta);

}  // namespace phaselink
