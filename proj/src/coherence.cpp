#include "phaselink/coherence.hpp"

#include <Eigen/Eigenvalues>

namespace phaselink {

namespace {

void check_index(int i, int n, const char* what) {
  if (i < 0 || i >= n)
    throw IndexOutOfRange(std::string(what) + " index " + std::to_string(i) +
                          " out of range for N=" + std::to_string(n));
}

}  // namespace

CoherenceMatrix::CoherenceMatrix(CMatrix raw) {
  const Eigen::Index n = raw.rows();
  if (n < 2 || raw.cols() != n)
    throw DimensionMismatch("coherence matrix must be square with N >= 2");

  // Mirror the upper triangle so Hermitian symmetry is exact, pin the diagonal.
  for (Eigen::Index i = 0; i < n; ++i) {
    raw(i, i) = cdouble(1.0, 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) raw(j, i) = std::conj(raw(i, j));
  }

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(raw(i, j)) > 1.0 + 1e-12)
        throw Error("coherence magnitude " + std::to_string(std::abs(raw(i, j))) +
                    " at (" + std::to_string(i) + "," + std::to_string(j) +
                    ") exceeds 1");

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(raw, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw EigensolverFailure("eigenvalue check failed during coherence construction");
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min < -1e-9 * static_cast<double>(n))
    throw NotPSD("coherence matrix is not positive semidefinite: lambda_min = " +
                 std::to_string(lambda_min));

  entries_ = std::move(raw);
}

CoherenceMatrix estimate_coherence(const PixelEnsemble& ensemble) {
  const int n = ensemble.n_acquisitions();
  const int m = ensemble.n_samples();
  if (n < 2) throw DimensionMismatch("need at least two acquisitions");
  if (m < 1) throw DimensionMismatch("need at least one sample");

  // Gram matrix sum_m w w^H; double-precision accumulation regardless of the
  // input's origin, M can reach 1e4.
  CMatrix gram = ensemble.samples * ensemble.samples.adjoint();

  RVector energy(n);
  for (int i = 0; i < n; ++i) {
    energy[i] = gram(i, i).real();
    if (!(energy[i] > 0.0)) throw ZeroEnergyAcquisition(i);
  }

  CMatrix c(n, n);
  for (int i = 0; i < n; ++i) {
    c(i, i) = cdouble(1.0, 0.0);
    for (int j = i + 1; j < n; ++j) {
      c(i, j) = gram(i, j) / std::sqrt(energy[i] * energy[j]);
      // Round-off can push a magnitude a few ulps past 1; rescale, the type
      // allows only 1e-12 slack.
      const double mag = std::abs(c(i, j));
      if (mag > 1.0) c(i, j) /= mag;
      c(j, i) = std::conj(c(i, j));
    }
  }
  return CoherenceMatrix(std::move(c));
}

PhaseMagnitudePair decompose(const CoherenceMatrix& c) {
  const int n = c.n();
  PhaseMagnitudePair pair;
  pair.phasors.resize(n, n);
  pair.magnitudes.resize(n, n);
  for (int i = 0; i < n; ++i) {
    pair.phasors(i, i) = cdouble(1.0, 0.0);
    pair.magnitudes(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const cdouble z = c(i, j);
      const double mag = std::abs(z);
      pair.magnitudes(i, j) = pair.magnitudes(j, i) = mag;
      // Zero entries get the phasor 1: deterministic, and the matching weight
      // is zero in the CW/ML schemes.
      pair.phasors(i, j) = mag == 0.0 ? cdouble(1.0, 0.0) : z / mag;
      pair.phasors(j, i) = std::conj(pair.phasors(i, j));
    }
  }
  return pair;
}

double closure_phase(const PhaseMagnitudePair& pair, int i, int j, int k) {
  const int n = pair.n();
  check_index(i, n, "acquisition");
  check_index(j, n, "acquisition");
  check_index(k, n, "acquisition");
  if (i == j || j == k || i == k)
    throw IndexOutOfRange("closure phase needs three distinct acquisitions");
  return wrap_phase(pair.phase(i, j) + pair.phase(j, k) - pair.phase(i, k));
}

double closure_mean(const PhaseMagnitudePair& pair) {
  const int n = pair.n();
  if (n < 3) throw TooFewAcquisitions("closure phases need N >= 3");
  // cos(phi_ij + phi_jk - phi_ik) = Re(Phi_ij Phi_jk conj(Phi_ik)); one pass
  // over all triplets.
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const cdouble pij = pair.phasors(i, j);
      for (int k = j + 1; k < n; ++k)
        sum += (pij * pair.phasors(j, k) * std::conj(pair.phasors(i, k))).real();
    }
  const double triplets =
      static_cast<double>(n) * (n - 1) * (n - 2) / 6.0;
  return sum / triplets;
}

double closure_coefficient(const PhaseMagnitudePair& pair) {
  return std::max(closure_mean(pair), 0.0);
}

std::optional<PhaseHistory> rank_one_extract(const PhaseMagnitudePair& pair, int p) {
  const int n = pair.n();
  check_index(p, n, "reference");
  if (n >= 3) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          const double cosine =
              (pair.phasors(i, j) * pair.phasors(j, k) * std::conj(pair.phasors(i, k)))
                  .real();
          if (std::abs(1.0 - cosine) > 1e-9) return std::nullopt;
        }
  }
  RVector raw(n);
  for (int i = 0; i < n; ++i) raw[i] = pair.phase(i, p);
  return PhaseHistory::from_raw(raw, p);
}

CoherenceMatrix regularize(const CoherenceMatrix& c, double beta) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw InvalidBeta("beta must lie in [0, 1), got " + std::to_string(beta));
  if (beta == 0.0) return c;
  CMatrix scaled = (1.0 - beta) * c.entries();
  for (int i = 0; i < c.n(); ++i) scaled(i, i) = cdouble(1.0, 0.0);
  return CoherenceMatrix(std::move(scaled));
}

}  // namespace phaselink
