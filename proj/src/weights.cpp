#include "phaselink/weights.hpp"

#include <Eigen/LU>

namespace phaselink {

const char* to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::EW: return "ew";
    case WeightScheme::CW: return "cw";
    case WeightScheme::ML: return "ml";
    case WeightScheme::Custom: return "custom";
  }
  return "?";
}

double WeightMatrix::abs_offdiag_sum() const {
  double sum = 0.0;
  for (int i = 0; i < n(); ++i)
    for (int j = i + 1; j < n(); ++j) sum += std::abs(entries(i, j));
  return sum;
}

WeightMatrix build_weights(WeightScheme scheme, const PhaseMagnitudePair& pair,
                           const MaskSpec& mask) {
  const int n = pair.n();
  WeightMatrix w;
  w.scheme = scheme;

  switch (scheme) {
    case WeightScheme::EW:
      w.entries = RMatrix::Ones(n, n);
      break;
    case WeightScheme::CW:
      w.entries = pair.magnitudes;
      break;
    case WeightScheme::ML: {
      // -Gamma^-1 o Gamma with the matrix inverse of the magnitude matrix;
      // callers regularize before inverting, the raw sample Gamma is often
      // near singular for M close to N.
      Eigen::FullPivLU<RMatrix> lu(pair.magnitudes);
      if (!lu.isInvertible())
        throw SingularMagnitudeMatrix(
            "magnitude matrix is singular at working tolerance; regularize first");
      const RMatrix inverse = lu.inverse();
      w.entries = -(inverse.array() * pair.magnitudes.array()).matrix();
      break;
    }
    case WeightScheme::Custom:
      throw UsageError("custom weights are constructed directly, not built");
  }

  if (mask.kind != MaskSpec::Kind::None) {
    RMatrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const bool keep = mask.kind == MaskSpec::Kind::CoherenceThreshold
                              ? pair.magnitudes(i, j) >= mask.tau
                              : std::abs(i - j) <= mask.bandwidth;
        m(i, j) = keep ? 1.0 : 0.0;
      }
    w.entries = (w.entries.array() * m.array()).matrix();
    w.mask = std::move(m);
  }
  return w;
}

}  // namespace phaselink
