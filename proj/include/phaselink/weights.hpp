#pragma once

#include <optional>
#include <string>

#include "phaselink/coherence.hpp"
#include "phaselink/errors.hpp"
#include "phaselink/types.hpp"

namespace phaselink {

enum class WeightScheme { EW, CW, ML, Custom };

const char* to_string(WeightScheme scheme);

struct MaskSpec {
  enum class Kind { None, CoherenceThreshold, Bandwidth };
  Kind kind = Kind::None;
  double tau = 0.0;   // coherence threshold, in [0,1]
  int bandwidth = 0;  // |i-j| <= bandwidth kept

  static MaskSpec none() { return {}; }
  static MaskSpec coherence_threshold(double tau) {
    return {Kind::CoherenceThreshold, tau, 0};
  }
  static MaskSpec bandwidth_limit(int n) { return {Kind::Bandwidth, 0.0, n}; }
};

/// Symmetric real weight matrix. Entries keep the scheme's natural diagonal
/// (EW/CW: 1, ML: -(Gamma^-1)_ii); PT objectives ignore the diagonal, the ED
/// matrix W o Phi uses it.
struct WeightMatrix {
  RMatrix entries;
  WeightScheme scheme = WeightScheme::Custom;
  std::optional<RMatrix> mask;  // binary 0/1, already applied to entries

  int n() const { return static_cast<int>(entries.rows()); }

  /// sum_{i<j} |W_ij|, the PT objective's natural scale and upper bound.
  double abs_offdiag_sum() const;
};

/// EW: all ones. CW: Gamma. ML: -Gamma^-1 o Gamma (matrix inverse; the caller
/// passes a pair whose Gamma has been regularized if needed). Masks are
/// applied as W~ = M o W. Throws SingularMagnitudeMatrix when the ML inverse
/// does not exist at working tolerance.
WeightMatrix build_weights(WeightScheme scheme, const PhaseMagnitudePair& pair,
                           const MaskSpec& mask = MaskSpec::none());

}  // namespace phaselink
