#pragma once

#include <complex>
#include <cmath>

#include <Eigen/Dense>

namespace phaselink {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
inline double wrap_phase(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w <= -kPi) w = kPi;
  return w;
}

/// Single-reference phase history: phases[reference] == 0, entries in (-pi, pi].
struct PhaseHistory {
  RVector phases;
  int reference = 0;

  int size() const { return static_cast<int>(phases.size()); }

  /// Subtract the reference entry and wrap. raw[reference] maps to exactly 0.
  static PhaseHistory from_raw(const RVector& raw, int reference) {
    PhaseHistory h;
    h.reference = reference;
    h.phases.resize(raw.size());
    const double ref = raw[reference];
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      h.phases[i] = wrap_phase(raw[i] - ref);
    h.phases[reference] = 0.0;
    return h;
  }
};

/// Phase-to-phasor map: (exp(i theta_1), ..., exp(i theta_N)).
inline CVector unit_phasors(const RVector& theta) {
  CVector v(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    v[i] = std::polar(1.0, theta[i]);
  return v;
}

}  // namespace phaselink
