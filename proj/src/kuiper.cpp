#include "phaselink/kuiper.hpp"

#include <algorithm>
#include <cmath>

#include "phaselink/errors.hpp"

namespace phaselink {

double kuiper_statistic_sorted(std::span<const float> a, std::span<const float> b) {
  if (a.empty() || b.empty()) throw EmptySample("Kuiper test needs nonempty samples");

  // Merge walk over both sorted samples, tracking max(Fa - Fb) and max(Fb - Fa).
  const double step_a = 1.0 / static_cast<double>(a.size());
  const double step_b = 1.0 / static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0, d_plus = 0.0, d_minus = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const float value = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= value) {
      ++ia;
      fa += step_a;
    }
    while (ib < b.size() && b[ib] <= value) {
      ++ib;
      fb += step_b;
    }
    d_plus = std::max(d_plus, fa - fb);
    d_minus = std::max(d_minus, fb - fa);
  }
  return d_plus + d_minus;
}

double kuiper_pvalue(double v, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw EmptySample("Kuiper test needs nonempty samples");
  const double me = static_cast<double>(m) * static_cast<double>(n) /
                    static_cast<double>(m + n);
  const double sqrt_me = std::sqrt(me);
  const double lambda = (sqrt_me + 0.155 + 0.24 / sqrt_me) * v;

  // Q_KP(lambda) = 2 sum_j (4 j^2 lambda^2 - 1) exp(-2 j^2 lambda^2). The
  // series is only usable for lambda away from zero; below 0.4 the tail
  // probability is 1 to working precision.
  if (lambda < 0.4) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double x = 2.0 * j * j * lambda * lambda;
    const double term = 2.0 * (2.0 * x - 1.0) * std::exp(-x);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum) || std::abs(term) < 1e-300) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

bool kuiper_homogeneous(std::span<const float> a, std::span<const float> b,
                        double alpha) {
  std::vector<float> sa(a.begin(), a.end());
  std::vector<float> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double v = kuiper_statistic_sorted(sa, sb);
  return kuiper_pvalue(v, sa.size(), sb.size()) > alpha;
}

}  // namespace phaselink
