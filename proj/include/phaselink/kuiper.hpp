#pragma once

#include <span>
#include <vector>

namespace phaselink {

/// Two-sample Kuiper statistic V = D+ + D- between the empirical CDFs of two
/// sorted samples.
double kuiper_statistic_sorted(std::span<const float> sorted_a,
                               std::span<const float> sorted_b);

/// Asymptotic tail probability Q_KP(lambda) = 2 sum_j (4 j^2 lambda^2 - 1)
/// exp(-2 j^2 lambda^2), with lambda = (sqrt(Me) + 0.155 + 0.24/sqrt(Me)) V
/// and Me = m n / (m + n) the effective sample size.
double kuiper_pvalue(double v, std::size_t m, std::size_t n);

/// True when the two samples pass the Kuiper homogeneity test at the given
/// significance level (p > alpha). Sorts internally; throws EmptySample.
bool kuiper_homogeneous(std::span<const float> a, std::span<const float> b,
                        double alpha);

}  // namespace phaselink
