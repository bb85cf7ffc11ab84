#include "phaselink/noisefloor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "phaselink/parallel.hpp"
#include "phaselink/rng.hpp"

namespace phaselink {

std::string MethodSpec::name() const {
  return std::string(to_string(method)) + "-" + to_string(scheme);
}

MethodSpec MethodSpec::parse(const std::string& name) {
  for (const MethodSpec& spec : all())
    if (spec.name() == name) return spec;
  throw UnknownMethodScheme("unknown method '" + name +
                            "' (expected pt-ew, pt-cw, pt-ml, ed-ew, ed-cw, ed-ml)");
}

std::vector<MethodSpec> MethodSpec::all() {
  return {{Method::PT, WeightScheme::EW}, {Method::PT, WeightScheme::CW},
          {Method::PT, WeightScheme::ML}, {Method::ED, WeightScheme::EW},
          {Method::ED, WeightScheme::CW}, {Method::ED, WeightScheme::ML}};
}

namespace {

PixelEnsemble white_noise_ensemble(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  PixelEnsemble ensemble;
  ensemble.samples.resize(n, m);
  for (int col = 0; col < m; ++col)
    for (int row = 0; row < n; ++row) ensemble.samples(row, col) = rng.complex_normal();
  return ensemble;
}

double normalized_fit_for(const MethodSpec& spec, const PhaseMagnitudePair& pair,
                          int reference) {
  const WeightMatrix w = build_weights(spec.scheme, pair);
  if (spec.method == Method::ED) {
    const LinkingResult ed = ed_link(w, pair, reference);
    return normalized_fit(objective_bounds_ed(w, pair, ed.objective_primary));
  }
  const PhaseHistory init = init_eigen(w, pair, reference).primary;
  const LinkingResult pt = pt_link(w, pair, reference, init);
  return normalized_fit(objective_bounds_pt(w, pair, pt.primary));
}

}  // namespace

std::vector<NoisePoint> simulate_noise_points(const NoiseRunConfig& cfg) {
  if (cfg.stack_sizes.empty()) throw UsageError("no stack sizes configured");
  if (cfg.methods.empty()) throw UsageError("no methods configured");
  const int max_n = *std::max_element(cfg.stack_sizes.begin(), cfg.stack_sizes.end());
  if (cfg.ensemble_size <= max_n)
    throw UsageError("ensemble size M must exceed the largest stack size");
  if (cfg.n_ensembles < 1) throw UsageError("need at least one ensemble");

  const int k = cfg.n_ensembles;
  const int n_methods = static_cast<int>(cfg.methods.size());
  std::vector<NoisePoint> points;

  for (std::size_t n_index = 0; n_index < cfg.stack_sizes.size(); ++n_index) {
    const int n = cfg.stack_sizes[n_index];
    // fits[method][ensemble]; slots are written by index so the result does
    // not depend on the thread count.
    std::vector<std::vector<double>> fits(n_methods, std::vector<double>(k));

    parallel_for(k, cfg.threads, [&](std::int64_t e) {
      const std::uint64_t stream = subseed(cfg.seed, n_index, static_cast<std::uint64_t>(e));
      const PixelEnsemble ensemble = white_noise_ensemble(n, cfg.ensemble_size, stream);
      const CoherenceMatrix c = regularize(estimate_coherence(ensemble), cfg.beta);
      const PhaseMagnitudePair pair = decompose(c);
      for (int mi = 0; mi < n_methods; ++mi) {
        try {
          fits[mi][e] = normalized_fit_for(cfg.methods[mi], pair, 0);
        } catch (const Error& err) {
          throw Error("ensemble " + std::to_string(e) + " (N=" + std::to_string(n) +
                      ", " + cfg.methods[mi].name() + "): " + err.what());
        }
      }
    });

    for (int mi = 0; mi < n_methods; ++mi) {
      double mean = 0.0;
      for (double f : fits[mi]) mean += f;
      mean /= k;
      double variance = 0.0;
      for (double f : fits[mi]) variance += (f - mean) * (f - mean);
      NoisePoint point;
      point.n = n;
      point.method = cfg.methods[mi];
      point.mean_f = mean;
      point.stderr_f = k > 1 ? std::sqrt(variance / (k - 1) / k) : 0.0;
      points.push_back(point);
    }
  }
  return points;
}

NoiseFloorModel fit_rational(const std::vector<NoisePoint>& points) {
  std::set<int> distinct;
  for (const NoisePoint& p : points) distinct.insert(p.n);
  if (distinct.size() < 4)
    throw RankDeficient("rational fit needs at least 4 points with distinct N");

  double f_min = points.front().mean_f, f_max = points.front().mean_f;
  const NoisePoint* at_nmin = &points.front();
  const NoisePoint* at_nmax = &points.front();
  for (const NoisePoint& p : points) {
    f_min = std::min(f_min, p.mean_f);
    f_max = std::max(f_max, p.mean_f);
    if (p.n < at_nmin->n) at_nmin = &p;
    if (p.n > at_nmax->n) at_nmax = &p;
  }
  const double range = f_max - f_min;
  if (range <= 0.0)
    throw RankDeficient("all fit values are equal; nRMSE is undefined");

  // Initialization: a from the large-N tail, c at the smallest N, b so the
  // model interpolates the first point.
  double a = at_nmax->mean_f;
  double c = static_cast<double>(at_nmin->n);
  double b = at_nmin->mean_f * (at_nmin->n + c) - a * at_nmin->n;

  const auto cost_of = [&](double pa, double pb, double pc) {
    double cost = 0.0;
    for (const NoisePoint& p : points) {
      const double r = p.mean_f - (pa * p.n + pb) / (p.n + pc);
      cost += r * r;
    }
    return cost;
  };

  // Levenberg-Marquardt, damping 1e-3, x10 on reject, /10 on accept.
  double lambda = 1e-3;
  double cost = cost_of(a, b, c);
  const int m = static_cast<int>(points.size());
  Eigen::MatrixXd jacobian(m, 3);
  Eigen::VectorXd residuals(m);

  for (int iter = 0; iter < 200; ++iter) {
    for (int i = 0; i < m; ++i) {
      const double n = points[i].n;
      const double denom = n + c;
      residuals[i] = points[i].mean_f - (a * n + b) / denom;
      jacobian(i, 0) = -n / denom;
      jacobian(i, 1) = -1.0 / denom;
      jacobian(i, 2) = (a * n + b) / (denom * denom);
    }
    const Eigen::Matrix3d jtj = jacobian.transpose() * jacobian;
    const Eigen::Vector3d jtr = jacobian.transpose() * residuals;

    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::Matrix3d damped = jtj;
      for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const Eigen::Vector3d step = damped.ldlt().solve(-jtr);
      if (!step.allFinite()) throw FitDiverged("LM step is not finite");
      const double trial_cost = cost_of(a + step[0], b + step[1], c + step[2]);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        a += step[0];
        b += step[1];
        c += step[2];
        const double improvement = cost - trial_cost;
        cost = trial_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (improvement < 1e-15 * (1.0 + cost)) iter = 200;  // converged
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!accepted) break;  // damping exhausted; keep the best parameters
  }
  if (!std::isfinite(cost)) throw FitDiverged("rational fit diverged");

  NoiseFloorModel model;
  model.a = a;
  model.b = b;
  model.c = c;
  model.nrmse = std::sqrt(cost / m) / range;
  model.method = points.front().method.method;
  model.scheme = points.front().method.scheme;
  return model;
}

const std::vector<NoiseFloorModel>& builtin_models() {
  // Published fits of the pure-noise normalized objective for the six
  // PT/ED x EW/CW/ML variants.
  static const std::vector<NoiseFloorModel> models = {
      {0.0925, 11.138, 16.000, 3.88e-3, Method::PT, WeightScheme::EW},
      {0.1041, 12.236, 16.419, 3.88e-3, Method::PT, WeightScheme::CW},
      {0.1422, 12.758, 13.920, 5.41e-3, Method::PT, WeightScheme::ML},
      {0.1040, 13.409, 18.470, 3.13e-3, Method::ED, WeightScheme::EW},
      {0.00139, 0.1811, 23.022, 4.48e-2, Method::ED, WeightScheme::CW},
      {0.3357, 5.163, 0.7670, 4.02e-2, Method::ED, WeightScheme::ML},
  };
  return models;
}

const NoiseFloorModel& builtin_model(Method method, WeightScheme scheme) {
  for (const NoiseFloorModel& model : builtin_models())
    if (model.method == method && model.scheme == scheme) return model;
  throw UnknownMethodScheme(std::string("no published noise floor for ") +
                            to_string(method) + "-" + to_string(scheme));
}

}  // namespace phaselink
