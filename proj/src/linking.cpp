#include "phaselink/linking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

namespace phaselink {

namespace {

// Objective and gradient on the torus for an arbitrary Hermitian matrix Z;
// Z = W o Phi for the plain problem, Z = W o Phi - rho u1 u1^H for the
// penalized secondary problem.
//
// f(theta)      = sum_{i<j} Re(Z_ij conj(v_i) v_j)          with v = Lambda(theta)
// (d f/d theta)_k = Im(conj(v_k) (Z v)_k)
struct TorusProblem {
  const CMatrix& z;
  double diag_real;

  explicit TorusProblem(const CMatrix& z_) : z(z_) {
    diag_real = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) diag_real += z(i, i).real();
  }

  double objective(const CVector& v) const {
    const cdouble quad = v.dot(z * v);  // v^H Z v, real for Hermitian Z
    return 0.5 * (quad.real() - diag_real);
  }

  void objective_and_gradient(const CVector& v, double& f, RVector& g) const {
    const CVector zv = z * v;
    cdouble quad(0.0, 0.0);
    g.resize(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      const cdouble t = std::conj(v[k]) * zv[k];
      quad += t;
      g[k] = t.imag();
    }
    f = 0.5 * (quad.real() - diag_real);
  }
};

CVector phasors_of(const RVector& theta) { return unit_phasors(theta); }

double abs_offdiag_sum(const CMatrix& z) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = i + 1; j < z.cols(); ++j) sum += std::abs(z(i, j));
  return sum;
}

void check_finite(double f, const RVector& g) {
  if (!std::isfinite(f) || !g.allFinite())
    throw NonFiniteObjective("objective or gradient became non-finite");
}

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  double objective = 0.0;
};

// Polak-Ribiere nonlinear conjugate gradient ascent with a backtracking
// Armijo line search. Initial step 1/||g||_inf, contraction 0.5, restart to
// steepest ascent when beta < 0 or every N iterations.
SolveStats prcg_maximize(const TorusProblem& problem, RVector& theta,
                         double tol, int max_iter) {
  constexpr double kArmijo = 1e-4;
  const int n = static_cast<int>(theta.size());

  CVector v = phasors_of(theta);
  double f;
  RVector g;
  problem.objective_and_gradient(v, f, g);
  check_finite(f, g);

  RVector d = g;
  RVector g_old = g;
  SolveStats stats;

  for (int iter = 0; iter < max_iter; ++iter) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    stats.gradient_norm = gnorm;
    if (gnorm <= tol) {
      stats.converged = true;
      break;
    }

    if (iter > 0 && iter % n == 0) d = g;  // periodic restart
    double gd = g.dot(d);
    if (gd <= 0.0) {
      d = g;
      gd = g.dot(g);
    }

    double step = 1.0 / gnorm;
    bool accepted = false;
    RVector theta_trial;
    double f_trial = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      for (int halving = 0; halving < 60; ++halving) {
        theta_trial = theta + step * d;
        f_trial = problem.objective(phasors_of(theta_trial));
        if (!std::isfinite(f_trial))
          throw NonFiniteObjective("line search produced a non-finite objective");
        if (f_trial >= f + kArmijo * step * gd) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {  // retry once along steepest ascent
        d = g;
        gd = g.dot(g);
        step = 1.0 / gnorm;
      }
    }
    if (!accepted) break;  // no ascent step found; report best so far

    theta = theta_trial;
    for (int k = 0; k < n; ++k) theta[k] = wrap_phase(theta[k]);
    v = phasors_of(theta);
    g_old = g;
    problem.objective_and_gradient(v, f, g);
    check_finite(f, g);
    stats.iterations = iter + 1;

    double beta = g.dot(g - g_old) / g_old.dot(g_old);
    if (!(beta > 0.0)) beta = 0.0;
    d = g + beta * d;
  }

  stats.objective = f;
  if (!stats.converged)
    stats.gradient_norm = g.lpNorm<Eigen::Infinity>();
  stats.converged = stats.converged || stats.gradient_norm <= tol;
  return stats;
}

// Simultaneous fixed-point update theta_p <- arg(sum_{j!=p} Z_pj v_j); the
// coordinate-wise ascent maximizer applied from the previous iterate for all
// p at once. Stops when the largest phase change drops below 1e-10 rad.
// Returns the best iterate seen, so the final objective never falls below
// the initial one.
SolveStats jacobi_maximize(const TorusProblem& problem, RVector& theta,
                           double tol, int max_iter) {
  constexpr double kPhaseTol = 1e-10;
  const int n = static_cast<int>(theta.size());

  RVector best = theta;
  double f_best = problem.objective(phasors_of(theta));
  if (!std::isfinite(f_best)) throw NonFiniteObjective("non-finite objective");

  SolveStats stats;
  RVector next(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    const CVector v = phasors_of(theta);
    const CVector zv = problem.z * v;
    double max_change = 0.0;
    for (int p = 0; p < n; ++p) {
      const cdouble s = zv[p] - problem.z(p, p) * v[p];
      next[p] = std::abs(s) == 0.0 ? theta[p] : std::arg(s);
      max_change = std::max(max_change, std::abs(wrap_phase(next[p] - theta[p])));
    }
    theta = next;
    stats.iterations = iter + 1;

    const double f = problem.objective(phasors_of(theta));
    if (!std::isfinite(f)) throw NonFiniteObjective("non-finite objective");
    if (f > f_best) {
      f_best = f;
      best = theta;
    }
    if (max_change < kPhaseTol) {
      stats.converged = true;
      break;
    }
  }

  theta = best;
  double f;
  RVector g;
  problem.objective_and_gradient(phasors_of(theta), f, g);
  stats.objective = f;
  stats.gradient_norm = g.lpNorm<Eigen::Infinity>();
  stats.converged = stats.converged || stats.gradient_norm <= tol;
  return stats;
}

void check_problem(const WeightMatrix& w, const PhaseMagnitudePair& pair) {
  if (w.n() != pair.n())
    throw DimensionMismatch("weight matrix is " + std::to_string(w.n()) +
                            "x, phase matrix is " + std::to_string(pair.n()) + "x");
}

void check_history(const PhaseHistory& theta, int n, int p) {
  if (theta.size() != n)
    throw DimensionMismatch("phase history length " + std::to_string(theta.size()) +
                            " does not match N=" + std::to_string(n));
  if (theta.reference != p)
    throw DimensionMismatch("phase history reference does not match p");
}

double resolved_tol(const PtOptions& opts, const CMatrix& z) {
  return opts.tol >= 0.0 ? opts.tol : 1e-8 * abs_offdiag_sum(z);
}

int resolved_max_iter(const PtOptions& opts, int n) {
  return opts.max_iter >= 0 ? opts.max_iter : 500 * n;
}

}  // namespace

CMatrix weighted_phasor_matrix(const WeightMatrix& w, const PhaseMagnitudePair& pair) {
  check_problem(w, pair);
  return (w.entries.array() * pair.phasors.array()).matrix();
}

double pt_objective(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                    const PhaseHistory& theta) {
  check_problem(w, pair);
  if (theta.size() != w.n()) throw DimensionMismatch("phase history length mismatch");
  const CMatrix z = weighted_phasor_matrix(w, pair);
  return TorusProblem(z).objective(phasors_of(theta.phases));
}

RVector pt_gradient(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                    const PhaseHistory& theta) {
  check_problem(w, pair);
  if (theta.size() != w.n()) throw DimensionMismatch("phase history length mismatch");
  const CMatrix z = weighted_phasor_matrix(w, pair);
  double f;
  RVector g;
  TorusProblem(z).objective_and_gradient(phasors_of(theta.phases), f, g);
  return g;
}

LinkingResult ed_link(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                      int p, bool want_secondary) {
  check_problem(w, pair);
  const int n = w.n();
  if (p < 0 || p >= n) throw IndexOutOfRange("reference index out of range");

  const CMatrix z = weighted_phasor_matrix(w, pair);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(z);
  if (eig.info() != Eigen::Success)
    throw EigensolverFailure("Hermitian eigendecomposition failed");

  const RVector& values = eig.eigenvalues();  // ascending
  const double lambda1 = values[n - 1];
  const double lambda2 = values[n - 2];
  const double spectral_norm = std::max(std::abs(values[0]), std::abs(values[n - 1]));

  auto phases_of_column = [&](int col) {
    RVector raw(n);
    for (int i = 0; i < n; ++i) raw[i] = std::arg(eig.eigenvectors()(i, col));
    return PhaseHistory::from_raw(raw, p);
  };

  LinkingResult result;
  result.primary = phases_of_column(n - 1);
  result.objective_primary = lambda1;
  result.from_eigensolver = true;
  result.converged = true;
  result.degenerate = lambda1 - lambda2 < 1e-9 * spectral_norm;
  if (want_secondary) {
    result.secondary = phases_of_column(n - 2);
    result.objective_secondary = lambda2;
  }
  return result;
}

EigenInit init_eigen(const WeightMatrix& w, const PhaseMagnitudePair& pair, int p) {
  const LinkingResult ed = ed_link(w, pair, p, true);
  return {ed.primary, *ed.secondary, ed.degenerate};
}

PhaseHistory init_tridiagonal(const PhaseMagnitudePair& pair, int p) {
  const int n = pair.n();
  if (p < 0 || p >= n) throw IndexOutOfRange("reference index out of range");
  RVector raw(n);
  raw[n - 1] = 0.0;
  for (int i = n - 2; i >= 0; --i) raw[i] = pair.phase(i, i + 1) + raw[i + 1];
  return PhaseHistory::from_raw(raw, p);
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

PhaseHistory init_spanning_tree(const PhaseMagnitudePair& pair, int p) {
  const int n = pair.n();
  if (p < 0 || p >= n) throw IndexOutOfRange("reference index out of range");

  struct Edge {
    int i, j;
    double gamma;
  };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j, pair.magnitudes(i, j)});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.gamma != b.gamma) return a.gamma > b.gamma;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  // Kruskal on the complete acquisition graph, maximizing total coherence.
  UnionFind uf(n);
  std::vector<std::vector<int>> adjacency(n);
  int taken = 0;
  for (const Edge& e : edges) {
    if (taken == n - 1) break;
    if (uf.unite(e.i, e.j)) {
      adjacency[e.i].push_back(e.j);
      adjacency[e.j].push_back(e.i);
      ++taken;
    }
  }

  // Accumulate phases outward from p along the tree: theta_w = phi_wu + theta_u.
  RVector raw = RVector::Zero(n);
  std::vector<bool> seen(n, false);
  std::vector<int> queue{p};
  seen[p] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int w : adjacency[u]) {
      if (seen[w]) continue;
      seen[w] = true;
      raw[w] = pair.phase(w, u) + raw[u];
      queue.push_back(w);
    }
  }
  return PhaseHistory::from_raw(raw, p);
}

LinkingResult pt_link(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                      int p, const PhaseHistory& init, PtSolver solver,
                      const PtOptions& opts) {
  check_problem(w, pair);
  const int n = w.n();
  if (p < 0 || p >= n) throw IndexOutOfRange("reference index out of range");
  check_history(init, n, p);

  const CMatrix z = weighted_phasor_matrix(w, pair);
  const TorusProblem problem(z);
  const double tol = resolved_tol(opts, z);
  const int max_iter = resolved_max_iter(opts, n);

  RVector theta = init.phases;
  const SolveStats stats = solver == PtSolver::PRCG
                               ? prcg_maximize(problem, theta, tol, max_iter)
                               : jacobi_maximize(problem, theta, tol, max_iter);

  LinkingResult result;
  result.primary = PhaseHistory::from_raw(theta, p);
  result.objective_primary = stats.objective;
  result.solver = solver;
  result.iterations = stats.iterations;
  result.converged = stats.converged;
  result.gradient_norm = stats.gradient_norm;
  return result;
}

LinkingResult pt_link_secondary(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                int p, const PhaseHistory& primary,
                                std::optional<PhaseHistory> init,
                                const PtOptions& opts) {
  check_problem(w, pair);
  const int n = w.n();
  if (p < 0 || p >= n) throw IndexOutOfRange("reference index out of range");
  check_history(primary, n, p);

  const CMatrix z = weighted_phasor_matrix(w, pair);
  const TorusProblem unpenalized(z);
  const CVector v1 = phasors_of(primary.phases);
  const double f1 = unpenalized.objective(v1);

  // rho starts at the primary's normalized fit (PT bounds: f_min = 0,
  // f_max = sum |W_ij|) and doubles until the solutions decouple.
  const double f_max = w.abs_offdiag_sum();
  double rho = std::max(f_max > 0.0 ? f1 / f_max : 0.0, 1e-6);
  const double rho_max = rho * opts.rho_max_factor;

  const double tau = opts.orth_tol >= 0.0 ? opts.orth_tol : 0.05 * n;

  RVector theta = init ? init->phases : init_eigen(w, pair, p).secondary.phases;
  if (theta.size() != n) throw DimensionMismatch("secondary initializer length mismatch");

  const int inner_cap = std::max(50 * n, 200);
  int total_iterations = 0;
  SolveStats last{};
  double achieved = std::numeric_limits<double>::infinity();
  bool reached = false;

  while (rho <= rho_max) {
    CMatrix z_pen = z - rho * (v1 * v1.adjoint());
    const TorusProblem penalized(z_pen);
    const double tol = resolved_tol(opts, z_pen);
    last = prcg_maximize(penalized, theta, tol, inner_cap);
    total_iterations += last.iterations;

    achieved = std::abs(v1.dot(phasors_of(theta)));
    if (achieved < tau) {
      reached = true;
      break;
    }
    rho *= 2.0;
  }
  if (!reached) throw OrthogonalityNotReached(achieved);

  LinkingResult result;
  result.primary = primary;
  result.objective_primary = f1;
  result.secondary = PhaseHistory::from_raw(theta, p);
  result.objective_secondary = unpenalized.objective(phasors_of(theta));
  result.solver = PtSolver::PRCG;
  result.iterations = total_iterations;
  result.converged = last.converged;
  result.gradient_norm = last.gradient_norm;
  return result;
}

}  // namespace phaselink
