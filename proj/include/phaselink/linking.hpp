#pragma once

#include <optional>

#include "phaselink/coherence.hpp"
#include "phaselink/types.hpp"
#include "phaselink/weights.hpp"

namespace phaselink {

enum class PtSolver { PRCG, Jacobi };

struct PtOptions {
  /// Convergence tolerance on the gradient max-norm. Negative selects the
  /// default 1e-8 * sum_{i<j} |W_ij|.
  double tol = -1.0;
  /// Iteration cap. Negative selects the default 500 * N.
  int max_iter = -1;
  /// Orthogonality tolerance for the secondary solution, |<v2,v1>| < orth_tol.
  /// Negative selects the default 0.05 * N.
  double orth_tol = -1.0;
  /// Penalty budget: rho may grow to rho_max_factor * rho0 before the
  /// secondary search gives up.
  double rho_max_factor = 1073741824.0;  // 2^30
};

struct LinkingResult {
  PhaseHistory primary;
  std::optional<PhaseHistory> secondary;
  double objective_primary = 0.0;               // f(1): PT sum or lambda_max
  std::optional<double> objective_secondary;    // f(2), unpenalized for PT
  PtSolver solver = PtSolver::PRCG;
  bool from_eigensolver = false;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  bool degenerate = false;  // ED: top eigenvalue multiplicity > 1 within tol
};

/// W o Phi with the weight matrix's natural diagonal; Hermitian.
CMatrix weighted_phasor_matrix(const WeightMatrix& w, const PhaseMagnitudePair& pair);

/// PT objective f(theta) = sum_{i<j} W_ij cos(phi_ij - (theta_i - theta_j)).
double pt_objective(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                    const PhaseHistory& theta);

/// Analytic gradient, component k: sum_{j != k} W_kj sin(phi_kj - (theta_k - theta_j)).
RVector pt_gradient(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                    const PhaseHistory& theta);

/// Eigendecomposition linking: phases of the top eigenvector of W o Phi,
/// re-referenced to p; objective is lambda_max. With want_secondary, also the
/// second eigenvector and lambda_2. Flags degeneracy when the top eigenvalue
/// gap is below 1e-9 * ||W o Phi||_2.
LinkingResult ed_link(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                      int p, bool want_secondary = false);

struct EigenInit {
  PhaseHistory primary;
  PhaseHistory secondary;
  bool degenerate = false;
};

/// Primary/secondary ED phase histories, the standard initializers for PT.
EigenInit init_eigen(const WeightMatrix& w, const PhaseMagnitudePair& pair, int p);

/// Chain accumulation over temporally adjacent pairs:
/// theta_i = phi_{i,i+1} + theta_{i+1}, re-referenced to p.
PhaseHistory init_tridiagonal(const PhaseMagnitudePair& pair, int p);

/// Accumulation along the maximum-total-coherence spanning tree of the
/// complete acquisition graph (Kruskal; ties broken by lexicographic (i,j)).
PhaseHistory init_spanning_tree(const PhaseMagnitudePair& pair, int p);

/// Phase triangulation: maximize the PT objective over single-reference phase
/// histories, starting from `init`. PRCG (Polak-Ribiere nonlinear CG with
/// backtracking line search) or the simultaneous Jacobi update. Non-converged
/// runs return the best-so-far iterate with converged = false.
LinkingResult pt_link(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                      int p, const PhaseHistory& init,
                      PtSolver solver = PtSolver::PRCG,
                      const PtOptions& opts = {});

/// Secondary phase linking via penalized PRCG: maximizes the PT objective
/// penalized by rho |<v, Lambda(theta1)>|^2, doubling rho from
/// rho0 = F(C, theta1) until |<Lambda(theta2), Lambda(theta1)>| < orth_tol.
/// Returns the primary alongside the secondary history and its unpenalized
/// objective. Throws OrthogonalityNotReached when the rho budget is exhausted.
LinkingResult pt_link_secondary(const WeightMatrix& w, const PhaseMagnitudePair& pair,
                                int p, const PhaseHistory& primary,
                                std::optional<PhaseHistory> init = std::nullopt,
                                const PtOptions& opts = {});

}  // namespace phaselink
