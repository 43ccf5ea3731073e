#pragma once

#include "mpgda/problem.hpp"
#include "mpgda/solver.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mpgda {

struct FDReport {
  double max_rel_error = 0.0;
  Vector worst_direction;
};

/// Central differences of fn along n_samples random unit directions, compared
/// with <grad_fn(point), dir>.
FDReport fd_gradient_check(const std::function<double(const Vector &)> &fn,
                           const std::function<Vector(const Vector &)> &grad_fn,
                           const Vector &point, int n_samples, double step = 1e-5,
                           std::uint64_t seed = 0);

/// Scalar-loop reimplementations of f for the three problem families.
double oracle_analytic_f(const Vector &x, const Vector &y);
double oracle_fspca_f(const std::vector<Matrix> &groups, int r, const Vector &x, const Vector &y);
double oracle_ssc_f(const Matrix &W, int p, const Vector &x, const Vector &y);

struct GridMax {
  Vector y;
  double value = 0.0;
};

/// Grid maximization of f(x, .) - g over S for dim(S) <= 3. cells = 0 picks
/// 1e4 cells per axis in 1-D, 200 in 2-D and 60 in 3-D.
GridMax brute_force_y_max(const MinimaxProblem &problem, const Vector &x, int cells = 0);

/// Exact tangent prox on a single Stiefel factor with an L1 term, by
/// enumerating sign patterns {-1, 0, +1}^{d r} and solving the equality
/// constrained QP of each face. Practical for d r <= 8.
Vector tangent_prox_enumerate(const Matrix &X, const Matrix &G, double beta, double mu);

/// Stiefel(2,1) tangent prox by a grid over the tangent line refined by
/// ternary search.
Vector tangent_prox_line_search(const Vector &x, const Vector &g, double beta, double mu);

/// Simplex projection by enumerating supports.
Vector simplex_projection_enumerate(const Vector &w);

/// dist(0, grad - dg(y) - N_S(y)) by support enumeration (simplex) or interval
/// end-point enumeration (coordinatewise sets).
double normal_cone_distance_enumerate(const FeasibleSet &set, const Regularizer &reg,
                                      const Vector &y, const Vector &grad);

struct LedgerReport {
  std::vector<bool> passed;
  int failures = 0;
  double worst_violation = 0.0;
  bool ok() const { return failures == 0; }
};

inline constexpr double kLedgerSlack = 1e-9;

/// Re-evaluates Q_k at both ends of every accepted PA step and checks
/// Q_k(x+) <= Q_k(x) - c1 eta^j beta ||v||^2 + 2 rho_k sigma^2.
LedgerReport replay_descent_ledger(const SolveOutcome &outcome, const MinimaxProblem &problem,
                                   const PASettings &settings, double slack = kLedgerSlack);

/// Re-evaluates the PGA merit on every accepted step and checks
/// M_{k+1}(x+, y+) <= M_k(x, y) - c1 eta^j beta ||v||^2 - ||y+ - y||^2 / (10 rho).
LedgerReport replay_descent_ledger(const SolveOutcome &outcome, const MinimaxProblem &problem,
                                   const PGASettings &settings, double slack = kLedgerSlack);

} // namespace mpgda
