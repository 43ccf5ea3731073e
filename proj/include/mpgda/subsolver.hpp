#pragma once

#include "mpgda/manifold.hpp"
#include "mpgda/problem.hpp"
#include "mpgda/proxsets.hpp"

namespace mpgda {

struct TangentProxOptions {
  double tol = 1e-10;
  int max_newton = 50;
  int max_cg = 100;
  int max_splitting = 5000;
};

struct TangentProxResult {
  TangentVector v;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
};

/// argmin_{v in T_x M} <grad, v> + h(x + v) + (beta/2)||v||^2.
///
/// Per factor: closed form on Euclidean factors, projected gradient on Stiefel
/// factors where h vanishes, and a semismooth Newton method on the dual
/// multiplier (with an ADMM fallback) on Stiefel factors carrying an L1 term.
TangentProxResult solve_tangent_prox(const ManifoldPoint &x, const Vector &grad, double beta,
                                     const Regularizer &reg,
                                     const TangentProxOptions &opts = {});

/// Objective of the tangent subproblem at v.
double tangent_prox_objective(const ManifoldPoint &x, const Vector &grad, double beta,
                              const Regularizer &reg, const Vector &v);

/// Closed-form ybar when f(x, y) = <A(x), y>.
Vector ybar_linear(const Vector &A_of_x, const Vector &y_prev, double rho, double gamma,
                   const Regularizer &reg, const FeasibleSet &set);

struct ConcaveMaxOptions {
  double tol = 1e-10;
  int max_iterations = 2000;
};

struct ConcaveMaxResult {
  Vector y;
  double residual = 0.0;
  int inner_iterations = 0;
};

/// argmax_{y in S} f(x, y) - g(y) - (gamma/2)||y||^2 - (rho/2)||y - y_prev||^2.
/// Derivative bisection on 1-D intervals, FISTA with restart otherwise.
ConcaveMaxResult maximize_concave_fista(const MinimaxProblem &problem, const Vector &x,
                                        const Vector &y_prev, double rho, double gamma,
                                        const ConcaveMaxOptions &opts = {});

/// Dispatches to ybar_linear when the problem is linear in y.
ConcaveMaxResult compute_ybar(const MinimaxProblem &problem, const Vector &x,
                              const Vector &y_prev, double rho, double gamma,
                              const ConcaveMaxOptions &opts = {});

/// The maximized objective f(x, y) - g(y) - (gamma/2)||y||^2 - (rho/2)||y - y_prev||^2.
double regularized_y_objective(const MinimaxProblem &problem, const Vector &x,
                               const Vector &y, const Vector &y_prev, double rho,
                               double gamma);

} // namespace mpgda
