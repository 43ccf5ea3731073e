#include "mpgda/subsolver.hpp"

#include <algorithm>
#include <cmath>

namespace mpgda {

namespace {

Matrix soft_threshold(const Matrix &B, double t) {
  return B.unaryExpr([t](double u) {
    if (u > t) {
      return u - t;
    }
    if (u < -t) {
      return u + t;
    }
    return 0.0;
  });
}

// Dual of the Stiefel tangent subproblem
//   min_V <G, V> + mu ||X + V||_1 + (beta/2)||V||^2  s.t.  X^T V + V^T X = 0
// in the symmetric multiplier Lambda. For fixed Lambda the primal minimizer is
//   W = X + V = soft(X - (G - 2 X Lambda)/beta, mu/beta),
// and E(Lambda) = X^T V + V^T X is minus the gradient of the concave dual q.
class StiefelL1Dual {
public:
  StiefelL1Dual(const Matrix &X, const Matrix &G, double beta, double mu)
      : X_(X), G_(G), beta_(beta), mu_(mu) {}

  struct State {
    Matrix lambda;
    Matrix V;
    Matrix E;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
    double q = 0.0;
  };

  State evaluate(const Matrix &lambda) const {
    State s;
    s.lambda = lambda;
    const Matrix C = G_ - 2.0 * X_ * lambda;
    const Matrix B = X_ - C / beta_;
    const double t = mu_ / beta_;
    const Matrix W = soft_threshold(B, t);
    s.mask = B.array().abs() > t;
    s.V = W - X_;
    const Matrix XtV = X_.transpose() * s.V;
    s.E = XtV + XtV.transpose();
    s.q = (C.array() * s.V.array()).sum() + mu_ * W.lpNorm<1>() + 0.5 * beta_ * s.V.squaredNorm();
    return s;
  }

  // Generalized Jacobian of E at the state's mask, applied to symmetric D.
  Matrix jacobian(const State &s, const Matrix &D) const {
    Matrix dW = (2.0 / beta_) * (X_ * D);
    dW = s.mask.select(dW, 0.0);
    const Matrix XtdW = X_.transpose() * dW;
    return XtdW + XtdW.transpose();
  }

  double jacobian_scale() const { return 2.0 / beta_; }

private:
  const Matrix &X_;
  const Matrix &G_;
  double beta_;
  double mu_;
};

struct FactorSolve {
  Matrix V;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// CG on (J + eps I) D = rhs over symmetric matrices with the Frobenius product.
Matrix cg_solve(const StiefelL1Dual &dual, const StiefelL1Dual::State &s, const Matrix &rhs,
                double eps, double rel_tol, int max_iter, int &iters) {
  Matrix D = Matrix::Zero(rhs.rows(), rhs.cols());
  Matrix R = rhs;
  Matrix P = R;
  double rr = R.squaredNorm();
  const double stop = rel_tol * rel_tol * rr;
  for (iters = 0; iters < max_iter && rr > stop; ++iters) {
    const Matrix AP = dual.jacobian(s, P) + eps * P;
    const double pAp = (P.array() * AP.array()).sum();
    if (!(pAp > 0.0)) {
      break;
    }
    const double alpha = rr / pAp;
    D += alpha * P;
    R -= alpha * AP;
    const double rr_new = R.squaredNorm();
    P = R + (rr_new / rr) * P;
    rr = rr_new;
  }
  return D;
}

FactorSolve stiefel_l1_newton(const Matrix &X, const Matrix &G, double beta, double mu,
                              const TangentProxOptions &opts) {
  StiefelL1Dual dual(X, G, beta, mu);
  // Multiplier of the smooth (mu = 0) problem as the starting point.
  auto state = dual.evaluate(0.5 * sym(X.transpose() * G));
  FactorSolve out;
  for (int it = 0; it < opts.max_newton; ++it) {
    const double res = state.E.norm();
    if (res <= opts.tol) {
      out.converged = true;
      break;
    }
    ++out.iterations;
    const double eps = dual.jacobian_scale() * std::min(1e-4, res);
    int cg_iters = 0;
    const Matrix d = sym(cg_solve(dual, state, -state.E, eps, std::min(0.1, res),
                                  opts.max_cg, cg_iters));
    const double slope = -(state.E.array() * d.array()).sum();
    if (!(slope > 0.0)) {
      break;
    }
    auto trial = dual.evaluate(state.lambda + d);
    if (trial.E.norm() <= 0.9 * res) {
      state = std::move(trial);
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      if (trial.q >= state.q + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
      trial = dual.evaluate(state.lambda + step * d);
    }
    if (!accepted) {
      break;
    }
    state = std::move(trial);
  }
  out.residual = state.E.norm();
  out.converged = out.residual <= opts.tol;
  out.V = state.V;
  return out;
}

// ADMM on V = U with U constrained to the tangent space.
FactorSolve stiefel_l1_splitting(const Matrix &X, const Matrix &G, double beta, double mu,
                                 const TangentProxOptions &opts) {
  const double sigma = beta;
  auto proj = [&X](const Matrix &A) { return Matrix(A - X * sym(X.transpose() * A)); };
  Matrix U = proj(-G / beta);
  Matrix Psi = Matrix::Zero(X.rows(), X.cols());
  Matrix V = U;
  FactorSolve out;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_splitting; ++it) {
    const Matrix B = X + (sigma * (U - Psi) - G) / (beta + sigma);
    V = soft_threshold(B, mu / (beta + sigma)) - X;
    const Matrix U_old = U;
    U = proj(V + Psi);
    Psi += V - U;
    const double primal = (V - U).norm();
    const double dual_res = sigma * (U - U_old).norm();
    const double res = std::max(primal, dual_res);
    best = std::min(best, res);
    out.iterations = it + 1;
    if (res <= opts.tol) {
      out.converged = true;
      out.residual = res;
      out.V = U;
      return out;
    }
  }
  out.residual = best;
  out.V = U;
  return out;
}

bool reg_covers_factor(const Regularizer &reg, const Manifold &m, std::size_t k) {
  if (reg.is_zero()) {
    return false;
  }
  if (!reg.offset) {
    return true;
  }
  const Eigen::Index lo = m.offset(k);
  const Eigen::Index hi = lo + m.size(k);
  const Eigen::Index rlo = *reg.offset;
  const Eigen::Index rhi = rlo + reg.length;
  if (rhi <= lo || rlo >= hi) {
    return false;
  }
  if (rlo != lo || rhi != hi) {
    throw UnsupportedCompositionError("regularizer segment must coincide with a manifold factor");
  }
  return true;
}

} // namespace

double tangent_prox_objective(const ManifoldPoint &x, const Vector &grad, double beta,
                              const Regularizer &reg, const Vector &v) {
  return grad.dot(v) + reg_value(reg, x.data + v) + 0.5 * beta * v.squaredNorm();
}

TangentProxResult solve_tangent_prox(const ManifoldPoint &x, const Vector &grad, double beta,
                                     const Regularizer &reg, const TangentProxOptions &opts) {
  if (!(beta > 0.0)) {
    throw ParameterError("solve_tangent_prox: beta must be > 0");
  }
  const Manifold &m = *x.manifold;
  if (grad.size() != m.ambient_dim()) {
    throw DimensionError("solve_tangent_prox: gradient has wrong ambient size");
  }
  TangentProxResult result{TangentVector{x.manifold, x.data, Vector::Zero(m.ambient_dim())}, 0.0,
                           0};
  Vector &v = result.v.data;
  for (std::size_t k = 0; k < m.num_factors(); ++k) {
    const auto [rows, cols] = factor_matrix_shape(m.factor(k));
    const auto X = x.block(k);
    const ConstMatrixMap G(grad.data() + m.offset(k), rows, cols);
    MatrixMap Vk(v.data() + m.offset(k), rows, cols);
    const bool has_l1 = reg_covers_factor(reg, m, k);
    const bool stiefel = std::holds_alternative<Stiefel>(m.factor(k));
    if (!stiefel) {
      if (has_l1) {
        Vk = soft_threshold(X - G / beta, reg.mu / beta) - X;
      } else {
        Vk = -G / beta;
      }
      continue;
    }
    if (!has_l1) {
      Vk = -(G - X * sym(X.transpose() * G)) / beta;
      continue;
    }
    const Matrix Xm = X;
    const Matrix Gm = G;
    FactorSolve fs = stiefel_l1_newton(Xm, Gm, beta, reg.mu, opts);
    int iters = fs.iterations;
    if (!fs.converged) {
      const FactorSolve fallback = stiefel_l1_splitting(Xm, Gm, beta, reg.mu, opts);
      iters += fallback.iterations;
      if (!fallback.converged) {
        throw SubproblemFailure("tangent prox subproblem did not converge",
                                std::min(fs.residual, fallback.residual));
      }
      fs = fallback;
    }
    Vk = fs.V - Xm * sym(Xm.transpose() * fs.V);
    result.kkt_residual = std::max(result.kkt_residual, fs.residual);
    result.inner_iterations += iters;
  }
  return result;
}

Vector ybar_linear(const Vector &A_of_x, const Vector &y_prev, double rho, double gamma,
                   const Regularizer &reg, const FeasibleSet &set) {
  if (!(rho > 0.0) || !(gamma > 0.0)) {
    throw ParameterError("ybar_linear: rho and gamma must be > 0");
  }
  const double s = rho + gamma;
  return prox_g_over_S(reg, set, (rho * y_prev + A_of_x) / s, 1.0 / s);
}

double regularized_y_objective(const MinimaxProblem &problem, const Vector &x,
                               const Vector &y, const Vector &y_prev, double rho,
                               double gamma) {
  return problem.eval_f(x, y) - reg_value(problem.reg_g, y) - 0.5 * gamma * y.squaredNorm() -
         0.5 * rho * (y - y_prev).squaredNorm();
}

ConcaveMaxResult maximize_concave_fista(const MinimaxProblem &problem, const Vector &x,
                                        const Vector &y_prev, double rho, double gamma,
                                        const ConcaveMaxOptions &opts) {
  const double modulus = rho + gamma;
  if (!(modulus > 0.0) || rho < 0.0 || gamma < 0.0) {
    throw ParameterError("maximize_concave_fista: need rho, gamma >= 0 with rho + gamma > 0");
  }
  const FeasibleSet &set = problem.set;
  auto grad = [&](const Vector &y) {
    return Vector(problem.grad_y_f(x, y) - gamma * y - rho * (y - y_prev));
  };

  if (set.kind == FeasibleSet::Kind::Interval && problem.reg_g.is_zero()) {
    Vector y(1);
    auto slope = [&](double t) {
      y[0] = t;
      return grad(y)[0];
    };
    double lo = set.lo;
    double hi = set.hi;
    ConcaveMaxResult out{Vector::Constant(1, lo), 0.0, 0};
    if (slope(lo) <= 0.0) {
      return out;
    }
    if (slope(hi) >= 0.0) {
      out.y[0] = hi;
      return out;
    }
    while (hi - lo > opts.tol && out.inner_iterations < opts.max_iterations) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++out.inner_iterations;
    }
    out.y[0] = 0.5 * (lo + hi);
    out.residual = hi - lo;
    if (out.residual > opts.tol) {
      throw SubproblemFailure("bisection did not reach tolerance", out.residual);
    }
    return out;
  }

  const double L = problem.lipschitz_y + modulus;
  const double step = 1.0 / L;
  auto value = [&](const Vector &y) {
    return regularized_y_objective(problem, x, y, y_prev, rho, gamma);
  };
  Vector y = prox_g_over_S(problem.reg_g, set, y_prev, step);
  Vector z = y;
  double t = 1.0;
  double fy = value(y);
  ConcaveMaxResult out{y, std::numeric_limits<double>::infinity(), 0};
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.inner_iterations = it + 1;
    const Vector y_new = prox_g_over_S(problem.reg_g, set, z + step * grad(z), step);
    const double mapping = (y_new - z).norm() / step;
    const double f_new = value(y_new);
    if (f_new < fy && t > 1.0) {
      // Non-monotone step: restart the momentum from the current iterate.
      z = y;
      t = 1.0;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = y_new + ((t - 1.0) / t_new) * (y_new - y);
    y = y_new;
    fy = f_new;
    t = t_new;
    out.y = y;
    out.residual = mapping;
    if (mapping <= opts.tol) {
      return out;
    }
  }
  throw SubproblemFailure("FISTA did not reach tolerance", out.residual);
}

ConcaveMaxResult compute_ybar(const MinimaxProblem &problem, const Vector &x,
                              const Vector &y_prev, double rho, double gamma,
                              const ConcaveMaxOptions &opts) {
  if (problem.linear_y) {
    return ConcaveMaxResult{
        ybar_linear((*problem.linear_y)(x), y_prev, rho, gamma, problem.reg_g, problem.set), 0.0,
        0};
  }
  return maximize_concave_fista(problem, x, y_prev, rho, gamma, opts);
}

} // namespace mpgda
