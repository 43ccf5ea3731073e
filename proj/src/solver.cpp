#include "mpgda/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

namespace mpgda {

namespace {

void require(bool ok, const std::string &what) {
  if (!ok) {
    throw ParameterError(what);
  }
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

// With no previous iterate the BB quotient is undefined; use L_x as the
// curvature estimate for the very first step.
double first_bb(const MinimaxProblem &problem, double scale, double l_min, double l_max) {
  const double curv = problem.lipschitz_x > 0.0 ? problem.lipschitz_x : 1.0;
  return std::clamp(scale * curv, l_min, l_max);
}

void check_start(const MinimaxProblem &problem, const ManifoldPoint &x0, const Vector &y0) {
  if (!x0.manifold || !(*x0.manifold == *problem.manifold)) {
    throw DimensionError("x0 does not live on the problem manifold");
  }
  check_point(x0);
  if (y0.size() != problem.set.dim) {
    throw DimensionError("y0 has dimension " + std::to_string(y0.size()) + ", expected " +
                         std::to_string(problem.set.dim));
  }
  if (problem.set.infeasibility(y0) > kFeasibilityTol) {
    throw FeasibilityError("y0 is not in the feasible set");
  }
}

class Clock {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::Converged:
    return "converged";
  case SolveStatus::MaxIterations:
    return "max_iterations";
  case SolveStatus::SubproblemFailure:
    return "subproblem_failure";
  }
  return "unknown";
}

void PASettings::validate() const {
  require(in_open_unit(c1), "pa: c1 must lie in (0,1)");
  require(in_open_unit(eta), "pa: eta must lie in (0,1)");
  require(gamma0 > 0.0, "pa: gamma0 must be positive");
  require(xi0 > 0.0, "pa: xi0 must be positive");
  require(theta > 1.0, "pa: theta must exceed 1");
  require(in_open_unit(tau1), "pa: tau1 must lie in (0,1)");
  require(in_open_unit(tau2), "pa: tau2 must lie in (0,1)");
  require(l_min > 0.0 && l_min < l_max, "pa: need 0 < l_min < l_max");
  require(inner_steps >= 1, "pa: inner_steps must be >= 1");
  require(delta0 > 0.0, "pa: delta0 must be positive");
  require(eps > 0.0, "pa: eps must be positive");
  require(max_outer >= 0, "pa: max_outer must be >= 0");
  require(max_backtracks >= 0, "pa: max_backtracks must be >= 0");
}

double pga_rho_bound(double lipschitz_y, double kappa) {
  return (1.0 - 2.0 * std::pow(kappa + 1.0, -0.25)) / lipschitz_y;
}

void PGASettings::validate(double lipschitz_y) const {
  require(in_open_unit(c1), "pga: c1 must lie in (0,1)");
  require(in_open_unit(eta), "pga: eta must lie in (0,1)");
  require(kappa > 15.0, "pga: kappa must exceed 15");
  require(lipschitz_y > 0.0, "pga: problem L_y must be positive");
  const double bound = pga_rho_bound(lipschitz_y, kappa);
  require(rho > 0.0 && rho <= bound,
          "pga: rho must lie in (0, " + std::to_string(bound) + "]");
  require(l_min > 0.0 && l_min < l_max, "pga: need 0 < l_min < l_max");
  require(eps > 0.0, "pga: eps must be positive");
  require(max_outer >= 0, "pga: max_outer must be >= 0");
  require(max_backtracks >= 0, "pga: max_backtracks must be >= 0");
}

double PGASettings::gamma(int k) const {
  return 2.0 / (rho * std::pow(static_cast<double>(k) + kappa + 2.0, 0.25));
}

double bb_stepsize(const Vector &dX, const Vector &dR, double scale, double l_min,
                   double l_max) {
  const double nx = dX.squaredNorm();
  if (nx == 0.0) {
    return l_max;
  }
  const double l = scale * std::abs(dX.dot(dR)) / nx;
  if (!std::isfinite(l)) {
    return l_max;
  }
  return std::clamp(l, l_min, l_max);
}

std::pair<double, RhoState> rho_schedule_step(const RhoState &state, const Vector &y_k,
                                              const Vector &y_km1, double gamma_km1,
                                              double rho_km1, int k, double theta, double tau1,
                                              double tau2) {
  if (k < 1) {
    throw ParameterError("rho_schedule_step needs k >= 1");
  }
  const double delta = (gamma_km1 * y_k + rho_km1 * (y_k - y_km1)).lpNorm<Eigen::Infinity>();
  RhoState next{state.xi, delta};
  if (delta >= tau1 * state.delta) {
    next.xi = tau2 * state.xi;
  }
  return {next.xi / std::pow(static_cast<double>(k), theta), next};
}

double pa_gamma(double gamma0, int k) {
  return k == 0 ? gamma0 : gamma0 / std::cbrt(static_cast<double>(k));
}

StationarityReport game_stationarity(const MinimaxProblem &problem, const ManifoldPoint &x,
                                     const Vector &y, double beta,
                                     const TangentProxOptions &opts) {
  if (!(beta > 0.0)) {
    throw ParameterError("game_stationarity: beta must be positive");
  }
  const auto u = solve_tangent_prox(x, problem.grad_x_f(x.data, y), beta, problem.reg_h, opts);
  StationarityReport rep;
  rep.primal = beta * u.v.data.norm();
  rep.dual = normal_cone_distance(problem.set, problem.reg_g, y, problem.grad_y_f(x.data, y));
  rep.value = std::max(rep.primal, rep.dual);
  rep.inner_iterations = u.inner_iterations;
  return rep;
}

// ---------------------------------------------------------------------------
// MPGDA-PA

namespace {

struct PhiEval {
  Vector ybar;
  double Q = 0.0;
  int inner = 0;
};

PhiEval eval_Q(const MinimaxProblem &problem, const Vector &x, const Vector &y_center,
               double rho, double gamma, const ConcaveMaxOptions &opts) {
  auto r = compute_ybar(problem, x, y_center, rho, gamma, opts);
  PhiEval e;
  e.Q = reg_value(problem.reg_h, x) +
        regularized_y_objective(problem, x, r.y, y_center, rho, gamma);
  e.ybar = std::move(r.y);
  e.inner = r.inner_iterations;
  return e;
}

} // namespace

SolveOutcome run_mpgda_pa(const MinimaxProblem &problem, const ManifoldPoint &x0,
                          const Vector &y0, const PASettings &s) {
  s.validate();
  check_start(problem, x0, y0);
  const double sigma = problem.set.sigma();
  const Clock clock;

  SolveOutcome out;
  ManifoldPoint x = x0;
  Vector y = y0;
  Vector y_prev = y0;
  double gamma_prev = 0.0;
  double rho_prev = 0.0;
  RhoState rho_state{s.xi0, s.delta0};
  // BB memory: previous inner iterate and its Riemannian gradient of Phi.
  std::optional<std::pair<Vector, Vector>> bb_prev;

  for (int k = 0;; ++k) {
    const double gamma = pa_gamma(s.gamma0, k);
    double rho = s.xi0;
    if (k >= 1) {
      auto [r, st] = rho_schedule_step(rho_state, y, y_prev, gamma_prev, rho_prev, k, s.theta,
                                       s.tau1, s.tau2);
      rho = r;
      rho_state = st;
    }

    IterateRecord rec;
    rec.k = k;
    rec.objective = problem.objective(x.data, y);
    if (s.snapshots) {
      out.iterates.push_back({x.data, y});
    }

    try {
      ManifoldPoint xi = x;
      PhiEval cur = eval_Q(problem, xi.data, y, rho, gamma, s.ymax);
      rec.inner_iters += cur.inner;
      for (int i = 0; i < s.inner_steps; ++i) {
        const Vector egrad = problem.grad_x_f(xi.data, cur.ybar);
        const Vector rgrad = tangent_project_data(xi, egrad);
        const double l = bb_prev ? bb_stepsize(xi.data - bb_prev->first,
                                               rgrad - bb_prev->second, rho + gamma, s.l_min,
                                               s.l_max)
                                 : first_bb(problem, rho + gamma, s.l_min, s.l_max);
        const double beta = l / (rho + gamma);

        if (i == 0) {
          const auto st = game_stationarity(problem, xi, y, beta, s.prox);
          rec.primal_measure = st.primal;
          rec.dual_measure = st.dual;
          rec.G_beta = st.value;
          rec.beta = beta;
          rec.inner_iters += st.inner_iterations;
          if (rec.G_beta < s.eps) {
            rec.elapsed = clock.seconds();
            out.trace.push_back(rec);
            out.status = SolveStatus::Converged;
            out.x = x;
            out.y = y;
            return out;
          }
          if (k >= s.max_outer) {
            rec.elapsed = clock.seconds();
            out.trace.push_back(rec);
            out.status = SolveStatus::MaxIterations;
            out.x = x;
            out.y = y;
            return out;
          }
        }

        const auto sub = solve_tangent_prox(xi, egrad, beta, problem.reg_h, s.prox);
        rec.inner_iters += sub.inner_iterations;
        const Vector &v = sub.v.data;
        const double vsq = v.squaredNorm();

        double step = 1.0;
        int j = 0;
        ManifoldPoint trial = xi;
        PhiEval next;
        bool accepted = false;
        double rhs = 0.0;
        for (;; ++j, step *= s.eta) {
          trial = retract(xi, Vector(step * v));
          next = eval_Q(problem, trial.data, y, rho, gamma, s.ymax);
          rec.inner_iters += next.inner;
          rhs = cur.Q - s.c1 * step * beta * vsq + 2.0 * rho * sigma * sigma;
          if (next.Q <= rhs) {
            accepted = true;
            break;
          }
          if (j >= s.max_backtracks) {
            break;
          }
        }
        rec.backtracks += j;
        rec.flagged = rec.flagged || !accepted;

        if (s.snapshots) {
          StepRecord sr;
          sr.k = k;
          sr.i = i;
          sr.x_before = xi.data;
          sr.x_after = trial.data;
          sr.y_center = y;
          sr.rho = rho;
          sr.gamma = gamma;
          sr.beta = beta;
          sr.v_norm_sq = vsq;
          sr.j = j;
          sr.lhs = next.Q;
          sr.rhs = rhs;
          sr.flagged = !accepted;
          out.steps.push_back(std::move(sr));
        }

        bb_prev = std::make_pair(xi.data, rgrad);
        xi = std::move(trial);
        cur = std::move(next);
      }

      y_prev = y;
      gamma_prev = gamma;
      rho_prev = rho;
      x = std::move(xi);
      y = std::move(cur.ybar);
    } catch (const SubproblemFailure &e) {
      rec.elapsed = clock.seconds();
      out.trace.push_back(rec);
      out.status = SolveStatus::SubproblemFailure;
      out.message = e.what();
      out.x = x;
      out.y = y;
      return out;
    }
    rec.elapsed = clock.seconds();
    out.trace.push_back(rec);
  }
}

// ---------------------------------------------------------------------------
// MPGDA-PGA

double pga_merit(const MinimaxProblem &problem, const PGASettings &s, int k, const Vector &x,
                 const Vector &y, const Vector &y_km1) {
  const double g_km1 = s.gamma(k - 1);
  const double g_k = s.gamma(k);
  const double sigma = problem.set.sigma();
  const double dy = (y - y_km1).squaredNorm();
  const double yy = y.squaredNorm();
  const double F = problem.objective(x, y) - 0.5 * g_km1 * yy;
  const double H = (4.0 / (s.rho * s.rho * g_k) - 4.0 / s.rho) * dy +
                   (4.0 / s.rho) * (1.0 - g_km1 / g_k) * yy;
  return F + dy / (2.0 * s.rho) + (4.0 / s.rho * g_km1 / g_k + 0.5 * g_km1) * sigma * sigma + H;
}

Vector pga_yhat(const MinimaxProblem &problem, const PGASettings &s, int k, const Vector &x,
                const Vector &y_k) {
  const Vector w = y_k + s.rho * (problem.grad_y_f(x, y_k) - s.gamma(k) * y_k);
  return prox_g_over_S(problem.reg_g, problem.set, w, s.rho);
}

SolveOutcome run_mpgda_pga(const MinimaxProblem &problem, const ManifoldPoint &x0,
                           const Vector &y_init, const PGASettings &s) {
  s.validate(problem.lipschitz_y);
  check_start(problem, x0, y_init);
  const Clock clock;

  SolveOutcome out;
  ManifoldPoint x = x0;
  Vector y_prev = y_init;
  Vector y = pga_yhat(problem, s, -1, x.data, y_init);
  std::optional<std::pair<Vector, Vector>> bb_prev;

  for (int k = 0;; ++k) {
    const double gamma = s.gamma(k);
    IterateRecord rec;
    rec.k = k;
    rec.objective = problem.objective(x.data, y);
    if (s.snapshots) {
      out.iterates.push_back({x.data, y});
    }
    try {
      const Vector egrad = problem.grad_x_f(x.data, y);
      const Vector rgrad = tangent_project_data(x, egrad);
      const double l = bb_prev ? bb_stepsize(x.data - bb_prev->first, rgrad - bb_prev->second,
                                             gamma * gamma, s.l_min, s.l_max)
                               : first_bb(problem, gamma * gamma, s.l_min, s.l_max);
      const double beta = l / (gamma * gamma);

      const auto sub = solve_tangent_prox(x, egrad, beta, problem.reg_h, s.prox);
      rec.inner_iters += sub.inner_iterations;
      const Vector &v = sub.v.data;
      const double vsq = v.squaredNorm();
      rec.primal_measure = beta * std::sqrt(vsq);
      rec.dual_measure =
          normal_cone_distance(problem.set, problem.reg_g, y, problem.grad_y_f(x.data, y));
      rec.G_beta = std::max(rec.primal_measure, rec.dual_measure);
      rec.beta = beta;
      if (rec.G_beta < s.eps || k >= s.max_outer) {
        rec.elapsed = clock.seconds();
        out.trace.push_back(rec);
        out.status = rec.G_beta < s.eps ? SolveStatus::Converged : SolveStatus::MaxIterations;
        out.x = x;
        out.y = y;
        return out;
      }

      const double merit = pga_merit(problem, s, k, x.data, y, y_prev);
      double step = 1.0;
      int j = 0;
      ManifoldPoint trial = x;
      Vector yhat;
      double lhs = 0.0;
      double rhs = 0.0;
      bool accepted = false;
      for (;; ++j, step *= s.eta) {
        trial = retract(x, Vector(step * v));
        yhat = pga_yhat(problem, s, k, trial.data, y);
        lhs = pga_merit(problem, s, k + 1, trial.data, yhat, y);
        rhs = merit - s.c1 * step * beta * vsq - (yhat - y).squaredNorm() / (10.0 * s.rho);
        if (lhs <= rhs) {
          accepted = true;
          break;
        }
        if (j >= s.max_backtracks) {
          break;
        }
      }
      rec.backtracks = j;
      rec.flagged = !accepted;

      if (s.snapshots) {
        StepRecord sr;
        sr.k = k;
        sr.x_before = x.data;
        sr.x_after = trial.data;
        sr.y_center = y;
        sr.y_prev = y_prev;
        sr.y_after = yhat;
        sr.rho = s.rho;
        sr.gamma = gamma;
        sr.beta = beta;
        sr.v_norm_sq = vsq;
        sr.j = j;
        sr.lhs = lhs;
        sr.rhs = rhs;
        sr.flagged = !accepted;
        out.steps.push_back(std::move(sr));
      }

      bb_prev = std::make_pair(x.data, rgrad);
      x = std::move(trial);
      y_prev = std::move(y);
      y = std::move(yhat);
    } catch (const SubproblemFailure &e) {
      rec.elapsed = clock.seconds();
      out.trace.push_back(rec);
      out.status = SolveStatus::SubproblemFailure;
      out.message = e.what();
      out.x = x;
      out.y = y;
      return out;
    }
    rec.elapsed = clock.seconds();
    out.trace.push_back(rec);
  }
}

} // namespace mpgda
