#pragma once

#include "mpgda/problem.hpp"
#include "mpgda/subsolver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mpgda {

struct PASettings {
  double c1 = 1e-4;
  double eta = 0.1;
  double gamma0 = 1e-2;
  double xi0 = 1.0;
  double theta = 1.5;
  double tau1 = 0.999;
  double tau2 = 0.9;
  double l_min = 1e-16;
  double l_max = 1e16;
  int inner_steps = 1;
  double delta0 = 1e10;
  double eps = 1e-6;
  int max_outer = 1000;
  int max_backtracks = 50;
  bool snapshots = false;
  TangentProxOptions prox;
  ConcaveMaxOptions ymax;

  /// Throws ParameterError on the first out-of-range field.
  void validate() const;
};

struct PGASettings {
  double c1 = 1e-4;
  double eta = 0.5;
  double kappa = 1e16;
  double rho = 0.2;
  double l_min = 1e-16;
  double l_max = 1e8;
  double eps = 1e-6;
  int max_outer = 10000;
  int max_backtracks = 50;
  bool snapshots = false;
  TangentProxOptions prox;

  /// Needs L_y to check 0 < rho <= (1 - 2(kappa+1)^{-1/4}) / L_y.
  void validate(double lipschitz_y) const;
  double gamma(int k) const;
};

/// Largest admissible PGA rho for a given L_y and kappa.
double pga_rho_bound(double lipschitz_y, double kappa);

struct IterateRecord {
  int k = 0;
  double objective = 0.0;
  double primal_measure = 0.0;
  double dual_measure = 0.0;
  double G_beta = 0.0;
  double beta = 0.0;
  int backtracks = 0;
  int inner_iters = 0;
  double elapsed = 0.0;
  bool flagged = false;
};

/// One accepted line-search step, enough to re-check the descent inequality.
struct StepRecord {
  int k = 0;
  int i = 0;
  Vector x_before;
  Vector x_after;
  // PA: the center y_k of Q_k. PGA: y_k.
  Vector y_center;
  // PGA only: y_{k-1} and y_{k+1}.
  Vector y_prev;
  Vector y_after;
  double rho = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double v_norm_sq = 0.0;
  int j = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool flagged = false;
};

struct IterateSnapshot {
  Vector x;
  Vector y;
};

enum class SolveStatus { Converged, MaxIterations, SubproblemFailure };

std::string to_string(SolveStatus s);

struct SolveOutcome {
  ManifoldPoint x;
  Vector y;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  std::vector<IterateRecord> trace;
  // Filled only when snapshots are enabled; iterates[k] is (x_k, y_k).
  std::vector<IterateSnapshot> iterates;
  std::vector<StepRecord> steps;
};

/// l = clamp(scale |<dX, dR>| / ||dX||^2, l_min, l_max); l_max when dX = 0.
double bb_stepsize(const Vector &dX, const Vector &dR, double scale, double l_min, double l_max);

struct RhoState {
  double xi = 1.0;
  double delta = 1e10;
};

/// Adaptive proximal weight: xi shrinks by tau2 when delta_k >= tau1 delta_{k-1},
/// then rho_k = xi_k / k^theta.
std::pair<double, RhoState> rho_schedule_step(const RhoState &state, const Vector &y_k,
                                              const Vector &y_km1, double gamma_km1,
                                              double rho_km1, int k, double theta, double tau1,
                                              double tau2);

/// gamma_k of the PA schedule: gamma0 at k = 0, gamma0 / k^{1/3} afterwards.
double pa_gamma(double gamma0, int k);

struct StationarityReport {
  double primal = 0.0;
  double dual = 0.0;
  double value = 0.0;
  int inner_iterations = 0;
};

/// max(||beta u||, dist(0, grad_y f - dg(y) - N_S(y))) with u the tangent prox
/// step at grad_x f(x, y).
StationarityReport game_stationarity(const MinimaxProblem &problem, const ManifoldPoint &x,
                                     const Vector &y, double beta,
                                     const TangentProxOptions &opts = {});

/// PGA merit: F_k + ||y - y_{k-1}||^2 / (2 rho) + sigma terms + H_k(y).
double pga_merit(const MinimaxProblem &problem, const PGASettings &s, int k, const Vector &x,
                 const Vector &y, const Vector &y_km1);

/// prox_{rho g + S}(y_k + rho (grad_y f(x, y_k) - gamma_k y_k)).
Vector pga_yhat(const MinimaxProblem &problem, const PGASettings &s, int k, const Vector &x,
                const Vector &y_k);

SolveOutcome run_mpgda_pa(const MinimaxProblem &problem, const ManifoldPoint &x0,
                          const Vector &y0, const PASettings &settings);

SolveOutcome run_mpgda_pga(const MinimaxProblem &problem, const ManifoldPoint &x0,
                           const Vector &y_init, const PGASettings &settings);

} // namespace mpgda
