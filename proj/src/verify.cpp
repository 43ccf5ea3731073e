#include "mpgda/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mpgda {

FDReport fd_gradient_check(const std::function<double(const Vector &)> &fn,
                           const std::function<Vector(const Vector &)> &grad_fn,
                           const Vector &point, int n_samples, double step, std::uint64_t seed) {
  if (!(step > 0.0)) {
    throw ParameterError("fd_gradient_check: step must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Vector g = grad_fn(point);
  const double f0 = fn(point);
  FDReport rep;
  rep.worst_direction = Vector::Zero(point.size());
  for (int s = 0; s < n_samples; ++s) {
    Vector dir(point.size());
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      dir[i] = normal(rng);
    }
    dir.normalize();
    const double fd = (fn(point + step * dir) - fn(point - step * dir)) / (2.0 * step);
    const double gd = g.dot(dir);
    const double denom = std::max({std::abs(fd), std::abs(gd), 1e-6 * (1.0 + std::abs(f0))});
    const double err = std::abs(fd - gd) / denom;
    if (s == 0 || err > rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.worst_direction = dir;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Scalar-loop objectives

double oracle_analytic_f(const Vector &x, const Vector &y) {
  const double x1 = x[0];
  const double t = y[0];
  return -0.01 * x1 * x1 * x1 * t - t * std::log(t);
}

double oracle_fspca_f(const std::vector<Matrix> &groups, int r, const Vector &x, const Vector &y) {
  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Matrix &A = groups[g];
    const Eigen::Index d = A.cols();
    double fro = 0.0;
    for (Eigen::Index s = 0; s < A.rows(); ++s) {
      for (int c = 0; c < r; ++c) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
          acc += A(s, j) * x[c * d + j];
        }
        fro += acc * acc;
      }
    }
    total -= y[static_cast<Eigen::Index>(g)] * fro;
  }
  return total;
}

double oracle_ssc_f(const Matrix &W, int p, const Vector &x, const Vector &y) {
  const Eigen::Index N = W.rows();
  std::vector<double> deg(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      deg[static_cast<std::size_t>(i)] += W(i, j);
    }
  }
  const double *X = x.data();
  const double *Z = x.data() + N * p;
  double total = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = 0; i < N; ++i) {
      double pij = 0.0;
      for (int c = 0; c < p; ++c) {
        pij += X[c * N + i] * X[c * N + j];
      }
      const double lij = (i == j ? 1.0 : 0.0) -
                         W(i, j) / std::sqrt(deg[static_cast<std::size_t>(i)] *
                                             deg[static_cast<std::size_t>(j)]);
      total += lij * pij + y[j * N + i] * (pij - Z[j * N + i]);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Grid maximization

GridMax brute_force_y_max(const MinimaxProblem &problem, const Vector &x, int cells) {
  const FeasibleSet &S = problem.set;
  if (S.dim > 3) {
    throw UnsupportedCompositionError("brute_force_y_max: dim(S) must be <= 3");
  }
  const auto n = static_cast<int>(S.dim);
  if (cells <= 0) {
    cells = n == 1 ? 10000 : (n == 2 ? 200 : 60);
  }
  GridMax best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector &y) {
    const double v = problem.eval_f(x, y) - reg_value(problem.reg_g, y);
    if (v > best.value) {
      best.value = v;
      best.y = y;
    }
  };
  const double h = 1.0 / cells;
  if (S.kind == FeasibleSet::Kind::Simplex) {
    Vector y(n);
    if (n == 1) {
      y[0] = 1.0;
      consider(y);
    } else if (n == 2) {
      for (int i = 0; i <= cells; ++i) {
        y << i * h, 1.0 - i * h;
        consider(y);
      }
    } else {
      for (int i = 0; i <= cells; ++i) {
        for (int j = 0; i + j <= cells; ++j) {
          y << i * h, j * h, 1.0 - (i + j) * h;
          consider(y);
        }
      }
    }
    return best;
  }
  const double lo = S.lo;
  const double w = S.hi - S.lo;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector y(n);
  while (true) {
    for (int k = 0; k < n; ++k) {
      y[k] = lo + w * idx[static_cast<std::size_t>(k)] * h;
    }
    consider(y);
    int k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] > cells) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == n) {
      break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Tangent prox oracles

namespace {

double prox_objective(const Vector &x, const Vector &g, double beta, double mu, const Vector &v) {
  return g.dot(v) + mu * (x + v).lpNorm<1>() + 0.5 * beta * v.squaredNorm();
}

} // namespace

Vector tangent_prox_enumerate(const Matrix &X, const Matrix &G, double beta, double mu) {
  const Eigen::Index d = X.rows();
  const Eigen::Index r = X.cols();
  const Eigen::Index n = d * r;
  const Vector x = Eigen::Map<const Vector>(X.data(), n);
  const Vector g = Eigen::Map<const Vector>(G.data(), n);

  // Rows of X^T V + V^T X = 0, one per pair a <= b.
  std::vector<Vector> tangent_rows;
  for (Eigen::Index a = 0; a < r; ++a) {
    for (Eigen::Index b = a; b < r; ++b) {
      Vector row = Vector::Zero(n);
      for (Eigen::Index i = 0; i < d; ++i) {
        row[b * d + i] += X(i, a);
        row[a * d + i] += X(i, b);
      }
      tangent_rows.push_back(row);
    }
  }

  Vector best_v = Vector::Zero(n);
  double best = prox_objective(x, g, beta, mu, best_v);
  std::vector<int> sign(static_cast<std::size_t>(n), -1);
  while (true) {
    std::vector<Eigen::Index> zeros;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (sign[static_cast<std::size_t>(i)] == 0) {
        zeros.push_back(i);
      }
    }
    const auto m = static_cast<Eigen::Index>(tangent_rows.size() + zeros.size());
    Matrix A = Matrix::Zero(m, n);
    Vector b = Vector::Zero(m);
    Eigen::Index row = 0;
    for (const auto &t : tangent_rows) {
      A.row(row++) = t.transpose();
    }
    for (auto i : zeros) {
      A(row, i) = 1.0;
      b[row++] = -x[i];
    }
    const Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector v0 = svd.solve(b);
    if ((A * v0 - b).norm() <= 1e-9 * (1.0 + b.norm())) {
      const Eigen::Index rank = svd.rank();
      const Matrix Nb = svd.matrixV().rightCols(n - rank);
      Vector c = g;
      for (Eigen::Index i = 0; i < n; ++i) {
        c[i] += mu * sign[static_cast<std::size_t>(i)];
      }
      const Vector v = v0 - Nb * (Nb.transpose() * (beta * v0 + c)) / beta;
      const double val = prox_objective(x, g, beta, mu, v);
      if (val < best) {
        best = val;
        best_v = v;
      }
    }
    Eigen::Index k = 0;
    while (k < n && ++sign[static_cast<std::size_t>(k)] > 1) {
      sign[static_cast<std::size_t>(k)] = -1;
      ++k;
    }
    if (k == n) {
      break;
    }
  }
  return best_v;
}

Vector tangent_prox_line_search(const Vector &x, const Vector &g, double beta, double mu) {
  if (x.size() != 2) {
    throw DimensionError("tangent_prox_line_search needs a point of St(2,1)");
  }
  const Eigen::Vector2d t(-x[1], x[0]);
  auto phi = [&](double s) { return prox_objective(x, g, beta, mu, s * Vector(t)); };
  const double R = (std::abs(g.dot(t)) + mu * std::sqrt(2.0)) / beta + 1e-12;
  const int cells = 4000;
  const double h = 2.0 * R / cells;
  double s_best = 0.0;
  double v_best = phi(0.0);
  for (int i = 0; i <= cells; ++i) {
    const double s = -R + i * h;
    const double v = phi(s);
    if (v < v_best) {
      v_best = v;
      s_best = s;
    }
  }
  double a = s_best - h;
  double b = s_best + h;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (phi(m1) <= phi(m2)) {
      b = m2;
    } else {
      a = m1;
    }
  }
  const double s = 0.5 * (a + b);
  return (phi(s) <= v_best ? s : s_best) * Vector(t);
}

// ---------------------------------------------------------------------------
// Prox-set oracles

Vector simplex_projection_enumerate(const Vector &w) {
  const auto n = static_cast<int>(w.size());
  if (n < 1 || n > 20) {
    throw DimensionError("simplex_projection_enumerate: need 1 <= n <= 20");
  }
  Vector best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += w[i];
        ++cnt;
      }
    }
    const double shift = (sum - 1.0) / cnt;
    Vector y = Vector::Zero(n);
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        y[i] = w[i] - shift;
        ok = ok && y[i] >= -1e-15;
      }
    }
    if (!ok) {
      continue;
    }
    const double dist = (y - w).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = y.cwiseMax(0.0);
    }
  }
  return best;
}

double normal_cone_distance_enumerate(const FeasibleSet &set, const Regularizer &reg,
                                      const Vector &y, const Vector &grad) {
  const Eigen::Index n = y.size();
  if (set.kind == FeasibleSet::Kind::Simplex) {
    if (!reg.is_zero()) {
      throw UnsupportedCompositionError("simplex oracle supports g = 0 only");
    }
    if (n > 20) {
      throw DimensionError("normal_cone_distance_enumerate: simplex dimension too large");
    }
    std::vector<Eigen::Index> pos;
    std::vector<Eigen::Index> zero;
    for (Eigen::Index i = 0; i < n; ++i) {
      (y[i] > kActiveSetTol ? pos : zero).push_back(i);
    }
    auto phi = [&](double c) {
      double s = 0.0;
      for (auto i : pos) {
        s += (grad[i] - c) * (grad[i] - c);
      }
      for (auto i : zero) {
        const double e = std::max(grad[i] - c, 0.0);
        s += e * e;
      }
      return s;
    };
    double best = std::numeric_limits<double>::infinity();
    const auto nz = static_cast<unsigned>(zero.size());
    for (unsigned mask = 0; mask < (1u << nz); ++mask) {
      double sum = 0.0;
      int cnt = 0;
      for (auto i : pos) {
        sum += grad[i];
        ++cnt;
      }
      for (unsigned b = 0; b < nz; ++b) {
        if (mask & (1u << b)) {
          sum += grad[zero[b]];
          ++cnt;
        }
      }
      if (cnt == 0) {
        best = std::min(best, phi(grad.maxCoeff()));
        continue;
      }
      best = std::min(best, phi(sum / cnt));
    }
    return std::sqrt(best);
  }

  constexpr double kBig = 1e300;
  const Eigen::Index seg_lo = reg.offset.value_or(0);
  const Eigen::Index seg_hi = reg.offset ? seg_lo + reg.length : n;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s_lo = 0.0;
    double s_hi = 0.0;
    if (!reg.is_zero() && i >= seg_lo && i < seg_hi) {
      if (y[i] > kActiveSetTol) {
        s_lo = s_hi = reg.mu;
      } else if (y[i] < -kActiveSetTol) {
        s_lo = s_hi = -reg.mu;
      } else {
        s_lo = -reg.mu;
        s_hi = reg.mu;
      }
    }
    double n_lo = 0.0;
    double n_hi = 0.0;
    if (y[i] <= set.lo + kActiveSetTol) {
      n_lo = -kBig;
    }
    if (y[i] >= set.hi - kActiveSetTol) {
      n_hi = kBig;
    }
    double a = kBig;
    double b = -kBig;
    for (double s : {s_lo, s_hi}) {
      for (double m : {n_lo, n_hi}) {
        a = std::min(a, s + m);
        b = std::max(b, s + m);
      }
    }
    const double gi = grad[i];
    const double e = gi < a ? a - gi : (gi > b ? gi - b : 0.0);
    total += e * e;
  }
  return std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Ledger replay

namespace {

void require_snapshots(const SolveOutcome &outcome) {
  if (outcome.iterates.empty()) {
    throw InsufficientDataError("trace has no iterate snapshots; rerun with snapshots enabled");
  }
  if (outcome.steps.size() + 1 < outcome.iterates.size()) {
    throw InsufficientDataError("trace has fewer step records than outer iterations");
  }
}

void record(LedgerReport &rep, double violation, double slack) {
  const bool ok = violation <= slack;
  rep.passed.push_back(ok);
  rep.failures += ok ? 0 : 1;
  rep.worst_violation = std::max(rep.worst_violation, violation);
}

} // namespace

LedgerReport replay_descent_ledger(const SolveOutcome &outcome, const MinimaxProblem &problem,
                                   const PASettings &settings, double slack) {
  require_snapshots(outcome);
  const double sigma = problem.set.sigma();
  LedgerReport rep;
  for (const auto &st : outcome.steps) {
    auto Q = [&](const Vector &x) {
      const Vector yb = compute_ybar(problem, x, st.y_center, st.rho, st.gamma, settings.ymax).y;
      return reg_value(problem.reg_h, x) + problem.eval_f(x, yb) - reg_value(problem.reg_g, yb) -
             0.5 * st.gamma * yb.squaredNorm() - 0.5 * st.rho * (yb - st.y_center).squaredNorm();
    };
    const double rhs = Q(st.x_before) - settings.c1 * std::pow(settings.eta, st.j) * st.beta *
                                            st.v_norm_sq +
                       2.0 * st.rho * sigma * sigma;
    record(rep, Q(st.x_after) - rhs, slack);
  }
  return rep;
}

LedgerReport replay_descent_ledger(const SolveOutcome &outcome, const MinimaxProblem &problem,
                                   const PGASettings &settings, double slack) {
  require_snapshots(outcome);
  const double rho = settings.rho;
  const double sigma = problem.set.sigma();
  auto merit = [&](int k, const Vector &x, const Vector &y, const Vector &y_prev) {
    const double gp = settings.gamma(k - 1);
    const double gk = settings.gamma(k);
    const double dy = (y - y_prev).squaredNorm();
    const double yy = y.squaredNorm();
    return problem.eval_f(x, y) + reg_value(problem.reg_h, x) - reg_value(problem.reg_g, y) -
           0.5 * gp * yy + dy / (2.0 * rho) + (4.0 * gp / (rho * gk) + 0.5 * gp) * sigma * sigma +
           (4.0 / (rho * rho * gk) - 4.0 / rho) * dy + 4.0 / rho * (1.0 - gp / gk) * yy;
  };
  LedgerReport rep;
  for (const auto &st : outcome.steps) {
    const double lhs = merit(st.k + 1, st.x_after, st.y_after, st.y_center);
    const double rhs = merit(st.k, st.x_before, st.y_center, st.y_prev) -
                       settings.c1 * std::pow(settings.eta, st.j) * st.beta * st.v_norm_sq -
                       (st.y_after - st.y_center).squaredNorm() / (10.0 * rho);
    record(rep, lhs - rhs, slack);
  }
  return rep;
}

} // namespace mpgda
