#include "mpgda/proxsets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace mpgda {

Regularizer Regularizer::l1(double mu) {
  if (!(mu >= 0.0)) {
    throw ParameterError("L1 weight must be >= 0");
  }
  Regularizer r;
  r.kind = Kind::L1;
  r.mu = mu;
  return r;
}

Regularizer Regularizer::l1_on_factor(double mu, const Manifold &m, std::size_t factor) {
  Regularizer r = l1(mu);
  r.offset = m.offset(factor);
  r.length = m.size(factor);
  return r;
}

double Regularizer::lipschitz(Eigen::Index ambient_dim) const {
  if (is_zero()) {
    return 0.0;
  }
  const Eigen::Index n = offset ? length : ambient_dim;
  return mu * std::sqrt(static_cast<double>(n));
}

namespace {

// Segment of u the regularizer acts on.
std::pair<Eigen::Index, Eigen::Index> reg_range(const Regularizer &reg, const Vector &u) {
  if (!reg.offset) {
    return {0, u.size()};
  }
  if (*reg.offset < 0 || *reg.offset + reg.length > u.size()) {
    throw DimensionError("regularizer segment exceeds array size");
  }
  return {*reg.offset, reg.length};
}

double soft(double u, double t) {
  if (u > t) {
    return u - t;
  }
  if (u < -t) {
    return u + t;
  }
  return 0.0;
}

} // namespace

double reg_value(const Regularizer &reg, const Vector &u) {
  if (reg.is_zero()) {
    return 0.0;
  }
  const auto [off, len] = reg_range(reg, u);
  return reg.mu * u.segment(off, len).lpNorm<1>();
}

FeasibleSet FeasibleSet::simplex(Eigen::Index n) {
  if (n < 1) {
    throw DimensionError("simplex dimension must be >= 1");
  }
  return FeasibleSet{Kind::Simplex, n, 0.0, 1.0};
}

FeasibleSet FeasibleSet::box(double lo, double hi, Eigen::Index dim) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ParameterError("box bounds must be finite with lo <= hi");
  }
  if (dim < 1) {
    throw DimensionError("box dimension must be >= 1");
  }
  return FeasibleSet{Kind::Box, dim, lo, hi};
}

FeasibleSet FeasibleSet::linf_ball(double radius, Eigen::Index dim) {
  if (!(radius >= 0.0)) {
    throw ParameterError("l-infinity radius must be >= 0");
  }
  FeasibleSet s = box(-radius, radius, dim);
  s.kind = Kind::LinfBall;
  return s;
}

FeasibleSet FeasibleSet::interval(double lo, double hi) {
  FeasibleSet s = box(lo, hi, 1);
  s.kind = Kind::Interval;
  return s;
}

double FeasibleSet::sigma() const {
  if (kind == Kind::Simplex) {
    return 1.0;
  }
  const double corner = std::max(std::abs(lo), std::abs(hi));
  return corner * std::sqrt(static_cast<double>(dim));
}

double FeasibleSet::infeasibility(const Vector &y) const {
  if (y.size() != dim) {
    throw DimensionError("point dimension does not match feasible set");
  }
  if (kind == Kind::Simplex) {
    const double neg = std::max(0.0, -y.minCoeff());
    return std::max(neg, std::abs(y.sum() - 1.0));
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    worst = std::max({worst, lo - y[i], y[i] - hi});
  }
  return worst;
}

Vector prox_h(const Regularizer &reg, const Vector &u, double alpha) {
  if (!(alpha > 0.0)) {
    throw ParameterError("prox_h: alpha must be > 0");
  }
  if (reg.is_zero()) {
    return u;
  }
  Vector p = u;
  const auto [off, len] = reg_range(reg, u);
  const double t = alpha * reg.mu;
  for (Eigen::Index i = off; i < off + len; ++i) {
    p[i] = soft(u[i], t);
  }
  return p;
}

Vector project_simplex(const Vector &w) {
  const Eigen::Index n = w.size();
  std::vector<double> sorted(w.data(), w.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += sorted[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) {
      tau = t;
    }
  }
  Vector y = (w.array() - tau).max(0.0);
  // Renormalize the support to kill the last bits of roundoff in the sum.
  const double s = y.sum();
  if (s > 0.0) {
    y /= s;
  }
  return y;
}

Vector prox_g_over_S(const Regularizer &reg, const FeasibleSet &set, const Vector &w,
                     double alpha) {
  if (!(alpha > 0.0)) {
    throw ParameterError("prox_g_over_S: alpha must be > 0");
  }
  if (w.size() != set.dim) {
    throw DimensionError("prox_g_over_S: point dimension does not match feasible set");
  }
  if (set.kind == FeasibleSet::Kind::Simplex) {
    if (!reg.is_zero()) {
      throw UnsupportedCompositionError("L1 penalty over the simplex is not supported");
    }
    return project_simplex(w);
  }
  Vector p = w;
  if (!reg.is_zero()) {
    if (reg.offset) {
      throw UnsupportedCompositionError("segment-restricted g is not supported");
    }
    if (!(set.lo <= 0.0 && 0.0 <= set.hi)) {
      throw UnsupportedCompositionError(
          "L1 penalty composed with a box that excludes 0 is not supported");
    }
    const double t = alpha * reg.mu;
    p = p.unaryExpr([t](double v) { return soft(v, t); });
  }
  return p.cwiseMax(set.lo).cwiseMin(set.hi);
}

namespace {

// dist(g, interval [a, b]) with a <= b possibly infinite.
double dist_to_interval(double g, double a, double b) {
  if (g < a) {
    return a - g;
  }
  if (g > b) {
    return g - b;
  }
  return 0.0;
}

double simplex_normal_distance(const Vector &y, const Vector &grad) {
  // min_c sum_{y_i > 0} (g_i - c)^2 + sum_{y_i = 0} max(g_i - c, 0)^2.
  // Convex and piecewise quadratic in c; breakpoints at the g_i of zero
  // coordinates. The optimal c averages the positive-support gradients with
  // the zero-support gradients that lie above it.
  double pos_sum = 0.0;
  Eigen::Index pos_count = 0;
  std::vector<double> zeros;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] > kActiveSetTol) {
      pos_sum += grad[i];
      ++pos_count;
    } else {
      zeros.push_back(grad[i]);
    }
  }
  if (pos_count == 0) {
    // Only reachable for infeasible input; c -> +inf drives the value to 0.
    return 0.0;
  }
  std::sort(zeros.begin(), zeros.end(), std::greater<>());
  double best = std::numeric_limits<double>::infinity();
  double sum = pos_sum;
  for (std::size_t m = 0; m <= zeros.size(); ++m) {
    if (m > 0) {
      sum += zeros[m - 1];
    }
    const auto count = static_cast<double>(pos_count + static_cast<Eigen::Index>(m));
    if (count == 0.0) {
      continue;
    }
    const double c = sum / count;
    // Consistency: the m included zero-gradients sit above c, the rest below.
    const bool upper_ok = m == 0 || zeros[m - 1] >= c;
    const bool lower_ok = m == zeros.size() || zeros[m] <= c;
    if (!(upper_ok && lower_ok)) {
      continue;
    }
    double val = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double d = grad[i] - c;
      if (y[i] > kActiveSetTol) {
        val += d * d;
      } else if (d > 0.0) {
        val += d * d;
      }
    }
    best = std::min(best, val);
  }
  return std::sqrt(best);
}

} // namespace

double normal_cone_distance(const FeasibleSet &set, const Regularizer &reg, const Vector &y,
                            const Vector &grad) {
  if (y.size() != set.dim || grad.size() != set.dim) {
    throw DimensionError("normal_cone_distance: dimension mismatch");
  }
  if (set.infeasibility(y) > kFeasibilityTol) {
    throw FeasibilityError("normal_cone_distance: y is not in S (violation " +
                           std::to_string(set.infeasibility(y)) + ")");
  }
  if (set.kind == FeasibleSet::Kind::Simplex) {
    if (!reg.is_zero()) {
      throw UnsupportedCompositionError("L1 penalty over the simplex is not supported");
    }
    return simplex_normal_distance(y, grad);
  }
  if (!reg.is_zero() && reg.offset) {
    throw UnsupportedCompositionError("segment-restricted g is not supported");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double w = reg.is_zero() ? 0.0 : reg.mu;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // The set dg_i(y_i) + N_i(y_i) is an interval [a, b].
    double a = 0.0;
    double b = 0.0;
    if (y[i] > kActiveSetTol) {
      a = b = w;
    } else if (y[i] < -kActiveSetTol) {
      a = b = -w;
    } else {
      a = -w;
      b = w;
    }
    const bool at_lo = y[i] <= set.lo + kActiveSetTol;
    const bool at_hi = y[i] >= set.hi - kActiveSetTol;
    if (at_lo && at_hi) {
      a = -inf;
      b = inf;
    } else if (at_hi) {
      b = inf;
    } else if (at_lo) {
      a = -inf;
    }
    const double d = dist_to_interval(grad[i], a, b);
    sq += d * d;
  }
  return std::sqrt(sq);
}

} // namespace mpgda
