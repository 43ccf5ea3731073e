#pragma once

#include "mpgda/common.hpp"
#include "mpgda/manifold.hpp"

#include <optional>

namespace mpgda {

/// Convex penalty: zero, or mu*||.||_1 on a contiguous segment of the ambient
/// buffer (a manifold factor) or on the whole buffer.
struct Regularizer {
  enum class Kind { Zero, L1 };

  Kind kind = Kind::Zero;
  double mu = 0.0;
  // Segment the penalty acts on; nullopt means the whole array.
  std::optional<Eigen::Index> offset;
  Eigen::Index length = 0;

  static Regularizer zero() { return {}; }
  static Regularizer l1(double mu);
  static Regularizer l1_on_factor(double mu, const Manifold &m, std::size_t factor);

  bool is_zero() const { return kind == Kind::Zero || mu == 0.0; }
  /// Lipschitz constant mu * sqrt(n) for an n-dimensional segment.
  double lipschitz(Eigen::Index ambient_dim) const;
};

/// Value of the penalty at u.
double reg_value(const Regularizer &reg, const Vector &u);

struct FeasibleSet {
  enum class Kind { Simplex, Box, LinfBall, Interval };

  Kind kind = Kind::Interval;
  Eigen::Index dim = 1;
  double lo = 0.0;
  double hi = 0.0;

  static FeasibleSet simplex(Eigen::Index n);
  static FeasibleSet box(double lo, double hi, Eigen::Index dim);
  static FeasibleSet linf_ball(double radius, Eigen::Index dim);
  static FeasibleSet interval(double lo, double hi);

  bool is_coordinatewise() const { return kind != Kind::Simplex; }
  /// sup_{y in S} ||y||, closed form per kind.
  double sigma() const;
  /// Euclidean distance-like infeasibility (max violation, entrywise).
  double infeasibility(const Vector &y) const;
};

inline constexpr double kActiveSetTol = 1e-10;
inline constexpr double kFeasibilityTol = 1e-8;

/// argmin_x reg(x) + ||x - u||^2 / (2 alpha).
Vector prox_h(const Regularizer &reg, const Vector &u, double alpha);

/// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector &w);

/// argmin_{y in S} g(y) + ||y - w||^2 / (2 alpha). Supported pairs: Zero with
/// any set, L1 with LinfBall (or a Box/Interval containing 0).
Vector prox_g_over_S(const Regularizer &reg, const FeasibleSet &set, const Vector &w,
                     double alpha);

/// dist(0, grad - dg(y) - N_y S).
double normal_cone_distance(const FeasibleSet &set, const Regularizer &reg, const Vector &y,
                            const Vector &grad);

} // namespace mpgda
