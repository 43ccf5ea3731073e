#pragma once

#include "mpgda/manifold.hpp"
#include "mpgda/proxsets.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace mpgda {

/// min_{x in M} max_{y in S} f(x, y) + h(x) - g(y), with f concave in y.
/// x is passed as its flat ambient buffer; y as a flat vector of S's dimension.
struct MinimaxProblem {
  using ScalarFn = std::function<double(const Vector &x, const Vector &y)>;
  using GradFn = std::function<Vector(const Vector &x, const Vector &y)>;
  using LinearFn = std::function<Vector(const Vector &x)>;
  using PrimalFn = std::function<double(const Vector &x)>;

  std::string name;
  std::shared_ptr<const Manifold> manifold;
  FeasibleSet set;
  Regularizer reg_h;
  Regularizer reg_g;

  ScalarFn eval_f;
  GradFn grad_x_f;
  GradFn grad_y_f;
  // When present, f(x, y) = <A(x), y>.
  std::optional<LinearFn> linear_y;
  // Objective reported in result tables (the original nonsmooth problem in x).
  PrimalFn reported_objective;

  double lipschitz_x = 0.0;
  double lipschitz_y = 0.0;

  /// F(x, y) = f(x, y) + h(x) - g(y).
  double objective(const Vector &x, const Vector &y) const {
    return eval_f(x, y) + reg_value(reg_h, x) - reg_value(reg_g, y);
  }
};

} // namespace mpgda
