#include <doctest.h>

#include "mpgda/proxsets.hpp"
#include "mpgda/verify.hpp"

#include <cmath>
#include <random>

using namespace mpgda;

namespace {

Vector uniform(Eigen::Index n, double lo, double hi, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = u(rng);
  }
  return v;
}

} // namespace

TEST_CASE("prox_h") {
  const Vector u = Eigen::Vector2d(2.0, -0.3);
  CHECK(prox_h(Regularizer::zero(), u, 0.7) == u);
  CHECK(prox_h(Regularizer::l1(1.0), Vector::Zero(3), 0.5).norm() == 0.0);
  const Vector p = prox_h(Regularizer::l1(1.0), u, 0.5);
  CHECK(p[0] == doctest::Approx(1.5));
  CHECK(p[1] == 0.0);
  // Subgradient membership: (u - p)/alpha in mu * d|p|.
  const Vector s = (u - p) / 0.5;
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(std::abs(s[1]) <= 1.0);
  CHECK_THROWS_AS(prox_h(Regularizer::l1(1.0), u, 0.0), ParameterError);
}

TEST_CASE("regularizer metadata") {
  const auto r = Regularizer::l1(0.5);
  CHECK(r.lipschitz(16) == doctest::Approx(2.0));
  CHECK(reg_value(r, Eigen::Vector3d(1.0, -2.0, 0.0)) == doctest::Approx(1.5));
  const auto m = Manifold::product({Manifold::stiefel(3, 1), Manifold::euclidean({2})});
  const auto rf = Regularizer::l1_on_factor(2.0, m, 1);
  Vector v(5);
  v << 10, 10, 10, 1, -1;
  CHECK(reg_value(rf, v) == doctest::Approx(4.0));
  const Vector p = prox_h(rf, v, 0.25);
  CHECK(p.head(3) == v.head(3));
  CHECK(p[3] == doctest::Approx(0.5));
  CHECK(p[4] == doctest::Approx(-0.5));
}

TEST_CASE("feasible sets") {
  CHECK(FeasibleSet::simplex(4).sigma() == 1.0);
  CHECK(FeasibleSet::linf_ball(0.1, 100).sigma() == doctest::Approx(1.0));
  CHECK(FeasibleSet::interval(0.3, 1.0).sigma() == 1.0);
  CHECK(FeasibleSet::box(-2.0, 1.0, 4).sigma() == doctest::Approx(4.0));
  CHECK_THROWS_AS(FeasibleSet::interval(1.0, 0.0), ParameterError);
}

TEST_CASE("prox_g_over_S examples") {
  const auto I = FeasibleSet::interval(0.3, 1.0);
  CHECK(prox_g_over_S(Regularizer::zero(), I, Vector::Constant(1, 1.7), 1.0)[0] == 1.0);
  CHECK(prox_g_over_S(Regularizer::zero(), I, Vector::Constant(1, 0.5), 1.0)[0] == 0.5);
  const Vector feasible = Eigen::Vector3d(0.2, 0.3, 0.5);
  CHECK((prox_g_over_S(Regularizer::zero(), FeasibleSet::simplex(3), feasible, 1.0) - feasible)
            .norm() < 1e-15);

  const Vector w = Eigen::Vector3d(0.5, 0.5, 1.0);
  const Vector p = project_simplex(w);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.minCoeff() >= 0.0);
  // Grid oracle over the 2-simplex, refined against enumeration.
  double best = 1e300;
  Vector arg;
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const Vector y = Eigen::Vector3d(double(i) / n, double(j) / n, 1.0 - double(i + j) / n);
      const double d = (y - w).squaredNorm();
      if (d < best) {
        best = d;
        arg = y;
      }
    }
  }
  CHECK((p - arg).norm() < 1e-3);
  CHECK(std::abs((p - w).squaredNorm() - best) < 1e-6);
  CHECK((p - simplex_projection_enumerate(w)).norm() < 1e-12);

  // L1 over the ball: soft threshold then clamp.
  const auto B = FeasibleSet::linf_ball(0.5, 3);
  const Vector q = prox_g_over_S(Regularizer::l1(1.0), B, Eigen::Vector3d(2.0, -0.2, -0.9), 0.5);
  CHECK(q[0] == doctest::Approx(0.5));
  CHECK(q[1] == 0.0);
  CHECK(q[2] == doctest::Approx(-0.4));

  CHECK_THROWS_AS(prox_g_over_S(Regularizer::l1(1.0), FeasibleSet::simplex(3), w, 1.0),
                  UnsupportedCompositionError);
  CHECK_THROWS_AS(prox_g_over_S(Regularizer::l1(1.0), FeasibleSet::box(1.0, 2.0, 1),
                                Vector::Constant(1, 1.5), 1.0),
                  UnsupportedCompositionError);
}

TEST_CASE("simplex projection against support enumeration") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + t % 4;
    const Vector w = uniform(n, -2.0, 2.0, rng);
    const Vector p = project_simplex(w);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    CHECK((p - simplex_projection_enumerate(w)).norm() < 1e-10);
  }
}

TEST_CASE("prox is nonexpansive and satisfies optimality") {
  std::mt19937_64 rng(8);
  const auto B = FeasibleSet::linf_ball(0.3, 5);
  const auto reg = Regularizer::l1(0.4);
  for (int t = 0; t < 50; ++t) {
    const Vector w1 = uniform(5, -2.0, 2.0, rng);
    const Vector w2 = uniform(5, -2.0, 2.0, rng);
    const double a = 0.7;
    const Vector p1 = prox_g_over_S(reg, B, w1, a);
    const Vector p2 = prox_g_over_S(reg, B, w2, a);
    CHECK((p1 - p2).norm() <= (w1 - w2).norm() + 1e-15);
    // 0 in dg(p) + N(p) + (p - w)/a  <=>  dist(0, (w - p)/a - dg(p) - N(p)) = 0.
    CHECK(normal_cone_distance(B, reg, p1, (w1 - p1) / a) < 1e-12);
    const Vector ps = project_simplex(w1);
    CHECK(normal_cone_distance(FeasibleSet::simplex(5), Regularizer::zero(), ps, w1 - ps) < 1e-12);
  }
}

TEST_CASE("normal_cone_distance examples") {
  const auto I = FeasibleSet::interval(0.3, 1.0);
  const auto z = Regularizer::zero();
  CHECK(normal_cone_distance(I, z, Vector::Constant(1, 0.5), Vector::Constant(1, 0.2)) ==
        doctest::Approx(0.2));
  CHECK(normal_cone_distance(I, z, Vector::Constant(1, 1.0), Vector::Constant(1, 0.7)) == 0.0);
  CHECK(normal_cone_distance(I, z, Vector::Constant(1, 1.0), Vector::Constant(1, -0.7)) ==
        doctest::Approx(0.7));
  CHECK_THROWS_AS(normal_cone_distance(I, z, Vector::Constant(1, 1.2), Vector::Constant(1, 0.0)),
                  FeasibilityError);

  const auto S = FeasibleSet::simplex(3);
  const Vector y = Eigen::Vector3d(1.0, 0.0, 0.0);
  const Vector g = Eigen::Vector3d(1.0, 2.0, 0.0);
  // Hand solution: c in [1, 2] minimizes (1-c)^2 + (2-c)^2 -> c = 1.5, value sqrt(0.5).
  CHECK(normal_cone_distance(S, z, y, g) == doctest::Approx(std::sqrt(0.5)));
  CHECK(normal_cone_distance_enumerate(S, z, y, g) == doctest::Approx(std::sqrt(0.5)));
  // KKT pair: vertex maximizing a linear function.
  CHECK(normal_cone_distance(S, z, y, Eigen::Vector3d(3.0, 1.0, -2.0)) == 0.0);
}

TEST_CASE("normal_cone_distance against enumeration") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + t % 4;
    Vector y = uniform(n, 0.0, 1.0, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (coin(rng) == 0) {
        y[i] = 0.0;
      }
    }
    if (y.sum() == 0.0) {
      y[0] = 1.0;
    }
    y /= y.sum();
    const Vector g = uniform(n, -2.0, 2.0, rng);
    const auto S = FeasibleSet::simplex(n);
    CHECK(std::abs(normal_cone_distance(S, Regularizer::zero(), y, g) -
                   normal_cone_distance_enumerate(S, Regularizer::zero(), y, g)) < 1e-10);

    const auto B = FeasibleSet::linf_ball(0.5, n);
    Vector yb = uniform(n, -0.5, 0.5, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = coin(rng);
      yb[i] = c == 0 ? 0.5 : (c == 1 ? 0.0 : yb[i]);
    }
    const auto reg = t % 2 ? Regularizer::l1(0.3) : Regularizer::zero();
    CHECK(std::abs(normal_cone_distance(B, reg, yb, g) -
                   normal_cone_distance_enumerate(B, reg, yb, g)) < 1e-10);
  }
}
