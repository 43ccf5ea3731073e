#include <doctest.h>

#include "mpgda/problems.hpp"
#include "mpgda/subsolver.hpp"
#include "mpgda/verify.hpp"

#include <cmath>
#include <random>

using namespace mpgda;

namespace {

Vector gaussian(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> N01;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = N01(rng);
  }
  return v;
}

ManifoldPoint circle_point(double angle) {
  return make_point(std::make_shared<const Manifold>(Manifold::stiefel(2, 1)),
                    Eigen::Vector2d(std::cos(angle), std::sin(angle)));
}

MinimaxProblem zero_problem(const FeasibleSet &set) {
  MinimaxProblem p;
  p.name = "zero";
  p.manifold = std::make_shared<const Manifold>(Manifold::euclidean({2}));
  p.set = set;
  p.eval_f = [](const Vector &, const Vector &) { return 0.0; };
  p.grad_x_f = [](const Vector &x, const Vector &) -> Vector { return Vector::Zero(x.size()); };
  p.grad_y_f = [](const Vector &, const Vector &y) -> Vector { return Vector::Zero(y.size()); };
  p.lipschitz_y = 0.0;
  return p;
}

} // namespace

TEST_CASE("tangent prox closed forms") {
  const auto E = std::make_shared<const Manifold>(Manifold::euclidean({3}));
  const auto xe = make_point(E, Eigen::Vector3d(1.0, 2.0, 3.0));
  const Vector g = Eigen::Vector3d(0.5, -1.0, 2.0);
  CHECK((solve_tangent_prox(xe, g, 2.0, Regularizer::zero()).v.data + g / 2.0).norm() < 1e-15);

  const auto S = std::make_shared<const Manifold>(Manifold::stiefel(4, 2));
  const auto xs = random_point(S, 3);
  std::mt19937_64 rng(1);
  const Vector gs = gaussian(8, rng);
  const auto res = solve_tangent_prox(xs, gs, 4.0, Regularizer::zero());
  const Vector pg = tangent_project_data(xs, gs);
  CHECK((res.v.data + pg / 4.0).norm() < 1e-14);
  CHECK(tangent_prox_objective(xs, gs, 4.0, Regularizer::zero(), res.v.data) ==
        doctest::Approx(-pg.squaredNorm() / 8.0));
  CHECK_THROWS_AS(solve_tangent_prox(xs, gs, 0.0, Regularizer::zero()), ParameterError);
}

TEST_CASE("tangent prox on St(2,1) with L1 matches the tangent-line search") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
  for (int t = 0; t < 30; ++t) {
    const auto x = circle_point(U(rng));
    const Vector g = gaussian(2, rng);
    const double beta = 0.5 + (t % 5);
    const double mu = 0.1 * (1 + t % 4);
    const auto reg = Regularizer::l1(mu);
    const auto res = solve_tangent_prox(x, g, beta, reg);
    const Vector oracle = tangent_prox_line_search(x.data, g, beta, mu);
    const double f_res = tangent_prox_objective(x, g, beta, reg, res.v.data);
    const double f_orc = tangent_prox_objective(x, g, beta, reg, oracle);
    CHECK(f_res <= f_orc + 1e-8);
    CHECK((res.v.data - oracle).norm() < 1e-4);
    CHECK(tangent_violation(x, res.v.data) < kTangentTol);
  }
}

TEST_CASE("tangent prox on St(3,2) with L1 matches sign enumeration") {
  const auto S = std::make_shared<const Manifold>(Manifold::stiefel(3, 2));
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_point(S, 100 + t);
    const Vector g = gaussian(6, rng);
    const auto reg = Regularizer::l1(0.3);
    const double beta = 2.0;
    const auto res = solve_tangent_prox(x, g, beta, reg);
    const Matrix G = Eigen::Map<const Matrix>(g.data(), 3, 2);
    const Matrix V = tangent_prox_enumerate(x.block(0), G, beta, 0.3);
    const Vector v = Eigen::Map<const Vector>(V.data(), 6);
    CHECK(std::abs(tangent_prox_objective(x, g, beta, reg, res.v.data) -
                   tangent_prox_objective(x, g, beta, reg, v)) < 1e-8);
  }
}

TEST_CASE("tangent prox is never worse than v = 0") {
  const auto M = std::make_shared<const Manifold>(
      Manifold::product({Manifold::stiefel(5, 2), Manifold::euclidean({3, 3})}));
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_point(M, t);
    const Vector g = gaussian(M->ambient_dim(), rng);
    for (const auto &reg : {Regularizer::l1(0.2), Regularizer::l1_on_factor(0.5, *M, 1),
                            Regularizer::l1_on_factor(0.5, *M, 0)}) {
      const auto res = solve_tangent_prox(x, g, 3.0, reg);
      const double f0 = tangent_prox_objective(x, g, 3.0, reg, Vector::Zero(g.size()));
      const double fv = tangent_prox_objective(x, g, 3.0, reg, res.v.data);
      CHECK(fv <= f0 + 1e-12);
      if (res.v.data.norm() > 1e-8) {
        CHECK(fv < f0);
      }
      CHECK(tangent_violation(x, res.v.data) < kTangentTol);
    }
  }
}

TEST_CASE("ybar_linear") {
  const double rho = 2.0, gamma = 0.5;
  const Vector yp = Eigen::Vector3d(0.2, 0.3, 0.5);
  const Vector A = (rho + gamma) * yp - rho * yp;
  const auto S = FeasibleSet::simplex(3);
  CHECK((ybar_linear(A, yp, rho, gamma, Regularizer::zero(), S) - yp).norm() < 1e-14);

  const Vector y = ybar_linear(Eigen::Vector3d(-5.0, 1.0, 7.0), yp, rho, gamma,
                               Regularizer::zero(), S);
  CHECK(y.sum() == doctest::Approx(1.0));
  CHECK(y.minCoeff() >= 0.0);
}

TEST_CASE("SSC ybar: clamp agrees with the generic FISTA path") {
  const Matrix W = gen_ssc_synthetic(8, 4, 2);
  const auto ssc = ssc_problem(W, 2, 0.1);
  const auto x = random_point(ssc.manifold, 5);
  std::mt19937_64 rng(3);
  Vector yp = gaussian(64, rng).cwiseMax(-0.1).cwiseMin(0.1);
  const double rho = 3.0, gamma = 0.2;

  const Matrix X = x.block(0), Z = x.block(1);
  const Matrix Yp = Eigen::Map<const Matrix>(yp.data(), 8, 8);
  const Matrix expect = ((rho * Yp + X * X.transpose() - Z) / (rho + gamma)).cwiseMax(-0.1).cwiseMin(0.1);
  const Vector closed = compute_ybar(ssc, x.data, yp, rho, gamma).y;
  CHECK((closed - Eigen::Map<const Vector>(expect.data(), 64)).norm() < 1e-14);

  const auto fista = maximize_concave_fista(ssc, x.data, yp, rho, gamma);
  CHECK((fista.y - closed).norm() <= 1e-8);
}

TEST_CASE("concave max: f = 0 is a projection") {
  const auto p = zero_problem(FeasibleSet::linf_ball(0.5, 2));
  const Vector yp = Eigen::Vector2d(2.0, -0.1);
  const double rho = 1.0, gamma = 1.0;
  const auto res = maximize_concave_fista(p, Vector::Zero(2), yp, rho, gamma);
  CHECK(res.y[0] == doctest::Approx(0.5));
  CHECK(res.y[1] == doctest::Approx(-0.05));
}

TEST_CASE("concave max: bisection on the analytic example against a grid") {
  const auto prob = analytic_problem();
  for (double angle : {0.0, 0.6435, 2.0, 4.0}) {
    const Vector x = Eigen::Vector2d(std::cos(angle), std::sin(angle));
    const Vector yp = Vector::Constant(1, 0.5);
    const double rho = 1.3, gamma = 0.02;
    const auto res = maximize_concave_fista(prob, x, yp, rho, gamma);
    double best = -1e300, arg = 0.0;
    for (double y = 0.3; y <= 1.0; y += 1e-7) {
      const double v = regularized_y_objective(prob, x, Vector::Constant(1, y), yp, rho, gamma);
      if (v > best) {
        best = v;
        arg = y;
      }
    }
    CHECK(std::abs(res.y[0] - arg) < 2e-7);
    CHECK(regularized_y_objective(prob, x, res.y, yp, rho, gamma) >= best - 1e-12);
    CHECK(regularized_y_objective(prob, x, res.y, yp, rho, gamma) >=
          regularized_y_objective(prob, x, yp, yp, rho, gamma));
  }
}

TEST_CASE("concave max: linear instance agrees with the closed form") {
  std::vector<Matrix> groups;
  std::mt19937_64 rng(21);
  for (int i = 0; i < 3; ++i) {
    const Vector a = gaussian(5 * 4, rng);
    groups.push_back(Eigen::Map<const Matrix>(a.data(), 5, 4));
  }
  const auto prob = fspca_problem(groups, 2, 0.1);
  const auto x = random_point(prob.manifold, 1);
  const Vector yp = Eigen::Vector3d(0.6, 0.3, 0.1);
  const auto fista = maximize_concave_fista(prob, x.data, yp, 0.7, 0.1);
  const Vector closed = compute_ybar(prob, x.data, yp, 0.7, 0.1).y;
  CHECK((fista.y - closed).norm() <= 1e-8);
}

TEST_CASE("ybar satisfies the value bound across points") {
  // f(x,y) - g(y) <= f(x, yb) - g(yb) - rho/2 |yb - yk|^2 - gamma/2 |yb|^2
  //                  + gamma/2 |y|^2 + rho/2 |y - yk|^2 + Ly^2/(2(rho+gamma)) |x - xb|^2
  // with yb = ybar(xb).
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto check = [&](const MinimaxProblem &prob, const ManifoldPoint &x,
                         const ManifoldPoint &xb, const Vector &y, const Vector &yk, double rho,
                         double gamma) {
    const Vector yb = compute_ybar(prob, xb.data, yk, rho, gamma).y;
    const double lhs = prob.eval_f(x.data, y) - reg_value(prob.reg_g, y);
    const double Ly = prob.lipschitz_y;
    const double rhs = prob.eval_f(x.data, yb) - reg_value(prob.reg_g, yb) -
                       0.5 * rho * (yb - yk).squaredNorm() - 0.5 * gamma * yb.squaredNorm() +
                       0.5 * gamma * y.squaredNorm() + 0.5 * rho * (y - yk).squaredNorm() +
                       Ly * Ly / (2.0 * (rho + gamma)) * (x.data - xb.data).squaredNorm();
    CHECK(lhs <= rhs + 1e-8);
  };

  const auto an = analytic_problem();
  for (int t = 0; t < 50; ++t) {
    const auto x = circle_point(2 * M_PI * U(rng));
    const auto xb = circle_point(2 * M_PI * U(rng));
    check(an, x, xb, Vector::Constant(1, 0.3 + 0.7 * U(rng)), Vector::Constant(1, 0.3 + 0.7 * U(rng)),
          0.1 + U(rng), 0.01 + 0.1 * U(rng));
  }

  std::vector<Matrix> groups;
  for (int i = 0; i < 2; ++i) {
    const Vector a = gaussian(6 * 5, rng);
    groups.push_back(Eigen::Map<const Matrix>(a.data(), 6, 5) / std::sqrt(6.0));
  }
  const auto fs = fspca_problem(groups, 2, 0.1);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_point(fs.manifold, 2 * t);
    const auto xb = random_point(fs.manifold, 2 * t + 1);
    const double w = U(rng), wk = U(rng);
    check(fs, x, xb, Eigen::Vector2d(w, 1 - w), Eigen::Vector2d(wk, 1 - wk), 0.1 + U(rng),
          0.01 + 0.1 * U(rng));
  }
}
