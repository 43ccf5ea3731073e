#include <doctest.h>

#include "mpgda/problems.hpp"
#include "mpgda/verify.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

using namespace mpgda;
namespace fs = std::filesystem;

namespace {

Vector gaussian(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> N01;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = N01(rng);
  }
  return v;
}

Vector random_y(const FeasibleSet &S, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vector y(S.dim);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = U(rng);
  }
  switch (S.kind) {
  case FeasibleSet::Kind::Simplex:
    return y / y.sum();
  default:
    return (S.lo + (S.hi - S.lo) * y.array()).matrix();
  }
}

// Both partial gradients against central differences at random points.
void check_gradients(const MinimaxProblem &p, int samples, double tol) {
  std::mt19937_64 rng(77);
  for (int s = 0; s < samples; ++s) {
    const Vector x = random_point(p.manifold, 500 + s).data;
    const Vector y = random_y(p.set, rng);
    const auto rx = fd_gradient_check([&](const Vector &u) { return p.eval_f(u, y); },
                                      [&](const Vector &u) -> Vector { return p.grad_x_f(u, y); },
                                      x, 5, 1e-5, s);
    const auto ry = fd_gradient_check([&](const Vector &u) { return p.eval_f(x, u); },
                                      [&](const Vector &u) -> Vector { return p.grad_y_f(x, u); },
                                      y, 5, 1e-5, s + 1000);
    CHECK(rx.max_rel_error <= tol);
    CHECK(ry.max_rel_error <= tol);
  }
}

void check_concave_in_y(const MinimaxProblem &p) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 20; ++s) {
    const Vector x = random_point(p.manifold, s).data;
    const Vector y1 = random_y(p.set, rng), y2 = random_y(p.set, rng);
    CHECK(p.eval_f(x, 0.5 * (y1 + y2)) >= 0.5 * (p.eval_f(x, y1) + p.eval_f(x, y2)) - 1e-12);
  }
}

std::vector<Matrix> small_groups(int n, int m, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Matrix> g;
  for (int i = 0; i < n; ++i) {
    const Vector a = gaussian(m * d, rng);
    g.push_back(Eigen::Map<const Matrix>(a.data(), m, d));
  }
  return g;
}

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string &text) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("mpgda_csv_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
    std::ofstream(path) << text;
  }
  ~TempFile() { fs::remove(path); }
};

} // namespace

TEST_CASE("analytic problem") {
  const auto p = analytic_problem();
  const double ys = std::exp(-1.01);
  const Vector xs = Eigen::Vector2d(1.0, 0.0);
  CHECK(p.eval_f(xs, Vector::Constant(1, ys)) == doctest::Approx(ys).epsilon(1e-14));
  CHECK(std::abs(p.grad_y_f(xs, Vector::Constant(1, ys))[0]) < 1e-15);
  CHECK(p.grad_y_f(Eigen::Vector2d(0.0, 1.0), Vector::Constant(1, 1.0))[0] == -1.0);
  CHECK(analytic_stationary_x() == xs);
  CHECK(analytic_stationary_y()[0] == doctest::Approx(ys));
  CHECK(p.set.lo == 0.3);
  CHECK(p.set.hi == 1.0);
  CHECK(p.eval_f(Eigen::Vector2d(0.6, 0.8), Vector::Constant(1, 0.5)) ==
        doctest::Approx(oracle_analytic_f(Eigen::Vector2d(0.6, 0.8), Vector::Constant(1, 0.5))));
  CHECK(p.lipschitz_y >= 1.0 / 0.3);
  check_gradients(p, 20, 1e-6);
  check_concave_in_y(p);
}

TEST_CASE("fspca problem") {
  const auto groups = small_groups(3, 7, 5, 1);
  const auto p = fspca_problem(groups, 2, 0.1);
  CHECK(p.set.kind == FeasibleSet::Kind::Simplex);
  CHECK(p.set.dim == 3);
  check_gradients(p, 20, 1e-6);
  check_concave_in_y(p);

  std::mt19937_64 rng(2);
  for (int s = 0; s < 5; ++s) {
    const Vector x = random_point(p.manifold, s).data;
    const Vector y = random_y(p.set, rng);
    CHECK(p.eval_f(x, y) == doctest::Approx(oracle_fspca_f(groups, 2, x, y)).epsilon(1e-12));
    const Vector A = (*p.linear_y)(x);
    for (int i = 0; i < 3; ++i) {
      const Vector e = Vector::Unit(3, i);
      CHECK(std::abs(p.eval_f(x, e) - A[i]) <= 1e-12 * (1 + std::abs(A[i])));
    }
  }

  // Single group: plain sparse PCA.
  const auto one = fspca_problem({groups[0]}, 2, 0.0);
  const auto X = random_point(one.manifold, 4);
  const Matrix G = groups[0].transpose() * groups[0];
  CHECK(one.eval_f(X.data, Vector::Ones(1)) ==
        doctest::Approx(-(X.block(0).transpose() * G * X.block(0)).trace()));

  CHECK_THROWS_AS(fspca_problem({groups[0], Matrix::Zero(3, 4)}, 2, 0.1), DimensionError);
  CHECK_THROWS_AS(fspca_problem(groups, 6, 0.1), DimensionError);
  CHECK_THROWS_AS(fspca_problem({}, 1, 0.1), DimensionError);
}

TEST_CASE("ssc problem") {
  const Matrix W = gen_ssc_synthetic(6, 3, 4);
  const auto p = ssc_problem(W, 2, 0.05);
  CHECK(p.manifold->num_factors() == 2);
  CHECK(p.set.kind == FeasibleSet::Kind::LinfBall);
  CHECK(p.set.dim == 36);
  check_gradients(p, 20, 1e-6);
  check_concave_in_y(p);

  std::mt19937_64 rng(6);
  const Matrix L = normalized_laplacian(W);
  for (int s = 0; s < 5; ++s) {
    const auto x = random_point(p.manifold, s);
    const Vector y = random_y(p.set, rng);
    CHECK(p.eval_f(x.data, y) == doctest::Approx(oracle_ssc_f(W, 2, x.data, y)).epsilon(1e-12));
    // Y = 0 removes the coupling term.
    const Matrix X = x.block(0);
    CHECK(p.objective(x.data, Vector::Zero(36)) ==
          doctest::Approx((L * X * X.transpose()).trace() + 0.05 * x.block(1).lpNorm<1>()));
    // Linearity at ball corners.
    Vector corner(36);
    for (Eigen::Index i = 0; i < 36; ++i) {
      corner[i] = (i * 7 + s) % 3 == 0 ? -0.05 : 0.05;
    }
    const double lin = (*p.linear_y)(x.data).dot(corner);
    CHECK(std::abs(p.eval_f(x.data, corner) - p.eval_f(x.data, Vector::Zero(36)) - lin) <=
          1e-12 * (1 + std::abs(lin)));
  }

  const auto x0 = ssc_eigen_init(p, W, 2);
  CHECK(orthonormality_error(x0) <= 1e-10);
  CHECK((x0.block(1) - x0.block(0) * x0.block(0).transpose()).norm() < 1e-14);

  Matrix bad = W;
  bad(0, 1) += 1.0;
  CHECK_THROWS_AS(ssc_problem(bad, 2, 0.1), DimensionError);
  CHECK_THROWS_AS(ssc_problem(-W, 2, 0.1), DimensionError);
  CHECK_THROWS_AS(ssc_problem(W, 7, 0.1), DimensionError);
  Matrix iso = W;
  iso.row(2).setZero();
  iso.col(2).setZero();
  CHECK_THROWS_AS(ssc_problem(iso, 2, 0.1), DegenerateGraphError);
}

TEST_CASE("normalized laplacian") {
  const Matrix W = gen_ssc_synthetic(20, 5, 9);
  const Matrix L = normalized_laplacian(W);
  CHECK((L - L.transpose()).norm() == 0.0);
  const Matrix A = Matrix::Identity(20, 20) - L;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  CHECK(eig.eigenvalues().minCoeff() >= -1.0 - 1e-8);
  CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 1e-8);
  // D^{1/2} 1 spans the kernel of L.
  const Vector s = W.rowwise().sum().cwiseSqrt();
  CHECK((L * s).norm() < 1e-12 * s.norm());

  Matrix two = Matrix::Zero(2, 2);
  two(0, 1) = two(1, 0) = 3.0;
  Matrix expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK((normalized_laplacian(two) - expect).norm() < 1e-15);
}

TEST_CASE("ssc generator") {
  const Matrix W = gen_ssc_synthetic(30, 4, 1);
  CHECK(W.rows() == 30);
  CHECK((W - W.transpose()).norm() == 0.0);
  CHECK(W.minCoeff() >= 0.0);
  CHECK(W == gen_ssc_synthetic(30, 4, 1));
  CHECK(W != gen_ssc_synthetic(30, 4, 2));
  CHECK(gen_ssc_synthetic(200, 50, 1).rows() == 200);
  // Diagonal entries are squared norms: E = dim, and every off-diagonal
  // |<a_i, a_j>| <= sqrt(W_ii W_jj).
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      CHECK(W(i, j) <= std::sqrt(W(i, i) * W(j, j)) + 1e-12);
    }
  }
  CHECK(W.diagonal().mean() == doctest::Approx(4.0).epsilon(0.3));
  CHECK_THROWS_AS(gen_ssc_synthetic(0, 4, 1), DimensionError);
}

TEST_CASE("fspca generator") {
  const Matrix Sigma = fspca_covariance();
  CHECK(Sigma.rows() == 40);
  CHECK(Sigma.llt().info() == Eigen::Success);
  CHECK(Sigma(0, 2) == doctest::Approx(0.64));
  CHECK(Sigma(7, 8) == 0.0);
  CHECK(Sigma(8, 9) == doctest::Approx(0.8));

  FspcaSyntheticOptions raw;
  raw.center_pooled = false;
  raw.normalize_rows = false;
  const auto g = gen_fspca_synthetic(3, raw);
  REQUIRE(g.size() == 2);
  CHECK(g[0].rows() == 200);
  CHECK(g[0].cols() == 40);
  CHECK(g[1].rows() == 200);

  // Group means averaged over seeds against the statistical bound.
  Vector m1 = Vector::Zero(40), m2 = Vector::Zero(40);
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto gs = gen_fspca_synthetic(s, raw);
    m1 += gs[0].colwise().mean().transpose() / seeds;
    m2 += gs[1].colwise().mean().transpose() / seeds;
  }
  const double bound = 3.0 / std::sqrt(200.0 * seeds);
  for (int j = 0; j < 40; ++j) {
    CHECK(std::abs(m1[j]) <= bound);
    const double target = j % 2 == 1 ? 1.0 / 3.0 : 0.0;
    CHECK(std::abs(m2[j] - target) <= bound);
  }

  // Empirical covariance of group 1 within sampling error.
  const Matrix c = g[0].rowwise() - g[0].colwise().mean();
  const Matrix emp = c.transpose() * c / 199.0;
  CHECK((emp - Sigma).cwiseAbs().maxCoeff() < 0.35);

  const auto def = gen_fspca_synthetic(3);
  Matrix all(400, 40);
  all << def[0] * std::sqrt(200.0), def[1] * std::sqrt(200.0);
  CHECK(all.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(gen_fspca_synthetic(3)[1] == def[1]);
}

TEST_CASE("credit csv loader") {
  SUBCASE("toy file") {
    TempFile f("ID,LIMIT,SEX,AGE,default payment next month\n"
               "1,100,1,30,0\n"
               "2,300,2,50,1\n");
    CreditCsvOptions o;
    o.normalize_rows = false;
    const auto g = load_credit_csv(f.path.string(), o);
    REQUIRE(g.size() == 2);
    CHECK(g[0].rows() == 1);
    CHECK(g[0].cols() == 2);
    // Standardized with population sd: (100 - 200)/100 = -1.
    CHECK(g[0](0, 0) == doctest::Approx(-1.0));
    CHECK(g[1](0, 1) == doctest::Approx(1.0));
  }
  SUBCASE("standardization and row scaling") {
    std::string text = "\xEF\xBB\xBF\"ID\",\"X1\",\"X2\",\"SEX\",\"default payment next month\"\n";
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> v(0, 1000), s(1, 2);
    int n1 = 0;
    for (int i = 0; i < 50; ++i) {
      const int sex = i < 2 ? i + 1 : s(rng);
      n1 += sex == 1;
      text += std::to_string(i) + "," + std::to_string(v(rng)) + "," + std::to_string(v(rng)) +
              "," + std::to_string(sex) + ",0\n";
    }
    text += "\n";
    TempFile f(text);
    CreditCsvOptions o;
    o.normalize_rows = false;
    const auto g = load_credit_csv(f.path.string(), o);
    CHECK(g[0].rows() == n1);
    Matrix all(50, 2);
    all << g[0], g[1];
    CHECK(all.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    const Matrix c = all.rowwise() - all.colwise().mean();
    CHECK((c.colwise().squaredNorm() / 50.0).maxCoeff() == doctest::Approx(1.0));

    const auto scaled = load_credit_csv(f.path.string());
    CHECK((scaled[0] * std::sqrt(double(n1)) - g[0]).norm() < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(load_credit_csv("/nonexistent/credit.csv"), DataError);
    TempFile bad("ID,X,SEX\n1,abc,1\n2,3,2\n");
    CHECK_THROWS_AS(load_credit_csv(bad.path.string()), DataError);
    TempFile ragged("ID,X,SEX\n1,2,1\n2,3\n");
    CHECK_THROWS_AS(load_credit_csv(ragged.path.string()), DataError);
    TempFile three("ID,X,SEX\n1,2,1\n2,3,2\n3,4,3\n");
    CHECK_THROWS_AS(load_credit_csv(three.path.string()), DataError);
    TempFile ok("ID,X,SEX\n1,2,1\n2,3,2\n");
    CreditCsvOptions labels;
    labels.group_labels = {1.0, 5.0};
    CHECK_THROWS_AS(load_credit_csv(ok.path.string(), labels), DataError);
    CreditCsvOptions col;
    col.group_column = "GENDER";
    CHECK_THROWS_AS(load_credit_csv(ok.path.string(), col), DataError);
  }
}
