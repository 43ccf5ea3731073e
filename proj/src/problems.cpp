#include "mpgda/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mpgda {

// ---------------------------------------------------------------------------
// Analytic example

namespace {
constexpr double kCubicWeight = 0.01;
constexpr double kYLo = 0.3;
constexpr double kYHi = 1.0;
} // namespace

MinimaxProblem analytic_problem() {
  MinimaxProblem p;
  p.name = "analytic";
  p.manifold = std::make_shared<const Manifold>(Manifold::stiefel(2, 1));
  p.set = FeasibleSet::interval(kYLo, kYHi);
  p.eval_f = [](const Vector &x, const Vector &y) {
    return -kCubicWeight * x[0] * x[0] * x[0] * y[0] - y[0] * std::log(y[0]);
  };
  p.grad_x_f = [](const Vector &x, const Vector &y) {
    Vector g = Vector::Zero(2);
    g[0] = -3.0 * kCubicWeight * x[0] * x[0] * y[0];
    return g;
  };
  p.grad_y_f = [](const Vector &x, const Vector &y) {
    return Vector::Constant(1, -kCubicWeight * x[0] * x[0] * x[0] - std::log(y[0]) - 1.0);
  };
  p.reported_objective = [](const Vector &x) {
    // max_y -a y - y ln y is attained at y = e^{-1-a}, clipped to the interval.
    const double a = kCubicWeight * x[0] * x[0] * x[0];
    const double y = std::clamp(std::exp(-1.0 - a), kYLo, kYHi);
    return -a * y - y * std::log(y);
  };
  // |d/dx1 (-0.03 x1^2 y)| <= 0.06 on the circle; |d^2 f/dy^2| = 1/y <= 1/0.3
  // plus the cross term 0.03 x1^2.
  p.lipschitz_x = 6.0 * kCubicWeight;
  p.lipschitz_y = 1.0 / kYLo + 3.0 * kCubicWeight;
  return p;
}

Vector analytic_stationary_x() { return Eigen::Vector2d(1.0, 0.0); }

Vector analytic_stationary_y() { return Vector::Constant(1, std::exp(-1.0 - kCubicWeight)); }

// ---------------------------------------------------------------------------
// FSPCA

MinimaxProblem fspca_problem(const std::vector<Matrix> &groups, int r, double mu) {
  if (groups.empty()) {
    throw DimensionError("fspca_problem: need at least one group");
  }
  const Eigen::Index d = groups.front().cols();
  for (const auto &A : groups) {
    if (A.cols() != d) {
      throw DimensionError("fspca_problem: groups disagree on the feature count");
    }
  }
  if (r < 1 || r > d) {
    throw DimensionError("fspca_problem: need 1 <= r <= d");
  }
  auto grams = std::make_shared<std::vector<Matrix>>();
  double max_norm = 0.0;
  double sum_sq_norm = 0.0;
  for (const auto &A : groups) {
    grams->push_back(A.transpose() * A);
    const double nrm = Eigen::SelfAdjointEigenSolver<Matrix>(grams->back(), Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .cwiseAbs()
                           .maxCoeff();
    max_norm = std::max(max_norm, nrm);
    sum_sq_norm += nrm * nrm;
  }
  const auto n = static_cast<Eigen::Index>(groups.size());

  MinimaxProblem p;
  p.name = "fspca";
  p.manifold = std::make_shared<const Manifold>(Manifold::stiefel(static_cast<int>(d), r));
  p.set = FeasibleSet::simplex(n);
  p.reg_h = Regularizer::l1(mu);
  auto linear = [grams, d, r](const Vector &x) {
    const ConstMatrixMap X(x.data(), d, r);
    Vector a(static_cast<Eigen::Index>(grams->size()));
    for (std::size_t i = 0; i < grams->size(); ++i) {
      a[static_cast<Eigen::Index>(i)] = -(X.transpose() * (*grams)[i] * X).trace();
    }
    return a;
  };
  p.linear_y = linear;
  p.eval_f = [linear](const Vector &x, const Vector &y) { return linear(x).dot(y); };
  p.grad_x_f = [grams, d, r](const Vector &x, const Vector &y) {
    const ConstMatrixMap X(x.data(), d, r);
    Matrix G = Matrix::Zero(d, r);
    for (std::size_t i = 0; i < grams->size(); ++i) {
      G -= 2.0 * y[static_cast<Eigen::Index>(i)] * ((*grams)[i] * X);
    }
    return Vector(Eigen::Map<const Vector>(G.data(), G.size()));
  };
  p.grad_y_f = [linear](const Vector &x, const Vector &) { return linear(x); };
  p.reported_objective = [linear, mu](const Vector &x) {
    return linear(x).maxCoeff() + mu * x.lpNorm<1>();
  };
  p.lipschitz_x = 2.0 * max_norm;
  p.lipschitz_y = 2.0 * std::sqrt(static_cast<double>(r)) * std::sqrt(sum_sq_norm);
  return p;
}

Matrix fspca_covariance(const FspcaSyntheticOptions &opts) {
  const int d = opts.features;
  Matrix sigma = Matrix::Zero(d, d);
  for (int start = 0; start < d; start += opts.block_size) {
    const int len = std::min(opts.block_size, d - start);
    for (int i = 0; i < len; ++i) {
      for (int j = 0; j < len; ++j) {
        sigma(start + i, start + j) = std::pow(opts.block_correlation, std::abs(i - j));
      }
    }
  }
  return sigma;
}

std::vector<Matrix> gen_fspca_synthetic(std::uint64_t seed, const FspcaSyntheticOptions &opts) {
  const int d = opts.features;
  const int m = opts.samples_per_group;
  const Eigen::LLT<Matrix> llt(fspca_covariance(opts));
  if (llt.info() != Eigen::Success) {
    throw Error("fspca covariance is not positive definite");
  }
  const Matrix chol = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  std::vector<Matrix> groups;
  for (int g = 0; g < 2; ++g) {
    Vector mean = Vector::Zero(d);
    if (g == 1) {
      // Even 1-based coordinates j = 2, 4, ..., d.
      for (int j = 1; j < d; j += 2) {
        mean[j] = opts.shifted_mean;
      }
    }
    Matrix A(m, d);
    Vector z(d);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < d; ++j) {
        z[j] = normal(rng);
      }
      A.row(i) = (mean + chol * z).transpose();
    }
    groups.push_back(std::move(A));
  }
  if (opts.center_pooled) {
    const Eigen::RowVectorXd pooled = (groups[0].colwise().sum() + groups[1].colwise().sum()) /
                                      static_cast<double>(2 * m);
    for (auto &A : groups) {
      A.rowwise() -= pooled;
    }
  }
  if (opts.normalize_rows) {
    for (auto &A : groups) {
      A /= std::sqrt(static_cast<double>(m));
    }
  }
  return groups;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  for (auto &s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string &cell, std::size_t row, const std::string &column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
    throw DataError("non-numeric cell '" + cell + "' at data row " + std::to_string(row) +
                    ", column '" + column + "'");
  }
  return v;
}

} // namespace

std::vector<Matrix> load_credit_csv(const std::string &path, const CreditCsvOptions &opts) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open CSV file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("CSV file is empty: " + path);
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const auto header = split_csv_line(line);
  std::optional<std::size_t> group_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == opts.group_column) {
      group_col = c;
    } else if (std::find(opts.drop_columns.begin(), opts.drop_columns.end(), header[c]) ==
               opts.drop_columns.end()) {
      feature_cols.push_back(c);
    }
  }
  if (!group_col) {
    throw DataError("group column '" + opts.group_column + "' not found in " + path);
  }
  if (feature_cols.empty()) {
    throw DataError("no feature columns left in " + path);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    ++row_index;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row_index) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    labels.push_back(parse_number(cells[*group_col], row_index, header[*group_col]));
    std::vector<double> r;
    r.reserve(feature_cols.size());
    for (auto c : feature_cols) {
      r.push_back(parse_number(cells[c], row_index, header[c]));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) {
    throw DataError("CSV file has no data rows: " + path);
  }

  std::vector<double> group_labels = opts.group_labels;
  if (group_labels.empty()) {
    const std::set<double> distinct(labels.begin(), labels.end());
    if (distinct.size() != 2) {
      throw DataError("expected exactly two group labels in column '" + opts.group_column +
                      "', found " + std::to_string(distinct.size()));
    }
    group_labels.assign(distinct.begin(), distinct.end());
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  Matrix data(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(data.col(j).squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) {
      data.col(j) /= sd;
    }
  }

  std::vector<std::vector<Eigen::Index>> members(group_labels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = std::find(group_labels.begin(), group_labels.end(),
                              labels[static_cast<std::size_t>(i)]);
    if (it == group_labels.end()) {
      throw DataError("unknown group label " + std::to_string(labels[static_cast<std::size_t>(i)]) +
                      " at data row " + std::to_string(i + 1));
    }
    members[static_cast<std::size_t>(it - group_labels.begin())].push_back(i);
  }
  std::vector<Matrix> groups;
  for (const auto &idx : members) {
    if (idx.empty()) {
      throw DataError("a configured group has no rows");
    }
    Matrix A(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      A.row(static_cast<Eigen::Index>(k)) = data.row(idx[k]);
    }
    if (opts.normalize_rows) {
      A /= std::sqrt(static_cast<double>(A.rows()));
    }
    groups.push_back(std::move(A));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// SSC

Matrix normalized_laplacian(const Matrix &W) {
  if (W.rows() != W.cols()) {
    throw DimensionError("affinity matrix must be square");
  }
  const Eigen::Index N = W.rows();
  const Vector s = W.rowwise().sum();
  for (Eigen::Index i = 0; i < N; ++i) {
    if (!(s[i] > 0.0)) {
      throw DegenerateGraphError("affinity row " + std::to_string(i) + " has zero sum");
    }
  }
  const Vector inv_sqrt = s.cwiseSqrt().cwiseInverse();
  Matrix L = -(inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal());
  L.diagonal().array() += 1.0;
  return sym(L);
}

MinimaxProblem ssc_problem(const Matrix &W, int p, double mu) {
  const Eigen::Index N = W.rows();
  if (W.cols() != N) {
    throw DimensionError("affinity matrix must be square");
  }
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw DimensionError("affinity matrix must be symmetric");
  }
  if (W.minCoeff() < 0.0) {
    throw DimensionError("affinity matrix must be nonnegative");
  }
  if (p < 1 || p > N) {
    throw DimensionError("ssc_problem: need 1 <= p <= N");
  }
  auto L = std::make_shared<const Matrix>(normalized_laplacian(W));
  const auto Ni = static_cast<int>(N);

  MinimaxProblem prob;
  prob.name = "ssc";
  const Manifold m = Manifold::product({Manifold::stiefel(Ni, p), Manifold::euclidean({Ni, Ni})});
  prob.manifold = std::make_shared<const Manifold>(m);
  prob.set = FeasibleSet::linf_ball(mu, N * N);
  prob.reg_h = Regularizer::l1_on_factor(mu, m, 1);
  const Eigen::Index z_off = N * p;

  auto linear = [N, p, z_off](const Vector &x) {
    const ConstMatrixMap X(x.data(), N, p);
    const ConstMatrixMap Z(x.data() + z_off, N, N);
    Matrix A = X * X.transpose() - Z;
    return Vector(Eigen::Map<const Vector>(A.data(), A.size()));
  };
  prob.linear_y = linear;
  prob.eval_f = [L, N, p, linear](const Vector &x, const Vector &y) {
    const ConstMatrixMap X(x.data(), N, p);
    return (X.transpose() * (*L) * X).trace() + linear(x).dot(y);
  };
  prob.grad_x_f = [L, N, p, z_off](const Vector &x, const Vector &y) {
    const ConstMatrixMap X(x.data(), N, p);
    const ConstMatrixMap Y(y.data(), N, N);
    Vector g(x.size());
    MatrixMap GX(g.data(), N, p);
    MatrixMap GZ(g.data() + z_off, N, N);
    GX = 2.0 * (*L) * X + (Y + Y.transpose()) * X;
    GZ = -Y;
    return g;
  };
  prob.grad_y_f = [linear](const Vector &x, const Vector &) { return linear(x); };
  prob.reported_objective = [L, N, p, mu](const Vector &x) {
    const ConstMatrixMap X(x.data(), N, p);
    const Matrix P = X * X.transpose();
    return (X.transpose() * (*L) * X).trace() + mu * P.lpNorm<1>();
  };
  // ||2L + Y + Y^T||_2 <= 4 + 2 mu N on S; grad_Y = XX^T - Z moves at most
  // 2||dX|| + ||dZ|| on the Stiefel factor.
  prob.lipschitz_x = 4.0 + 2.0 * mu * static_cast<double>(N);
  prob.lipschitz_y = std::sqrt(5.0);
  return prob;
}

ManifoldPoint ssc_eigen_init(const MinimaxProblem &ssc, const Matrix &W, int p) {
  const Matrix L = normalized_laplacian(W);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
  const Matrix X0 = eig.eigenvectors().leftCols(p);
  ManifoldPoint x{ssc.manifold, Vector::Zero(ssc.manifold->ambient_dim())};
  x.block(0) = X0;
  x.block(1) = X0 * X0.transpose();
  return x;
}

Matrix gen_ssc_synthetic(int N, int dim, std::uint64_t seed) {
  if (N < 1 || dim < 1) {
    throw DimensionError("gen_ssc_synthetic: N and dim must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(dim, N);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < dim; ++k) {
      a(k, i) = normal(rng);
    }
  }
  Matrix W = (a.transpose() * a).cwiseAbs();
  // Symmetric to the last bit.
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < i; ++j) {
      W(j, i) = W(i, j);
    }
  }
  return W;
}

} // namespace mpgda
