#include "mpgda/manifold.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mpgda {

int ambient_size(const Factor &f) {
  if (const auto *s = std::get_if<Stiefel>(&f)) {
    return s->d * s->r;
  }
  const auto &shape = std::get<Euclidean>(f).shape;
  return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<>());
}

std::pair<Eigen::Index, Eigen::Index> factor_matrix_shape(const Factor &f) {
  if (const auto *s = std::get_if<Stiefel>(&f)) {
    return {s->d, s->r};
  }
  const auto &shape = std::get<Euclidean>(f).shape;
  if (shape.size() == 1) {
    return {shape[0], 1};
  }
  return {shape[0], ambient_size(f) / shape[0]};
}

Manifold::Manifold(std::vector<Factor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) {
    throw DimensionError("product manifold needs at least one factor");
  }
  for (const auto &f : factors_) {
    if (const auto *s = std::get_if<Stiefel>(&f)) {
      if (s->r < 1 || s->r > s->d) {
        throw DimensionError("Stiefel(d, r) requires 1 <= r <= d, got d=" +
                             std::to_string(s->d) + " r=" + std::to_string(s->r));
      }
    } else {
      const auto &shape = std::get<Euclidean>(f).shape;
      if (shape.empty() ||
          std::any_of(shape.begin(), shape.end(), [](int n) { return n < 1; })) {
        throw DimensionError("Euclidean factor needs a non-empty positive shape");
      }
    }
    offsets_.push_back(ambient_dim_);
    ambient_dim_ += ambient_size(f);
  }
}

Manifold Manifold::stiefel(int d, int r) { return Manifold({Stiefel{d, r}}); }

Manifold Manifold::euclidean(std::vector<int> shape) {
  return Manifold({Euclidean{std::move(shape)}});
}

Manifold Manifold::product(const std::vector<Manifold> &factors) {
  std::vector<Factor> flat;
  for (const auto &m : factors) {
    flat.insert(flat.end(), m.factors_.begin(), m.factors_.end());
  }
  return Manifold(std::move(flat));
}

Eigen::Index Manifold::size(std::size_t k) const { return ambient_size(factors_.at(k)); }

bool Manifold::operator==(const Manifold &other) const {
  if (factors_.size() != other.factors_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const auto &a = factors_[k];
    const auto &b = other.factors_[k];
    if (a.index() != b.index()) {
      return false;
    }
    if (const auto *s = std::get_if<Stiefel>(&a)) {
      const auto &t = std::get<Stiefel>(b);
      if (s->d != t.d || s->r != t.r) {
        return false;
      }
    } else if (std::get<Euclidean>(a).shape != std::get<Euclidean>(b).shape) {
      return false;
    }
  }
  return true;
}

ConstMatrixMap ManifoldPoint::block(std::size_t k) const {
  const auto [rows, cols] = factor_matrix_shape(manifold->factor(k));
  return ConstMatrixMap(data.data() + manifold->offset(k), rows, cols);
}

MatrixMap ManifoldPoint::block(std::size_t k) {
  const auto [rows, cols] = factor_matrix_shape(manifold->factor(k));
  return MatrixMap(data.data() + manifold->offset(k), rows, cols);
}

namespace {

void require_shape(const Manifold &m, const Vector &v, const char *what) {
  if (v.size() != m.ambient_dim()) {
    throw DimensionError(std::string(what) + ": expected ambient size " +
                         std::to_string(m.ambient_dim()) + ", got " +
                         std::to_string(v.size()));
  }
}

ConstMatrixMap segment_view(const Manifold &m, std::size_t k, const Vector &v) {
  const auto [rows, cols] = factor_matrix_shape(m.factor(k));
  return ConstMatrixMap(v.data() + m.offset(k), rows, cols);
}

MatrixMap segment_view(const Manifold &m, std::size_t k, Vector &v) {
  const auto [rows, cols] = factor_matrix_shape(m.factor(k));
  return MatrixMap(v.data() + m.offset(k), rows, cols);
}

} // namespace

ManifoldPoint make_point(std::shared_ptr<const Manifold> m, Vector data) {
  require_shape(*m, data, "make_point");
  return ManifoldPoint{std::move(m), std::move(data)};
}

double orthonormality_error(const ManifoldPoint &x) {
  const Manifold &m = *x.manifold;
  double worst = 0.0;
  for (std::size_t k = 0; k < m.num_factors(); ++k) {
    if (const auto *s = std::get_if<Stiefel>(&m.factor(k))) {
      const auto X = x.block(k);
      const double err = (X.transpose() * X - Matrix::Identity(s->r, s->r)).norm();
      worst = std::max(worst, err);
    }
  }
  return worst;
}

void check_point(const ManifoldPoint &x, double tol) {
  if (!x.manifold) {
    throw DimensionError("point has no manifold");
  }
  require_shape(*x.manifold, x.data, "check_point");
  if (!x.data.allFinite()) {
    throw FeasibilityError("point has non-finite entries");
  }
  const double err = orthonormality_error(x);
  if (err > tol) {
    throw FeasibilityError("point is off the Stiefel manifold: ||X^T X - I|| = " +
                           std::to_string(err));
  }
}

double tangent_violation(const ManifoldPoint &x, const Vector &v) {
  const Manifold &m = *x.manifold;
  require_shape(m, v, "tangent_violation");
  double worst = 0.0;
  for (std::size_t k = 0; k < m.num_factors(); ++k) {
    if (std::holds_alternative<Stiefel>(m.factor(k))) {
      const auto X = x.block(k);
      const auto V = segment_view(m, k, v);
      const Matrix XtV = X.transpose() * V;
      worst = std::max(worst, (XtV + XtV.transpose()).norm() / (1.0 + V.norm()));
    }
  }
  return worst;
}

Vector tangent_project_data(const ManifoldPoint &x, const Vector &xi) {
  const Manifold &m = *x.manifold;
  require_shape(m, xi, "tangent_project");
  Vector out = xi;
  for (std::size_t k = 0; k < m.num_factors(); ++k) {
    if (std::holds_alternative<Stiefel>(m.factor(k))) {
      const auto X = x.block(k);
      auto V = segment_view(m, k, out);
      const Matrix S = sym(X.transpose() * V);
      V -= X * S;
    }
  }
  return out;
}

TangentVector tangent_project(const ManifoldPoint &x, const Vector &xi) {
  return TangentVector{x.manifold, x.data, tangent_project_data(x, xi)};
}

TangentVector riemannian_grad(const ManifoldPoint &x, const Vector &euclid_grad) {
  return tangent_project(x, euclid_grad);
}

Matrix qr_orthonormal(const Matrix &A) {
  const Eigen::Index n = A.rows();
  const Eigen::Index r = A.cols();
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, r);
  const auto &R = qr.matrixQR();
  const double scale = std::max(1.0, A.norm());
  for (Eigen::Index j = 0; j < r; ++j) {
    const double rjj = R(j, j);
    if (!(std::abs(rjj) > 1e-13 * scale)) {
      throw DegenerateRetractionError("rank-deficient matrix in QR retraction (|R_jj| = " +
                                      std::to_string(std::abs(rjj)) + ")");
    }
    if (rjj < 0) {
      Q.col(j) = -Q.col(j);
    }
  }
  return Q;
}

ManifoldPoint retract(const ManifoldPoint &x, const Vector &v) {
  const Manifold &m = *x.manifold;
  require_shape(m, v, "retract");
  ManifoldPoint out = x;
  for (std::size_t k = 0; k < m.num_factors(); ++k) {
    const auto V = segment_view(m, k, v);
    if (V.isZero(0.0)) {
      continue;
    }
    auto Y = out.block(k);
    if (std::holds_alternative<Stiefel>(m.factor(k))) {
      Y = qr_orthonormal(Y + V);
    } else {
      Y += V;
    }
  }
  return out;
}

ManifoldPoint retract(const ManifoldPoint &x, const TangentVector &v) {
  return retract(x, v.data);
}

ManifoldPoint random_point(std::shared_ptr<const Manifold> m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector data(m->ambient_dim());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    data[i] = normal(rng);
  }
  ManifoldPoint x{m, std::move(data)};
  for (std::size_t k = 0; k < m->num_factors(); ++k) {
    if (std::holds_alternative<Stiefel>(m->factor(k))) {
      auto X = x.block(k);
      X = qr_orthonormal(Matrix(X));
    }
  }
  return x;
}

} // namespace mpgda
