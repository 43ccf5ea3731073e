#pragma once

#include "mpgda/common.hpp"

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

namespace mpgda {

struct Stiefel {
  int d = 0;
  int r = 0;
};

struct Euclidean {
  std::vector<int> shape;
};

using Factor = std::variant<Stiefel, Euclidean>;

int ambient_size(const Factor &f);

/// Embedded submanifold given as a product of Stiefel and Euclidean factors.
/// A plain Stiefel or Euclidean manifold is a product with one factor. Points
/// live in one flat buffer; factor k occupies [offset(k), offset(k)+size(k)),
/// stored column-major for matrix-shaped factors.
class Manifold {
public:
  static Manifold stiefel(int d, int r);
  static Manifold euclidean(std::vector<int> shape);
  /// Nested products are flattened.
  static Manifold product(const std::vector<Manifold> &factors);

  std::size_t num_factors() const { return factors_.size(); }
  const Factor &factor(std::size_t k) const { return factors_.at(k); }
  Eigen::Index offset(std::size_t k) const { return offsets_.at(k); }
  Eigen::Index size(std::size_t k) const;
  Eigen::Index ambient_dim() const { return ambient_dim_; }
  bool is_product() const { return factors_.size() > 1; }

  bool operator==(const Manifold &other) const;

private:
  explicit Manifold(std::vector<Factor> factors);

  std::vector<Factor> factors_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index ambient_dim_ = 0;
};

inline constexpr double kStiefelPointTol = 1e-10;
inline constexpr double kTangentTol = 1e-8;

struct ManifoldPoint {
  std::shared_ptr<const Manifold> manifold;
  Vector data;

  /// View of factor k as a matrix (d x r for Stiefel, shape[0] x rest for
  /// Euclidean; vectors are n x 1).
  ConstMatrixMap block(std::size_t k) const;
  MatrixMap block(std::size_t k);
};

struct TangentVector {
  std::shared_ptr<const Manifold> manifold;
  Vector base;
  Vector data;
};

/// Rows/cols used when viewing a factor's segment as a matrix.
std::pair<Eigen::Index, Eigen::Index> factor_matrix_shape(const Factor &f);

ManifoldPoint make_point(std::shared_ptr<const Manifold> m, Vector data);

/// Max over Stiefel factors of ||X^T X - I||_F.
double orthonormality_error(const ManifoldPoint &x);
/// Throws DimensionError / FeasibilityError when x is not a valid point.
void check_point(const ManifoldPoint &x, double tol = kStiefelPointTol);
/// Max over Stiefel factors of ||X^T V + V^T X||_F / (1 + ||V||_F).
double tangent_violation(const ManifoldPoint &x, const Vector &v);

/// Orthogonal projection onto T_x M. Stiefel: V = xi - X sym(X^T xi).
TangentVector tangent_project(const ManifoldPoint &x, const Vector &xi);
Vector tangent_project_data(const ManifoldPoint &x, const Vector &xi);

/// Riemannian gradient of a function whose Euclidean gradient is given.
TangentVector riemannian_grad(const ManifoldPoint &x, const Vector &euclid_grad);

/// QR retraction on Stiefel factors (R with positive diagonal), addition on
/// Euclidean factors. Returns x itself, bit for bit, when v is zero.
ManifoldPoint retract(const ManifoldPoint &x, const Vector &v);
ManifoldPoint retract(const ManifoldPoint &x, const TangentVector &v);

/// Thin QR of A with the sign of R's diagonal fixed positive; returns Q.
Matrix qr_orthonormal(const Matrix &A);

/// Seeded random point: Stiefel factors via QR of a Gaussian matrix,
/// Euclidean factors standard normal.
ManifoldPoint random_point(std::shared_ptr<const Manifold> m, std::uint64_t seed);

} // namespace mpgda
