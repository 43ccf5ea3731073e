#pragma once

#include "mpgda/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpgda {

// ---------------------------------------------------------------------------
// Circle example: min_{x in St(2,1)} max_{y in [0.3, 1]} -0.01 x1^3 y - y ln y.

MinimaxProblem analytic_problem();

/// The game-stationary point (x1, x2, y) = (1, 0, e^{-1.01}).
Vector analytic_stationary_x();
Vector analytic_stationary_y();

// ---------------------------------------------------------------------------
// Fair sparse PCA over the simplex of group weights.

/// f(X, y) = -sum_i y_i Tr(X^T A_i^T A_i X), h = mu ||X||_1, S = simplex.
MinimaxProblem fspca_problem(const std::vector<Matrix> &groups, int r, double mu);

struct FspcaSyntheticOptions {
  int samples_per_group = 200;
  int features = 40;
  int block_size = 8;
  double block_correlation = 0.8;
  double shifted_mean = 1.0 / 3.0;
  /// Subtract the mean over both groups pooled, as the credit loader does.
  bool center_pooled = true;
  /// Scale rows by 1/sqrt(m_i) so A_i^T A_i is the sample second moment.
  bool normalize_rows = true;
};

/// Two Gaussian groups with block-diagonal covariance 0.8^{|j-j'|}; group 2 is
/// shifted by 1/3 on even (1-based) coordinates.
std::vector<Matrix> gen_fspca_synthetic(std::uint64_t seed, const FspcaSyntheticOptions &opts = {});

/// Block-diagonal covariance used by the synthetic generator.
Matrix fspca_covariance(const FspcaSyntheticOptions &opts = {});

struct CreditCsvOptions {
  std::string group_column = "SEX";
  /// Columns ignored entirely (identifiers, labels).
  std::vector<std::string> drop_columns = {"ID", "default payment next month"};
  /// Accepted group labels in group order; empty means "the two distinct
  /// values found, ascending".
  std::vector<double> group_labels;
  bool normalize_rows = true;
};

/// Reads a header-first CSV, standardizes every feature column over the full
/// dataset and splits rows into two groups by the group column.
std::vector<Matrix> load_credit_csv(const std::string &path, const CreditCsvOptions &opts = {});

// ---------------------------------------------------------------------------
// Sparse spectral clustering, x = (X, Z) in St(N, p) x R^{N x N}, y = Y.

/// L = I - D^{-1/2} W D^{-1/2} with D = diag(row sums of W).
Matrix normalized_laplacian(const Matrix &W);

/// f(X, Z, Y) = <L, X X^T> + <Y, X X^T - Z>, h = mu ||Z||_1, S = {||Y||_inf <= mu}.
MinimaxProblem ssc_problem(const Matrix &W, int p, double mu);

/// X0 = eigenvectors of the p smallest eigenvalues of L, Z0 = X0 X0^T.
ManifoldPoint ssc_eigen_init(const MinimaxProblem &ssc, const Matrix &W, int p);

/// a_i ~ N(0, I_dim), W_ij = |<a_i, a_j>|.
Matrix gen_ssc_synthetic(int N, int dim, std::uint64_t seed);

} // namespace mpgda
