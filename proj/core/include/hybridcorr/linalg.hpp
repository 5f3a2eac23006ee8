#pragma once

#include <optional>

#include <Eigen/Dense>

namespace hcorr::linalg {

/// Relative pivot threshold below which solve_dense reports a singular system.
inline constexpr double kSingularPivot = 1e-14;

/// Gaussian elimination with partial pivoting for the small (k <= 4) coefficient
/// systems. Throws SingularSystemError when a pivot falls below
/// kSingularPivot * max|A|.
Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs);

/// 2-norm condition number, sigma_max / sigma_min (infinity when singular).
double condition_number(const Eigen::MatrixXd& a);

/// Outer-product Cholesky with diagonal pivoting for symmetric PSD matrices.
///
/// Returns L (n x n, trailing columns zero past the numerical rank) with
/// L * L^T = M up to the tolerance, or nullopt when a pivot or remaining Schur
/// entry shows M has an eigenvalue below -tolerance. The tolerance is absolute;
/// callers scale it.
std::optional<Eigen::MatrixXd> pivoted_cholesky(const Eigen::MatrixXd& m, double tolerance);

/// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace hcorr::linalg
