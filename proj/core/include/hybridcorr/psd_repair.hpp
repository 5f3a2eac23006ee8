#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "hybridcorr/core_types.hpp"

namespace hcorr {

inline constexpr double kDefaultPsdTolerance = 1e-10;
inline constexpr double kDefaultClampBound = 0.999;
inline constexpr double kDefaultBisectionTol = 1e-6;

/// Positive-semidefiniteness test on (M + M^T)/2 via pivoted Cholesky.
/// `tolerance` is scaled by max(1, max diagonal).
bool is_psd(const Eigen::MatrixXd& m, double tolerance = kDefaultPsdTolerance);

struct ClampResult {
    Eigen::MatrixXd matrix;
    std::size_t clamp_count = 0;
};

/// Clamps entries of the off-diagonal blocks into [-bound, bound]. Diagonal
/// blocks are never touched; an out-of-range diagonal-block entry is a
/// validation problem for the caller.
ClampResult clamp_cross_entries(const Eigen::MatrixXd& m, std::span<const std::size_t> block_sizes,
                                double bound = kDefaultClampBound);

struct ShrinkResult {
    Eigen::MatrixXd matrix;
    double alpha_star = 0.0;
    std::size_t clamp_count = 0;
    double min_eigenvalue = 0.0;
    std::size_t iterations = 0;
};

/// S(alpha) = (1 - alpha) M0 + alpha M1, evaluated so that every entry on
/// which M0 and M1 agree is copied bit for bit.
Eigen::MatrixXd shrink_combination(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1,
                                   double alpha);

/// Bisection for the smallest alpha in [0, 1] making S(alpha) PSD.
///
/// Runs the textbook loop on [xl, xr] = [0, 1] until xr - xl <= tol and returns
/// S(xr), which is PSD by construction. When M0 is already PSD the result is M0
/// with alpha_star = 0. Throws RepairError when M1 is not PSD.
ShrinkResult shrink(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1,
                    double tol = kDefaultBisectionTol);

struct RepairResult {
    BlockCorrelationMatrix matrix;
    double alpha_star = 0.0;
    std::size_t clamp_count = 0;
    double min_eigenvalue = 0.0;
    std::size_t iterations = 0;
    bool draft_was_psd = false;
};

/// Block-diagonal part of the draft (cross blocks zeroed).
Eigen::MatrixXd block_diagonal_target(const BlockCorrelationMatrix& draft);

/// Clamp the cross blocks, then shrink toward the draft's own block diagonal.
/// Throws RepairError when a diagonal block is not PSD.
RepairResult repair(const BlockCorrelationMatrix& draft, double bound = kDefaultClampBound,
                    double tol = kDefaultBisectionTol);

}  // namespace hcorr
