#pragma once

#include <array>
#include <utility>

#include <Eigen/Dense>

#include "hybridcorr/core_types.hpp"

namespace hcorr {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cholesky factor of [[1, rho], [rho, 1]].
struct InnerCholesky {
    double rho = 0.0;
    Eigen::Matrix2d L = Eigen::Matrix2d::Identity();

    explicit InnerCholesky(double inner_rho);
};

/// (rho_x_v, rho_y_v) = (rho_x_s * rho_j, rho_y_s * rho_j).
std::pair<double, double> complete_g2_heston(double rho_x_s, double rho_y_s, double rho_j);

/// (rho_s_v, rho_v_s, rho_v_v) = (rho_ss rho_j, rho_ss rho_i, rho_ss rho_i rho_j).
std::array<double, 3> complete_heston_heston(double rho_s_s, double rho_i, double rho_j);

/// Fills the entries flagged in `missing` (same size as the draft).
///
/// Only variance rows/columns of Heston/Bates components can be filled. A
/// cross block whose two variance series are both missing uses the
/// Heston/Heston rule; otherwise each missing variance entry is its stock
/// counterpart times the inner correlation. Anything else throws
/// CompletionError.
BlockCorrelationMatrix complete_panel(const BlockCorrelationMatrix& draft, const BoolMatrix& missing,
                                      const HybridSystemSpec& system);

}  // namespace hcorr
