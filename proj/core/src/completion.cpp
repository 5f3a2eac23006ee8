#include "hybridcorr/completion.hpp"

#include <cmath>
#include <string>

#include "hybridcorr/errors.hpp"

namespace hcorr {

InnerCholesky::InnerCholesky(double inner_rho) : rho(inner_rho) {
    if (!(std::abs(inner_rho) <= 1.0)) throw DimensionError("inner correlation must lie in [-1, 1]");
    L << 1.0, 0.0, inner_rho, std::sqrt(1.0 - inner_rho * inner_rho);
}

std::pair<double, double> complete_g2_heston(double rho_x_s, double rho_y_s, double rho_j) {
    return {rho_x_s * rho_j, rho_y_s * rho_j};
}

std::array<double, 3> complete_heston_heston(double rho_s_s, double rho_i, double rho_j) {
    return {rho_s_s * rho_j, rho_s_s * rho_i, rho_s_s * rho_i * rho_j};
}

BlockCorrelationMatrix complete_panel(const BlockCorrelationMatrix& draft, const BoolMatrix& missing,
                                      const HybridSystemSpec& system) {
    const auto n = static_cast<Eigen::Index>(draft.size());
    if (missing.rows() != n || missing.cols() != n)
        throw DimensionError("missing-entry mask must match the draft size");
    if (system.block_sizes() != draft.block_sizes())
        throw DimensionError("system layout does not match the draft");
    if (!missing.any()) return draft;

    const auto& comps = system.components;
    Eigen::MatrixXd out = draft.entries();
    const auto label = [&](Eigen::Index r, Eigen::Index c) {
        const auto& labels = draft.labels();
        return labels[static_cast<std::size_t>(r)] + "/" + labels[static_cast<std::size_t>(c)];
    };

    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto oi = static_cast<Eigen::Index>(draft.block_offset(i));
        const auto ni = static_cast<Eigen::Index>(draft.block_sizes()[i]);
        for (Eigen::Index r = 0; r < ni; ++r)
            for (Eigen::Index c = 0; c < ni; ++c)
                if (missing(oi + r, oi + c))
                    throw CompletionError("diagonal-block entry " + label(oi + r, oi + c) +
                                          " cannot be completed; it requires observed stock series");

        for (std::size_t j = i + 1; j < comps.size(); ++j) {
            const auto oj = static_cast<Eigen::Index>(draft.block_offset(j));
            const auto nj = static_cast<Eigen::Index>(draft.block_sizes()[j]);
            BoolMatrix mask(ni, nj);
            for (Eigen::Index r = 0; r < ni; ++r)
                for (Eigen::Index c = 0; c < nj; ++c)
                    mask(r, c) = missing(oi + r, oj + c) || missing(oj + c, oi + r);
            if (!mask.any()) continue;

            const bool hi = comps[i].is_heston();
            const bool hj = comps[j].is_heston();
            const double rho_i = comps[i].inner_correlation();
            const double rho_j = comps[j].inner_correlation();
            const Eigen::MatrixXd block = out.block(oi, oj, ni, nj);
            const bool both_variances_missing = hi && hj && mask(0, 1) && mask(1, 0);
            if (both_variances_missing && mask(0, 0))
                throw CompletionError("entry " + label(oi, oj) +
                                      " cannot be completed; it requires observed stock series");

            for (Eigen::Index r = 0; r < ni; ++r) {
                for (Eigen::Index c = 0; c < nj; ++c) {
                    if (!mask(r, c)) continue;
                    const bool var_row = hi && r == 1;
                    const bool var_col = hj && c == 1;
                    double value = 0.0;
                    if (both_variances_missing) {
                        const auto filled = complete_heston_heston(block(0, 0), rho_i, rho_j);
                        value = (r == 0) ? filled[0] : (c == 0 ? filled[1] : filled[2]);
                    } else if (var_col && !mask(r, 0)) {
                        value = block(r, 0) * rho_j;
                    } else if (var_row && !mask(0, c)) {
                        value = block(0, c) * rho_i;
                    } else {
                        throw CompletionError("entry " + label(oi + r, oj + c) +
                                              " cannot be completed; it requires observed stock series");
                    }
                    out(oi + r, oj + c) = value;
                    out(oj + c, oi + r) = value;
                }
            }
        }
    }
    return draft.with_entries(std::move(out));
}

}  // namespace hcorr
