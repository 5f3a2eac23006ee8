#include "hybridcorr/psd_repair.hpp"

#include <algorithm>
#include <cmath>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/linalg.hpp"

namespace hcorr {

bool is_psd(const Eigen::MatrixXd& m, double tolerance) {
    if (m.rows() != m.cols()) throw DimensionError("is_psd: matrix must be square");
    if (m.rows() == 0) return true;
    if (!m.allFinite()) return false;
    const double scale = std::max(1.0, m.diagonal().maxCoeff());
    return linalg::pivoted_cholesky(m, tolerance * scale).has_value();
}

ClampResult clamp_cross_entries(const Eigen::MatrixXd& m, std::span<const std::size_t> block_sizes,
                                double bound) {
    if (!(bound > 0.0 && bound <= 1.0)) throw DimensionError("clamp bound must lie in (0, 1]");
    std::vector<std::size_t> owner;
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
        owner.insert(owner.end(), block_sizes[b], b);
    if (static_cast<Eigen::Index>(owner.size()) != m.rows() || m.rows() != m.cols())
        throw DimensionError("block sizes do not match the matrix");

    ClampResult out{m, 0};
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (owner[static_cast<std::size_t>(r)] == owner[static_cast<std::size_t>(c)]) continue;
            const double v = m(r, c);
            const double clamped = std::clamp(v, -bound, bound);
            if (clamped != v) {
                out.matrix(r, c) = clamped;
                if (r < c) ++out.clamp_count;
            }
        }
    }
    return out;
}

Eigen::MatrixXd shrink_combination(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1,
                                   double alpha) {
    Eigen::MatrixXd s(m0.rows(), m0.cols());
    for (Eigen::Index c = 0; c < m0.cols(); ++c) {
        for (Eigen::Index r = 0; r < m0.rows(); ++r) {
            const double a = m0(r, c);
            const double b = m1(r, c);
            s(r, c) = (a == b) ? a : (1.0 - alpha) * a + alpha * b;
        }
    }
    return s;
}

ShrinkResult shrink(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1, double tol) {
    if (m0.rows() != m0.cols() || m1.rows() != m1.cols() || m0.rows() != m1.rows())
        throw DimensionError("shrink: M0 and M1 must be square with equal size");
    if (!(tol > 0.0)) throw DimensionError("shrink: tol must be > 0");
    if (!is_psd(m1)) throw RepairError("diagonal blocks must be positive semidefinite");

    ShrinkResult out;
    if (is_psd(m0)) {
        out.matrix = m0;
        out.alpha_star = 0.0;
        out.min_eigenvalue = linalg::min_eigenvalue(m0);
        return out;
    }

    double xl = 0.0;
    double xr = 1.0;
    while (xr - xl > tol) {
        const double xm = (xl + xr) * 0.5;
        if (!is_psd(shrink_combination(m0, m1, xm))) {
            xl = xm;
        } else {
            xr = xm;
        }
        ++out.iterations;
    }
    out.alpha_star = xr;
    out.matrix = shrink_combination(m0, m1, xr);
    out.min_eigenvalue = linalg::min_eigenvalue(out.matrix);
    return out;
}

Eigen::MatrixXd block_diagonal_target(const BlockCorrelationMatrix& draft) {
    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(draft.entries().rows(), draft.entries().cols());
    for (std::size_t b = 0; b < draft.block_count(); ++b) {
        const auto off = static_cast<Eigen::Index>(draft.block_offset(b));
        const auto n = static_cast<Eigen::Index>(draft.block_sizes()[b]);
        m1.block(off, off, n, n) = draft.entries().block(off, off, n, n);
    }
    return m1;
}

RepairResult repair(const BlockCorrelationMatrix& draft, double bound, double tol) {
    for (std::size_t b = 0; b < draft.block_count(); ++b) {
        if (!is_psd(draft.block(b, b)))
            throw RepairError("diagonal blocks must be positive semidefinite (block " +
                              std::to_string(b) + ")");
    }
    const ClampResult clamped = clamp_cross_entries(draft.entries(), draft.block_sizes(), bound);
    const Eigen::MatrixXd m1 = block_diagonal_target(draft);
    const bool was_psd = is_psd(draft.entries());
    ShrinkResult s = shrink(clamped.matrix, m1, tol);

    // Mirror the upper triangle so the result is exactly symmetric.
    Eigen::MatrixXd sym = s.matrix;
    for (Eigen::Index r = 0; r < sym.rows(); ++r)
        for (Eigen::Index c = r + 1; c < sym.cols(); ++c) sym(c, r) = sym(r, c);

    return RepairResult{draft.with_entries(std::move(sym)), s.alpha_star, clamped.clamp_count,
                        s.min_eigenvalue, s.iterations, was_psd};
}

}  // namespace hcorr
