#include "hybridcorr/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>
#include <limits>
#include <utility>

#include "hybridcorr/errors.hpp"

namespace hcorr::linalg {

Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || rhs.size() != n) throw DimensionError("solve_dense: shape mismatch");
    if (!a.allFinite() || !rhs.allFinite())
        throw SingularSystemError("solve_dense: non-finite input");

    const double scale = a.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw SingularSystemError("coefficient matrix is zero");
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (pivot < kSingularPivot * scale)
        throw SingularSystemError("coefficient matrix is singular (pivot " + std::to_string(pivot) + ")");
    return lu.solve(rhs);
}

double condition_number(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0.0;
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

std::optional<Eigen::MatrixXd> pivoted_cholesky(const Eigen::MatrixXd& m, double tolerance) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n) throw DimensionError("pivoted_cholesky: matrix must be square");

    Eigen::MatrixXd s = 0.5 * (m + m.transpose());  // running Schur complement
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> done(static_cast<std::size_t>(n), false);

    for (Eigen::Index step = 0; step < n; ++step) {
        Eigen::Index p = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (done[static_cast<std::size_t>(i)]) continue;
            if (p < 0 || s(i, i) > s(p, p)) p = i;
        }
        const double pivot = s(p, p);
        if (pivot <= tolerance) {
            // Remaining Schur complement must be numerically zero.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (done[static_cast<std::size_t>(i)]) continue;
                if (s(i, i) < -tolerance) return std::nullopt;
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    if (done[static_cast<std::size_t>(j)]) continue;
                    if (std::abs(s(i, j)) > tolerance) return std::nullopt;
                }
            }
            return l;
        }
        const double root = std::sqrt(pivot);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (done[static_cast<std::size_t>(i)] || i == p) continue;
            l(i, step) = s(i, p) / root;
        }
        l(p, step) = root;
        done[static_cast<std::size_t>(p)] = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (done[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (done[static_cast<std::size_t>(j)]) continue;
                s(i, j) -= l(i, step) * l(j, step);
            }
        }
    }
    return l;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace hcorr::linalg
