#include <doctest.h>

#include <random>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/linalg.hpp"

using namespace hcorr;

TEST_SUITE("linalg") {

TEST_CASE("dense solve matches a reference LU") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 4;
        Eigen::MatrixXd a(n, n);
        Eigen::VectorXd b(n);
        for (int r = 0; r < n; ++r) {
            b(r) = u(gen);
            for (int c = 0; c < n; ++c) a(r, c) = u(gen);
        }
        a += 2.0 * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd x = linalg::solve_dense(a, b);
        const Eigen::VectorXd ref = a.fullPivLu().solve(b);
        CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("singular systems are rejected") {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(linalg::solve_dense(a, Eigen::Vector2d(1.0, 2.0)), SingularSystemError);
    CHECK(linalg::condition_number(Eigen::Matrix2d::Identity()) == doctest::Approx(1.0));
}

TEST_CASE("pivoted factorization of PSD and indefinite matrices") {
    Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(3, 3, 1.0);
    const auto l = linalg::pivoted_cholesky(ones, 1e-10);
    REQUIRE(l.has_value());
    CHECK(((*l) * l->transpose() - ones).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 1.2, 1.2, 1.0;
    CHECK_FALSE(linalg::pivoted_cholesky(bad, 1e-10).has_value());
    CHECK(linalg::min_eigenvalue(bad) == doctest::Approx(-0.2));

    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd g(5, 3);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 3; ++c) g(r, c) = z(gen);
        const Eigen::MatrixXd m = g * g.transpose();  // rank 3
        const auto f = linalg::pivoted_cholesky(m, 1e-10 * m.diagonal().maxCoeff());
        REQUIRE(f.has_value());
        CHECK(((*f) * f->transpose() - m).cwiseAbs().maxCoeff() < 1e-9 * m.cwiseAbs().maxCoeff());
    }
}

}
