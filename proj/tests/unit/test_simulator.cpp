#include <doctest.h>

#include <cmath>
#include <random>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/rng.hpp"
#include "hybridcorr/simulator.hpp"
#include "hybridcorr/study.hpp"

using namespace hcorr;

namespace {

double sample_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean();
    const double mb = b.mean();
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        sab += (a(k) - ma) * (b(k) - mb);
        saa += (a(k) - ma) * (a(k) - ma);
        sbb += (b(k) - mb) * (b(k) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

HybridSystemSpec single_heston(const HestonParams& p) {
    HybridSystemSpec spec;
    spec.components = {p};
    spec.full_correlation = p.rho_sv == 0.0 ? Eigen::MatrixXd::Identity(2, 2) : spec.diagonal_blocks()[0];
    return spec;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("identity correlation gives independent increments") {
    const auto inc = correlated_normals(Eigen::MatrixXd::Identity(3, 3), 100000, 1);
    CHECK(std::abs(sample_corr(inc.col(0), inc.col(1))) < 0.02);
    CHECK(std::abs(sample_corr(inc.col(0), inc.col(2))) < 0.02);
    CHECK(std::abs(sample_corr(inc.col(1), inc.col(2))) < 0.02);
    CHECK(std::abs(inc.col(0).squaredNorm() / 100000.0 - 1.0) < 0.02);
}

TEST_CASE("perfect correlation gives identical columns") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 2, 1.0);
    const auto inc = correlated_increments(BlockCorrelationMatrix(m, {1, 1}), 1000, 0.01, 3);
    CHECK((inc.col(0) - inc.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(inc.col(0).squaredNorm() / 1000.0 - 0.01) < 0.002);
}

TEST_CASE("reference G2/Heston matrix is recovered by the increments") {
    const Eigen::MatrixXd target = *table_preset("g2heston").full_correlation;
    const auto inc = correlated_normals(target, 100000, 17);
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c) CHECK(std::abs(sample_corr(inc.col(r), inc.col(c)) - target(r, c)) < 0.03);
}

TEST_CASE("cross-correlation recovery for random valid matrices") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> z;
    const std::size_t n = 40000;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd g(5, 5);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 5; ++c) g(r, c) = z(gen);
        Eigen::MatrixXd cov = g * g.transpose();
        const Eigen::VectorXd s = cov.diagonal().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd corr = s.asDiagonal() * cov * s.asDiagonal();
        const auto inc = correlated_normals(corr, n, 100 + static_cast<std::uint64_t>(trial));
        for (int r = 0; r < 5; ++r)
            for (int c = r + 1; c < 5; ++c)
                CHECK(std::abs(sample_corr(inc.col(r), inc.col(c)) - corr(r, c)) < 3.0 / std::sqrt(double(n)));
    }
}

TEST_CASE("non-PSD matrices are refused") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 1.2, 1.2, 1.0;
    CHECK_THROWS_AS(correlated_normals(m, 10, 1), RepairError);
}

TEST_CASE("exact OU step deviation") {
    const double oracle = 0.01 * std::sqrt((1.0 - std::exp(-2.0 * 0.1 / 250.0)) / 0.2);
    CHECK(ou_step_stdev(0.1, 0.01, 1.0 / 250.0) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(std::abs(ou_step_stdev(0.1, 0.01, 1.0 / 250.0) - 6.32329e-4) < 1e-8);
}

TEST_CASE("zero-noise OU stays at zero") {
    std::vector<double> z(500, 1.0);
    const auto path = simulate_g2(G2Params{0.1, 0.2, 1e-300, 1e-300, 0.0}, z, z, 0.01, 1e-200);
    for (double v : path.x) CHECK(v == 0.0);
    for (double v : path.y) CHECK(v == 0.0);
}

TEST_CASE("OU stationary variance") {
    // 40 years in steps of 0.04 with exact transitions, 1,000 paths.
    const G1Params p{0.1, 0.01};
    const std::size_t steps = 1000;
    double sum = 0.0, sq = 0.0;
    const int paths = 1000;
    for (int m = 0; m < paths; ++m) {
        const auto z = correlated_normals(Eigen::MatrixXd::Identity(1, 1), steps, derive_seed(5, m));
        const auto x = simulate_g1(p, std::span<const double>(z.data(), steps), 0.04);
        sum += x.back();
        sq += x.back() * x.back();
    }
    const double var = (sq - sum * sum / paths) / (paths - 1);
    CHECK(std::abs(var / 5e-4 - 1.0) < 0.05);
}

TEST_CASE("spot rate path") {
    const G2Params p{0.1, 0.2, 0.01, 0.02, 0.5};
    std::vector<double> zero(4, 0.0);
    for (double r : spot_rate_path(zero, zero, p, 5.0)) CHECK(r == 0.0);

    const std::vector<double> x = {0.01, -0.02, 0.03};
    const std::vector<double> y = {0.02, 0.005, -0.01};
    const auto short_end = spot_rate_path(x, y, p, 1e-8);
    for (std::size_t k = 0; k < x.size(); ++k)
        CHECK(std::abs(short_end[k] - (x[k] + y[k])) <= 1e-6 * std::abs(x[k] + y[k]));

    const std::vector<double> x1 = {0.01};
    const std::vector<double> y1 = {0.02};
    const double oracle = (1.0 - std::exp(-0.1)) / 0.1 * 0.01 + (1.0 - std::exp(-0.2)) / 0.2 * 0.02;
    const double r = spot_rate_path(x1, y1, p, 1.0)[0];
    CHECK(r == doctest::Approx(oracle).epsilon(1e-12));
    // Rounded hand evaluation 0.95163 * 0.01 + 0.90635 * 0.02.
    CHECK(std::abs(r - 0.0276433) < 2e-7);

    std::vector<double> x2(x), y2(y);
    for (auto& v : x2) v *= 2.0;
    for (auto& v : y2) v *= 2.0;
    const auto base = spot_rate_path(x, y, p, 3.0);
    const auto doubled = spot_rate_path(x2, y2, p, 3.0);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(doubled[k] == doctest::Approx(2.0 * base[k]).epsilon(1e-14));
}

TEST_CASE("variance at its fixed point without vol of vol") {
    const HestonParams p{1.0, 0.2, 1e-300, 0.2, 0.0, 0.0, 0.0};
    std::vector<double> z(1000);
    NormalStream s(4);
    for (auto& v : z) v = s();
    const auto path = simulate_heston(p, z, z, 1.0 / 250.0);
    for (double v : path.v) CHECK(v == 0.2);
}

TEST_CASE("Bates with zero intensity equals Heston bitwise") {
    const HestonParams h{1.0, 0.2, 0.3, 0.1, -0.8, 0.01, 0.0};
    HybridSystemSpec heston = single_heston(h);
    HybridSystemSpec bates;
    bates.components = {BatesParams{h, BatesJumpParams{0.0, -0.1, 0.2}}};
    bates.full_correlation = heston.full_correlation;
    SimulationConfig cfg;
    cfg.n_steps = 2000;
    cfg.dt = 1.0 / 250.0;
    cfg.seed = 99;
    const auto a = simulate_system(heston, cfg);
    const auto b = simulate_system(bates, cfg);
    CHECK(a.states.at("c0.s") == b.states.at("c0.s"));
    CHECK(a.states.at("c0.v") == b.states.at("c0.v"));
}

TEST_CASE("jumps move the log price only") {
    const HestonParams h{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0};
    HybridSystemSpec heston = single_heston(h);
    HybridSystemSpec bates;
    bates.components = {BatesParams{h, BatesJumpParams{50.0, -0.05, 0.1}}};
    bates.full_correlation = heston.full_correlation;
    SimulationConfig cfg;
    cfg.n_steps = 500;
    cfg.dt = 1.0 / 250.0;
    cfg.seed = 7;
    const auto a = simulate_system(heston, cfg);
    const auto b = simulate_system(bates, cfg);
    CHECK(a.states.at("c0.v") == b.states.at("c0.v"));
    CHECK(a.states.at("c0.s") != b.states.at("c0.s"));
}

TEST_CASE("CIR mean at four years") {
    const HestonParams p{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0};
    const HybridSystemSpec spec = single_heston(p);
    SimulationConfig cfg;
    cfg.n_steps = 1000;
    cfg.dt = 4.0 / 1000.0;
    double sum = 0.0;
    for (int m = 0; m < 1000; ++m) {
        cfg.seed = derive_seed(77, m);
        sum += simulate_system(spec, cfg).states.at("c0.v").back();
    }
    const double oracle = 0.2 + (0.1 - 0.2) * std::exp(-4.0);
    CHECK(std::abs(oracle - 0.198168) < 1e-6);
    CHECK(std::abs(sum / 1000.0 / oracle - 1.0) < 0.05);
}

TEST_CASE("stored variance is never negative") {
    const HestonParams p{0.5, 0.04, 1.0, 0.04, -0.7, 0.0, 0.0};  // violates Feller
    CHECK_FALSE(feller_condition(p));
    CHECK(feller_condition(HestonParams{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0}));
    const HybridSystemSpec spec = single_heston(p);
    for (bool absorb : {false, true}) {
        SimulationConfig cfg;
        cfg.n_steps = 5000;
        cfg.dt = 1.0 / 250.0;
        cfg.seed = 3;
        cfg.absorb_variance_at_zero = absorb;
        const auto paths = simulate_system(spec, cfg);
        const auto& v = paths.states.at("c0.v");
        CHECK(*std::min_element(v.begin(), v.end()) >= 0.0);
        CHECK(std::count(v.begin(), v.end(), 0.0) > 0);
    }
}

TEST_CASE("simulation is deterministic and emits the panel") {
    const HybridSystemSpec spec = table_preset("g2heston");
    SimulationConfig cfg;
    cfg.n_steps = 300;
    cfg.dt = 1.0 / 250.0;
    cfg.seed = 12;
    const auto a = simulate_system(spec, cfg);
    const auto b = simulate_system(spec, cfg);
    CHECK(a.states == b.states);
    CHECK(a.panel.series() == b.panel.series());
    CHECK(a.panel.length() == 301);
    CHECK(a.panel.times()[300] == doctest::Approx(1.2));
    CHECK(a.panel.contains(SeriesKey::spot_rate(0, 1.0)));
    CHECK(a.panel.contains(SeriesKey::spot_rate(0, 10.0)));
    CHECK(a.panel.contains(SeriesKey::log_price(1)));
    CHECK(a.panel.contains(SeriesKey::variance(1)));
    CHECK(a.panel.at(SeriesKey::spot_rate(0, 1.0)) ==
          spot_rate_path(a.states.at("c0.x"), a.states.at("c0.y"), *spec.components[0].g2(), 1.0));

    cfg.seed = 13;
    CHECK(simulate_system(spec, cfg).states != a.states);
}

TEST_CASE("step-normalized rate observables do not depend on dt") {
    const HybridSystemSpec spec = table_preset("g2g2");
    SimulationConfig cfg;
    cfg.n_steps = 200;
    cfg.seed = 8;
    cfg.rate_observables = RateObservableModel::StepNormalizedLoading;
    cfg.dt = kDailyDt;
    const auto a = simulate_system(spec, cfg);
    cfg.dt = kIntradayDt;
    const auto b = simulate_system(spec, cfg);
    for (const auto& [key, values] : a.panel.series()) CHECK(values == b.panel.at(key));
}

TEST_CASE("coupled short rate enters the log-price drift") {
    const HybridSystemSpec spec = table_preset("g2heston");
    SimulationConfig cfg;
    cfg.n_steps = 400;
    cfg.dt = 1.0 / 250.0;
    cfg.seed = 21;
    const auto plain = simulate_system(spec, cfg);
    cfg.coupled_rate_component = 0;
    const auto coupled = simulate_system(spec, cfg);
    CHECK(plain.states.at("c1.v") == coupled.states.at("c1.v"));
    // s differs exactly by the integrated short rate.
    const auto& x = coupled.states.at("c0.x");
    const auto& y = coupled.states.at("c0.y");
    double integral = 0.0;
    for (std::size_t k = 0; k < 400; ++k) integral += (x[k] + y[k]) * cfg.dt;
    CHECK(coupled.states.at("c1.s").back() - plain.states.at("c1.s").back() == doctest::Approx(integral).epsilon(1e-9));

    cfg.coupled_rate_component = 1;
    CHECK_THROWS_AS(simulate_system(spec, cfg), DimensionError);
}

TEST_CASE("invalid simulation requests") {
    HybridSystemSpec spec = table_preset("g2g2");
    SimulationConfig cfg;
    cfg.n_steps = 0;
    cfg.dt = 0.01;
    CHECK_THROWS_AS(simulate_system(spec, cfg), DimensionError);
    cfg.n_steps = 10;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(simulate_system(spec, cfg), DimensionError);
    cfg.dt = 0.01;
    spec.full_correlation.reset();
    CHECK_THROWS_AS(simulate_system(spec, cfg), DimensionError);

    HybridSystemSpec single;
    single.components = {SingleStateParams{}};
    single.full_correlation = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(simulate_system(single, cfg), Error);
}

}
