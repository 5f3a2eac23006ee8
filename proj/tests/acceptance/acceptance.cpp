// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hybridcorr/completion.hpp"
#include "hybridcorr/estimator.hpp"
#include "hybridcorr/linalg.hpp"
#include "hybridcorr/psd_repair.hpp"
#include "hybridcorr/rng.hpp"
#include "hybridcorr/simulator.hpp"
#include "hybridcorr/study.hpp"

using namespace hcorr;

namespace {

// Every study below uses the default base seed of StudyConfig (20240601).
constexpr std::size_t kTrials = 1000;
constexpr std::size_t kSteps = 10000;

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double pct(double v) { return 100.0 * v; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

StudyReport study(const char* preset, std::size_t n, double dt, double factor = 1.0) {
    StudyConfig c;
    c.system = table_preset(preset);
    c.n_steps = n;
    c.dt = dt;
    c.n_trials = kTrials;
    c.factor = factor;
    return run_study(c);
}

std::string biases(const StudyReport& r) {
    std::string s;
    for (const auto& e : r.entries) s += " " + e.label + "=" + fmt("%+.2f%%", pct(e.bias));
    return s;
}

std::string stderrs(const StudyReport& r) {
    std::string s;
    for (const auto& e : r.entries) s += " " + e.label + "=" + fmt("%.2f%%", pct(e.stderr_));
    return s;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

Check criterion1() {
    Check c;
    const auto daily = study("g2g2", kSteps, kDailyDt);
    const auto intraday = study("g2g2", kSteps, kIntradayDt);
    const auto coarse = study("g2g2", 100, kDailyDt);
    const std::array<double, 4> reference = {0.0095, 0.0095, 0.0088, 0.0079};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& e = daily.entries[k];
        c.require(std::abs(e.bias) <= 0.003, e.label + " |bias| <= 0.3%");
        c.require(std::abs(e.stderr_ / reference[k] - 1.0) <= 0.35, e.label + " stderr within 35% of reference");
        c.require(within(coarse.entries[k].stderr_, 0.075, 0.12), e.label + " n=100 stderr in [7.5%, 12%]");
        c.require(e.mean == intraday.entries[k].mean && e.stderr_ == intraday.entries[k].stderr_,
                  e.label + " bitwise dt invariance");
    }
    c.detail << " n=10000 bias:" << biases(daily) << "; stderr:" << stderrs(daily) << "; n=100 stderr:"
             << stderrs(coarse);
    return c;
}

Check criterion2() {
    Check c;
    const auto intraday = study("g2heston", kSteps, kIntradayDt);
    const auto daily = study("g2heston", kSteps, kDailyDt);
    for (const auto& e : intraday.entries) c.require(std::abs(e.bias) <= 0.005, e.label + " intraday |bias| <= 0.5%");
    const double yv = daily.entry("y0/v1").bias;
    const double ys = daily.entry("y0/s1").bias;
    c.require(within(yv, 0.005, 0.018), "daily y0/v1 bias in [0.5%, 1.8%]");
    c.require(within(ys, -0.014, -0.003), "daily y0/s1 bias in [-1.4%, -0.3%]");
    c.detail << " intraday bias:" << biases(intraday) << "; daily bias:" << biases(daily);
    return c;
}

Check criterion3() {
    Check c;
    const auto daily = study("hestonheston", kSteps, kDailyDt);
    const auto intraday = study("hestonheston", kSteps, kIntradayDt);
    c.require(within(daily.entry("v0/v1").bias, -0.019, -0.007), "daily v0/v1 bias in [-1.9%, -0.7%]");
    for (const auto& e : intraday.entries) c.require(std::abs(e.bias) <= 0.005, e.label + " intraday |bias| <= 0.5%");
    c.detail << " daily bias:" << biases(daily) << "; intraday bias:" << biases(intraday);
    return c;
}

Check criterion4() {
    Check c;
    const auto r = study("g2g2", kSteps, kDailyDt, 0.7);
    const double xx = r.entry("x0/x1").bias, xy = r.entry("x0/y1").bias;
    const double yx = r.entry("y0/x1").bias, yy = r.entry("y0/y1").bias;
    c.require(within(yy, -0.05, -0.025), "y0/y1 bias in [-5.0%, -2.5%]");
    c.require(within(xx, -0.010, 0.003), "x0/x1 bias in [-1.0%, 0.3%]");
    // The 20% and 30% entries swap order in the reference table as well, so the
    // ordering is checked between the 10%, middle and 40% groups.
    c.require(std::abs(xx) < std::min(std::abs(xy), std::abs(yx)), "|bias| of 10% entry below the middle entries");
    c.require(std::max(std::abs(xy), std::abs(yx)) < std::abs(yy), "|bias| of 40% entry above the middle entries");
    c.detail << " bias:" << biases(r);
    return c;
}

Check criterion5() {
    Check c;
    const auto r = study("g2heston", kSteps, kDailyDt, 0.7);
    c.require(within(r.entry("y0/v1").bias, 0.018, 0.038), "y0/v1 bias in [1.8%, 3.8%]");
    c.detail << " bias:" << biases(r);
    return c;
}

double min_eig(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Check criterion6() {
    Check c;
    Eigen::MatrixXd m0(2, 2);
    m0 << 1.0, 1.2, 1.2, 1.0;
    const auto simple = shrink(m0, Eigen::MatrixXd::Identity(2, 2), 1e-7);
    c.require(std::abs(simple.alpha_star - 1.0 / 6.0) <= 1e-6, "alpha* = 1/6 on the 2x2 example");

    std::mt19937_64 gen(derive_seed(6, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<std::size_t> blocks = {2, 2, 2};
    double worst_gap = 0.0, worst_eig = 1.0;
    bool blocks_kept = true;
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Identity(6, 6);
        for (int r = 0; r < 6; ++r)
            for (int k = r + 1; k < 6; ++k) d(r, k) = d(k, r) = (r / 2 == k / 2) ? 0.95 * u(gen) : u(gen);
        const BlockCorrelationMatrix draft(d, blocks);
        const auto rep = repair(draft);
        const Eigen::MatrixXd m1 = block_diagonal_target(draft);
        const Eigen::MatrixXd clamped = clamp_cross_entries(d, blocks).matrix;
        double oracle = 1.0;
        for (int k = 0; k <= 10000; ++k) {
            const double a = k / 10000.0;
            if (min_eig((1.0 - a) * clamped + a * m1) >= -1e-10) {
                oracle = a;
                break;
            }
        }
        worst_gap = std::max(worst_gap, std::abs(rep.alpha_star - oracle));
        worst_eig = std::min(worst_eig, min_eig(rep.matrix.entries()));
        for (std::size_t b = 0; b < 3; ++b) blocks_kept &= (rep.matrix.block(b, b) == draft.block(b, b));
    }
    c.require(worst_gap <= 2e-4, "alpha* within 2e-4 of grid oracle");
    c.require(worst_eig >= -1e-10, "min eigenvalue >= -1e-10");
    c.require(blocks_kept, "diagonal blocks preserved bitwise");
    c.detail << " 2x2 alpha*=" << fmt("%.9f", simple.alpha_star) << "; max |alpha*-oracle|=" << fmt("%.2e", worst_gap)
             << "; min eigenvalue=" << fmt("%.2e", worst_eig);
    return c;
}

// Independent construction of the G2/G2 coefficient matrix.
Eigen::Matrix4d g2g2_oracle(const G2Params& p, const G2Params& q, std::array<double, 2> tp,
                            std::array<double, 2> tq) {
    const auto load = [](double k, double s, double tau) { return s * (1.0 - std::exp(-k * tau)) / (k * tau); };
    const auto row = [&](const G2Params& g, double tau) {
        const double c1 = load(g.a, g.sigma, tau), c2 = load(g.b, g.eta, tau);
        const double d = std::sqrt(c1 * c1 + c2 * c2 + 2.0 * c1 * c2 * g.rho_xy);
        return std::array<double, 2>{c1 / d, c2 / d};
    };
    Eigen::Matrix4d a;
    int r = 0;
    for (double t1 : tp)
        for (double t2 : tq) {
            const auto u = row(p, t1), v = row(q, t2);
            a.row(r++) << u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1];
        }
    return a;
}

Check criterion7() {
    Check c;
    const G2Params p{0.1, 0.2, 0.01, 0.02, 0.5};
    const G2Params q{0.15, 0.25, 0.015, 0.025, 0.55};
    const auto sys = g2g2_system(p, q, {1.0, 10.0}, {1.0, 10.0});
    const Eigen::Matrix4d oracle = g2g2_oracle(p, q, {1.0, 10.0}, {1.0, 10.0});
    const double layout_gap = (sys.matrix - oracle).cwiseAbs().maxCoeff();
    c.require(layout_gap <= 1e-14, "coefficient matrix matches independent construction");
    std::mt19937_64 gen(derive_seed(7, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Eigen::Vector4d rho;
        for (int k = 0; k < 4; ++k) rho(k) = u(gen);
        const Eigen::VectorXd back = linalg::solve_dense(sys.matrix, sys.matrix * rho);
        worst = std::max(worst, (back - rho).cwiseAbs().maxCoeff());
    }
    c.require(worst <= 1e-10, "round-trip error <= 1e-10");
    c.detail << " max round-trip error=" << fmt("%.2e", worst) << "; condition number="
             << fmt("%.3g", sys.condition_number);
    return c;
}

Check criterion8() {
    Check c;
    const auto [a, b] = complete_g2_heston(0.30, 0.20, -0.8);
    const auto hh = complete_heston_heston(0.5, -0.8, -0.7);
    c.require(std::abs(a + 0.24) <= 1e-15 && std::abs(b + 0.16) <= 1e-15, "G2/Heston worked example");
    c.require(std::abs(hh[0] + 0.35) <= 1e-15 && std::abs(hh[1] + 0.40) <= 1e-15 && std::abs(hh[2] - 0.28) <= 1e-15,
              "Heston/Heston worked example");
    std::mt19937_64 gen(derive_seed(8, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double xs = u(gen), ys = u(gen), rj = u(gen);
        const auto [xv, yv] = complete_g2_heston(xs, ys, rj);
        worst = std::max(worst, std::abs(xs * yv - xv * ys));
        const double ss = u(gen), ri = u(gen), rj2 = u(gen);
        const auto f = complete_heston_heston(ss, ri, rj2);
        worst = std::max(worst, std::abs(ss * f[2] - f[0] * f[1]));
    }
    c.require(worst <= 1e-14, "2x2 minors <= 1e-14");
    c.detail << " max |minor|=" << fmt("%.2e", worst);
    return c;
}

Check criterion9() {
    Check c;
    // Series branch just below the switch point vs the closed form just above.
    const double x = 1e-8;
    const double below = loading_c(std::nextafter(x, 0.0), 1.0, 1.0);
    const double above = loading_c(x, 1.0, 1.0);
    const double jump = std::abs(below - above) / std::abs(above);
    c.require(jump <= 1e-12, "loading branch continuity");
    c.require(std::abs(loading_c(0.0, 0.7, 5.0) - 0.7) <= 1e-15, "loading limit at lambda = 0");

    double worst_d = 0.0;
    std::mt19937_64 gen(derive_seed(9, 0));
    std::uniform_real_distribution<double> k(0.01, 1.0), s(0.001, 0.05), tau(0.5, 30.0);
    for (int t = 0; t < 1000; ++t) {
        const double l1 = k(gen), l2 = k(gen), g1 = s(gen), g2 = s(gen), tt = tau(gen);
        const double c1 = g1 * (1.0 - std::exp(-l1 * tt)) / (l1 * tt);
        const double c2 = g2 * (1.0 - std::exp(-l2 * tt)) / (l2 * tt);
        worst_d = std::max(worst_d, std::abs(normalizer_d(l1, l2, g1, g2, tt, 1.0) - std::abs(c1 + c2)));
        worst_d = std::max(worst_d, std::abs(normalizer_d(l1, l2, g1, g2, tt, -1.0) - std::abs(c1 - c2)));
    }
    c.require(worst_d <= 1e-14, "normalizer identities at rho = +-1");

    const G2Params p{0.1, 0.2, 0.01, 0.02, 1.0};
    const G2Params q{0.15, 0.25, 0.015, 0.025, 1.0};
    const auto sys = g2g2_system(p, q, {1.0, 10.0}, {1.0, 10.0});
    const double worst_row = (sys.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff();
    c.require(worst_row <= 1e-12, "row sums equal 1 with unit inner correlation");
    c.detail << " branch jump=" << fmt("%.2e", jump) << "; normalizer error=" << fmt("%.2e", worst_d)
             << "; row-sum error=" << fmt("%.2e", worst_row);
    return c;
}

Check criterion10() {
    Check c;
    const std::size_t paths = 1000;

    // OU: exact transitions to t = 40y. The variance is pooled over the window
    // t in [30, 40] (already stationary to 0.25%) as well as reported at t = 40.
    const G1Params g{0.1, 0.01};
    const std::size_t steps = 1000, window_start = 750;
    double sum = 0.0, sq = 0.0, pooled_sum = 0.0, pooled_sq = 0.0, pooled_n = 0.0;
    for (std::size_t m = 0; m < paths; ++m) {
        const auto z = correlated_normals(Eigen::MatrixXd::Identity(1, 1), steps, derive_seed(10, m));
        const auto x = simulate_g1(g, std::span<const double>(z.data(), steps), 0.04);
        sum += x.back();
        sq += x.back() * x.back();
        for (std::size_t k = window_start; k <= steps; ++k) {
            pooled_sum += x[k];
            pooled_sq += x[k] * x[k];
            pooled_n += 1.0;
        }
    }
    const double n = static_cast<double>(paths);
    const double ou_terminal = (sq - sum * sum / n) / (n - 1.0);
    const double ou_var = (pooled_sq - pooled_sum * pooled_sum / pooled_n) / (pooled_n - 1.0);
    const double ou_target = g.sigma * g.sigma / (2.0 * g.a);
    c.require(std::abs(ou_var / ou_target - 1.0) <= 0.05, "OU stationary variance within 5%");

    // CIR mean at T = 4y.
    const HestonParams h{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0};
    const double cir_target = h.theta + (h.v0 - h.theta) * std::exp(-h.kappa * 4.0);
    double vsum = 0.0;
    bool nonneg = true;
    for (std::size_t m = 0; m < paths; ++m) {
        Eigen::Matrix2d corr;
        corr << 1.0, h.rho_sv, h.rho_sv, 1.0;
        const Eigen::MatrixXd z = correlated_normals(corr, 1000, derive_seed(11, m));
        const std::span<const double> zs(z.col(0).data(), 1000), zv(z.col(1).data(), 1000);
        const auto path = simulate_heston(h, zs, zv, 0.004);
        vsum += path.v.back();
        nonneg &= std::all_of(path.v.begin(), path.v.end(), [](double v) { return v >= 0.0; });
    }
    const double cir_mean = vsum / n;
    c.require(std::abs(cir_mean / cir_target - 1.0) <= 0.05, "CIR mean within 5%");

    // Feller-violating parameters still never store a negative variance.
    const HestonParams wild{0.5, 0.04, 1.0, 0.04, -0.7, 0.0, 0.0};
    for (std::size_t m = 0; m < 200; ++m) {
        Eigen::Matrix2d corr;
        corr << 1.0, wild.rho_sv, wild.rho_sv, 1.0;
        const Eigen::MatrixXd z = correlated_normals(corr, 1000, derive_seed(12, m));
        const auto path = simulate_heston(wild, std::span<const double>(z.col(0).data(), 1000),
                                          std::span<const double>(z.col(1).data(), 1000), 0.004);
        nonneg &= std::all_of(path.v.begin(), path.v.end(), [](double v) { return v >= 0.0; });
    }
    c.require(nonneg, "variance paths nonnegative");

    // Bates with lambda = 0 is Heston, bit for bit.
    HybridSystemSpec heston, bates;
    Eigen::MatrixXd corr(2, 2);
    corr << 1.0, h.rho_sv, h.rho_sv, 1.0;
    heston.components = {ComponentSpec(h)};
    heston.full_correlation = corr;
    bates.components = {ComponentSpec(BatesParams{h, BatesJumpParams{0.0, -0.1, 0.2}})};
    bates.full_correlation = corr;
    SimulationConfig sim;
    sim.n_steps = 2000;
    sim.dt = kDailyDt;
    sim.seed = 13;
    const auto a = simulate_system(heston, sim);
    const auto b = simulate_system(bates, sim);
    c.require(a.states == b.states && a.panel.series() == b.panel.series(), "Bates with lambda = 0 equals Heston");

    c.detail << " OU variance=" << fmt("%.4e", ou_var) << " pooled over t in [30, 40], "
             << fmt("%.4e", ou_terminal) << " at t = 40 (target " << fmt("%.4e", ou_target) << "); CIR mean=" << fmt("%.5f", cir_mean) << " (target " << fmt("%.6f", cir_target) << ")";
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Check()>>> criteria = {
        {"1 G2/G2 known parameters", criterion1},
        {"2 G2/Heston known parameters", criterion2},
        {"3 Heston/Heston known parameters", criterion3},
        {"4 G2/G2 under-estimated parameters", criterion4},
        {"5 G2/Heston under-estimated parameters", criterion5},
        {"6 shrinking", criterion6},
        {"7 linear-system round trip", criterion7},
        {"8 completion algebra", criterion8},
        {"9 coefficient identities", criterion9},
        {"10 simulator moments", criterion10},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << " [exception: " << e.what() << "]";
        }
        if (!c.ok) ++failures;
        std::printf("%s criterion %s:%s\n", c.ok ? "PASS" : "FAIL", name, c.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
