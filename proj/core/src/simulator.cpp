#include "hybridcorr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/linalg.hpp"
#include "hybridcorr/psd_repair.hpp"
#include "hybridcorr/rng.hpp"

namespace hcorr {

namespace {

constexpr std::uint64_t kDiffusionStream = 0;
constexpr std::uint64_t kJumpStreamBase = 1000;

}  // namespace

Eigen::MatrixXd correlated_normals(const Eigen::MatrixXd& corr, std::size_t n_steps,
                                   std::uint64_t seed) {
    if (corr.rows() != corr.cols()) throw DimensionError("correlation matrix must be square");
    if (!is_psd(corr))
        throw RepairError("correlation matrix is not positive semidefinite; repair it first");
    const double scale = std::max(1.0, corr.diagonal().maxCoeff());
    const auto factor = linalg::pivoted_cholesky(corr, kDefaultPsdTolerance * scale);
    if (!factor) throw RepairError("correlation matrix is not positive semidefinite");

    const Eigen::Index n = corr.rows();
    const auto steps = static_cast<Eigen::Index>(n_steps);
    Eigen::MatrixXd z(steps, n);
    NormalStream normal(derive_seed(seed, kDiffusionStream));
    for (Eigen::Index k = 0; k < steps; ++k)
        for (Eigen::Index c = 0; c < n; ++c) z(k, c) = normal();
    return z * factor->transpose();
}

Eigen::MatrixXd correlated_increments(const BlockCorrelationMatrix& full_matrix,
                                      std::size_t n_steps, double dt, std::uint64_t seed) {
    if (!(dt > 0.0)) throw DimensionError("dt must be > 0");
    return std::sqrt(dt) * correlated_normals(full_matrix.entries(), n_steps, seed);
}

double ou_step_stdev(double a, double sigma, double dt) {
    // (1 - e^{-2a dt}) / (2a), written with expm1 to stay accurate for small a dt.
    return sigma * std::sqrt(-std::expm1(-2.0 * a * dt) / (2.0 * a));
}

namespace {

std::vector<double> ou_path(double a, double sigma, std::span<const double> z, double dt,
                            double noise_floor) {
    const double decay = std::exp(-a * dt);
    double sd = ou_step_stdev(a, sigma, dt);
    if (sd < noise_floor) sd = 0.0;
    std::vector<double> x(z.size() + 1);
    x[0] = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) x[k + 1] = x[k] * decay + sd * z[k];
    return x;
}

std::vector<double> cumulative(std::span<const double> z) {
    std::vector<double> w(z.size() + 1);
    w[0] = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) w[k + 1] = w[k] + z[k];
    return w;
}

}  // namespace

G2Path simulate_g2(const G2Params& params, std::span<const double> z_x, std::span<const double> z_y,
                   double dt, double noise_floor) {
    if (z_x.size() != z_y.size()) throw DimensionError("simulate_g2: driver lengths differ");
    if (!(dt > 0.0)) throw DimensionError("dt must be > 0");
    return G2Path{ou_path(params.a, params.sigma, z_x, dt, noise_floor),
                  ou_path(params.b, params.eta, z_y, dt, noise_floor)};
}

std::vector<double> simulate_g1(const G1Params& params, std::span<const double> z, double dt,
                                double noise_floor) {
    if (!(dt > 0.0)) throw DimensionError("dt must be > 0");
    return ou_path(params.a, params.sigma, z, dt, noise_floor);
}

std::vector<double> spot_rate_path(std::span<const double> x, std::span<const double> y,
                                   const G2Params& params, double tau) {
    if (x.size() != y.size()) throw DimensionError("spot_rate_path: state lengths differ");
    const double lx = loading_c(params.a, 1.0, tau);
    const double ly = loading_c(params.b, 1.0, tau);
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) r[k] = lx * x[k] + ly * y[k];
    return r;
}

std::vector<double> spot_rate_path(std::span<const double> x, const G1Params& params, double tau) {
    const double lx = loading_c(params.a, 1.0, tau);
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) r[k] = lx * x[k];
    return r;
}

HestonPath simulate_heston(const HestonParams& p, std::span<const double> z_s,
                           std::span<const double> z_v, double dt, const HestonSimOptions& options) {
    if (z_s.size() != z_v.size()) throw DimensionError("simulate_heston: driver lengths differ");
    if (!(dt > 0.0)) throw DimensionError("dt must be > 0");
    const std::size_t n = z_s.size();
    if (!options.short_rate.empty() && options.short_rate.size() < n)
        throw DimensionError("simulate_heston: short-rate path too short");

    const BatesJumpParams* jumps = options.jumps;
    const bool jumping = jumps != nullptr && jumps->lambda > 0.0;
    const double compensator =
        jumping ? jumps->lambda * (std::exp(jumps->mu_j + 0.5 * jumps->sigma_j * jumps->sigma_j) - 1.0)
                : 0.0;
    std::mt19937_64 jump_engine(options.jump_seed);
    std::poisson_distribution<int> jump_count(jumping ? jumps->lambda * dt : 1.0);
    std::normal_distribution<double> jump_size(jumping ? jumps->mu_j : 0.0,
                                               jumping ? jumps->sigma_j : 1.0);

    const double sqdt = std::sqrt(dt);
    HestonPath out;
    out.s.resize(n + 1);
    out.v.resize(n + 1);
    out.s[0] = 0.0;
    double v = p.v0;
    out.v[0] = std::max(v, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double vp = std::max(v, 0.0);
        const double root = std::sqrt(vp);
        const double r = options.short_rate.empty() ? p.r_tilde : options.short_rate[k];
        double drift = r - p.q_tilde - 0.5 * vp;
        if (jumping) drift -= compensator;
        double s_next = out.s[k] + drift * dt + root * sqdt * z_s[k];
        if (jumping) {
            const int count = jump_count(jump_engine);
            for (int m = 0; m < count; ++m) s_next += jump_size(jump_engine);
        }
        out.s[k + 1] = s_next;
        v = v + p.kappa * (p.theta - vp) * dt + p.xi * root * sqdt * z_v[k];
        if (options.absorb_variance_at_zero) v = std::max(v, 0.0);
        out.v[k + 1] = std::max(v, 0.0);
    }
    return out;
}

bool feller_condition(const HestonParams& p) {
    return 2.0 * p.kappa * p.theta > p.xi * p.xi;
}

PathSet simulate_system(const HybridSystemSpec& system, const SimulationConfig& config) {
    if (config.n_steps < 1) throw DimensionError("n_steps must be >= 1");
    if (!(config.dt > 0.0)) throw DimensionError("dt must be > 0");
    if (!system.full_correlation)
        throw DimensionError("simulation needs the full correlation matrix");
    if (const auto v = validate_system(system); !v.empty())
        throw DimensionError("invalid system: " + v.front());

    const Eigen::MatrixXd z = correlated_normals(*system.full_correlation, config.n_steps, config.seed);
    const auto column = [&](Eigen::Index c) {
        return std::span<const double>(z.col(c).data(), static_cast<std::size_t>(z.rows()));
    };

    const auto& comps = system.components;
    std::vector<Eigen::Index> offsets;
    Eigen::Index off = 0;
    for (const auto& c : comps) {
        offsets.push_back(off);
        off += static_cast<Eigen::Index>(c.state_count());
    }

    PathSet out;
    ObservationPanel::SeriesMap series;
    const auto label = [](std::size_t i, const char* state) {
        return "c" + std::to_string(i) + "." + state;
    };

    // Rate components first so a coupled Heston drift can read r_t.
    std::map<std::size_t, std::vector<double>> short_rates;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        if (!c.is_rate()) continue;
        const auto tenors = tenors_for(config.tenors, i, c);
        if (const auto* g = c.g2()) {
            auto path = simulate_g2(*g, column(offsets[i]), column(offsets[i] + 1), config.dt,
                                    config.noise_floor);
            std::vector<double> r(path.x.size());
            for (std::size_t k = 0; k < r.size(); ++k) r[k] = path.x[k] + path.y[k];
            short_rates[i] = std::move(r);
            if (config.rate_observables == RateObservableModel::ExactOu) {
                for (double tau : tenors)
                    series[SeriesKey::spot_rate(i, tau)] = spot_rate_path(path.x, path.y, *g, tau);
            } else {
                const auto wx = cumulative(column(offsets[i]));
                const auto wy = cumulative(column(offsets[i] + 1));
                for (double tau : tenors) {
                    const double cx = loading_c(g->a, g->sigma, tau);
                    const double cy = loading_c(g->b, g->eta, tau);
                    std::vector<double> rate(wx.size());
                    for (std::size_t k = 0; k < wx.size(); ++k) rate[k] = cx * wx[k] + cy * wy[k];
                    series[SeriesKey::spot_rate(i, tau)] = std::move(rate);
                }
            }
            out.states[label(i, "x")] = std::move(path.x);
            out.states[label(i, "y")] = std::move(path.y);
        } else {
            const auto& g1 = *c.g1();
            auto x = simulate_g1(g1, column(offsets[i]), config.dt, config.noise_floor);
            short_rates[i] = x;
            if (config.rate_observables == RateObservableModel::ExactOu) {
                for (double tau : tenors) series[SeriesKey::spot_rate(i, tau)] = spot_rate_path(x, g1, tau);
            } else {
                const auto w = cumulative(column(offsets[i]));
                for (double tau : tenors) {
                    const double cx = loading_c(g1.a, g1.sigma, tau);
                    std::vector<double> rate(w.size());
                    for (std::size_t k = 0; k < w.size(); ++k) rate[k] = cx * w[k];
                    series[SeriesKey::spot_rate(i, tau)] = std::move(rate);
                }
            }
            out.states[label(i, "x")] = std::move(x);
        }
    }

    std::span<const double> coupled;
    if (config.coupled_rate_component) {
        const auto it = short_rates.find(*config.coupled_rate_component);
        if (it == short_rates.end())
            throw DimensionError("coupled_rate_component must name a G1/G2 component");
        coupled = it->second;
    }

    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        if (c.is_rate()) continue;
        if (!c.is_heston())
            throw Error("simulation of single-state (local volatility) components is not supported");
        HestonSimOptions opts;
        opts.jumps = c.jumps();
        opts.jump_seed = derive_seed(config.seed, kJumpStreamBase + i);
        opts.short_rate = coupled;
        opts.absorb_variance_at_zero = config.absorb_variance_at_zero;
        auto path = simulate_heston(*c.heston(), column(offsets[i]), column(offsets[i] + 1),
                                    config.dt, opts);
        series[SeriesKey::log_price(i)] = path.s;
        series[SeriesKey::variance(i)] = path.v;
        out.states[label(i, "s")] = std::move(path.s);
        out.states[label(i, "v")] = std::move(path.v);
    }

    std::vector<double> times(config.n_steps + 1);
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = static_cast<double>(k) * config.dt;
    out.panel = ObservationPanel(std::move(times), std::move(series));
    return out;
}

}  // namespace hcorr
