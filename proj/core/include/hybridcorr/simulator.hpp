#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hybridcorr/core_types.hpp"
#include "hybridcorr/estimator.hpp"

namespace hcorr {

/// How spot-rate observables are derived from the simulated drivers.
enum class RateObservableModel {
    /// R^tau from the exact OU states x, y (physical units).
    ExactOu,
    /// Driftless loading form R^tau = c(a,sigma,tau) W^x + c(b,eta,tau) W^y with
    /// W accumulated from unit-variance steps. The series is a time-rescaled
    /// copy of the martingale part of R, so correlations of its differences are
    /// unchanged while the result no longer depends on dt at all.
    StepNormalizedLoading,
};

struct SimulationConfig {
    std::size_t n_steps = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    /// Full truncation keeps the raw (possibly negative) Euler variance and
    /// stores max(v, 0); absorbing floors the internal value as well.
    bool absorb_variance_at_zero = false;
    /// Per-step OU noise stdevs below this are treated as exactly zero.
    double noise_floor = 0.0;
    /// When set, Heston/Bates drifts use r_t = x_t (+ y_t) of this rate component
    /// instead of their deterministic r_tilde.
    std::optional<std::size_t> coupled_rate_component;
    RateObservableModel rate_observables = RateObservableModel::ExactOu;
    /// Spot-rate tenors emitted per rate component; defaults (1, 10) for G2 and 1 for G1.
    TenorMap tenors;
};

/// Per-state sample paths (length n_steps + 1) keyed "c{i}.{state}", plus the
/// derived observation panel.
struct PathSet {
    std::map<std::string, std::vector<double>> states;
    ObservationPanel panel;
};

/// Unit-variance normals with instantaneous correlation `corr`, one row per
/// step and one column per state. Throws RepairError for a non-PSD matrix.
Eigen::MatrixXd correlated_normals(const Eigen::MatrixXd& corr, std::size_t n_steps,
                                   std::uint64_t seed);

/// Brownian increments sqrt(dt) * correlated_normals(...).
Eigen::MatrixXd correlated_increments(const BlockCorrelationMatrix& full_matrix,
                                      std::size_t n_steps, double dt, std::uint64_t seed);

/// Conditional stdev of one exact OU step: sigma sqrt((1 - e^{-2 a dt}) / (2a)).
double ou_step_stdev(double a, double sigma, double dt);

struct G2Path {
    std::vector<double> x;
    std::vector<double> y;
};

/// Exact OU transitions from x0 = y0 = 0 driven by unit normals.
G2Path simulate_g2(const G2Params& params, std::span<const double> z_x, std::span<const double> z_y,
                   double dt, double noise_floor = 0.0);
std::vector<double> simulate_g1(const G1Params& params, std::span<const double> z, double dt,
                                double noise_floor = 0.0);

/// R^tau = (1 - e^{-a tau}) x / (a tau) + (1 - e^{-b tau}) y / (b tau).
std::vector<double> spot_rate_path(std::span<const double> x, std::span<const double> y,
                                   const G2Params& params, double tau);
std::vector<double> spot_rate_path(std::span<const double> x, const G1Params& params, double tau);

struct HestonPath {
    std::vector<double> s;
    std::vector<double> v;  // stored values, always >= 0
};

struct HestonSimOptions {
    const BatesJumpParams* jumps = nullptr;
    std::uint64_t jump_seed = 0;
    /// Short-rate path (length >= n_steps) replacing r_tilde in the s drift.
    std::span<const double> short_rate;
    bool absorb_variance_at_zero = false;
};

/// Full-truncation Euler for (s, v) from s0 = 0, v0; optional Bates jumps in s.
HestonPath simulate_heston(const HestonParams& params, std::span<const double> z_s,
                           std::span<const double> z_v, double dt, const HestonSimOptions& options = {});

/// 2 kappa theta > xi^2.
bool feller_condition(const HestonParams& params);

/// Simulates every component of `system` (which must carry a full correlation
/// matrix) and derives its observation panel: spot rates per tenor for rate
/// components, log price and true variance for Heston/Bates components.
PathSet simulate_system(const HybridSystemSpec& system, const SimulationConfig& config);

}  // namespace hcorr
