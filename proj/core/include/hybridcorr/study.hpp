#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hybridcorr/core_types.hpp"
#include "hybridcorr/estimator.hpp"
#include "hybridcorr/simulator.hpp"

namespace hcorr {

inline constexpr double kIntradayDt = 0.01 / 250.0;
inline constexpr double kDailyDt = 1.0 / 250.0;
/// Spot-rate tenors used by the study for every G2 component.
inline constexpr double kStudyTenorShort = 10.0;
inline constexpr double kStudyTenorLong = 30.0;

struct StudyConfig {
    /// Simulation truth; must carry the full correlation matrix.
    HybridSystemSpec system;
    /// Estimation tenors; empty entries fall back to study_tenors(system).
    TenorMap tenors;
    std::size_t n_steps = 10000;
    double dt = kDailyDt;
    std::size_t n_trials = 1000;
    /// Multiplies a, b, sigma, eta and rho_xy of every rate component on the
    /// estimation side only.
    double factor = 1.0;
    std::uint64_t base_seed = 20240601;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Feed sqrt(v) as an ATM implied-vol series instead of v itself.
    bool use_iv_proxy = false;
    RateObservableModel rate_observables = RateObservableModel::StepNormalizedLoading;
};

struct StudyEntry {
    std::string label;  // e.g. "x0/s1"
    double truth = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double stderr_ = 0.0;
};

struct StudyReport {
    std::size_t n_steps = 0;
    double dt = 0.0;
    double factor = 1.0;
    std::size_t n_trials = 0;
    std::size_t failures = 0;
    double runtime_seconds = 0.0;
    std::vector<StudyEntry> entries;

    const StudyEntry& entry(std::string_view label) const;
};

/// Named systems with the reference parameter sets: "g2g2", "g2heston", "hestonheston".
HybridSystemSpec table_preset(std::string_view name);
std::vector<std::string> preset_names();

/// (10, 30) for every G2 component and 10 for every G1 component.
TenorMap study_tenors(const HybridSystemSpec& system);

/// Copy of `system` with all rate-model parameters (rho_xy included) multiplied by `factor`.
HybridSystemSpec scale_rate_parameters(const HybridSystemSpec& system, double factor);

/// Labels of every cross-block entry in pair order, "x0/s1" style.
std::vector<std::string> cross_entry_labels(const HybridSystemSpec& system);

/// Simulates n_trials independent paths, estimates every cross block per path
/// and reports bias and standard error per entry. Trials failing with an
/// estimation error are dropped; fewer than 90% successes throws EstimationError.
StudyReport run_study(const StudyConfig& config);

enum class TableFormat { Text, Csv };

/// One row pair per report (bias, then stderr in parentheses), percent units.
/// The CSV variant has one line per (report, entry).
std::string emit_table(const std::vector<StudyReport>& reports, TableFormat format);

/// Parses the CSV produced by emit_table.
std::vector<StudyReport> read_study_csv(std::istream& in);

}  // namespace hcorr
