#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hybridcorr/core_types.hpp"

namespace hcorr {

inline constexpr double kConditionWarning = 1e6;
inline constexpr double kSpacingRatioWarning = 10.0;

/// Default tenor pair per G2 side and single tenor per G1 side (years).
inline constexpr double kDefaultTenorShort = 1.0;
inline constexpr double kDefaultTenorLong = 10.0;

/// Spot-rate loading gamma * (1 - exp(-lambda tau)) / (lambda tau).
/// Uses gamma * (1 - x/2 + x^2/6) for x = lambda tau < 1e-8.
double loading_c(double lambda, double gamma, double tau);

/// sqrt(c1^2 + c2^2 + 2 c1 c2 rho): stdev scale of a G2 spot rate.
/// Throws ZeroVarianceError when both loadings vanish.
double normalizer_d(double lambda1, double lambda2, double gamma1, double gamma2, double tau,
                    double rho);

/// Normalized loadings (c1, c2) of a G2 spot rate of tenor tau on (W^x, W^y).
std::pair<double, double> g2_row(const G2Params& p, double tau);

enum class PairKind {
    G2G2,
    G2Heston,
    HestonHeston,
    G1G1,
    G1G2,
    G1Heston,
    G2Single,
    G1Single,
    HestonSingle,
    SingleSingle,
};

std::string_view to_string(PairKind kind);

/// Pair kind of an ordered component pair plus whether the pair had to be
/// swapped to reach the canonical orientation (e.g. Heston/G2 -> G2Heston).
struct PairClassification {
    PairKind kind;
    bool swapped = false;
};
PairClassification classify_pair(ComponentKind first, ComponentKind second);

/// Linear map from instantaneous correlations to limiting empirical correlations.
struct CoefficientSystem {
    Eigen::MatrixXd matrix;
    std::vector<std::string> rhs_labels;
    std::vector<std::string> unknown_labels;
    double condition_number = 0.0;
};

/// 4x4 G2/G2 system. Rows (p1,q1), (p1,q2), (p2,q1), (p2,q2); unknowns
/// (rho_xx, rho_xy, rho_yx, rho_yy). Throws SingularSystemError on equal tenors.
CoefficientSystem g2g2_system(const G2Params& params_i, const G2Params& params_j,
                              std::pair<double, double> taus_i, std::pair<double, double> taus_j);

/// 2x2 system mapping (rho_{x,.}, rho_{y,.}) of one G2 side to the empirical
/// correlations of its two spot rates with a single other driver. Used for
/// G2/Heston (twice), G2/Single and G1/G2.
CoefficientSystem g2_single_driver_system(const G2Params& params, std::pair<double, double> taus);

/// Sample correlation of the first differences of two level series.
double empirical_correlation(std::span<const double> series_a, std::span<const double> series_b);

/// Elementwise square of short-expiry ATM implied vols.
std::vector<double> proxy_variance(std::span<const double> iv_atm);

/// Tenors used for the rate components of a system (component index -> tenors).
using TenorMap = std::map<std::size_t, std::vector<double>>;

/// Tenors of component `index`, falling back to (1, 10) for G2 and (1) for G1.
std::vector<double> tenors_for(const TenorMap& tenors, std::size_t index,
                               const ComponentSpec& component);

struct PairEstimate {
    std::size_t i = 0;
    std::size_t j = 0;
    PairKind kind = PairKind::G2G2;
    Eigen::MatrixXd cross;                       // size_i x size_j, unclamped
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;  // entries left for completion
    std::vector<double> condition_numbers;
    bool out_of_range = false;
};

struct PairOptions {
    /// When false a missing variance series is an error; when true the affected
    /// entries are flagged in PairEstimate::missing.
    bool allow_missing_variance = false;
};

/// Estimates the cross block of components i and j from the panel.
PairEstimate estimate_pair(const ObservationPanel& panel, std::size_t i, const ComponentSpec& spec_i,
                           std::size_t j, const ComponentSpec& spec_j, const TenorMap& tenors,
                           PairOptions options = {});

struct EstimationDiagnostics {
    std::vector<PairEstimate> pairs;
    std::vector<std::string> warnings;
    std::size_t out_of_range_count = 0;
    bool incomplete = false;
    double spacing_ratio = 1.0;
};

struct EstimationResult {
    BlockCorrelationMatrix draft;
    /// True where the draft holds a placeholder 0 awaiting completion.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
    EstimationDiagnostics diagnostics;
};

/// Runs estimate_pair over every component pair and assembles the draft with
/// the calibrated diagonal blocks. Pairs missing a variance series are flagged
/// "incomplete" and left for the completion step.
EstimationResult estimate_all(const ObservationPanel& panel, const HybridSystemSpec& system,
                              const TenorMap& tenors);

}  // namespace hcorr
