#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hcorr {

/// Two-factor additive Gaussian short-rate model, r = x + y (shift fixed to 0).
struct G2Params {
    double a = 0.0;       // mean reversion of x, 1/years
    double b = 0.0;       // mean reversion of y, 1/years
    double sigma = 0.0;   // volatility of x
    double eta = 0.0;     // volatility of y
    double rho_xy = 0.0;  // correlation of dW^x and dW^y
};

/// One-factor degenerate case.
struct G1Params {
    double a = 0.0;
    double sigma = 0.0;
};

/// Heston dynamics for s = log S and the variance v.
struct HestonParams {
    double kappa = 0.0;
    double theta = 0.0;
    double xi = 0.0;
    double v0 = 0.0;
    double rho_sv = 0.0;
    double r_tilde = 0.0;  // deterministic short rate
    double q_tilde = 0.0;  // deterministic dividend yield
};

/// Lognormal jump overlay on s; N is Poisson(lambda), log J ~ N(mu_j, sigma_j^2).
struct BatesJumpParams {
    double lambda = 0.0;
    double mu_j = 0.0;
    double sigma_j = 0.0;
};

struct BatesParams {
    HestonParams heston;
    BatesJumpParams jump;
};

/// Equity with a single observable state (local-volatility estimation path).
struct SingleStateParams {};

enum class ComponentKind { G1, G2, Heston, Bates, SingleStateEquity };

std::string_view to_string(ComponentKind kind);
ComponentKind parse_component_kind(std::string_view name);

/// State names of a component kind: G1 -> [x]; G2 -> [x, y]; Heston/Bates -> [s, v];
/// SingleStateEquity -> [s].
std::vector<std::string> state_labels_for(ComponentKind kind);

class ComponentSpec {
public:
    using Params = std::variant<G1Params, G2Params, HestonParams, BatesParams, SingleStateParams>;

    // Implicit on purpose: a parameter record fully determines the component.
    ComponentSpec(Params params) : params_(std::move(params)) {}  // NOLINT
    ComponentSpec(G1Params p) : params_(p) {}                     // NOLINT
    ComponentSpec(G2Params p) : params_(p) {}                     // NOLINT
    ComponentSpec(HestonParams p) : params_(p) {}                 // NOLINT
    ComponentSpec(BatesParams p) : params_(p) {}                  // NOLINT
    ComponentSpec(SingleStateParams p) : params_(p) {}            // NOLINT

    ComponentKind kind() const;
    const Params& params() const { return params_; }
    std::vector<std::string> state_labels() const { return state_labels_for(kind()); }
    std::size_t state_count() const { return state_labels().size(); }

    bool is_rate() const;    // G1 or G2
    bool is_heston() const;  // Heston or Bates

    const G2Params* g2() const { return std::get_if<G2Params>(&params_); }
    const G1Params* g1() const { return std::get_if<G1Params>(&params_); }
    /// Diffusive Heston parameters of a Heston or Bates component, else nullptr.
    const HestonParams* heston() const;
    const BatesJumpParams* jumps() const;

    /// Inner correlation of a two-state component (rho_xy or rho_sv); 0 otherwise.
    double inner_correlation() const;
    /// Calibrated diagonal block implied by the inner correlation.
    Eigen::MatrixXd diagonal_block() const;

private:
    Params params_;
};

/// Ordered component list plus, optionally, the full instantaneous correlation
/// matrix (required for simulation, absent for estimation).
struct HybridSystemSpec {
    std::vector<ComponentSpec> components;
    std::optional<Eigen::MatrixXd> full_correlation;

    std::vector<std::size_t> block_sizes() const;
    std::size_t state_count() const;
    /// Flat "c{i}.{state}" labels.
    std::vector<std::string> labels() const;
    std::vector<Eigen::MatrixXd> diagonal_blocks() const;
};

/// Returns a human-readable violation per broken invariant; empty when valid.
std::vector<std::string> validate_system(const HybridSystemSpec& spec);

/// Square correlation matrix with recorded block layout and state labels.
///
/// Construction checks shape, symmetry (1e-12) and unit diagonal. Entries are
/// allowed outside [-1, 1] so that estimation drafts can be represented; use
/// out_of_range_count() to flag them.
class BlockCorrelationMatrix {
public:
    static constexpr double kSymmetryTolerance = 1e-12;

    BlockCorrelationMatrix() = default;
    BlockCorrelationMatrix(Eigen::MatrixXd entries, std::vector<std::size_t> block_sizes,
                           std::vector<std::string> labels = {});

    const Eigen::MatrixXd& entries() const { return entries_; }
    const std::vector<std::size_t>& block_sizes() const { return block_sizes_; }
    const std::vector<std::string>& labels() const { return labels_; }

    std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
    std::size_t block_count() const { return block_sizes_.size(); }
    std::size_t block_offset(std::size_t block) const;
    Eigen::MatrixXd block(std::size_t i, std::size_t j) const;

    std::size_t out_of_range_count() const;
    bool is_finalized() const { return out_of_range_count() == 0; }

    /// Same layout and labels, new entries (validated as in the constructor).
    BlockCorrelationMatrix with_entries(Eigen::MatrixXd entries) const;

private:
    Eigen::MatrixXd entries_;
    std::vector<std::size_t> block_sizes_;
    std::vector<std::string> labels_;
};

using CrossBlocks = std::map<std::pair<std::size_t, std::size_t>, Eigen::MatrixXd>;

/// Places the diagonal blocks and the supplied cross blocks; block (j, i) is
/// the transpose of (i, j) and absent cross blocks are zero. Labels default to
/// "c{i}.{k}" with k the position inside the block.
BlockCorrelationMatrix assemble_block_matrix(std::span<const Eigen::MatrixXd> diagonal_blocks,
                                             const CrossBlocks& cross_blocks,
                                             std::vector<std::string> labels = {});

/// Convenience overload using the system's own diagonal blocks and labels.
BlockCorrelationMatrix assemble_block_matrix(const HybridSystemSpec& spec,
                                             const CrossBlocks& cross_blocks);

enum class ObservableKind { SpotRate, LogPrice, VarianceProxy, ImpliedVolAtm };

/// Structured series key "c{i}.{kind}[{tau}]", e.g. "c0.R[1.0]", "c1.s", "c1.v", "c1.iv".
struct SeriesKey {
    std::size_t component = 0;
    ObservableKind kind = ObservableKind::LogPrice;
    double tenor = 0.0;  // only meaningful for SpotRate

    static SeriesKey spot_rate(std::size_t component, double tenor);
    static SeriesKey log_price(std::size_t component);
    static SeriesKey variance(std::size_t component);
    static SeriesKey implied_vol(std::size_t component);

    static SeriesKey parse(std::string_view text);
    std::string str() const;

    friend bool operator<(const SeriesKey& lhs, const SeriesKey& rhs);
    friend bool operator==(const SeriesKey& lhs, const SeriesKey& rhs);
};

/// Time grid plus named observable series of equal length.
class ObservationPanel {
public:
    using SeriesMap = std::map<SeriesKey, std::vector<double>>;

    ObservationPanel() = default;
    ObservationPanel(std::vector<double> times, SeriesMap series);

    const std::vector<double>& times() const { return times_; }
    const SeriesMap& series() const { return series_; }
    std::size_t length() const { return times_.size(); }

    bool contains(const SeriesKey& key) const { return series_.contains(key); }
    /// Throws MissingObservableError naming the key.
    const std::vector<double>& at(const SeriesKey& key) const;

private:
    std::vector<double> times_;
    SeriesMap series_;
};

/// Shortest round-trip decimal, always containing a '.' or exponent ("1.0", "0.25").
std::string format_decimal(double value);

}  // namespace hcorr
