#include "hybridcorr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/linalg.hpp"

namespace hcorr {

double loading_c(double lambda, double gamma, double tau) {
    if (!(tau > 0.0)) throw DimensionError("loading_c: tau must be > 0");
    if (!(lambda >= 0.0) || !(gamma >= 0.0))
        throw DimensionError("loading_c: lambda and gamma must be >= 0");
    const double x = lambda * tau;
    if (x < 1e-8) return gamma * (1.0 - x / 2.0 + x * x / 6.0);
    return gamma * (-std::expm1(-x)) / x;
}

double normalizer_d(double lambda1, double lambda2, double gamma1, double gamma2, double tau,
                    double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw DimensionError("normalizer_d: rho must lie in [-1,1]");
    const double c1 = loading_c(lambda1, gamma1, tau);
    const double c2 = loading_c(lambda2, gamma2, tau);
    double d = 0.0;
    if (rho == 1.0) {
        d = c1 + c2;
    } else if (rho == -1.0) {
        d = std::abs(c1 - c2);
    } else {
        d = std::sqrt(std::max(0.0, c1 * c1 + c2 * c2 + 2.0 * c1 * c2 * rho));
    }
    if (d < 1e-300) throw ZeroVarianceError("normalizer_d: spot-rate variance is zero");
    return d;
}

std::pair<double, double> g2_row(const G2Params& p, double tau) {
    const double d = normalizer_d(p.a, p.b, p.sigma, p.eta, tau, p.rho_xy);
    return {loading_c(p.a, p.sigma, tau) / d, loading_c(p.b, p.eta, tau) / d};
}

std::string_view to_string(PairKind kind) {
    switch (kind) {
    case PairKind::G2G2: return "G2G2";
    case PairKind::G2Heston: return "G2Heston";
    case PairKind::HestonHeston: return "HestonHeston";
    case PairKind::G1G1: return "G1G1";
    case PairKind::G1G2: return "G1G2";
    case PairKind::G1Heston: return "G1Heston";
    case PairKind::G2Single: return "G2Single";
    case PairKind::G1Single: return "G1Single";
    case PairKind::HestonSingle: return "HestonSingle";
    case PairKind::SingleSingle: return "SingleSingle";
    }
    return "?";
}

namespace {

enum class Family { G1 = 0, G2 = 1, Heston = 2, Single = 3 };

Family family_of(ComponentKind k) {
    switch (k) {
    case ComponentKind::G1: return Family::G1;
    case ComponentKind::G2: return Family::G2;
    case ComponentKind::Heston:
    case ComponentKind::Bates: return Family::Heston;
    case ComponentKind::SingleStateEquity: return Family::Single;
    }
    return Family::Single;
}

PairKind kind_of(Family a, Family b) {
    using F = Family;
    if (a == F::G2 && b == F::G2) return PairKind::G2G2;
    if (a == F::G2 && b == F::Heston) return PairKind::G2Heston;
    if (a == F::Heston && b == F::Heston) return PairKind::HestonHeston;
    if (a == F::G1 && b == F::G1) return PairKind::G1G1;
    if (a == F::G1 && b == F::G2) return PairKind::G1G2;
    if (a == F::G1 && b == F::Heston) return PairKind::G1Heston;
    if (a == F::G2 && b == F::Single) return PairKind::G2Single;
    if (a == F::G1 && b == F::Single) return PairKind::G1Single;
    if (a == F::Heston && b == F::Single) return PairKind::HestonSingle;
    return PairKind::SingleSingle;
}

}  // namespace

PairClassification classify_pair(ComponentKind first, ComponentKind second) {
    const Family a = family_of(first);
    const Family b = family_of(second);
    if (static_cast<int>(a) <= static_cast<int>(b)) return {kind_of(a, b), false};
    return {kind_of(b, a), true};
}

CoefficientSystem g2g2_system(const G2Params& params_i, const G2Params& params_j,
                              std::pair<double, double> taus_i, std::pair<double, double> taus_j) {
    if (taus_i.first == taus_i.second || taus_j.first == taus_j.second)
        throw SingularSystemError("G2/G2 system needs two distinct tenors per component");
    const double ti[2] = {taus_i.first, taus_i.second};
    const double tj[2] = {taus_j.first, taus_j.second};

    CoefficientSystem sys;
    sys.matrix.resize(4, 4);
    int row = 0;
    for (double tp : ti) {
        const auto [ci1, ci2] = g2_row(params_i, tp);
        for (double tq : tj) {
            const auto [cj1, cj2] = g2_row(params_j, tq);
            sys.matrix.row(row) << ci1 * cj1, ci1 * cj2, ci2 * cj1, ci2 * cj2;
            sys.rhs_labels.push_back("rho(R_i[" + format_decimal(tp) + "],R_j[" +
                                     format_decimal(tq) + "])");
            ++row;
        }
    }
    sys.unknown_labels = {"x_i,x_j", "x_i,y_j", "y_i,x_j", "y_i,y_j"};
    sys.condition_number = linalg::condition_number(sys.matrix);
    return sys;
}

CoefficientSystem g2_single_driver_system(const G2Params& params, std::pair<double, double> taus) {
    if (taus.first == taus.second)
        throw SingularSystemError("G2 system needs two distinct tenors");
    CoefficientSystem sys;
    sys.matrix.resize(2, 2);
    int row = 0;
    for (double t : {taus.first, taus.second}) {
        const auto [c1, c2] = g2_row(params, t);
        sys.matrix.row(row++) << c1, c2;
        sys.rhs_labels.push_back("rho(R[" + format_decimal(t) + "],*)");
    }
    sys.unknown_labels = {"x,*", "y,*"};
    sys.condition_number = linalg::condition_number(sys.matrix);
    return sys;
}

double empirical_correlation(std::span<const double> series_a, std::span<const double> series_b) {
    if (series_a.size() != series_b.size())
        throw DimensionError("empirical_correlation: series lengths differ");
    if (series_a.size() < 3)
        throw DimensionError("empirical_correlation: need at least 3 observations");
    const std::size_t n = series_a.size() - 1;

    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        mean_a += series_a[k] - series_a[k - 1];
        mean_b += series_b[k] - series_b[k - 1];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double da = (series_a[k] - series_a[k - 1]) - mean_a;
        const double db = (series_b[k] - series_b[k - 1]) - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0))
        throw ZeroVarianceError("empirical_correlation: differenced series has zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> proxy_variance(std::span<const double> iv_atm) {
    std::vector<double> out;
    out.reserve(iv_atm.size());
    for (double iv : iv_atm) {
        if (!(iv >= 0.0)) throw EstimationError("proxy_variance: negative implied volatility");
        out.push_back(iv * iv);
    }
    return out;
}

std::vector<double> tenors_for(const TenorMap& tenors, std::size_t index,
                               const ComponentSpec& component) {
    if (const auto it = tenors.find(index); it != tenors.end() && !it->second.empty())
        return it->second;
    if (component.kind() == ComponentKind::G2) return {kDefaultTenorShort, kDefaultTenorLong};
    if (component.kind() == ComponentKind::G1) return {kDefaultTenorShort};
    return {};
}

namespace {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Observable series of one side of a pair, fetched once.
struct SideSeries {
    std::vector<const std::vector<double>*> rates;  // one per tenor used
    std::vector<double> rate_tenors;
    const std::vector<double>* stock = nullptr;
    std::vector<double> variance;  // owned copy (may come from the iv proxy)
    bool has_variance = false;
};

SideSeries fetch_side(const ObservationPanel& panel, std::size_t index, const ComponentSpec& spec,
                      const TenorMap& tenors, bool allow_missing_variance) {
    SideSeries side;
    switch (spec.kind()) {
    case ComponentKind::G2: {
        auto t = tenors_for(tenors, index, spec);
        std::vector<double> distinct;
        for (double v : t)
            if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
        if (distinct.size() < 2)
            throw MissingObservableError("G2 component c" + std::to_string(index) +
                                         " needs two distinct spot-rate tenors");
        for (std::size_t k = 0; k < 2; ++k) {
            side.rates.push_back(&panel.at(SeriesKey::spot_rate(index, distinct[k])));
            side.rate_tenors.push_back(distinct[k]);
        }
        break;
    }
    case ComponentKind::G1: {
        auto t = tenors_for(tenors, index, spec);
        side.rates.push_back(&panel.at(SeriesKey::spot_rate(index, t.front())));
        side.rate_tenors.push_back(t.front());
        break;
    }
    case ComponentKind::Heston:
    case ComponentKind::Bates: {
        side.stock = &panel.at(SeriesKey::log_price(index));
        if (panel.contains(SeriesKey::variance(index))) {
            side.variance = panel.at(SeriesKey::variance(index));
            side.has_variance = true;
        } else if (panel.contains(SeriesKey::implied_vol(index))) {
            side.variance = proxy_variance(panel.at(SeriesKey::implied_vol(index)));
            side.has_variance = true;
        } else if (!allow_missing_variance) {
            throw MissingObservableError("missing observable " + SeriesKey::variance(index).str() +
                                         " (or " + SeriesKey::implied_vol(index).str() + ")");
        }
        break;
    }
    case ComponentKind::SingleStateEquity:
        side.stock = &panel.at(SeriesKey::log_price(index));
        break;
    }
    return side;
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
    return empirical_correlation(a, b);
}

// Solves the 2x2 single-driver system for one G2 side against one series.
Eigen::Vector2d solve_g2_against(const CoefficientSystem& sys, const SideSeries& g2,
                                 const std::vector<double>& other) {
    Eigen::VectorXd rhs(2);
    rhs << corr(*g2.rates[0], other), corr(*g2.rates[1], other);
    return linalg::solve_dense(sys.matrix, rhs);
}

PairEstimate estimate_canonical(const ObservationPanel& panel, std::size_t i,
                                const ComponentSpec& si, std::size_t j, const ComponentSpec& sj,
                                PairKind kind, const TenorMap& tenors, PairOptions options) {
    const SideSeries a = fetch_side(panel, i, si, tenors, options.allow_missing_variance);
    const SideSeries b = fetch_side(panel, j, sj, tenors, options.allow_missing_variance);

    PairEstimate out;
    out.i = i;
    out.j = j;
    out.kind = kind;
    const auto rows = static_cast<Eigen::Index>(si.state_count());
    const auto cols = static_cast<Eigen::Index>(sj.state_count());
    out.cross = Eigen::MatrixXd::Zero(rows, cols);
    out.missing = BoolMatrix::Constant(rows, cols, false);

    // Column/row of a variance state that has no series is left for completion.
    const bool a_var_missing = si.is_heston() && !a.has_variance;
    const bool b_var_missing = sj.is_heston() && !b.has_variance;

    switch (kind) {
    case PairKind::G2G2: {
        const auto sys = g2g2_system(*si.g2(), *sj.g2(), {a.rate_tenors[0], a.rate_tenors[1]},
                                     {b.rate_tenors[0], b.rate_tenors[1]});
        Eigen::VectorXd rhs(4);
        rhs << corr(*a.rates[0], *b.rates[0]), corr(*a.rates[0], *b.rates[1]),
            corr(*a.rates[1], *b.rates[0]), corr(*a.rates[1], *b.rates[1]);
        const Eigen::VectorXd rho = linalg::solve_dense(sys.matrix, rhs);
        out.cross << rho(0), rho(1), rho(2), rho(3);
        out.condition_numbers.push_back(sys.condition_number);
        break;
    }
    case PairKind::G2Heston:
    case PairKind::G2Single: {
        const auto sys = g2_single_driver_system(*si.g2(), {a.rate_tenors[0], a.rate_tenors[1]});
        out.condition_numbers.push_back(sys.condition_number);
        out.cross.col(0) = solve_g2_against(sys, a, *b.stock);
        if (kind == PairKind::G2Heston) {
            if (b_var_missing) {
                out.missing.col(1).setConstant(true);
            } else {
                out.cross.col(1) = solve_g2_against(sys, a, b.variance);
            }
        }
        break;
    }
    case PairKind::G1G2: {
        // Rows: the G1 rate against each G2 tenor; the G1 loading normalizes to 1.
        const auto sys = g2_single_driver_system(*sj.g2(), {b.rate_tenors[0], b.rate_tenors[1]});
        out.condition_numbers.push_back(sys.condition_number);
        Eigen::VectorXd rhs(2);
        rhs << corr(*a.rates[0], *b.rates[0]), corr(*a.rates[0], *b.rates[1]);
        const Eigen::VectorXd rho = linalg::solve_dense(sys.matrix, rhs);
        out.cross << rho(0), rho(1);
        break;
    }
    case PairKind::G1G1:
        out.cross(0, 0) = corr(*a.rates[0], *b.rates[0]);
        break;
    case PairKind::G1Heston:
    case PairKind::G1Single:
        out.cross(0, 0) = corr(*a.rates[0], *b.stock);
        if (kind == PairKind::G1Heston) {
            if (b_var_missing) {
                out.missing(0, 1) = true;
            } else {
                out.cross(0, 1) = corr(*a.rates[0], b.variance);
            }
        }
        break;
    case PairKind::HestonHeston:
    case PairKind::HestonSingle:
    case PairKind::SingleSingle: {
        // Direct convergence: every entry is a pass-through empirical correlation.
        std::vector<const std::vector<double>*> sa{a.stock};
        std::vector<const std::vector<double>*> sb{b.stock};
        if (si.is_heston()) sa.push_back(a_var_missing ? nullptr : &a.variance);
        if (sj.is_heston()) sb.push_back(b_var_missing ? nullptr : &b.variance);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                const auto* x = sa[static_cast<std::size_t>(r)];
                const auto* y = sb[static_cast<std::size_t>(c)];
                if (x == nullptr || y == nullptr) {
                    out.missing(r, c) = true;
                } else {
                    out.cross(r, c) = corr(*x, *y);
                }
            }
        }
        break;
    }
    }

    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (!out.missing(r, c) && !(out.cross(r, c) >= -1.0 && out.cross(r, c) <= 1.0))
                out.out_of_range = true;
    return out;
}

}  // namespace

PairEstimate estimate_pair(const ObservationPanel& panel, std::size_t i, const ComponentSpec& spec_i,
                           std::size_t j, const ComponentSpec& spec_j, const TenorMap& tenors,
                           PairOptions options) {
    const auto cls = classify_pair(spec_i.kind(), spec_j.kind());
    if (!cls.swapped) return estimate_canonical(panel, i, spec_i, j, spec_j, cls.kind, tenors, options);

    PairEstimate swapped =
        estimate_canonical(panel, j, spec_j, i, spec_i, cls.kind, tenors, options);
    PairEstimate out = swapped;
    out.i = i;
    out.j = j;
    out.cross = swapped.cross.transpose();
    out.missing = swapped.missing.transpose();
    return out;
}

EstimationResult estimate_all(const ObservationPanel& panel, const HybridSystemSpec& system,
                              const TenorMap& tenors) {
    EstimationDiagnostics diag;

    const auto& times = panel.times();
    double min_dt = std::numeric_limits<double>::infinity();
    double max_dt = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double h = times[k] - times[k - 1];
        min_dt = std::min(min_dt, h);
        max_dt = std::max(max_dt, h);
    }
    diag.spacing_ratio = max_dt / min_dt;
    if (diag.spacing_ratio > kSpacingRatioWarning)
        diag.warnings.push_back("irregular time grid: max/min spacing ratio " +
                                format_decimal(diag.spacing_ratio));

    const auto n = static_cast<Eigen::Index>(system.state_count());
    BoolMatrix missing = BoolMatrix::Constant(n, n, false);
    std::vector<Eigen::Index> offsets;
    Eigen::Index off = 0;
    for (const auto& c : system.components) {
        offsets.push_back(off);
        off += static_cast<Eigen::Index>(c.state_count());
    }

    CrossBlocks cross;
    const auto& comps = system.components;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (std::size_t j = i + 1; j < comps.size(); ++j) {
            PairEstimate est = estimate_pair(panel, i, comps[i], j, comps[j], tenors,
                                             PairOptions{.allow_missing_variance = true});
            const std::string tag = "pair (c" + std::to_string(i) + ",c" + std::to_string(j) + ")";
            for (double cn : est.condition_numbers)
                if (cn > kConditionWarning)
                    diag.warnings.push_back(tag + ": coefficient condition number " +
                                            format_decimal(cn));
            if (est.out_of_range) diag.warnings.push_back(tag + ": estimate outside [-1,1]");
            if (est.missing.any()) {
                diag.incomplete = true;
                diag.warnings.push_back(tag + ": incomplete (variance series missing)");
                const auto r = est.missing.rows();
                const auto c = est.missing.cols();
                missing.block(offsets[i], offsets[j], r, c) = est.missing;
                missing.block(offsets[j], offsets[i], c, r) = est.missing.transpose();
            }
            cross.emplace(std::make_pair(i, j), est.cross);
            diag.pairs.push_back(std::move(est));
        }
    }

    EstimationResult result{assemble_block_matrix(system, cross), std::move(missing), std::move(diag)};
    result.diagnostics.out_of_range_count = result.draft.out_of_range_count();
    return result;
}

}  // namespace hcorr
