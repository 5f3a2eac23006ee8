#include "hybridcorr/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "hybridcorr/csv.hpp"
#include "hybridcorr/errors.hpp"
#include "hybridcorr/rng.hpp"

namespace hcorr {

namespace {

Eigen::MatrixXd two_component_matrix(double inner0, double inner1, const Eigen::Matrix2d& cross) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
    m(0, 1) = m(1, 0) = inner0;
    m(2, 3) = m(3, 2) = inner1;
    m.block(0, 2, 2, 2) = cross;
    m.block(2, 0, 2, 2) = cross.transpose();
    return m;
}

struct Layout {
    std::vector<Eigen::Index> offsets;
    std::vector<std::vector<std::string>> states;
};

Layout layout_of(const HybridSystemSpec& system) {
    Layout out;
    Eigen::Index off = 0;
    for (const auto& c : system.components) {
        out.offsets.push_back(off);
        out.states.push_back(c.state_labels());
        off += static_cast<Eigen::Index>(c.state_count());
    }
    return out;
}

ObservationPanel with_iv_proxy(const ObservationPanel& panel) {
    ObservationPanel::SeriesMap series;
    for (const auto& [key, values] : panel.series()) {
        if (key.kind != ObservableKind::VarianceProxy) {
            series[key] = values;
            continue;
        }
        std::vector<double> iv(values.size());
        std::transform(values.begin(), values.end(), iv.begin(), [](double v) { return std::sqrt(v); });
        series[SeriesKey::implied_vol(key.component)] = std::move(iv);
    }
    return ObservationPanel(panel.times(), std::move(series));
}

std::string percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * value);
    return buf;
}

}  // namespace

const StudyEntry& StudyReport::entry(std::string_view label) const {
    for (const auto& e : entries)
        if (e.label == label) return e;
    throw Error("study report has no entry '" + std::string(label) + "'");
}

HybridSystemSpec table_preset(std::string_view name) {
    HybridSystemSpec spec;
    if (name == "g2g2") {
        spec.components = {ComponentSpec(G2Params{0.1, 0.2, 0.01, 0.02, 0.5}),
                           ComponentSpec(G2Params{0.15, 0.25, 0.015, 0.025, 0.55})};
        Eigen::Matrix2d cross;
        cross << 0.1, 0.2, 0.3, 0.4;
        spec.full_correlation = two_component_matrix(0.5, 0.55, cross);
    } else if (name == "g2heston") {
        spec.components = {ComponentSpec(G2Params{0.1, 0.2, 0.01, 0.02, 0.5}),
                           ComponentSpec(HestonParams{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0})};
        Eigen::Matrix2d cross;
        cross << 0.1, -0.2, 0.3, -0.4;
        spec.full_correlation = two_component_matrix(0.5, -0.8, cross);
    } else if (name == "hestonheston") {
        spec.components = {ComponentSpec(HestonParams{1.0, 0.2, 0.3, 0.1, -0.8, 0.0, 0.0}),
                           ComponentSpec(HestonParams{1.1, 0.22, 0.33, 0.11, -0.88, 0.0, 0.0})};
        Eigen::Matrix2d cross;
        cross << 0.1, -0.2, -0.3, 0.4;
        spec.full_correlation = two_component_matrix(-0.8, -0.88, cross);
    } else {
        throw Error("unknown preset '" + std::string(name) + "' (expected g2g2, g2heston or hestonheston)");
    }
    return spec;
}

std::vector<std::string> preset_names() { return {"g2g2", "g2heston", "hestonheston"}; }

TenorMap study_tenors(const HybridSystemSpec& system) {
    TenorMap tenors;
    for (std::size_t i = 0; i < system.components.size(); ++i) {
        const auto kind = system.components[i].kind();
        if (kind == ComponentKind::G2) tenors[i] = {kStudyTenorShort, kStudyTenorLong};
        if (kind == ComponentKind::G1) tenors[i] = {kStudyTenorShort};
    }
    return tenors;
}

HybridSystemSpec scale_rate_parameters(const HybridSystemSpec& system, double factor) {
    HybridSystemSpec out;
    out.full_correlation = system.full_correlation;
    for (const auto& c : system.components) {
        if (const auto* g = c.g2()) {
            out.components.emplace_back(G2Params{g->a * factor, g->b * factor, g->sigma * factor,
                                                 g->eta * factor, g->rho_xy * factor});
        } else if (const auto* g1 = c.g1()) {
            out.components.emplace_back(G1Params{g1->a * factor, g1->sigma * factor});
        } else {
            out.components.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> cross_entry_labels(const HybridSystemSpec& system) {
    const Layout lay = layout_of(system);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < lay.states.size(); ++i)
        for (std::size_t j = i + 1; j < lay.states.size(); ++j)
            for (const auto& si : lay.states[i])
                for (const auto& sj : lay.states[j])
                    labels.push_back(si + std::to_string(i) + "/" + sj + std::to_string(j));
    return labels;
}

StudyReport run_study(const StudyConfig& config) {
    if (config.n_trials < 2) throw DimensionError("n_trials must be >= 2");
    if (!(config.factor > 0.0)) throw DimensionError("factor must be > 0");
    if (config.n_steps < 2) throw DimensionError("n_steps must be >= 2");
    if (!(config.dt > 0.0)) throw DimensionError("dt must be > 0");
    const auto& truth = config.system;
    if (!truth.full_correlation) throw DimensionError("study system needs a full correlation matrix");
    if (const auto v = validate_system(truth); !v.empty())
        throw DimensionError("invalid study system: " + v.front());

    const auto start = std::chrono::steady_clock::now();
    const HybridSystemSpec estimation = scale_rate_parameters(truth, config.factor);
    TenorMap tenors = study_tenors(truth);
    for (const auto& [k, v] : config.tenors)
        if (!v.empty()) tenors[k] = v;

    const Layout lay = layout_of(truth);
    const std::size_t n_comp = truth.components.size();
    const std::vector<std::string> labels = cross_entry_labels(truth);

    std::vector<std::optional<std::vector<double>>> results(config.n_trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    const auto worker = [&] {
        while (true) {
            const std::size_t m = next.fetch_add(1);
            if (m >= config.n_trials) return;
            try {
                SimulationConfig sim;
                sim.n_steps = config.n_steps;
                sim.dt = config.dt;
                sim.seed = derive_seed(config.base_seed, m);
                sim.rate_observables = config.rate_observables;
                sim.tenors = tenors;
                const PathSet paths = simulate_system(truth, sim);
                const ObservationPanel panel =
                    config.use_iv_proxy ? with_iv_proxy(paths.panel) : paths.panel;
                std::vector<double> values;
                values.reserve(labels.size());
                for (std::size_t i = 0; i < n_comp; ++i) {
                    for (std::size_t j = i + 1; j < n_comp; ++j) {
                        const PairEstimate est = estimate_pair(panel, i, estimation.components[i], j,
                                                               estimation.components[j], tenors);
                        for (Eigen::Index r = 0; r < est.cross.rows(); ++r)
                            for (Eigen::Index c = 0; c < est.cross.cols(); ++c)
                                values.push_back(est.cross(r, c));
                    }
                }
                results[m] = std::move(values);
            } catch (const EstimationError&) {
                results[m].reset();
            } catch (...) {
                const std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                next.store(config.n_trials);
                return;
            }
        }
    };

    unsigned threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(config.n_trials));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    StudyReport report;
    report.n_steps = config.n_steps;
    report.dt = config.dt;
    report.factor = config.factor;
    report.n_trials = config.n_trials;

    // Reduce in trial-index order so the result does not depend on scheduling.
    std::vector<double> sum(labels.size(), 0.0);
    std::size_t ok = 0;
    for (const auto& r : results) {
        if (!r) {
            ++report.failures;
            continue;
        }
        ++ok;
        for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += (*r)[e];
    }
    if (static_cast<double>(ok) < 0.9 * static_cast<double>(config.n_trials))
        throw EstimationError(std::to_string(report.failures) + " of " +
                              std::to_string(config.n_trials) + " trials failed (more than 10%)");

    std::size_t e = 0;
    for (std::size_t i = 0; i < n_comp; ++i) {
        for (std::size_t j = i + 1; j < n_comp; ++j) {
            for (std::size_t r = 0; r < lay.states[i].size(); ++r) {
                for (std::size_t c = 0; c < lay.states[j].size(); ++c, ++e) {
                    StudyEntry entry;
                    entry.label = labels[e];
                    entry.truth = (*truth.full_correlation)(lay.offsets[i] + static_cast<Eigen::Index>(r),
                                                            lay.offsets[j] + static_cast<Eigen::Index>(c));
                    entry.mean = sum[e] / static_cast<double>(ok);
                    double ss = 0.0;
                    for (const auto& res : results)
                        if (res) ss += ((*res)[e] - entry.mean) * ((*res)[e] - entry.mean);
                    entry.bias = entry.mean - entry.truth;
                    entry.stderr_ = ok > 1 ? std::sqrt(ss / static_cast<double>(ok - 1)) : 0.0;
                    report.entries.push_back(std::move(entry));
                }
            }
        }
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string emit_table(const std::vector<StudyReport>& reports, TableFormat format) {
    std::ostringstream out;
    if (format == TableFormat::Csv) {
        out << "n_steps,dt,factor,n_trials,failures,label,truth,bias,stderr\n";
        for (const auto& r : reports)
            for (const auto& e : r.entries)
                out << r.n_steps << ',' << format_exact(r.dt) << ',' << format_exact(r.factor) << ','
                    << r.n_trials << ',' << r.failures << ',' << e.label << ','
                    << format_exact(e.truth) << ',' << format_exact(e.bias) << ','
                    << format_exact(e.stderr_) << '\n';
        return out.str();
    }

    std::vector<std::string> labels;
    for (const auto& r : reports)
        for (const auto& e : r.entries)
            if (std::find(labels.begin(), labels.end(), e.label) == labels.end()) labels.push_back(e.label);

    const auto cell = [&out](const std::string& s, int width) {
        out << s;
        for (int k = static_cast<int>(s.size()); k < width; ++k) out << ' ';
    };
    cell("n", 8);
    cell("dt", 12);
    for (const auto& l : labels) cell(l, 12);
    out << '\n';
    for (const auto& r : reports) {
        cell(std::to_string(r.n_steps), 8);
        cell(format_decimal(r.dt), 12);
        for (const auto& l : labels) {
            const auto it = std::find_if(r.entries.begin(), r.entries.end(),
                                         [&](const StudyEntry& e) { return e.label == l; });
            cell(it == r.entries.end() ? "-" : percent(it->bias), 12);
        }
        out << '\n';
        cell("", 20);
        for (const auto& l : labels) {
            const auto it = std::find_if(r.entries.begin(), r.entries.end(),
                                         [&](const StudyEntry& e) { return e.label == l; });
            cell(it == r.entries.end() ? "" : "(" + percent(it->stderr_) + ")", 12);
        }
        out << '\n';
    }
    return out.str();
}

std::vector<StudyReport> read_study_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("study CSV is empty");
    const auto header = split_csv_line(line);
    if (header.size() != 9 || header[0] != "n_steps" || header[5] != "label")
        throw ParseError("study CSV has an unexpected header");

    const auto number = [](const std::string& s) {
        std::istringstream is(s);
        is.imbue(std::locale::classic());
        double v = 0.0;
        if (!(is >> v) || !is.eof()) throw ParseError("study CSV: cannot parse '" + s + "'");
        return v;
    };
    const auto count = [](const std::string& s) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            throw ParseError("study CSV: cannot parse '" + s + "'");
        }
        if (pos != s.size()) throw ParseError("study CSV: cannot parse '" + s + "'");
        return static_cast<std::size_t>(v);
    };

    std::vector<StudyReport> reports;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 9) throw ParseError("study CSV: expected 9 cells per row");
        StudyReport key;
        key.n_steps = count(cells[0]);
        key.dt = number(cells[1]);
        key.factor = number(cells[2]);
        key.n_trials = count(cells[3]);
        key.failures = count(cells[4]);
        const bool same = !reports.empty() && reports.back().n_steps == key.n_steps &&
                          reports.back().dt == key.dt && reports.back().factor == key.factor &&
                          reports.back().n_trials == key.n_trials &&
                          reports.back().failures == key.failures &&
                          std::none_of(reports.back().entries.begin(), reports.back().entries.end(),
                                       [&](const StudyEntry& e) { return e.label == cells[5]; });
        if (!same) reports.push_back(key);
        StudyEntry e;
        e.label = cells[5];
        e.truth = number(cells[6]);
        e.bias = number(cells[7]);
        e.stderr_ = number(cells[8]);
        e.mean = e.truth + e.bias;
        reports.back().entries.push_back(std::move(e));
    }
    return reports;
}

}  // namespace hcorr
