#include "hybridcorr_cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybridcorr/completion.hpp"
#include "hybridcorr/csv.hpp"
#include "hybridcorr/errors.hpp"
#include "hybridcorr/estimator.hpp"
#include "hybridcorr/linalg.hpp"
#include "hybridcorr/psd_repair.hpp"
#include "hybridcorr/simulator.hpp"
#include "hybridcorr/study.hpp"
#include "hybridcorr_cli/config.hpp"

namespace hcorr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string panel;
    std::string matrix;
    std::string out;
    std::string preset;
    std::string blocks;
    std::string format = "text";
    std::string dt;
    std::vector<std::size_t> n;
    std::optional<std::uint64_t> seed;
    std::size_t trials = 1000;
    double factor = 1.0;
    std::optional<double> bound;
    std::optional<double> tol;
    unsigned threads = 0;
    bool no_repair = false;
    bool no_complete = false;
    bool iv_proxy = false;
};

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    return f;
}

CsvTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open panel file '" + path + "'");
    return read_csv_table(in);
}

double parse_dt(const std::string& text) {
    if (text == "daily") return kDailyDt;
    if (text == "intraday") return kIntradayDt;
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || !(v > 0.0))
        throw ParseError("--dt must be a positive number, 'daily' or 'intraday'");
    return v;
}

std::vector<std::size_t> parse_blocks(const std::string& text) {
    std::vector<std::size_t> sizes;
    for (const auto& cell : split_csv_line(text)) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(cell, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != cell.size() || v == 0)
            throw ParseError("--blocks must be a comma-separated list of positive sizes");
        sizes.push_back(v);
    }
    return sizes;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json eigenvalues_json(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    json out = json::array();
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) out.push_back(solver.eigenvalues()(k));
    return out;
}

// Column feeding `key`, honoring explicit bindings. nullopt = marked missing.
std::optional<std::size_t> bound_column(const CsvTable& table, const RunConfig& cfg, const SeriesKey& key,
                                        bool* explicitly_missing) {
    if (const auto it = cfg.bindings.find(key); it != cfg.bindings.end()) {
        if (!it->second) {
            *explicitly_missing = true;
            return std::nullopt;
        }
        const auto col = table.find(*it->second);
        if (!col)
            throw ParseError("panel has no column '" + *it->second + "' (bound to " + key.str() + ")");
        return col;
    }
    return table.find(key.str());
}

std::vector<double> column_values(const CsvTable& table, std::size_t col) {
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cell = table.rows[r][col];
        if (!cell)
            throw ParseError("row " + std::to_string(r + 1) + ": empty cell in required column '" +
                             table.header[col] + "'");
        values.push_back(*cell);
    }
    return values;
}

ObservationPanel build_panel(const CsvTable& table, const RunConfig& cfg) {
    const auto tcol = table.find("t");
    if (!tcol) throw ParseError("panel has no time column 't'");
    ObservationPanel::SeriesMap series;
    const auto require = [&](const SeriesKey& key) {
        bool missing = false;
        const auto col = bound_column(table, cfg, key, &missing);
        if (!col) throw ParseError("panel has no column '" + key.str() + "'");
        series[key] = column_values(table, *col);
    };

    const auto& comps = cfg.system.components;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        if (c.is_rate()) {
            std::vector<double> distinct;
            for (double t : tenors_for(cfg.tenors, i, c))
                if (std::find(distinct.begin(), distinct.end(), t) == distinct.end()) distinct.push_back(t);
            const std::size_t needed = c.kind() == ComponentKind::G2 ? 2 : 1;
            if (distinct.size() < needed)
                throw ParseError("component " + std::to_string(i) + " needs " + std::to_string(needed) +
                                 " distinct tenors");
            for (std::size_t k = 0; k < needed; ++k) require(SeriesKey::spot_rate(i, distinct[k]));
            continue;
        }
        require(SeriesKey::log_price(i));
        if (!c.is_heston()) continue;
        bool v_missing = false;
        bool iv_missing = false;
        if (const auto col = bound_column(table, cfg, SeriesKey::variance(i), &v_missing)) {
            series[SeriesKey::variance(i)] = column_values(table, *col);
        } else if (const auto icol = bound_column(table, cfg, SeriesKey::implied_vol(i), &iv_missing)) {
            series[SeriesKey::implied_vol(i)] = column_values(table, *icol);
        } else if (!v_missing && !iv_missing) {
            throw ParseError("panel has no column '" + SeriesKey::variance(i).str() + "' or '" +
                             SeriesKey::implied_vol(i).str() + "' (bind one or mark it null)");
        }
    }
    try {
        return ObservationPanel(column_values(table, *tcol), std::move(series));
    } catch (const DimensionError& e) {
        throw ParseError(std::string("invalid panel: ") + e.what());
    }
}

int cmd_estimate(const Options& opt, std::ostream& out) {
    RunConfig cfg = load_run_config(opt.config);
    if (opt.no_repair) cfg.pipeline.repair = false;
    if (opt.no_complete) cfg.pipeline.complete = false;
    if (opt.bound) cfg.pipeline.bound = *opt.bound;
    if (opt.tol) cfg.pipeline.tol = *opt.tol;
    const fs::path dir = !opt.out.empty() ? fs::path(opt.out)
                         : !cfg.output_dir.empty() ? fs::path(cfg.output_dir) : fs::path(".");

    const ObservationPanel panel = build_panel(load_table(opt.panel), cfg);
    HybridSystemSpec system = cfg.system;
    system.full_correlation.reset();
    const EstimationResult est = estimate_all(panel, system, cfg.tenors);

    json report;
    report["labels"] = est.draft.labels();
    report["block_sizes"] = est.draft.block_sizes();
    report["warnings"] = est.diagnostics.warnings;
    report["out_of_range_count"] = est.diagnostics.out_of_range_count;
    report["spacing_ratio"] = est.diagnostics.spacing_ratio;
    json pairs = json::array();
    for (const auto& p : est.diagnostics.pairs)
        pairs.push_back({{"i", p.i},
                         {"j", p.j},
                         {"kind", std::string(to_string(p.kind))},
                         {"condition_numbers", p.condition_numbers},
                         {"out_of_range", p.out_of_range}});
    report["pairs"] = pairs;
    json flags = json::array();

    {
        auto f = open_output(dir / "draft.csv");
        write_matrix_csv(f, est.draft.entries(), est.draft.labels());
    }
    BlockCorrelationMatrix current = est.draft;
    const bool incomplete = est.missing.any();
    report["incomplete"] = incomplete;
    report["completed"] = false;
    if (incomplete && cfg.pipeline.complete) {
        current = complete_panel(est.draft, est.missing, cfg.system);
        report["completed"] = true;
        auto f = open_output(dir / "completed.csv");
        write_matrix_csv(f, current.entries(), current.labels());
    } else if (incomplete) {
        flags.push_back("incomplete");
    }

    const bool draft_psd = is_psd(current.entries());
    report["draft_psd"] = draft_psd;
    report["draft_min_eigenvalue"] = linalg::min_eigenvalue(current.entries());
    if (cfg.pipeline.repair) {
        const RepairResult rep = repair(current, cfg.pipeline.bound, cfg.pipeline.tol);
        report["repair"] = {{"enabled", true},
                            {"bound", cfg.pipeline.bound},
                            {"tol", cfg.pipeline.tol},
                            {"alpha_star", rep.alpha_star},
                            {"clamp_count", rep.clamp_count},
                            {"iterations", rep.iterations},
                            {"min_eigenvalue", rep.min_eigenvalue}};
        current = rep.matrix;
        auto f = open_output(dir / "repaired.csv");
        write_matrix_csv(f, current.entries(), current.labels());
    } else {
        report["repair"] = {{"enabled", false}};
        if (!draft_psd) flags.push_back("not PSD");
    }
    report["eigenvalues"] = eigenvalues_json(current.entries());
    report["flags"] = flags;
    {
        auto f = open_output(dir / "report.json");
        f << report.dump(2) << '\n';
    }

    out << "estimated " << est.draft.size() << "x" << est.draft.size() << " matrix";
    if (cfg.pipeline.repair) out << ", alpha* = " << format_decimal(report["repair"]["alpha_star"].get<double>());
    for (const auto& f : flags) out << " [" << f.get<std::string>() << "]";
    out << "; outputs in " << dir.string() << '\n';
    for (const auto& w : est.diagnostics.warnings) out << "warning: " << w << '\n';
    return kExitOk;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
    const RunConfig cfg = load_run_config(opt.config);
    if (!cfg.system.full_correlation)
        throw ParseError("simulate needs 'correlation' or 'cross_blocks' in the config");
    SimulationConfig sim = cfg.simulation;
    if (!opt.n.empty()) sim.n_steps = opt.n.front();
    if (!opt.dt.empty()) sim.dt = parse_dt(opt.dt);
    if (opt.seed) sim.seed = *opt.seed;
    if (sim.n_steps < 1) throw ParseError("simulation needs n_steps >= 1 (config or --n)");
    if (!(sim.dt > 0.0)) throw ParseError("simulation needs dt > 0 (config or --dt)");

    const PathSet paths = simulate_system(cfg.system, sim);
    if (opt.out.empty()) {
        write_panel_csv(out, paths.panel);
    } else {
        auto f = open_output(opt.out);
        write_panel_csv(f, paths.panel);
    }
    return kExitOk;
}

int cmd_study(const Options& opt, std::ostream& out, std::ostream& err) {
    StudyConfig base;
    if (!opt.preset.empty() && !opt.config.empty()) throw ParseError("give either --preset or --config");
    if (!opt.preset.empty()) {
        try {
            base.system = table_preset(opt.preset);
        } catch (const Error& e) {
            throw ParseError(e.what());
        }
    } else if (!opt.config.empty()) {
        const RunConfig cfg = load_run_config(opt.config);
        if (!cfg.system.full_correlation) throw ParseError("study config needs a correlation matrix");
        base.system = cfg.system;
        base.tenors = cfg.tenors;
    } else {
        throw ParseError("study needs --preset or --config");
    }
    if (opt.format != "text" && opt.format != "csv") throw ParseError("--format must be text or csv");
    base.dt = opt.dt.empty() ? kDailyDt : parse_dt(opt.dt);
    base.n_trials = opt.trials;
    base.factor = opt.factor;
    base.threads = opt.threads;
    base.use_iv_proxy = opt.iv_proxy;
    if (opt.seed) base.base_seed = *opt.seed;
    if (base.n_trials < 2) throw ParseError("--trials must be >= 2");
    if (!(base.factor > 0.0)) throw ParseError("--factor must be > 0");

    std::vector<StudyReport> reports;
    for (std::size_t n : opt.n.empty() ? std::vector<std::size_t>{10000} : opt.n) {
        StudyConfig c = base;
        c.n_steps = n;
        reports.push_back(run_study(c));
        err << "n=" << n << ": " << reports.back().failures << " failed trials, "
            << reports.back().runtime_seconds << " s\n";
    }
    const std::string table =
        emit_table(reports, opt.format == "csv" ? TableFormat::Csv : TableFormat::Text);
    if (opt.out.empty()) {
        out << table;
    } else {
        auto f = open_output(opt.out);
        f << table;
    }
    return kExitOk;
}

int cmd_repair(const Options& opt, std::ostream& out) {
    std::ifstream in(opt.matrix);
    if (!in) throw ParseError("cannot open matrix file '" + opt.matrix + "'");
    LabeledMatrix lm = read_matrix_csv(in);
    const std::vector<std::size_t> blocks = parse_blocks(opt.blocks);
    BlockCorrelationMatrix draft;
    try {
        draft = BlockCorrelationMatrix(lm.entries, blocks, lm.labels);
    } catch (const DimensionError& e) {
        throw ParseError(e.what());
    }
    const double bound = opt.bound.value_or(kDefaultClampBound);
    const double tol = opt.tol.value_or(kDefaultBisectionTol);
    const RepairResult rep = repair(draft, bound, tol);

    const fs::path dir = opt.out.empty() ? fs::path(".") : fs::path(opt.out);
    {
        auto f = open_output(dir / "repaired.csv");
        write_matrix_csv(f, rep.matrix.entries(), rep.matrix.labels());
    }
    json report = {{"labels", rep.matrix.labels()},
                   {"block_sizes", rep.matrix.block_sizes()},
                   {"bound", bound},
                   {"tol", tol},
                   {"alpha_star", rep.alpha_star},
                   {"clamp_count", rep.clamp_count},
                   {"iterations", rep.iterations},
                   {"min_eigenvalue", rep.min_eigenvalue},
                   {"draft_was_psd", rep.draft_was_psd},
                   {"eigenvalues", eigenvalues_json(rep.matrix.entries())},
                   {"matrix", matrix_json(rep.matrix.entries())}};
    {
        auto f = open_output(dir / "report.json");
        f << report.dump(2) << '\n';
    }
    out << "alpha* = " << format_decimal(rep.alpha_star) << ", clamped " << rep.clamp_count
        << ", min eigenvalue " << format_decimal(rep.min_eigenvalue) << '\n';
    return kExitOk;
}

int cmd_coeffs(const Options& opt, std::ostream& out) {
    const RunConfig cfg = load_run_config(opt.config);
    const auto& comps = cfg.system.components;
    const bool csv = opt.format == "csv";
    if (opt.format != "text" && opt.format != "csv") throw ParseError("--format must be text or csv");

    if (csv) out << "component,tenor,c_x,c_y,d,row_x,row_y\n";
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        if (!c.is_rate()) continue;
        for (double tau : tenors_for(cfg.tenors, i, c)) {
            double cx = 0.0, cy = 0.0, d = 0.0, rx = 1.0, ry = 0.0;
            if (const auto* g = c.g2()) {
                cx = loading_c(g->a, g->sigma, tau);
                cy = loading_c(g->b, g->eta, tau);
                d = normalizer_d(g->a, g->b, g->sigma, g->eta, tau, g->rho_xy);
                std::tie(rx, ry) = g2_row(*g, tau);
            } else {
                cx = loading_c(c.g1()->a, c.g1()->sigma, tau);
                d = cx;
            }
            if (csv) {
                out << i << ',' << format_exact(tau) << ',' << format_exact(cx) << ',' << format_exact(cy)
                    << ',' << format_exact(d) << ',' << format_exact(rx) << ',' << format_exact(ry) << '\n';
            } else {
                out << "c" << i << " tau=" << format_decimal(tau) << ": c_x=" << format_exact(cx)
                    << " c_y=" << format_exact(cy) << " d=" << format_exact(d)
                    << " row=(" << format_exact(rx) << ", " << format_exact(ry) << ")\n";
            }
        }
    }
    if (csv) return kExitOk;

    const auto print_system = [&](const std::string& title, const CoefficientSystem& sys) {
        out << title << " (condition number " << format_exact(sys.condition_number) << ")\n";
        for (Eigen::Index r = 0; r < sys.matrix.rows(); ++r) {
            out << "  " << sys.rhs_labels[static_cast<std::size_t>(r)] << ":";
            for (Eigen::Index k = 0; k < sys.matrix.cols(); ++k) out << ' ' << format_exact(sys.matrix(r, k));
            out << '\n';
        }
        out << "  unknowns:";
        for (const auto& u : sys.unknown_labels) out << ' ' << u;
        out << '\n';
    };
    const auto two = [&](std::size_t i) {
        std::vector<double> d;
        for (double t : tenors_for(cfg.tenors, i, comps[i]))
            if (std::find(d.begin(), d.end(), t) == d.end()) d.push_back(t);
        if (d.size() < 2) throw ParseError("component " + std::to_string(i) + " needs two distinct tenors");
        return std::pair{d[0], d[1]};
    };
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (!comps[i].g2()) continue;
        bool single_driver = false;
        for (std::size_t j = 0; j < comps.size(); ++j) {
            if (j == i) continue;
            if (comps[j].g2() && i < j) {
                print_system("c" + std::to_string(i) + "/c" + std::to_string(j) + " G2G2 system",
                             g2g2_system(*comps[i].g2(), *comps[j].g2(), two(i), two(j)));
            } else if (!comps[j].g2()) {
                single_driver = true;
            }
        }
        if (single_driver)
            print_system("c" + std::to_string(i) + " single-driver system",
                         g2_single_driver_system(*comps[i].g2(), two(i)));
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Instantaneous correlation estimation for hybrid rate/equity systems", "hybridcorr"};
    app.require_subcommand(1);
    Options opt;

    auto* est = app.add_subcommand("estimate", "Estimate, complete and repair a correlation matrix from a panel");
    est->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    est->add_option("--panel", opt.panel, "Observation panel CSV")->required();
    est->add_option("--out", opt.out, "Output directory");
    est->add_option("--bound", opt.bound, "Clamp bound for cross entries");
    est->add_option("--tol", opt.tol, "Bisection tolerance");
    est->add_flag("--no-repair", opt.no_repair, "Skip PSD repair");
    est->add_flag("--no-complete", opt.no_complete, "Skip completion of missing variance entries");

    auto* sim = app.add_subcommand("simulate", "Simulate a system and write its observation panel");
    sim->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    sim->add_option("--out", opt.out, "Panel CSV path (default: stdout)");
    sim->add_option("--n", opt.n, "Number of steps")->expected(1);
    sim->add_option("--dt", opt.dt, "Step size in years, or daily/intraday");
    sim->add_option("--seed", opt.seed, "Seed");

    auto* study = app.add_subcommand("study", "Monte Carlo accuracy study");
    study->add_option("--preset", opt.preset, "g2g2, g2heston or hestonheston");
    study->add_option("--config", opt.config, "Run configuration with a full correlation matrix");
    study->add_option("--n", opt.n, "Steps per path (comma-separated list allowed)")->delimiter(',');
    study->add_option("--dt", opt.dt, "Step size in years, or daily/intraday");
    study->add_option("--trials", opt.trials, "Number of simulated paths");
    study->add_option("--factor", opt.factor, "Multiplier on rate-model parameters used for estimation");
    study->add_option("--seed", opt.seed, "Base seed");
    study->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
    study->add_flag("--iv-proxy", opt.iv_proxy, "Estimate from sqrt(v) treated as ATM implied vol");
    study->add_option("--format", opt.format, "text or csv");
    study->add_option("--out", opt.out, "Write the table to this file instead of stdout");

    auto* rep = app.add_subcommand("repair", "Clamp and shrink a correlation matrix to PSD");
    rep->add_option("--matrix", opt.matrix, "Matrix CSV")->required();
    rep->add_option("--blocks", opt.blocks, "Comma-separated block sizes, e.g. 2,2")->required();
    rep->add_option("--bound", opt.bound, "Clamp bound for cross entries");
    rep->add_option("--tol", opt.tol, "Bisection tolerance");
    rep->add_option("--out", opt.out, "Output directory");

    auto* coeffs = app.add_subcommand("coeffs", "Print loadings, normalizers and coefficient systems");
    coeffs->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    coeffs->add_option("--format", opt.format, "text or csv");

    std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    }

    try {
        if (est->parsed()) return cmd_estimate(opt, out);
        if (sim->parsed()) return cmd_simulate(opt, out);
        if (study->parsed()) return cmd_study(opt, out, err);
        if (rep->parsed()) return cmd_repair(opt, out);
        if (coeffs->parsed()) return cmd_coeffs(opt, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const EstimationError& e) {
        err << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const RepairError& e) {
        err << "repair error: " << e.what() << '\n';
        return kExitRepair;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace hcorr::cli
