#include "hybridcorr_cli/config.hpp"

#include <fstream>
#include <set>

#include "hybridcorr/errors.hpp"
#include "hybridcorr/study.hpp"

namespace hcorr::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw ParseError("unknown key '" + key + "' in " + where);
}

double number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ParseError(where + " is missing '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ParseError(where + "." + key + " must be a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

bool boolean_or(const json& obj, const std::string& key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) throw ParseError(where + "." + key + " must be true or false");
    return obj.at(key).get<bool>();
}

std::uint64_t unsigned_or(const json& obj, const std::string& key, std::uint64_t fallback,
                          const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ParseError(where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

Eigen::MatrixXd matrix(const json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty()) throw ParseError(where + " must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = rows.front().is_array() ? static_cast<Eigen::Index>(rows.front().size()) : 0;
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
            throw ParseError(where + ": ragged rows");
        for (Eigen::Index c = 0; c < m; ++c) {
            const auto& v = row.at(static_cast<std::size_t>(c));
            if (!v.is_number()) throw ParseError(where + ": entries must be numbers");
            out(r, c) = v.get<double>();
        }
    }
    return out;
}

HestonParams heston_params(const json& p, const std::string& where) {
    return HestonParams{number(p, "kappa", where), number(p, "theta", where), number(p, "xi", where),
                        number(p, "v0", where),    number(p, "rho_sv", where),
                        number_or(p, "r_tilde", 0.0, where), number_or(p, "q_tilde", 0.0, where)};
}

ComponentSpec component(const json& c, const std::string& where) {
    reject_unknown(c, {"kind", "params", "tenors"}, where);
    if (!c.contains("kind") || !c.at("kind").is_string()) throw ParseError(where + " needs a string 'kind'");
    const ComponentKind kind = parse_component_kind(c.at("kind").get<std::string>());
    const json params = c.value("params", json::object());
    const std::string pw = where + ".params";
    switch (kind) {
    case ComponentKind::G1:
        reject_unknown(params, {"a", "sigma"}, pw);
        return G1Params{number(params, "a", pw), number(params, "sigma", pw)};
    case ComponentKind::G2:
        reject_unknown(params, {"a", "b", "sigma", "eta", "rho_xy"}, pw);
        return G2Params{number(params, "a", pw), number(params, "b", pw), number(params, "sigma", pw),
                        number(params, "eta", pw), number(params, "rho_xy", pw)};
    case ComponentKind::Heston:
        reject_unknown(params, {"kappa", "theta", "xi", "v0", "rho_sv", "r_tilde", "q_tilde"}, pw);
        return heston_params(params, pw);
    case ComponentKind::Bates:
        reject_unknown(params, {"kappa", "theta", "xi", "v0", "rho_sv", "r_tilde", "q_tilde", "lambda",
                                "mu_j", "sigma_j"},
                       pw);
        return BatesParams{heston_params(params, pw),
                           BatesJumpParams{number(params, "lambda", pw), number(params, "mu_j", pw),
                                           number(params, "sigma_j", pw)}};
    case ComponentKind::SingleStateEquity:
        reject_unknown(params, {}, pw);
        return SingleStateParams{};
    }
    throw ParseError(where + ": unsupported kind");
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    reject_unknown(doc, {"preset", "components", "correlation", "cross_blocks", "bindings", "pipeline",
                         "simulation", "output_dir"},
                   "config");
    RunConfig cfg;

    if (doc.contains("preset")) {
        if (!doc.at("preset").is_string()) throw ParseError("config.preset must be a string");
        if (doc.contains("components")) throw ParseError("config: give either 'preset' or 'components'");
        cfg.preset = doc.at("preset").get<std::string>();
        try {
            cfg.system = table_preset(*cfg.preset);
        } catch (const Error& e) {
            throw ParseError(e.what());
        }
        cfg.tenors = study_tenors(cfg.system);
    } else {
        if (!doc.contains("components") || !doc.at("components").is_array() || doc.at("components").empty())
            throw ParseError("config needs a non-empty 'components' array");
        const auto& comps = doc.at("components");
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const std::string where = "components[" + std::to_string(i) + "]";
            cfg.system.components.push_back(component(comps.at(i), where));
            if (comps.at(i).contains("tenors")) {
                const auto& t = comps.at(i).at("tenors");
                if (!t.is_array()) throw ParseError(where + ".tenors must be an array of numbers");
                std::vector<double> tenors;
                for (const auto& v : t) {
                    if (!v.is_number() || !(v.get<double>() > 0.0))
                        throw ParseError(where + ".tenors must hold positive numbers");
                    tenors.push_back(v.get<double>());
                }
                cfg.tenors[i] = std::move(tenors);
            }
        }
    }

    if (doc.contains("correlation") && doc.contains("cross_blocks"))
        throw ParseError("config: give either 'correlation' or 'cross_blocks'");
    if (doc.contains("correlation")) {
        cfg.system.full_correlation = matrix(doc.at("correlation"), "config.correlation");
    } else if (doc.contains("cross_blocks")) {
        const auto& blocks = doc.at("cross_blocks");
        if (!blocks.is_array()) throw ParseError("config.cross_blocks must be an array");
        CrossBlocks cross;
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const std::string where = "cross_blocks[" + std::to_string(k) + "]";
            const auto& b = blocks.at(k);
            reject_unknown(b, {"i", "j", "block"}, where);
            const auto i = unsigned_or(b, "i", 0, where);
            const auto j = unsigned_or(b, "j", 0, where);
            if (!b.contains("i") || !b.contains("j") || !b.contains("block"))
                throw ParseError(where + " needs 'i', 'j' and 'block'");
            if (i >= j || j >= cfg.system.components.size())
                throw ParseError(where + ": need i < j < number of components");
            cross[{i, j}] = matrix(b.at("block"), where + ".block");
        }
        try {
            cfg.system.full_correlation = assemble_block_matrix(cfg.system, cross).entries();
        } catch (const DimensionError& e) {
            throw ParseError(std::string("config.cross_blocks: ") + e.what());
        }
    }

    if (const auto violations = validate_system(cfg.system); !violations.empty()) {
        std::string msg = "invalid system:";
        for (const auto& v : violations) msg += " " + v + ";";
        throw ParseError(msg);
    }

    if (doc.contains("bindings")) {
        const auto& b = doc.at("bindings");
        if (!b.is_object()) throw ParseError("config.bindings must be an object");
        for (const auto& [key, value] : b.items()) {
            SeriesKey sk;
            try {
                sk = SeriesKey::parse(key);
            } catch (const Error& e) {
                throw ParseError("config.bindings: " + std::string(e.what()));
            }
            if (value.is_null()) {
                if (sk.kind != ObservableKind::VarianceProxy && sk.kind != ObservableKind::ImpliedVolAtm)
                    throw ParseError("config.bindings: only variance series may be marked missing (" + key + ")");
                cfg.bindings[sk] = std::nullopt;
            } else if (value.is_string()) {
                cfg.bindings[sk] = value.get<std::string>();
            } else {
                throw ParseError("config.bindings." + key + " must be a column name or null");
            }
        }
    }

    if (doc.contains("pipeline")) {
        const auto& p = doc.at("pipeline");
        reject_unknown(p, {"complete", "repair", "bound", "tol"}, "config.pipeline");
        cfg.pipeline.complete = boolean_or(p, "complete", true, "pipeline");
        cfg.pipeline.repair = boolean_or(p, "repair", true, "pipeline");
        cfg.pipeline.bound = number_or(p, "bound", kDefaultClampBound, "pipeline");
        cfg.pipeline.tol = number_or(p, "tol", kDefaultBisectionTol, "pipeline");
    }

    if (doc.contains("simulation")) {
        const auto& s = doc.at("simulation");
        reject_unknown(s, {"n_steps", "dt", "seed", "coupled_rate_component", "absorb_variance_at_zero",
                           "noise_floor", "rate_observables"},
                       "config.simulation");
        auto& sim = cfg.simulation;
        sim.n_steps = unsigned_or(s, "n_steps", 0, "simulation");
        sim.dt = number_or(s, "dt", 0.0, "simulation");
        sim.seed = unsigned_or(s, "seed", 0, "simulation");
        sim.absorb_variance_at_zero = boolean_or(s, "absorb_variance_at_zero", false, "simulation");
        sim.noise_floor = number_or(s, "noise_floor", 0.0, "simulation");
        if (s.contains("coupled_rate_component"))
            sim.coupled_rate_component = unsigned_or(s, "coupled_rate_component", 0, "simulation");
        if (s.contains("rate_observables")) {
            const auto& v = s.at("rate_observables");
            const std::string name = v.is_string() ? v.get<std::string>() : "";
            if (name == "exact") sim.rate_observables = RateObservableModel::ExactOu;
            else if (name == "step_normalized") sim.rate_observables = RateObservableModel::StepNormalizedLoading;
            else throw ParseError("simulation.rate_observables must be \"exact\" or \"step_normalized\"");
        }
    }
    cfg.simulation.tenors = cfg.tenors;

    if (doc.contains("output_dir")) {
        if (!doc.at("output_dir").is_string()) throw ParseError("config.output_dir must be a string");
        cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    }
    try {
        return parse_run_config(doc);
    } catch (const json::exception& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    }
}

}  // namespace hcorr::cli
