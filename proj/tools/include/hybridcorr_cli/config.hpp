#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "hybridcorr/core_types.hpp"
#include "hybridcorr/estimator.hpp"
#include "hybridcorr/psd_repair.hpp"
#include "hybridcorr/simulator.hpp"

namespace hcorr::cli {

struct PipelineOptions {
    bool complete = true;
    bool repair = true;
    double bound = kDefaultClampBound;
    double tol = kDefaultBisectionTol;
};

/// Parsed run configuration. See docs/config.md for the grammar.
struct RunConfig {
    HybridSystemSpec system;
    TenorMap tenors;
    /// Series key -> panel column, or nullopt for a variance series marked missing.
    std::map<SeriesKey, std::optional<std::string>> bindings;
    PipelineOptions pipeline;
    SimulationConfig simulation;
    std::optional<std::string> preset;
    std::string output_dir;
};

/// Throws hcorr::ParseError on any unknown key, missing field or wrong type.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

}  // namespace hcorr::cli
