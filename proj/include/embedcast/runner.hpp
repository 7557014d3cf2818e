#pragma once

// Batch pipeline: system -> embed -> learn -> forecast -> cocycle, one output
// directory per run with plot-ready CSVs and a JSON report whose config echo
// reproduces the run bit for bit.

#include "embedcast/config.hpp"
#include "embedcast/csv.hpp"

#include <nlohmann/json_fwd.hpp>

namespace embedcast {

struct RunReport {
    std::string config_echo;
    std::vector<std::string> artifacts;          // file names actually written
    std::map<std::string, double> timings;       // seconds per stage
    std::map<std::string, double> summary;       // delta, lambda estimates, ...
};

// Executes the requested stages in dependency order and writes
//   <out>/curves/*.csv, <out>/spectra/*.csv, <out>/report.json,
//   <out>/config_echo.toml
// Throws ConfigError for config problems and DivergenceError for numeric
// failures; partial outputs are left in place.
RunReport run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json_file(const std::string& path);

struct CompareResult {
    bool compatible = true;
    bool within_tolerance = true;
    std::map<std::string, double> relative_diffs;
    std::vector<std::string> structural_diffs;
};

// Per-metric relative differences between two run reports. Metrics present in
// only one report are structural differences. `tolerances` maps metric name
// to the allowed relative difference; "default" sets the fallback.
CompareResult compare_runs(const RunReport& a, const RunReport& b,
                           const std::map<std::string, double>& tolerances);

}  // namespace embedcast
