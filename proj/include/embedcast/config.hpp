#pragma once

// Declarative experiment configs: a TOML-style sectioned key=value file, fully
// validated with line-anchored errors, unknown-key suggestions and echoed
// defaults.

#include "embedcast/common.hpp"

#include <map>
#include <optional>
#include <string>

namespace embedcast {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct ExperimentConfig {
    // [run]
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;  // 0: env var or 1
    bool curves = true;
    bool spectra = false;
    bool bound = false;
    bool periodogram = false;

    // [system]
    std::string system = "lorenz63";  // torus-rotation | lorenz63 | l63rot
    double dt = 0.01;
    double substep = -1;  // <0: equal to dt
    double rho1 = 3.8832220774509327;
    double rho2 = 2.6025589247790637;
    double rot_rho = 0.2;
    double sigma = 10.0;
    double rho_l = 28.0;
    double beta = 8.0 / 3.0;
    Index transient = 10000;
    int lag = 1;  // orbit subsampling stride

    // [observation]
    std::string observation = "coordinate";  // coordinate | full-state | torus-trig
    std::vector<int> components = {0};
    bool normalize = true;

    // [embedding]
    std::string paradigm = "delay";  // delay | reservoir | both
    int Q = 8;
    Index reservoir_size = 300;
    double lambda = 0.9;
    Index washout = 500;

    // [hypothesis]
    std::string hypothesis = "affine";  // affine | fourier | rbf
    int fourier_kmax = 1;
    std::string fourier_mode = "direct";  // direct | phase-pairs
    Index rbf_centers = 200;
    double ridge = -1;  // <0: auto

    // [training]
    Index length = 20000;
    double holdout = 0.2;

    // [forecast]
    std::string mode = "both";  // iterative | direct | both
    Index horizon = 400;
    Index ensemble = 500;
    double guard_factor = 1000.0;

    // [spectrum]
    Index spectrum_steps = 200000;
    int refactor_every = 1;

    // [output]
    std::string out_dir = "out";

    void validate() const;
    std::string echo() const;  // re-parseable config with every default resolved
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace embedcast
