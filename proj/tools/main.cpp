// embedcast command line: run experiment configs, compare run reports, and
// estimate Lyapunov spectra.
//
// Exit codes: 0 success, 2 config error, 3 numeric divergence,
// 4 comparison failure.

#include "embedcast/runner.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace embedcast;

int cmd_run(const std::string& config_path, const std::string& out_override,
            long long seed_override, int threads_override) {
    ExperimentConfig config = parse_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) config.threads = threads_override;

    RunReport report = run_experiment(config);
    std::cout << "wrote " << report.artifacts.size() << " artifacts to " << config.out_dir
              << "\n";
    for (const auto& [key, value] : report.summary)
        std::cout << "  " << key << " = " << value << "\n";
    return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const std::string& tol_path) {
    RunReport a = report_from_json_file(path_a);
    RunReport b = report_from_json_file(path_b);
    std::map<std::string, double> tolerances;
    if (!tol_path.empty()) {
        std::ifstream f(tol_path);
        if (!f) throw std::runtime_error("cannot read tolerance file: " + tol_path);
        nlohmann::json j;
        f >> j;
        tolerances = j.get<std::map<std::string, double>>();
    }
    CompareResult res = compare_runs(a, b, tolerances);
    for (const auto& d : res.structural_diffs) std::cout << "structural: " << d << "\n";
    for (const auto& [key, rel] : res.relative_diffs)
        std::cout << key << " rel_diff = " << rel << "\n";
    if (!res.compatible) {
        std::cout << "FAIL: structural differences\n";
        return 4;
    }
    if (!res.within_tolerance) {
        std::cout << "FAIL: differences exceed tolerances\n";
        return 4;
    }
    std::cout << "OK\n";
    return 0;
}

int cmd_spectrum(const std::string& config_path, const std::string& out_override,
                 long long seed_override, int threads_override) {
    ExperimentConfig config = parse_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override > 0) config.threads = threads_override;
    config.curves = false;
    config.bound = false;
    config.periodogram = false;
    config.spectra = true;

    RunReport report = run_experiment(config);
    std::cout << "lambda_1 per-time = " << report.summary.at("lambda1_per_time") << "\n";
    std::cout << "sum per-time = " << report.summary.at("lambda_sum_per_time") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamics reconstruction and forecast-error laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, tol_path, path_a, path_b;
    long long seed = -1;
    int threads = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--seed", seed, "master seed override");
    run->add_option("--threads", threads, "worker thread count");

    CLI::App* compare = app.add_subcommand("compare", "compare two run reports");
    compare->add_option("reportA", path_a, "first report.json")->required();
    compare->add_option("reportB", path_b, "second report.json")->required();
    compare->add_option("--tol", tol_path, "JSON file of per-metric relative tolerances");

    CLI::App* spectrum = app.add_subcommand("spectrum", "Lyapunov spectrum of the base system");
    spectrum->add_option("config", config_path, "experiment config file")->required();
    spectrum->add_option("--out", out_dir, "output directory override");
    spectrum->add_option("--seed", seed, "master seed override");
    spectrum->add_option("--threads", threads, "worker thread count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed, threads);
        if (compare->parsed()) return cmd_compare(path_a, path_b, tol_path);
        if (spectrum->parsed()) return cmd_spectrum(config_path, out_dir, seed, threads);
    } catch (const embedcast::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const embedcast::DivergenceError& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
