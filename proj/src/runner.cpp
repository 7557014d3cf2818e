#include "embedcast/runner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

namespace embedcast {

namespace fs = std::filesystem;

namespace {

class StageTimer {
public:
    explicit StageTimer(RunReport& report) : report_(report) {}
    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            report_.timings[stage] += seconds_since(t0);
        } else {
            auto result = fn();
            report_.timings[stage] += seconds_since(t0);
            return result;
        }
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    RunReport& report_;
};

SystemSpec system_from_config(const ExperimentConfig& c) {
    SystemSpec spec;
    if (c.system == "torus-rotation")
        spec.kind = SystemKind::TorusRotation;
    else if (c.system == "lorenz63")
        spec.kind = SystemKind::Lorenz63;
    else
        spec.kind = SystemKind::L63Rot;
    spec.torus_rho = Eigen::Vector2d{c.rho1, c.rho2};
    spec.rot_rho = c.rot_rho;
    spec.sigma = c.sigma;
    spec.rho = c.rho_l;
    spec.beta = c.beta;
    spec.dt = c.dt;
    spec.substep = c.substep > 0 ? c.substep : c.dt;
    spec.validate();
    return spec;
}

ObservationMap observation_from_config(const ExperimentConfig& c, const SystemSpec& spec) {
    if (c.observation == "coordinate")
        return coordinate_observation(spec.state_dim(), c.components);
    if (c.observation == "full-state") return full_state_observation(spec.state_dim());
    return torus_trig_observation(spec.state_dim(), c.components);
}

FeatureMap hypothesis_from_config(const ExperimentConfig& c, const EmbeddedOrbit& orbit) {
    if (c.hypothesis == "affine") return make_affine_features(orbit.dim());
    if (c.hypothesis == "fourier")
        return make_fourier_features(orbit.dim(), c.fourier_kmax,
                                     c.fourier_mode == "phase-pairs" ? FourierMode::PhasePairs
                                                                     : FourierMode::Direct);
    return make_rbf_features(orbit, c.rbf_centers);
}

void write_file(const fs::path& path, const std::string& content, RunReport& report,
                const fs::path& root) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    report.artifacts.push_back(fs::relative(path, root).string());
}

nlohmann::json curve_sidecar(const ExperimentConfig& c, const ErrorCurve& curve,
                             const std::string& paradigm, const Normalization& nrm) {
    nlohmann::json j;
    j["mode"] = curve.mode == ErrorMode::Iterative ? "iterative" : "direct";
    j["paradigm"] = paradigm;
    j["ensemble"] = curve.ensemble_size;
    j["phi_norm"] = curve.phi_norm;
    j["dt"] = curve.dt;
    j["seed"] = c.seed;
    j["hypothesis"] = c.hypothesis;
    j["normalization"] = {{"scale", nrm.scale},
                          {"mean", std::vector<double>(nrm.mean.data(),
                                                       nrm.mean.data() + nrm.mean.size())}};
    return j;
}

struct ParadigmRun {
    std::string name;
    EmbeddedOrbit orbit;
    ReconstructedSystem system;
    std::vector<FeedbackModel> direct_models;  // k = 0..N when direct mode runs
    FeedbackModel one_step;
};

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
    RunReport report;
    report.config_echo = config.echo();
    const fs::path out_dir(config.out_dir);
    fs::create_directories(out_dir);
    StageTimer timer(report);
    const int threads = resolve_threads(config.threads);

    const SystemSpec spec = system_from_config(config);
    ObservationMap obs = observation_from_config(config, spec);

    // ---- trajectory ----
    TrajectoryBundle bundle = timer.run("trajectory", [&] {
        TrajectoryBundle raw =
            generate_trajectory(spec, default_initial_state(spec),
                                config.length * config.lag, config.transient, obs, config.seed);
        return subsample(raw, config.lag);
    });
    Normalization nrm;
    nrm.mean = Vec::Zero(obs.dim());
    if (config.normalize) {
        nrm = Normalization::measure(bundle);
        bundle = nrm.apply(bundle);
        obs = nrm.apply(obs);
    }
    {
        std::ostringstream os;
        write_trajectory_csv(os, bundle);
        write_file(out_dir / "trajectory.csv", os.str(), report, out_dir);
    }
    const double phi_norm =
        std::sqrt(bundle.observations.rowwise().squaredNorm().mean());
    report.summary["phi_norm"] = phi_norm;
    const double attractor_diameter =
        (bundle.observations.colwise().maxCoeff() - bundle.observations.colwise().minCoeff())
            .norm();
    const double guard = config.guard_factor * std::max(attractor_diameter, 1e-6);

    // ---- embedding + learning per paradigm ----
    std::vector<ParadigmRun> runs;
    std::vector<std::string> wanted;
    if (config.paradigm == "both") {
        wanted = {"delay", "reservoir"};
    } else {
        wanted = {config.paradigm};
    }
    const Index N = config.horizon;
    const bool direct_mode = config.mode != "iterative";
    const bool iterative_mode = config.mode != "direct";

    for (const std::string& name : wanted) {
        ParadigmRun run;
        run.name = name;
        run.orbit = timer.run("embedding", [&]() -> EmbeddedOrbit {
            if (name == "delay") {
                DelayParams dp{config.Q, static_cast<int>(bundle.obs_dim())};
                return delay_embed(bundle, dp);
            }
            ReservoirParams rp = reservoir_init(config.reservoir_size, bundle.obs_dim(),
                                                config.lambda, splitmix64(config.seed ^ 0x51));
            if (config.washout >= bundle.size())
                throw ConfigError("washout exceeds the training length");
            return drive(rp, bundle.observations, Vec::Zero(rp.L), config.washout);
        });

        timer.run("learning", [&] {
            const FeatureMap fmap = hypothesis_from_config(config, run.orbit);
            const int max_k = static_cast<int>(direct_mode ? N : 1);
            const TrainingSet ts1 = make_training_set(bundle, run.orbit, 1, max_k);
            double ridge = config.ridge;
            if (ridge < 0) ridge = auto_ridge(fmap.eval_rows(ts1.Y));
            run.one_step = fit_feedback(ts1.Y, ts1.targets, fmap, ridge, 1, config.holdout);
            report.summary["delta_" + name] = run.one_step.delta;

            if (direct_mode) {
                run.direct_models.resize(N + 1);
                std::exception_ptr err;
                std::mutex err_mx;
                parallel_for(N + 1, threads, [&](Index k) {
                    try {
                        TrainingSet ts = make_training_set(bundle, run.orbit,
                                                           static_cast<int>(k), max_k);
                        run.direct_models[k] =
                            fit_feedback(ts.Y, ts.targets, fmap, ridge, static_cast<int>(k),
                                         config.holdout);
                    } catch (...) {
                        std::lock_guard<std::mutex> lk(err_mx);
                        if (!err) err = std::current_exception();
                    }
                });
                if (err) std::rethrow_exception(err);
            }
        });

        if (name == "delay") {
            DelayParams dp{config.Q, static_cast<int>(bundle.obs_dim())};
            run.system = make_reconstruction(dp, run.one_step);
        } else {
            // the reservoir used to embed is the one iterated
            ReservoirParams rp = reservoir_init(config.reservoir_size, bundle.obs_dim(),
                                                config.lambda, splitmix64(config.seed ^ 0x51));
            run.system = make_reconstruction(rp, run.one_step);
        }
        runs.push_back(std::move(run));
    }

    // ---- autocorrelation / bound ----
    AutocorrCurve ac;
    std::vector<double> bound;
    if (config.bound || config.periodogram || config.curves) {
        ac = timer.run("autocorrelation", [&] {
            return autocorrelation(bundle, -1, std::min<Index>(N, bundle.size() / 2 - 1));
        });
        report.summary["decorrelation_time"] = static_cast<double>(decorrelation_time(ac));
        if (config.bound) {
            bound = direct_bound(ac, phi_norm);
            std::ostringstream os;
            os << "n,t,autocorr,bound\n";
            for (std::size_t n = 0; n < ac.values.size(); ++n)
                os << n << ',' << format_g17(n * bundle.dt) << ',' << format_g17(ac.values[n])
                   << ',' << format_g17(bound[n]) << "\n";
            write_file(out_dir / "curves" / "autocorr_bound.csv", os.str(), report, out_dir);
        }
    }

    // ---- forecast curves ----
    if (config.curves) {
        timer.run("forecast", [&] {
            for (ParadigmRun& run : runs) {
                // members: holdout tail of the usable orbit rows, capped at the
                // requested ensemble size
                const Index usable =
                    std::min(run.orbit.size(), bundle.size() - N - run.orbit.align_offset);
                if (usable < 8) throw ConfigError("horizon too long for the training length");
                const Index n_test = std::max<Index>(
                    1, std::min(usable - 1,
                                static_cast<Index>(std::floor(config.holdout * usable))));
                Index first = usable - n_test;
                std::vector<Index> members;
                for (Index j = first; j < usable && static_cast<Index>(members.size()) < config.ensemble; ++j)
                    members.push_back(run.orbit.base_index(j));

                if (iterative_mode) {
                    ErrorCurve curve =
                        error_iterative(run.system, bundle, run.orbit, members, N, guard, threads);
                    std::ostringstream os;
                    write_curve_csv(os, curve, config.bound ? &bound : nullptr);
                    write_file(out_dir / "curves" / ("iterative_" + run.name + ".csv"), os.str(),
                               report, out_dir);
                    write_file(out_dir / "curves" / ("iterative_" + run.name + ".json"),
                               curve_sidecar(config, curve, run.name, nrm).dump(2), report,
                               out_dir);
                    const std::size_t tail = std::max<std::size_t>(1, curve.rms.size() / 5);
                    std::vector<double> tail_vals(curve.rms.end() - tail, curve.rms.end());
                    std::nth_element(tail_vals.begin(), tail_vals.begin() + tail_vals.size() / 2,
                                     tail_vals.end());
                    report.summary["iterative_saturation_" + run.name] =
                        tail_vals[tail_vals.size() / 2];
                    try {
                        RateFit fit = growth_rate(curve.rms);
                        report.summary["iterative_slope_" + run.name] = fit.rate;
                    } catch (const std::exception&) {
                        // curve never grew or saturated immediately; no slope
                    }
                    report.summary["iterative_diverged_" + run.name] =
                        static_cast<double>(curve.n_diverged.back());
                }
                if (direct_mode) {
                    ErrorCurve curve =
                        error_direct(run.direct_models, bundle, run.orbit, members, N, threads);
                    std::ostringstream os;
                    write_curve_csv(os, curve, config.bound ? &bound : nullptr);
                    write_file(out_dir / "curves" / ("direct_" + run.name + ".csv"), os.str(),
                               report, out_dir);
                    write_file(out_dir / "curves" / ("direct_" + run.name + ".json"),
                               curve_sidecar(config, curve, run.name, nrm).dump(2), report,
                               out_dir);
                    const std::size_t tail = std::max<std::size_t>(1, curve.rms.size() / 5);
                    std::vector<double> tail_vals(curve.rms.end() - tail, curve.rms.end());
                    std::nth_element(tail_vals.begin(), tail_vals.begin() + tail_vals.size() / 2,
                                     tail_vals.end());
                    report.summary["direct_saturation_" + run.name] =
                        tail_vals[tail_vals.size() / 2];

                    if (config.periodogram) {
                        const double sat = tail_vals[tail_vals.size() / 2];
                        Index start = 0;
                        while (start + 16 < static_cast<Index>(curve.rms.size()) &&
                               curve.rms[start] < 0.9 * sat)
                            ++start;
                        PeriodogramReport rep = mixed_spectrum_diagnostic(curve.rms, start);
                        report.summary["periodogram_peak_freq_" + run.name] = rep.peak_freq;
                        report.summary["periodogram_ratio_" + run.name] = rep.ratio;
                    }
                }
            }
        });
    }

    // ---- spectra ----
    if (config.spectra) {
        timer.run("spectra", [&] {
            const Index steps = std::min<Index>(config.spectrum_steps, bundle.size());
            CocycleGenerator base_gen = tangent_generator(bundle, spec);
            LyapunovSpectrum base =
                lyapunov_spectrum(base_gen, steps, config.refactor_every, bundle.dt);
            {
                std::ostringstream os;
                write_spectrum_csv(os, base);
                write_file(out_dir / "spectra" / "base.csv", os.str(), report, out_dir);
            }
            nlohmann::json js;
            js["dt"] = bundle.dt;
            js["steps"] = base.n_steps;
            js["per_step"] = std::vector<double>(base.exponents.data(),
                                                 base.exponents.data() + base.exponents.size());
            const Vec pt = base.per_time();
            js["per_time"] = std::vector<double>(pt.data(), pt.data() + pt.size());
            report.summary["lambda1_per_time"] = pt[0];
            report.summary["lambda_sum_per_time"] = pt.sum();

            for (ParadigmRun& run : runs) {
                CocycleGenerator rec_gen = reconstructed_generator(run.system, run.orbit, bundle);
                const Index rec_steps = std::min<Index>(steps, rec_gen.length);
                LyapunovSpectrum rec =
                    lyapunov_spectrum(rec_gen, rec_steps, config.refactor_every, bundle.dt);
                std::ostringstream os;
                write_spectrum_csv(os, rec);
                write_file(out_dir / "spectra" / ("reconstructed_" + run.name + ".csv"), os.str(),
                           report, out_dir);
                js["reconstructed_" + run.name] = std::vector<double>(
                    rec.exponents.data(), rec.exponents.data() + rec.exponents.size());
                report.summary["lambda1_reconstructed_" + run.name] = rec.per_time()[0];
            }
            write_file(out_dir / "spectra" / "summary.json", js.dump(2), report, out_dir);
        });
    }

    write_file(out_dir / "config_echo.toml", report.config_echo, report, out_dir);
    write_file(out_dir / "report.json", report_to_json(report).dump(2), report, out_dir);
    return report;
}

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["config_echo"] = report.config_echo;
    j["artifacts"] = report.artifacts;
    j["timings"] = report.timings;
    j["summary"] = report.summary;
    return j;
}

RunReport report_from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read report: " + path);
    nlohmann::json j;
    f >> j;
    RunReport r;
    r.config_echo = j.at("config_echo").get<std::string>();
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    r.timings = j.at("timings").get<std::map<std::string, double>>();
    r.summary = j.at("summary").get<std::map<std::string, double>>();
    return r;
}

CompareResult compare_runs(const RunReport& a, const RunReport& b,
                           const std::map<std::string, double>& tolerances) {
    CompareResult res;
    double default_tol = 1e-12;
    if (auto it = tolerances.find("default"); it != tolerances.end()) default_tol = it->second;

    for (const auto& [key, va] : a.summary) {
        auto it = b.summary.find(key);
        if (it == b.summary.end()) {
            res.structural_diffs.push_back("only in A: " + key);
            res.compatible = false;
            continue;
        }
        const double vb = it->second;
        const double denom = std::max({std::abs(va), std::abs(vb), 1e-300});
        const double rel = std::abs(va - vb) / denom;
        res.relative_diffs[key] = rel;
        double tol = default_tol;
        if (auto t = tolerances.find(key); t != tolerances.end()) tol = t->second;
        if (rel > tol) res.within_tolerance = false;
    }
    for (const auto& [key, vb] : b.summary) {
        if (!a.summary.count(key)) {
            res.structural_diffs.push_back("only in B: " + key);
            res.compatible = false;
        }
    }
    return res;
}

}  // namespace embedcast
