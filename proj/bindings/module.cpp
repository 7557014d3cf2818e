// Python bindings for the core pipeline: systems, embeddings, fits, error
// curves, spectra and the experiment runner.

#include "embedcast/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace embedcast;

PYBIND11_MODULE(_core, m) {
    m.doc() = "dynamics reconstruction and forecast-error laboratory";

    py::enum_<SystemKind>(m, "SystemKind")
        .value("TorusRotation", SystemKind::TorusRotation)
        .value("Lorenz63", SystemKind::Lorenz63)
        .value("L63Rot", SystemKind::L63Rot);

    py::class_<SystemSpec>(m, "SystemSpec")
        .def(py::init<>())
        .def_readwrite("kind", &SystemSpec::kind)
        .def_readwrite("torus_rho", &SystemSpec::torus_rho)
        .def_readwrite("rot_rho", &SystemSpec::rot_rho)
        .def_readwrite("sigma", &SystemSpec::sigma)
        .def_readwrite("rho", &SystemSpec::rho)
        .def_readwrite("beta", &SystemSpec::beta)
        .def_readwrite("dt", &SystemSpec::dt)
        .def_readwrite("substep", &SystemSpec::substep)
        .def("state_dim", &SystemSpec::state_dim);

    m.def("step_system", &step_system, py::arg("state"), py::arg("spec"));
    m.def("jacobian", &jacobian, py::arg("state"), py::arg("spec"));
    m.def("default_initial_state", &default_initial_state);

    py::class_<ObservationMap>(m, "ObservationMap")
        .def("dim", &ObservationMap::dim)
        .def("__call__", &ObservationMap::operator())
        .def("jac", &ObservationMap::jac);
    m.def("coordinate_observation", &coordinate_observation);
    m.def("full_state_observation", &full_state_observation);
    m.def("torus_trig_observation", &torus_trig_observation);

    py::class_<TrajectoryBundle>(m, "TrajectoryBundle")
        .def_readonly("states", &TrajectoryBundle::states)
        .def_readonly("observations", &TrajectoryBundle::observations)
        .def_readonly("dt", &TrajectoryBundle::dt)
        .def_readonly("seed", &TrajectoryBundle::seed)
        .def("size", &TrajectoryBundle::size);
    m.def("generate_trajectory", &generate_trajectory, py::arg("spec"), py::arg("x0"),
          py::arg("n_steps"), py::arg("n_transient"), py::arg("obs"), py::arg("seed"));
    m.def("subsample", &subsample);
    m.def("sample_mu", &sample_mu);

    py::class_<Normalization>(m, "Normalization")
        .def_readonly("mean", &Normalization::mean)
        .def_readonly("scale", &Normalization::scale)
        .def_static("measure", &Normalization::measure)
        .def("apply_bundle",
             static_cast<TrajectoryBundle (Normalization::*)(const TrajectoryBundle&) const>(
                 &Normalization::apply))
        .def("apply_observation",
             static_cast<ObservationMap (Normalization::*)(const ObservationMap&) const>(
                 &Normalization::apply));

    py::class_<ReservoirParams>(m, "ReservoirParams")
        .def_readonly("L", &ReservoirParams::L)
        .def_readonly("d", &ReservoirParams::d)
        .def_readonly("W_in", &ReservoirParams::W_in)
        .def_readonly("W_Y", &ReservoirParams::W_Y)
        .def_readonly("v_bias", &ReservoirParams::v_bias)
        .def_readonly("lambda_", &ReservoirParams::lambda);
    m.def("reservoir_init", &reservoir_init, py::arg("L"), py::arg("d"), py::arg("lambda_"),
          py::arg("seed"));
    m.def("reservoir_g", &reservoir_g);

    py::class_<DelayParams>(m, "DelayParams")
        .def(py::init([](int Q, int d) { return DelayParams{Q, d}; }), py::arg("Q"), py::arg("d"))
        .def_readwrite("Q", &DelayParams::Q)
        .def_readwrite("d", &DelayParams::d)
        .def("L", &DelayParams::L);
    m.def("delay_g", &delay_g);

    py::class_<EmbeddedOrbit>(m, "EmbeddedOrbit")
        .def_readonly("Y", &EmbeddedOrbit::Y)
        .def_readonly("align_offset", &EmbeddedOrbit::align_offset)
        .def("size", &EmbeddedOrbit::size)
        .def("dim", &EmbeddedOrbit::dim)
        .def("base_index", &EmbeddedOrbit::base_index);
    m.def("drive", &drive, py::arg("params"), py::arg("inputs"), py::arg("y0"),
          py::arg("washout"));
    m.def("delay_embed", &delay_embed);

    py::class_<InjectivityReport>(m, "InjectivityReport")
        .def_readonly("n_pairs_checked", &InjectivityReport::n_pairs_checked)
        .def_readonly("n_close", &InjectivityReport::n_close)
        .def_readonly("n_false", &InjectivityReport::n_false)
        .def_readonly("false_fraction", &InjectivityReport::false_fraction)
        .def_readonly("max_state_gap", &InjectivityReport::max_state_gap);
    m.def("injectivity_diagnostic", &injectivity_diagnostic, py::arg("orbit"), py::arg("bundle"),
          py::arg("tol"), py::arg("state_tol"), py::arg("stride") = 1);

    py::class_<FeatureMap>(m, "FeatureMap")
        .def("n_features", &FeatureMap::n_features)
        .def("eval", &FeatureMap::eval)
        .def("jac", &FeatureMap::jac);
    m.def("make_affine_features", &make_affine_features);
    m.def("make_fourier_features", &make_fourier_features, py::arg("L"), py::arg("kmax"),
          py::arg("mode") = FourierMode::Direct);
    m.def("make_rbf_features", &make_rbf_features);
    py::enum_<FourierMode>(m, "FourierMode")
        .value("Direct", FourierMode::Direct)
        .value("PhasePairs", FourierMode::PhasePairs);

    py::class_<FeedbackModel>(m, "FeedbackModel")
        .def_readonly("coeffs", &FeedbackModel::coeffs)
        .def_readonly("horizon", &FeedbackModel::horizon)
        .def_readonly("ridge", &FeedbackModel::ridge)
        .def_readonly("delta", &FeedbackModel::delta)
        .def("predict", &FeedbackModel::predict)
        .def("prediction_jacobian", &FeedbackModel::prediction_jacobian);
    m.def("fit_feedback", &fit_feedback, py::arg("Y"), py::arg("targets"), py::arg("fmap"),
          py::arg("ridge"), py::arg("k"), py::arg("holdout_fraction") = 0.2);

    py::class_<TrainingSet>(m, "TrainingSet")
        .def_readonly("Y", &TrainingSet::Y)
        .def_readonly("targets", &TrainingSet::targets);
    m.def("make_training_set", &make_training_set, py::arg("bundle"), py::arg("orbit"),
          py::arg("k"), py::arg("max_k") = -1);
    m.def("project_empirical", &project_empirical);
    m.def("auto_ridge", &auto_ridge);

    py::enum_<Paradigm>(m, "Paradigm")
        .value("Reservoir", Paradigm::Reservoir)
        .value("Delay", Paradigm::Delay);

    py::class_<ReconstructedSystem>(m, "ReconstructedSystem")
        .def_readonly("d", &ReconstructedSystem::d)
        .def_readonly("L", &ReconstructedSystem::L)
        .def("step", &ReconstructedSystem::step);
    m.def("make_reservoir_reconstruction",
          static_cast<ReconstructedSystem (*)(const ReservoirParams&, const FeedbackModel&)>(
              &make_reconstruction));
    m.def("make_delay_reconstruction",
          static_cast<ReconstructedSystem (*)(const DelayParams&, const FeedbackModel&)>(
              &make_reconstruction));
    m.def("make_exact_delay_reconstruction", &make_exact_delay_reconstruction);

    py::class_<IterationResult>(m, "IterationResult")
        .def_readonly("u_seq", &IterationResult::u_seq)
        .def_readonly("y_seq", &IterationResult::y_seq)
        .def_readonly("diverged_at", &IterationResult::diverged_at);
    m.def("iterate_reconstruction", &iterate_reconstruction, py::arg("system"), py::arg("u0"),
          py::arg("y0"), py::arg("n"), py::arg("guard_radius"));

    py::class_<ErrorCurve>(m, "ErrorCurve")
        .def_readonly("rms", &ErrorCurve::rms)
        .def_readonly("n_diverged", &ErrorCurve::n_diverged)
        .def_readonly("ensemble_size", &ErrorCurve::ensemble_size)
        .def_readonly("phi_norm", &ErrorCurve::phi_norm)
        .def_readonly("dt", &ErrorCurve::dt);
    m.def("error_iterative", &error_iterative, py::arg("system"), py::arg("bundle"),
          py::arg("orbit"), py::arg("ensemble"), py::arg("N"), py::arg("guard_radius"),
          py::arg("threads") = 1);
    m.def("error_direct", &error_direct, py::arg("models"), py::arg("bundle"), py::arg("orbit"),
          py::arg("ensemble"), py::arg("N"), py::arg("threads") = 1);

    py::class_<AutocorrCurve>(m, "AutocorrCurve")
        .def_readonly("values", &AutocorrCurve::values)
        .def_readonly("norm2", &AutocorrCurve::norm2);
    m.def("autocorrelation", &autocorrelation, py::arg("bundle"), py::arg("component"),
          py::arg("N"));
    m.def("direct_bound", &direct_bound);
    m.def("decorrelation_time", &decorrelation_time);

    py::class_<PeriodogramReport>(m, "PeriodogramReport")
        .def_readonly("peak_freq", &PeriodogramReport::peak_freq)
        .def_readonly("ratio", &PeriodogramReport::ratio)
        .def_readonly("bin_width", &PeriodogramReport::bin_width);
    m.def("mixed_spectrum_diagnostic", &mixed_spectrum_diagnostic, py::arg("curve"),
          py::arg("start"));

    py::class_<CocycleGenerator>(m, "CocycleGenerator")
        .def_readonly("dim", &CocycleGenerator::dim)
        .def_readonly("length", &CocycleGenerator::length)
        .def("at", [](const CocycleGenerator& g, Index n) { return g.at(n); });
    m.def("tangent_generator", &tangent_generator);
    m.def("reconstructed_generator", &reconstructed_generator);
    m.def("constant_generator", &constant_generator);
    m.def(
        "matrix_list_generator",
        [](const std::vector<Mat>& mats) {
            if (mats.empty()) throw std::invalid_argument("need at least one matrix");
            CocycleGenerator gen;
            gen.kind = GeneratorKind::Synthetic;
            gen.dim = mats[0].rows();
            gen.length = static_cast<Index>(mats.size());
            gen.at = [mats](Index n) { return mats[static_cast<std::size_t>(n)]; };
            return gen;
        },
        "cocycle generator from an explicit list of matrices");

    py::class_<LyapunovSpectrum>(m, "LyapunovSpectrum")
        .def_readonly("exponents", &LyapunovSpectrum::exponents)
        .def_readonly("n_steps", &LyapunovSpectrum::n_steps)
        .def_readonly("dt", &LyapunovSpectrum::dt)
        .def_readonly("history", &LyapunovSpectrum::history)
        .def("per_time", &LyapunovSpectrum::per_time)
        .def("spread", &LyapunovSpectrum::spread, py::arg("fraction") = 0.25);
    m.def("lyapunov_spectrum", &lyapunov_spectrum, py::arg("generator"), py::arg("n_steps"),
          py::arg("refactor_every") = 1, py::arg("dt") = 1.0);

    py::class_<MatchReport>(m, "MatchReport")
        .def_readonly("matched", &MatchReport::matched)
        .def_readonly("gaps", &MatchReport::gaps)
        .def_readonly("max_gap", &MatchReport::max_gap)
        .def_readonly("spurious", &MatchReport::spurious)
        .def_readonly("all_within", &MatchReport::all_within);
    m.def("exponent_subset_check", &exponent_subset_check);

    py::class_<PerturbedRun>(m, "PerturbedRun")
        .def_readonly("a", &PerturbedRun::a)
        .def_readonly("b", &PerturbedRun::b)
        .def_readonly("a_norms", &PerturbedRun::a_norms)
        .def_readonly("overflow_at", &PerturbedRun::overflow_at);
    m.def("perturbed_iterate", &perturbed_iterate, py::arg("M"), py::arg("d"),
          py::arg("c_stream"), py::arg("n"));
    m.def("graph_transform", &graph_transform, py::arg("generator"), py::arg("d_stream"),
          py::arg("n"));

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("rate", &RateFit::rate)
        .def_readonly("stderr_", &RateFit::stderr_)
        .def_readonly("n0", &RateFit::n0)
        .def_readonly("n1", &RateFit::n1);
    m.def("growth_rate", &growth_rate, py::arg("norms"), py::arg("n0") = -1, py::arg("n1") = -1);
    m.def("c_phi_phi", &c_phi_phi, py::arg("bundle"), py::arg("spec"), py::arg("obs"),
          py::arg("Q"), py::arg("t"));
    m.def("residual_stream", &residual_stream);
    m.def("perturbation_stream", &perturbation_stream);

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("config_echo", &RunReport::config_echo)
        .def_readonly("artifacts", &RunReport::artifacts)
        .def_readonly("timings", &RunReport::timings)
        .def_readonly("summary", &RunReport::summary);
    m.def(
        "run_experiment_file",
        [](const std::string& config_path, const std::string& out_dir, long long seed) {
            ExperimentConfig config = parse_config(config_path);
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
            return run_experiment(config);
        },
        py::arg("config_path"), py::arg("out_dir") = std::string(), py::arg("seed") = -1,
        "parse a config file and run the experiment pipeline");

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DivergenceError>(m, "DivergenceError");
    py::register_exception<RankDeficiencyError>(m, "RankDeficiencyError");
}
