#include "embedcast/forecast.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace embedcast {

Vec ReconstructedSystem::apply_g(const Vec& u, const Vec& y) const {
    if (paradigm == Paradigm::Reservoir) return reservoir_g(*reservoir, u, y);
    return delay_g(u, y, *delay);
}

std::pair<Vec, Vec> ReconstructedSystem::step(const Vec& u, const Vec& y) const {
    return {feedback(y), apply_g(u, y)};
}

namespace {

ReconstructedSystem from_model(const FeedbackModel& model, Index d, Index L) {
    ReconstructedSystem sys;
    sys.d = d;
    sys.L = L;
    sys.feedback = [model](const Vec& y) { return model.predict(y); };
    sys.feedback_jacobian = [model](const Vec& y) { return model.prediction_jacobian(y); };
    return sys;
}

}  // namespace

ReconstructedSystem make_reconstruction(const ReservoirParams& p, const FeedbackModel& model) {
    if (model.fmap.input_dim != p.L)
        throw std::invalid_argument("feedback model does not match reservoir dimension");
    ReconstructedSystem sys = from_model(model, p.d, p.L);
    sys.paradigm = Paradigm::Reservoir;
    sys.reservoir = p;
    return sys;
}

ReconstructedSystem make_reconstruction(const DelayParams& p, const FeedbackModel& model) {
    if (model.fmap.input_dim != p.L())
        throw std::invalid_argument("feedback model does not match delay dimension");
    ReconstructedSystem sys = from_model(model, p.d, p.L());
    sys.paradigm = Paradigm::Delay;
    sys.delay = p;
    return sys;
}

ReconstructedSystem make_exact_delay_reconstruction(const SystemSpec& spec,
                                                    const ObservationMap& obs,
                                                    const DelayParams& p) {
    if (obs.kind != ObsKind::FullState)
        throw std::invalid_argument("exact delay feedback needs a full-state observation");
    if (p.d != spec.state_dim())
        throw std::invalid_argument("delay block size must equal the state dimension");

    ReconstructedSystem sys;
    sys.paradigm = Paradigm::Delay;
    sys.delay = p;
    sys.d = p.d;
    sys.L = p.L();
    const Vec shift = obs.shift.size() ? obs.shift : Vec::Zero(obs.dim());
    const double scale = obs.scale;
    const int d = p.d;
    // newest block is phi(omega_{t-1}); the exact feedback is phi(f^2 of it)
    sys.feedback = [spec, obs, shift, scale, d](const Vec& y) {
        Vec x = y.head(d) * scale + shift;
        x = step_system(step_system(x, spec), spec);
        return obs(x);
    };
    sys.feedback_jacobian = [spec, shift, scale, d](const Vec& y) {
        Vec x = y.head(d) * scale + shift;
        auto [x1, J1] = step_with_jacobian(x, spec);
        auto [x2, J2] = step_with_jacobian(x1, spec);
        Mat J = Mat::Zero(d, y.size());
        J.leftCols(d) = J2 * J1;  // the observation scale cancels
        return J;
    };
    return sys;
}

IterationResult iterate_reconstruction(const ReconstructedSystem& sys, const Vec& u0,
                                       const Vec& y0, Index n, double guard_radius) {
    IterationResult out;
    out.u_seq.resize(n + 1, sys.d);
    out.y_seq.resize(n + 1, sys.L);
    Vec u = u0, y = y0;
    for (Index k = 0; k <= n; ++k) {
        const bool bad = !u.allFinite() || !y.allFinite() || u.norm() > guard_radius ||
                         y.norm() > guard_radius;
        if (bad) {
            out.diverged_at = k;
            out.u_seq.conservativeResize(k, Eigen::NoChange);
            out.y_seq.conservativeResize(k, Eigen::NoChange);
            return out;
        }
        out.u_seq.row(k) = u;
        out.y_seq.row(k) = y;
        if (k < n) {
            auto z = sys.step(u, y);
            u = std::move(z.first);
            y = std::move(z.second);
        }
    }
    return out;
}

namespace {

void validate_ensemble(const TrajectoryBundle& bundle, const EmbeddedOrbit& orbit,
                       const std::vector<Index>& ensemble, Index N) {
    for (Index t : ensemble) {
        if (t - orbit.align_offset < 0 || t - orbit.align_offset >= orbit.size())
            throw std::invalid_argument("ensemble member has no embedded state");
        if (t + N >= bundle.size())
            throw std::invalid_argument("ensemble member horizon exceeds bundle");
    }
}

double measured_phi_norm(const TrajectoryBundle& bundle) {
    return std::sqrt(bundle.observations.rowwise().squaredNorm().mean());
}

}  // namespace

ErrorCurve error_iterative(const ReconstructedSystem& sys, const TrajectoryBundle& bundle,
                           const EmbeddedOrbit& orbit, const std::vector<Index>& ensemble,
                           Index N, double guard_radius, int threads) {
    validate_ensemble(bundle, orbit, ensemble, N);
    const Index E = static_cast<Index>(ensemble.size());

    // per-member squared errors; +inf marks divergence from that horizon on
    Mat err2 = Mat::Constant(E, N + 1, std::numeric_limits<double>::infinity());
    parallel_for(E, threads, [&](Index m) {
        const Index t = ensemble[m];
        const Vec u0 = bundle.observations.row(t);
        const Vec y0 = orbit.Y.row(t - orbit.align_offset);
        IterationResult it = iterate_reconstruction(sys, u0, y0, N, guard_radius);
        const Index valid = it.u_seq.rows();
        for (Index k = 0; k < valid; ++k) {
            const double e =
                (bundle.observations.row(t + k) - it.u_seq.row(k)).squaredNorm();
            err2(m, k) = e;
        }
    });

    ErrorCurve curve;
    curve.mode = ErrorMode::Iterative;
    curve.ensemble_size = E;
    curve.phi_norm = measured_phi_norm(bundle);
    curve.dt = bundle.dt;
    curve.rms.resize(N + 1);
    curve.n_diverged.resize(N + 1);
    for (Index k = 0; k <= N; ++k) {
        double sum = 0;
        Index alive = 0;
        for (Index m = 0; m < E; ++m) {
            if (std::isfinite(err2(m, k))) {
                sum += err2(m, k);
                ++alive;
            }
        }
        curve.n_diverged[k] = E - alive;
        curve.rms[k] = alive > 0 ? std::sqrt(sum / static_cast<double>(alive))
                                 : std::numeric_limits<double>::quiet_NaN();
    }
    return curve;
}

ErrorCurve error_direct(const std::vector<FeedbackModel>& models, const TrajectoryBundle& bundle,
                        const EmbeddedOrbit& orbit, const std::vector<Index>& ensemble, Index N,
                        int threads) {
    if (static_cast<Index>(models.size()) < N + 1)
        throw std::invalid_argument("error_direct: need one model per horizon 0..N");
    validate_ensemble(bundle, orbit, ensemble, N);
    const Index E = static_cast<Index>(ensemble.size());

    ErrorCurve curve;
    curve.mode = ErrorMode::Direct;
    curve.ensemble_size = E;
    curve.phi_norm = measured_phi_norm(bundle);
    curve.dt = bundle.dt;
    curve.rms.assign(N + 1, 0.0);
    curve.n_diverged.assign(N + 1, 0);

    std::vector<double> sums(N + 1, 0.0);
    parallel_for(N + 1, threads, [&](Index k) {
        const FeedbackModel& model = models[k];
        double sum = 0;
        for (Index m = 0; m < E; ++m) {
            const Index t = ensemble[m];
            const Vec y = orbit.Y.row(t - orbit.align_offset);
            sum += (bundle.observations.row(t + k).transpose() - model.predict(y)).squaredNorm();
        }
        sums[k] = sum;
    });
    for (Index k = 0; k <= N; ++k) curve.rms[k] = std::sqrt(sums[k] / static_cast<double>(E));
    return curve;
}

AutocorrCurve autocorrelation(const TrajectoryBundle& bundle, int component, Index N) {
    const Index n = bundle.size();
    if (n <= N) throw std::invalid_argument("autocorrelation: bundle too short for N lags");
    Mat sig;
    if (component < 0) {
        sig = bundle.observations;
    } else {
        if (component >= bundle.obs_dim())
            throw std::invalid_argument("autocorrelation: component out of range");
        sig = bundle.observations.col(component);
    }
    AutocorrCurve ac;
    ac.values.resize(N + 1);
    // norm2 shares the lag-0 accumulation path so AutCor(0) is exactly 1
    for (Index lag = 0; lag <= N; ++lag) {
        double s = 0;
        const Index m = n - lag;
        for (Index t = 0; t < m; ++t) s += sig.row(t + lag).dot(sig.row(t));
        s /= static_cast<double>(m);
        if (lag == 0) ac.norm2 = s;
        ac.values[lag] = s / ac.norm2;
    }
    return ac;
}

std::vector<double> direct_bound(const AutocorrCurve& ac, double phi_norm) {
    if (!(phi_norm > 0)) throw std::invalid_argument("direct_bound: phi_norm must be positive");
    std::vector<double> bound(ac.values.size());
    for (std::size_t i = 0; i < ac.values.size(); ++i)
        bound[i] = phi_norm * std::sqrt(std::max(0.0, 1.0 - ac.values[i] * ac.values[i]));
    return bound;
}

Index decorrelation_time(const AutocorrCurve& ac) {
    const double thresh = std::exp(-1.0);
    for (std::size_t i = 0; i < ac.values.size(); ++i)
        if (std::abs(ac.values[i]) < thresh) return static_cast<Index>(i);
    return static_cast<Index>(ac.values.size());
}

PeriodogramReport mixed_spectrum_diagnostic(const std::vector<double>& curve, Index start) {
    if (start < 0 || static_cast<std::size_t>(start) + 8 > curve.size())
        throw std::invalid_argument("mixed_spectrum_diagnostic: tail too short");
    const Index n = static_cast<Index>(curve.size()) - start;
    double mean = 0;
    for (Index i = 0; i < n; ++i) mean += curve[start + i];
    mean /= static_cast<double>(n);

    PeriodogramReport rep;
    rep.n_bins = n / 2;
    rep.bin_width = 1.0 / static_cast<double>(n);
    double best = -1, second = -1;
    Index best_j = 0;
    for (Index j = 1; j <= rep.n_bins; ++j) {
        double re = 0, im = 0;
        const double w = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        for (Index i = 0; i < n; ++i) {
            const double v = curve[start + i] - mean;
            re += v * std::cos(w * static_cast<double>(i));
            im -= v * std::sin(w * static_cast<double>(i));
        }
        const double p = re * re + im * im;
        if (p > best) {
            second = best;
            best = p;
            best_j = j;
        } else if (p > second) {
            second = p;
        }
    }
    rep.peak_power = best;
    rep.second_power = std::max(second, 0.0);
    rep.peak_freq = static_cast<double>(best_j) / static_cast<double>(n);
    rep.ratio = second > 0 ? best / second : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace embedcast
