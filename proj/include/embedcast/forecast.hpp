#pragma once

// The reconstructed system T-hat = (u, y) -> (w(y), g(u, y)) and the two
// forecast error laws: per-horizon direct regression and n-fold iteration,
// plus autocorrelation and the direct-error bound it implies.

#include "embedcast/learn.hpp"

#include <functional>
#include <optional>

namespace embedcast {

struct ReconstructedSystem {
    Paradigm paradigm = Paradigm::Delay;
    std::optional<ReservoirParams> reservoir;
    std::optional<DelayParams> delay;

    std::function<Vec(const Vec&)> feedback;                 // w-hat
    std::function<Mat(const Vec&)> feedback_jacobian;        // d x L, may be empty
    Index d = 0;
    Index L = 0;

    Vec apply_g(const Vec& u, const Vec& y) const;
    // One step of T-hat: (u, y) -> (feedback(y), g(u, y)).
    std::pair<Vec, Vec> step(const Vec& u, const Vec& y) const;
};

ReconstructedSystem make_reconstruction(const ReservoirParams& p, const FeedbackModel& model);
ReconstructedSystem make_reconstruction(const DelayParams& p, const FeedbackModel& model);

// Exact feedback for a full-state delay embedding of a known system:
// w(y) = phi(f^2(x)) with x decoded from the newest block. Realizes the
// conjugacy of the reconstruction with the base dynamics.
ReconstructedSystem make_exact_delay_reconstruction(const SystemSpec& spec,
                                                    const ObservationMap& obs,
                                                    const DelayParams& p);

struct IterationResult {
    Mat u_seq;  // (n+1) x d, row k = u_k
    Mat y_seq;  // (n+1) x L
    std::optional<Index> diverged_at;
};

// n iterations of T-hat from z0 = (u0, y0). Iteration stops (and the partial
// sequence is returned) once |u| or |y| leaves the guard ball.
IterationResult iterate_reconstruction(const ReconstructedSystem& sys, const Vec& u0,
                                       const Vec& y0, Index n, double guard_radius);

enum class ErrorMode { Iterative, Direct };

struct ErrorCurve {
    ErrorMode mode = ErrorMode::Iterative;
    std::vector<double> rms;        // horizon 0..N
    std::vector<Index> n_diverged;  // members excluded at each horizon
    Index ensemble_size = 0;
    double phi_norm = 1.0;  // empirical L2 norm of the (normalized) signal
    double dt = 0.0;
};

// Ensemble members are bundle base indices t; each needs an orbit entry
// (t - align_offset >= 0) and a future obs[t + N]. RMS is reduced in member
// order, so curves are independent of the thread count.
ErrorCurve error_iterative(const ReconstructedSystem& sys, const TrajectoryBundle& bundle,
                           const EmbeddedOrbit& orbit, const std::vector<Index>& ensemble,
                           Index N, double guard_radius, int threads = 1);

// models[k] is the horizon-k feedback fit (k = 0..N, shared feature map).
ErrorCurve error_direct(const std::vector<FeedbackModel>& models, const TrajectoryBundle& bundle,
                        const EmbeddedOrbit& orbit, const std::vector<Index>& ensemble, Index N,
                        int threads = 1);

struct AutocorrCurve {
    std::vector<double> values;  // lag 0..N, value 1 at lag 0
    double norm2 = 0;            // empirical |psi|^2
};

// Time-averaged AutCor(n) = <U^n psi, psi> / |psi|^2 on the raw signal.
// component = -1 uses the full observation vector.
AutocorrCurve autocorrelation(const TrajectoryBundle& bundle, int component, Index N);

// bound(n) = phi_norm * sqrt(max(0, 1 - AutCor(n)^2)); dominates the direct
// error whenever phi lies in the hypothesis space.
std::vector<double> direct_bound(const AutocorrCurve& ac, double phi_norm);

// First lag with |AutCor| < 1/e.
Index decorrelation_time(const AutocorrCurve& ac);

struct PeriodogramReport {
    double peak_freq = 0;    // cycles per step
    double peak_power = 0;
    double second_power = 0;
    double ratio = 1.0;      // peak / next-largest bin
    Index n_bins = 0;
    double bin_width = 0;
};

// Rectangular-window DFT periodogram of the mean-removed curve tail starting
// at `start`; the zero-frequency bin is excluded from the peak search.
PeriodogramReport mixed_spectrum_diagnostic(const std::vector<double>& curve, Index start);

}  // namespace embedcast
