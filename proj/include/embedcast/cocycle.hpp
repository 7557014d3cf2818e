#pragma once

// Matrix cocycles over a base orbit: Lyapunov spectra by iterated orthogonal
// refactorization, the perturbed cocycle of the reconstruction error, the
// graph-transform operator, and stability diagnostics.

#include "embedcast/forecast.hpp"

namespace embedcast {

enum class GeneratorKind { TangentOfF, ReconstructedM, Synthetic };

// at(n) returns the generator matrix at orbit step n (the point f^n omega_0),
// for n in [0, length).
struct CocycleGenerator {
    GeneratorKind kind = GeneratorKind::Synthetic;
    Index dim = 0;
    Index length = 0;
    std::function<Mat(Index)> at;
};

CocycleGenerator tangent_generator(const TrajectoryBundle& bundle, const SystemSpec& spec);

// M(omega) = [[0, W-hat], [G1, G2]] along the orbit: the linearization of the
// reconstructed system about the true trajectory. Generator index n is the
// orbit entry index (base point orbit.base_index(n)).
CocycleGenerator reconstructed_generator(const ReconstructedSystem& sys,
                                         const EmbeddedOrbit& orbit,
                                         const TrajectoryBundle& bundle);

CocycleGenerator constant_generator(const Mat& G, Index length);

// Generator n of the shifted cocycle is generator n + shift of the original.
CocycleGenerator shift_generator(const CocycleGenerator& gen, Index shift);

// G(f^{n-1} w) ... G(w) kept as Q * T * exp(log_scale) with T renormalized,
// so log-norms stay queryable long past the overflow point of the dense
// product.
struct FactoredProduct {
    Mat Q;             // orthogonal
    Mat T;             // upper triangular, unit max-norm
    double log_scale = 0;
    Index n = 0;

    Mat dense() const;      // throws if the scale overflows double range
    double log_norm() const;  // log of the 2-norm of the product
};

// Flags a (numerically) singular factor with its step index.
FactoredProduct cocycle_product(const CocycleGenerator& gen, Index n);

struct LyapunovSpectrum {
    Vec exponents;  // per-step, sorted descending
    Index n_steps = 0;
    double dt = 1.0;
    Mat history;  // running estimates, subsampled over the run
    std::vector<Index> history_steps;  // step count of each history row

    Vec per_time() const { return exponents / dt; }
    // max over exponents of the running-estimate spread across the last
    // `fraction` of the history; the convergence figure of merit.
    double spread(double fraction = 0.25) const;
};

// Iterated QR (Benettin): push an orthonormal frame through the generators,
// re-orthonormalize every refactor_every steps, average log |diag R|.
LyapunovSpectrum lyapunov_spectrum(const CocycleGenerator& gen, Index n_steps,
                                   int refactor_every = 1, double dt = 1.0);

struct MatchReport {
    std::vector<Index> matched;   // reconstructed index matched to each base exponent
    Vec gaps;                     // |lambda_base - lambda_recon| per base exponent
    double max_gap = 0;
    std::vector<Index> spurious;  // reconstructed exponents left unmatched
    bool all_within = false;
};

// Greedy nearest matching of each base exponent to a distinct reconstructed
// exponent. Both spectra must have converged (history spread < tol/2).
MatchReport exponent_subset_check(const LyapunovSpectrum& reconstructed,
                                  const LyapunovSpectrum& base, double tol);

// State history of the perturbed cocycle
//   [a_{n+1}; b_{n+1}] = M(f^n w)[a_n; b_n] + [0; c(f^n w)]
// with a_1 = 0, b_1 = 0 (and a_0 = b_0 = 0 stored); the recursion applies from
// n = 1, so c row 0 is never consumed -- this matches the Taylor expansion of
// the reconstruction error, whose first nonzero term is b_2 = c(f w).
struct PerturbedRun {
    Mat a;  // (n+1) x d, row k = a_k
    Mat b;  // (n+1) x L
    std::vector<double> a_norms;
    std::optional<Index> overflow_at;
};

PerturbedRun perturbed_iterate(const CocycleGenerator& M, Index d, const Mat& c_stream, Index n);

// (Psi^n d)(w) = sum_{j=1..n} G(n-j, f^j w) d(f^j w) by the stable forward
// recursion z_k = G_{k-1} z_{k-1} + d_k, z_0 = 0. Row j of d_stream and
// gen.at(j) both refer to the orbit point f^j w; row 0 is unused.
Vec graph_transform(const CocycleGenerator& gen, const Mat& d_stream, Index n);

struct RateFit {
    double rate = 0;
    double stderr_ = 0;  // 1-sigma of the LS slope
    Index n0 = 0, n1 = 0;
};

// LS slope of log norms over [n0, n1). Defaults to the knee window: entries
// strictly below half the final plateau (median of the last tenth).
RateFit growth_rate(const std::vector<double>& norms, Index n0 = -1, Index n1 = -1);

// sup_v |Dphi(w) v| / |DPhi(w) v| at bundle index t, for the Q-block backward
// delay window (blocks phi(f^{-q} w), q = 0..Q-1). Largest generalized
// singular value of the Jacobian pair; +inf if DPhi is rank deficient.
double c_phi_phi(const TrajectoryBundle& bundle, const SystemSpec& spec,
                 const ObservationMap& obs, int Q, Index t);

// Residual rows r(t) = obs[t+1] - w-hat(Phi(w_t)) for each usable orbit entry;
// the empirical (Id - pi) U phi stream that seeds the perturbed cocycle.
Mat residual_stream(const TrajectoryBundle& bundle, const EmbeddedOrbit& orbit,
                    const ReconstructedSystem& sys);

// c rows for perturbed_iterate, aligned to a member starting at orbit entry
// j0: c row n = G1(entry j0+n) * residual(entry j0+n-1), rows >= 1.
Mat perturbation_stream(const ReconstructedSystem& sys, const EmbeddedOrbit& orbit,
                        const TrajectoryBundle& bundle, const Mat& residuals, Index j0, Index n);

}  // namespace embedcast
