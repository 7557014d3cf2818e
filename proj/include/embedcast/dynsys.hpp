#pragma once

// Benchmark dynamical systems: quasiperiodic torus rotation, Lorenz-63 sampled
// at a fixed interval, and their product (L63Rot). Provides trajectories,
// observations, tangent-map Jacobians and orbit sampling.

#include "embedcast/common.hpp"

#include <optional>

namespace embedcast {

enum class SystemKind { TorusRotation, Lorenz63, L63Rot };

struct SystemSpec {
    SystemKind kind = SystemKind::Lorenz63;

    Eigen::Vector2d torus_rho{0.3, 0.7};  // radians per step (torus-rotation)
    double rot_rho = 0.2;                 // radians per step (l63rot angle factor)

    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;

    double dt = 0.01;       // sampling interval
    double substep = 0.01;  // integrator substep h, 0 < h <= dt, dt/h integral

    int state_dim() const;
    int substeps() const;
    void validate() const;
};

double wrap_angle(double a);  // into [0, 2*pi)

Eigen::Vector2d step_torus(const Eigen::Vector2d& angles, const Eigen::Vector2d& rho);

// One sampling interval of the L63 flow: dt/h fixed-step RK4 substeps.
Eigen::Vector3d flow_l63(const Eigen::Vector3d& state, const SystemSpec& spec);

Vec step_system(const Vec& state, const SystemSpec& spec);

// Derivative of the one-interval map at `state`. For the L63 factor this is the
// tangent-linear RK4 (exact derivative of the discrete step, not a finite
// difference); the rotation factor contributes an identity block.
Mat jacobian(const Vec& state, const SystemSpec& spec);

// Shares the RK4 stage evaluations between the state update and its tangent.
std::pair<Vec, Mat> step_with_jacobian(const Vec& state, const SystemSpec& spec);

enum class ObsKind { Coordinate, FullState, TorusTrig };

// phi: R^m -> R^d. TorusTrig maps each selected angle component to its
// (cos, sin) pair, the chart-free observation for rotation coordinates.
// An optional affine post-transform (x - shift) / scale supports centering and
// unit-RMS normalization of the observed signal.
struct ObservationMap {
    ObsKind kind = ObsKind::FullState;
    int state_dim = 3;
    std::vector<int> components;  // used by Coordinate and TorusTrig

    Vec shift;           // size d; defaults to zero
    double scale = 1.0;  // applied uniformly

    int dim() const;
    Vec operator()(const Vec& state) const;
    Mat jac(const Vec& state) const;  // d x m
    void validate() const;

private:
    Vec raw(const Vec& state) const;
    friend struct Normalization;
};

ObservationMap coordinate_observation(int state_dim, std::vector<int> components);
ObservationMap full_state_observation(int state_dim);
ObservationMap torus_trig_observation(int state_dim, std::vector<int> angle_components);

struct TrajectoryBundle {
    Mat states;        // n x m, one row per retained step
    Mat observations;  // n x d
    double dt = 0.01;
    Index transient_discarded = 0;
    std::uint64_t seed = 0;

    Index size() const { return states.rows(); }
    Index state_dim() const { return states.cols(); }
    Index obs_dim() const { return observations.cols(); }
};

// Iterates n_transient + n_steps times from x0 and retains the last n_steps
// states with their observations. Throws DivergenceError (with the offending
// step index) if the state leaves the finite range.
TrajectoryBundle generate_trajectory(const SystemSpec& spec, const Vec& x0, Index n_steps,
                                     Index n_transient, const ObservationMap& obs,
                                     std::uint64_t seed);

// Every stride-th sample; the result is a valid trajectory of the stride-fold
// map with dt' = stride * dt.
TrajectoryBundle subsample(const TrajectoryBundle& bundle, int stride);

// k indices drawn uniformly without replacement from the retained orbit.
std::vector<Index> sample_mu(const TrajectoryBundle& bundle, Index k, std::uint64_t seed);

// Centering vector and unit-RMS scale measured on a bundle's observations.
struct Normalization {
    Vec mean;           // per-component
    double scale = 1.0; // sqrt(mean_t |obs_t - mean|^2)

    static Normalization measure(const TrajectoryBundle& bundle);
    TrajectoryBundle apply(const TrajectoryBundle& bundle) const;
    // Folds this normalization into an observation map so freshly generated
    // trajectories come out normalized.
    ObservationMap apply(const ObservationMap& obs) const;
};

Vec default_initial_state(const SystemSpec& spec);

}  // namespace embedcast
