#include "embedcast/dynsys.hpp"

#include <cmath>
#include <numbers>

namespace embedcast {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Eigen::Vector3d l63_rhs(const Eigen::Vector3d& s, const SystemSpec& p) {
    return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
}

Eigen::Matrix3d l63_linearization(const Eigen::Vector3d& s, const SystemSpec& p) {
    Eigen::Matrix3d a;
    a << -p.sigma, p.sigma, 0.0,
         p.rho - s[2], -1.0, -s[0],
         s[1], s[0], -p.beta;
    return a;
}

// One RK4 substep of the flow together with the tangent map of that substep.
// The tangent stages reuse the state stages, so J is the exact derivative of
// the discrete update.
void rk4_substep(Eigen::Vector3d& s, Eigen::Matrix3d* J, double h, const SystemSpec& p) {
    const Eigen::Vector3d k1 = l63_rhs(s, p);
    const Eigen::Vector3d k2 = l63_rhs(s + 0.5 * h * k1, p);
    const Eigen::Vector3d k3 = l63_rhs(s + 0.5 * h * k2, p);
    const Eigen::Vector3d k4 = l63_rhs(s + h * k3, p);
    if (J) {
        const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
        const Eigen::Matrix3d K1 = l63_linearization(s, p);
        const Eigen::Matrix3d K2 =
            l63_linearization(s + 0.5 * h * k1, p) * (I + 0.5 * h * K1);
        const Eigen::Matrix3d K3 =
            l63_linearization(s + 0.5 * h * k2, p) * (I + 0.5 * h * K2);
        const Eigen::Matrix3d K4 = l63_linearization(s + h * k3, p) * (I + h * K3);
        const Eigen::Matrix3d Jstep = I + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        *J = Jstep * (*J);
    }
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_finite(const Vec& v, const char* what, Index step) {
    if (!v.allFinite()) throw DivergenceError(std::string(what) + " is not finite", step);
}

}  // namespace

int SystemSpec::state_dim() const {
    switch (kind) {
        case SystemKind::TorusRotation: return 2;
        case SystemKind::Lorenz63: return 3;
        case SystemKind::L63Rot: return 4;
    }
    return 0;
}

int SystemSpec::substeps() const {
    double r = dt / substep;
    return static_cast<int>(std::lround(r));
}

void SystemSpec::validate() const {
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    if (kind != SystemKind::TorusRotation) {
        if (!(substep > 0) || substep > dt + 1e-15)
            throw std::invalid_argument("substep must satisfy 0 < h <= dt");
        double r = dt / substep;
        if (std::abs(r - std::lround(r)) > 1e-9 * r)
            throw std::invalid_argument("dt/substep must be a positive integer");
    }
    if (kind == SystemKind::TorusRotation) {
        for (int i = 0; i < 2; ++i)
            if (torus_rho[i] < 0 || torus_rho[i] >= two_pi)
                throw std::invalid_argument("torus rotation components must lie in [0, 2*pi)");
    }
    if (kind == SystemKind::L63Rot && (rot_rho < 0 || rot_rho >= two_pi))
        throw std::invalid_argument("rotation rho must lie in [0, 2*pi)");
}

double wrap_angle(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0) r += two_pi;
    if (r >= two_pi) r = 0.0;  // fmod can return exactly two_pi after the add
    return r;
}

Eigen::Vector2d step_torus(const Eigen::Vector2d& angles, const Eigen::Vector2d& rho) {
    return {wrap_angle(angles[0] + rho[0]), wrap_angle(angles[1] + rho[1])};
}

Eigen::Vector3d flow_l63(const Eigen::Vector3d& state, const SystemSpec& spec) {
    if (!state.allFinite()) throw DivergenceError("flow_l63 input is not finite", 0);
    Eigen::Vector3d s = state;
    const double h = spec.substep;
    for (int i = 0, n = spec.substeps(); i < n; ++i) rk4_substep(s, nullptr, h, spec);
    return s;
}

Vec step_system(const Vec& state, const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::TorusRotation:
            return step_torus(state.head<2>(), spec.torus_rho);
        case SystemKind::Lorenz63:
            return flow_l63(state.head<3>(), spec);
        case SystemKind::L63Rot: {
            Vec out(4);
            out.head<3>() = flow_l63(state.head<3>(), spec);
            out[3] = wrap_angle(state[3] + spec.rot_rho);
            return out;
        }
    }
    throw std::logic_error("unknown system kind");
}

std::pair<Vec, Mat> step_with_jacobian(const Vec& state, const SystemSpec& spec) {
    check_finite(state, "state", 0);
    switch (spec.kind) {
        case SystemKind::TorusRotation:
            return {step_torus(state.head<2>(), spec.torus_rho), Mat::Identity(2, 2)};
        case SystemKind::Lorenz63: {
            Eigen::Vector3d s = state.head<3>();
            Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
            const double h = spec.substep;
            for (int i = 0, n = spec.substeps(); i < n; ++i) rk4_substep(s, &J, h, spec);
            return {Vec(s), Mat(J)};
        }
        case SystemKind::L63Rot: {
            Eigen::Vector3d s = state.head<3>();
            Eigen::Matrix3d J3 = Eigen::Matrix3d::Identity();
            const double h = spec.substep;
            for (int i = 0, n = spec.substeps(); i < n; ++i) rk4_substep(s, &J3, h, spec);
            Vec out(4);
            out.head<3>() = s;
            out[3] = wrap_angle(state[3] + spec.rot_rho);
            Mat J = Mat::Identity(4, 4);
            J.topLeftCorner<3, 3>() = J3;
            return {out, J};
        }
    }
    throw std::logic_error("unknown system kind");
}

Mat jacobian(const Vec& state, const SystemSpec& spec) {
    return step_with_jacobian(state, spec).second;
}

int ObservationMap::dim() const {
    switch (kind) {
        case ObsKind::Coordinate: return static_cast<int>(components.size());
        case ObsKind::FullState: return state_dim;
        case ObsKind::TorusTrig: return 2 * static_cast<int>(components.size());
    }
    return 0;
}

void ObservationMap::validate() const {
    if (dim() < 1) throw std::invalid_argument("observation dimension must be >= 1");
    for (int c : components)
        if (c < 0 || c >= state_dim)
            throw std::invalid_argument("observation component index out of range");
    if (shift.size() != 0 && shift.size() != dim())
        throw std::invalid_argument("observation shift has wrong dimension");
    if (!(scale > 0)) throw std::invalid_argument("observation scale must be positive");
}

Vec ObservationMap::raw(const Vec& state) const {
    switch (kind) {
        case ObsKind::Coordinate: {
            Vec out(components.size());
            for (std::size_t i = 0; i < components.size(); ++i) out[i] = state[components[i]];
            return out;
        }
        case ObsKind::FullState:
            return state;
        case ObsKind::TorusTrig: {
            Vec out(2 * components.size());
            for (std::size_t i = 0; i < components.size(); ++i) {
                out[2 * i] = std::cos(state[components[i]]);
                out[2 * i + 1] = std::sin(state[components[i]]);
            }
            return out;
        }
    }
    throw std::logic_error("unknown observation kind");
}

Vec ObservationMap::operator()(const Vec& state) const {
    Vec v = raw(state);
    if (shift.size() != 0) v -= shift;
    return v / scale;
}

Mat ObservationMap::jac(const Vec& state) const {
    Mat J = Mat::Zero(dim(), state_dim);
    switch (kind) {
        case ObsKind::Coordinate:
            for (std::size_t i = 0; i < components.size(); ++i) J(i, components[i]) = 1.0;
            break;
        case ObsKind::FullState:
            J.setIdentity();
            break;
        case ObsKind::TorusTrig:
            for (std::size_t i = 0; i < components.size(); ++i) {
                J(2 * i, components[i]) = -std::sin(state[components[i]]);
                J(2 * i + 1, components[i]) = std::cos(state[components[i]]);
            }
            break;
    }
    return J / scale;
}

ObservationMap coordinate_observation(int state_dim, std::vector<int> components) {
    ObservationMap m;
    m.kind = ObsKind::Coordinate;
    m.state_dim = state_dim;
    m.components = std::move(components);
    m.validate();
    return m;
}

ObservationMap full_state_observation(int state_dim) {
    ObservationMap m;
    m.kind = ObsKind::FullState;
    m.state_dim = state_dim;
    m.validate();
    return m;
}

ObservationMap torus_trig_observation(int state_dim, std::vector<int> angle_components) {
    ObservationMap m;
    m.kind = ObsKind::TorusTrig;
    m.state_dim = state_dim;
    m.components = std::move(angle_components);
    m.validate();
    return m;
}

TrajectoryBundle generate_trajectory(const SystemSpec& spec, const Vec& x0, Index n_steps,
                                     Index n_transient, const ObservationMap& obs,
                                     std::uint64_t seed) {
    spec.validate();
    obs.validate();
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    if (n_transient < 0) throw std::invalid_argument("n_transient must be >= 0");
    if (x0.size() != spec.state_dim())
        throw std::invalid_argument("initial state has wrong dimension");

    Vec s = x0;
    check_finite(s, "initial state", 0);
    for (Index i = 0; i < n_transient; ++i) {
        s = step_system(s, spec);
        check_finite(s, "transient state", i + 1);
    }

    TrajectoryBundle b;
    b.states.resize(n_steps, spec.state_dim());
    b.observations.resize(n_steps, obs.dim());
    b.dt = spec.dt;
    b.transient_discarded = n_transient;
    b.seed = seed;
    for (Index i = 0; i < n_steps; ++i) {
        b.states.row(i) = s;
        b.observations.row(i) = obs(s);
        if (i + 1 < n_steps) {
            s = step_system(s, spec);
            check_finite(s, "state", n_transient + i + 1);
        }
    }
    return b;
}

TrajectoryBundle subsample(const TrajectoryBundle& bundle, int stride) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (stride == 1) return bundle;
    Index n = (bundle.size() + stride - 1) / stride;
    TrajectoryBundle out;
    out.states.resize(n, bundle.states.cols());
    out.observations.resize(n, bundle.observations.cols());
    for (Index i = 0; i < n; ++i) {
        out.states.row(i) = bundle.states.row(i * stride);
        out.observations.row(i) = bundle.observations.row(i * stride);
    }
    out.dt = bundle.dt * stride;
    out.transient_discarded = bundle.transient_discarded;
    out.seed = bundle.seed;
    return out;
}

std::vector<Index> sample_mu(const TrajectoryBundle& bundle, Index k, std::uint64_t seed) {
    const Index n = bundle.size();
    if (k > n) throw std::invalid_argument("sample_mu: k exceeds bundle length");
    std::vector<Index> idx(n);
    for (Index i = 0; i < n; ++i) idx[i] = i;
    auto rng = make_stream(seed, /*stage=*/0xabcdULL);
    // partial Fisher-Yates: first k entries are a uniform draw without replacement
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

Normalization Normalization::measure(const TrajectoryBundle& bundle) {
    Normalization nrm;
    nrm.mean = bundle.observations.colwise().mean();
    Mat centered = bundle.observations.rowwise() - nrm.mean.transpose();
    nrm.scale = std::sqrt(centered.rowwise().squaredNorm().mean());
    if (!(nrm.scale > 0)) nrm.scale = 1.0;
    return nrm;
}

TrajectoryBundle Normalization::apply(const TrajectoryBundle& bundle) const {
    TrajectoryBundle out = bundle;
    out.observations = (bundle.observations.rowwise() - mean.transpose()) / scale;
    return out;
}

ObservationMap Normalization::apply(const ObservationMap& obs) const {
    ObservationMap out = obs;
    Vec prior_shift = obs.shift.size() ? obs.shift : Vec::Zero(obs.dim());
    // (raw - prior_shift)/prior_scale, then (v - mean)/scale
    out.shift = prior_shift + obs.scale * mean;
    out.scale = obs.scale * scale;
    return out;
}

Vec default_initial_state(const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::TorusRotation: return Vec::Zero(2);
        case SystemKind::Lorenz63: return Eigen::Vector3d{1.0, 1.0, 1.0};
        case SystemKind::L63Rot: {
            Vec v(4);
            v << 1.0, 1.0, 1.0, 0.0;
            return v;
        }
    }
    throw std::logic_error("unknown system kind");
}

}  // namespace embedcast
