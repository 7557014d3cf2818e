#include "embedcast/embed.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace embedcast {

ReservoirParams reservoir_init(Index L, Index d, double lambda, std::uint64_t seed) {
    if (L < 1 || d < 1) throw std::invalid_argument("reservoir dimensions must be >= 1");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("contraction factor must be in (0,1)");

    auto rng = make_stream(seed, /*stage=*/0x7e5ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    ReservoirParams p;
    p.L = L;
    p.d = d;
    p.lambda = lambda;
    p.seed = seed;

    p.W_Y.resize(L, L);
    for (Index i = 0; i < L; ++i)
        for (Index j = 0; j < L; ++j) p.W_Y(i, j) = gauss(rng);
    p.W_in.resize(L, d);
    for (Index i = 0; i < L; ++i)
        for (Index j = 0; j < d; ++j) p.W_in(i, j) = gauss(rng);
    p.v_bias.resize(L);
    for (Index i = 0; i < L; ++i) p.v_bias[i] = unif(rng);

    const double sy = Eigen::JacobiSVD<Mat>(p.W_Y).singularValues()[0];
    p.W_Y *= lambda / sy;
    const double si = Eigen::JacobiSVD<Mat>(p.W_in).singularValues()[0];
    p.W_in /= si;
    return p;
}

Vec reservoir_g(const ReservoirParams& p, const Vec& u, const Vec& y) {
    if (u.size() != p.d || y.size() != p.L)
        throw std::invalid_argument("reservoir_g: dimension mismatch");
    return (p.W_in * u + p.W_Y * y + p.v_bias).array().tanh();
}

Vec delay_g(const Vec& u, const Vec& y, const DelayParams& p) {
    if (u.size() != p.d || y.size() != p.L())
        throw std::invalid_argument("delay_g: dimension mismatch");
    Vec out(p.L());
    out.head(p.d) = u;
    out.tail(p.L() - p.d) = y.head(p.L() - p.d);
    return out;
}

Mat delay_g_jac_u(const DelayParams& p) {
    Mat J = Mat::Zero(p.L(), p.d);
    J.topRows(p.d).setIdentity();
    return J;
}

Mat delay_g_jac_y(const DelayParams& p) {
    Mat J = Mat::Zero(p.L(), p.L());
    J.bottomLeftCorner(p.L() - p.d, p.L() - p.d).setIdentity();
    return J;
}

EmbeddedOrbit drive(const ReservoirParams& p, const Mat& inputs, const Vec& y0, Index washout) {
    const Index n = inputs.rows();
    if (inputs.cols() != p.d) throw std::invalid_argument("drive: input dimension mismatch");
    if (y0.size() != p.L) throw std::invalid_argument("drive: y0 dimension mismatch");
    if (washout < 0 || washout >= n)
        throw std::invalid_argument("drive: need inputs length > washout");

    EmbeddedOrbit orbit;
    orbit.paradigm = Paradigm::Reservoir;
    orbit.align_offset = washout;
    orbit.washout = washout;
    orbit.Y.resize(n - washout, p.L);

    Vec y = y0;
    for (Index i = 0; i < n; ++i) {
        if (i >= washout) orbit.Y.row(i - washout) = y;
        y = reservoir_g(p, inputs.row(i), y);
    }
    return orbit;
}

EmbeddedOrbit delay_embed(const TrajectoryBundle& bundle, const DelayParams& p) {
    const Index n = bundle.size();
    const Index d = bundle.obs_dim();
    if (d != p.d) throw std::invalid_argument("delay_embed: observation dimension mismatch");
    if (n < p.Q) throw std::invalid_argument("delay_embed: bundle shorter than Q");

    EmbeddedOrbit orbit;
    orbit.paradigm = Paradigm::Delay;
    orbit.align_offset = p.Q;
    orbit.Y.resize(n - p.Q + 1, p.L());
    for (Index j = 0; j + p.Q <= n; ++j) {
        for (int q = 0; q < p.Q; ++q)
            orbit.Y.row(j).segment(static_cast<Index>(q) * d, d) =
                bundle.observations.row(j + p.Q - 1 - q);
    }
    return orbit;
}

InjectivityReport injectivity_diagnostic(const EmbeddedOrbit& orbit,
                                         const TrajectoryBundle& bundle, double tol,
                                         double state_tol, Index stride) {
    if (stride < 1) stride = 1;
    InjectivityReport rep;
    const Index n = orbit.size();
    for (Index i = 0; i < n; i += stride) {
        const Index ti = orbit.base_index(i);
        if (ti >= bundle.size()) break;
        for (Index j = i + stride; j < n; j += stride) {
            const Index tj = orbit.base_index(j);
            if (tj >= bundle.size()) break;
            ++rep.n_pairs_checked;
            const double dy = (orbit.Y.row(i) - orbit.Y.row(j)).norm();
            if (dy >= tol) continue;
            ++rep.n_close;
            const double ds = (bundle.states.row(ti) - bundle.states.row(tj)).norm();
            rep.max_state_gap = std::max(rep.max_state_gap, ds);
            if (ds > state_tol) ++rep.n_false;
        }
    }
    rep.false_fraction =
        rep.n_close > 0 ? static_cast<double>(rep.n_false) / static_cast<double>(rep.n_close) : 0.0;
    return rep;
}

}  // namespace embedcast
