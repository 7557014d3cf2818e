#include "embedcast/cocycle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace embedcast {

CocycleGenerator tangent_generator(const TrajectoryBundle& bundle, const SystemSpec& spec) {
    CocycleGenerator gen;
    gen.kind = GeneratorKind::TangentOfF;
    gen.dim = bundle.state_dim();
    gen.length = bundle.size();
    // bundle rows are dt-spaced states of the (possibly strided) sampled map;
    // the generator is the tangent of one bundle step
    const double stride_ratio = bundle.dt / spec.dt;
    const int stride = static_cast<int>(std::lround(stride_ratio));
    if (std::abs(stride_ratio - stride) > 1e-9)
        throw std::invalid_argument("bundle dt is not a multiple of spec dt");
    gen.at = [bundle, spec, stride](Index n) {
        Vec x = bundle.states.row(n);
        Mat J = Mat::Identity(bundle.state_dim(), bundle.state_dim());
        for (int s = 0; s < stride; ++s) {
            auto [x1, J1] = step_with_jacobian(x, spec);
            J = J1 * J;
            x = x1;
        }
        return J;
    };
    return gen;
}

CocycleGenerator reconstructed_generator(const ReconstructedSystem& sys,
                                         const EmbeddedOrbit& orbit,
                                         const TrajectoryBundle& bundle) {
    if (!sys.feedback_jacobian)
        throw std::invalid_argument("reconstructed_generator: feedback Jacobian unavailable");
    const Index d = sys.d, L = sys.L;
    CocycleGenerator gen;
    gen.kind = GeneratorKind::ReconstructedM;
    gen.dim = d + L;
    gen.length = std::min<Index>(orbit.size(), bundle.size() - orbit.align_offset);

    if (sys.paradigm == Paradigm::Delay) {
        const Mat G1 = delay_g_jac_u(*sys.delay);
        const Mat G2 = delay_g_jac_y(*sys.delay);
        gen.at = [sys, orbit, G1, G2, d, L](Index n) {
            Mat M = Mat::Zero(d + L, d + L);
            M.topRightCorner(d, L) = sys.feedback_jacobian(orbit.Y.row(n));
            M.bottomLeftCorner(L, d) = G1;
            M.bottomRightCorner(L, L) = G2;
            return M;
        };
    } else {
        const ReservoirParams p = *sys.reservoir;
        gen.at = [sys, orbit, bundle, p, d, L](Index n) {
            const Vec y = orbit.Y.row(n);
            const Vec u = bundle.observations.row(orbit.base_index(n));
            const Vec z = p.W_in * u + p.W_Y * y + p.v_bias;
            const Vec dtanh = 1.0 - z.array().tanh().square();
            Mat M = Mat::Zero(d + L, d + L);
            M.topRightCorner(d, L) = sys.feedback_jacobian(y);
            M.bottomLeftCorner(L, d) = dtanh.asDiagonal() * p.W_in;
            M.bottomRightCorner(L, L) = dtanh.asDiagonal() * p.W_Y;
            return M;
        };
    }
    return gen;
}

CocycleGenerator constant_generator(const Mat& G, Index length) {
    if (G.rows() != G.cols()) throw std::invalid_argument("generator must be square");
    CocycleGenerator gen;
    gen.kind = GeneratorKind::Synthetic;
    gen.dim = G.rows();
    gen.length = length;
    gen.at = [G](Index) { return G; };
    return gen;
}

CocycleGenerator shift_generator(const CocycleGenerator& gen, Index shift) {
    CocycleGenerator out = gen;
    out.length = gen.length - shift;
    out.at = [gen, shift](Index n) { return gen.at(n + shift); };
    return out;
}

Mat FactoredProduct::dense() const {
    if (log_scale > 600.0)
        throw std::overflow_error("cocycle product overflows the dense range");
    return std::exp(log_scale) * (Q * T);
}

double FactoredProduct::log_norm() const {
    return log_scale + std::log(T.operatorNorm());
}

FactoredProduct cocycle_product(const CocycleGenerator& gen, Index n) {
    if (n < 0 || n > gen.length) throw std::invalid_argument("cocycle_product: n out of range");
    const Index m = gen.dim;
    FactoredProduct prod;
    prod.Q = Mat::Identity(m, m);
    prod.T = Mat::Identity(m, m);
    prod.n = n;
    for (Index k = 0; k < n; ++k) {
        const Mat A = gen.at(k) * prod.Q;
        Eigen::HouseholderQR<Mat> qr(A);
        Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
        Mat Qk = qr.householderQ();
        // fix signs so diag(R) >= 0
        for (Index i = 0; i < m; ++i) {
            if (R(i, i) < 0) {
                R.row(i) = -R.row(i);
                Qk.col(i) = -Qk.col(i);
            }
            if (R(i, i) == 0.0)
                throw DivergenceError("singular cocycle factor", k);
        }
        prod.Q = Qk;
        prod.T = R * prod.T;
        const double mx = prod.T.cwiseAbs().maxCoeff();
        if (mx > 0 && (mx > 1e100 || mx < 1e-100)) {
            prod.T /= mx;
            prod.log_scale += std::log(mx);
        }
        if (!prod.T.allFinite()) throw DivergenceError("cocycle product overflow", k);
    }
    return prod;
}

double LyapunovSpectrum::spread(double fraction) const {
    if (history.rows() < 2) return 0.0;
    Index from = history.rows() - std::max<Index>(1, static_cast<Index>(fraction * history.rows()));
    double s = 0;
    for (Index c = 0; c < history.cols(); ++c) {
        const auto seg = history.col(c).tail(history.rows() - from);
        s = std::max(s, seg.maxCoeff() - seg.minCoeff());
    }
    return s;
}

LyapunovSpectrum lyapunov_spectrum(const CocycleGenerator& gen, Index n_steps, int refactor_every,
                                   double dt) {
    if (refactor_every < 1) throw std::invalid_argument("refactor_every must be >= 1");
    if (n_steps < 1 || n_steps > gen.length)
        throw std::invalid_argument("lyapunov_spectrum: n_steps out of range");
    const Index m = gen.dim;
    Mat B = Mat::Identity(m, m);
    Vec logsum = Vec::Zero(m);

    std::vector<Vec> hist;
    std::vector<Index> hist_steps;
    const Index n_refactor = (n_steps + refactor_every - 1) / refactor_every;
    const Index hist_stride = std::max<Index>(1, n_refactor / 512);

    Index done = 0;
    Index refactor_count = 0;
    while (done < n_steps) {
        const Index burst = std::min<Index>(refactor_every, n_steps - done);
        for (Index s = 0; s < burst; ++s) {
            B = gen.at(done + s) * B;
            if (!B.allFinite())
                throw DivergenceError("lyapunov_spectrum: non-finite accumulation", done + s);
        }
        done += burst;
        Eigen::HouseholderQR<Mat> qr(B);
        Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
        Mat Q = qr.householderQ();
        for (Index i = 0; i < m; ++i) {
            double r = R(i, i);
            if (r < 0) {
                Q.col(i) = -Q.col(i);
                r = -r;
            }
            if (r == 0.0)
                throw DivergenceError("lyapunov_spectrum: degenerate frame", done);
            logsum[i] += std::log(r);
        }
        B = Q;
        if ((refactor_count++ % hist_stride) == 0 || done == n_steps) {
            hist.push_back(logsum / static_cast<double>(done));
            hist_steps.push_back(done);
        }
    }

    LyapunovSpectrum spec;
    spec.n_steps = n_steps;
    spec.dt = dt;
    spec.exponents = logsum / static_cast<double>(n_steps);
    std::sort(spec.exponents.data(), spec.exponents.data() + m, std::greater<double>());
    spec.history.resize(static_cast<Index>(hist.size()), m);
    for (Index r = 0; r < spec.history.rows(); ++r) {
        Vec row = hist[r];
        std::sort(row.data(), row.data() + m, std::greater<double>());
        spec.history.row(r) = row;
    }
    spec.history_steps = std::move(hist_steps);
    return spec;
}

MatchReport exponent_subset_check(const LyapunovSpectrum& reconstructed,
                                  const LyapunovSpectrum& base, double tol) {
    // tol and the convergence requirement are in per-time units
    if (reconstructed.spread() / reconstructed.dt >= tol / 2 ||
        base.spread() / base.dt >= tol / 2)
        throw std::invalid_argument("exponent_subset_check: spectra not converged to tol/2");
    const Vec rec = reconstructed.per_time();
    const Vec bse = base.per_time();
    std::vector<bool> used(rec.size(), false);
    MatchReport rep;
    rep.gaps.resize(bse.size());
    for (Index i = 0; i < bse.size(); ++i) {
        Index best = -1;
        double best_gap = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < rec.size(); ++j) {
            if (used[j]) continue;
            const double gap = std::abs(bse[i] - rec[j]);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        used[best] = true;
        rep.matched.push_back(best);
        rep.gaps[i] = best_gap;
    }
    rep.max_gap = rep.gaps.size() ? rep.gaps.maxCoeff() : 0.0;
    for (Index j = 0; j < rec.size(); ++j)
        if (!used[j]) rep.spurious.push_back(j);
    rep.all_within = rep.max_gap <= tol;
    return rep;
}

PerturbedRun perturbed_iterate(const CocycleGenerator& M, Index d, const Mat& c_stream, Index n) {
    const Index L = M.dim - d;
    if (c_stream.cols() != L)
        throw std::invalid_argument("perturbed_iterate: c stream has wrong dimension");
    if (n > M.length || c_stream.rows() < n)
        throw std::invalid_argument("perturbed_iterate: streams shorter than n");
    PerturbedRun run;
    run.a = Mat::Zero(n + 1, d);
    run.b = Mat::Zero(n + 1, L);
    run.a_norms.assign(n + 1, 0.0);
    Vec z = Vec::Zero(M.dim);  // (a_1; b_1) = 0
    for (Index k = 1; k < n; ++k) {
        z = M.at(k) * z;
        z.tail(L) += c_stream.row(k).transpose();
        if (!z.allFinite() || z.norm() > 1e300) {
            run.overflow_at = k + 1;
            run.a.conservativeResize(k + 1, Eigen::NoChange);
            run.b.conservativeResize(k + 1, Eigen::NoChange);
            run.a_norms.resize(k + 1);
            return run;
        }
        run.a.row(k + 1) = z.head(d);
        run.b.row(k + 1) = z.tail(L);
        run.a_norms[k + 1] = z.head(d).norm();
    }
    return run;
}

Vec graph_transform(const CocycleGenerator& gen, const Mat& d_stream, Index n) {
    if (d_stream.cols() != gen.dim)
        throw std::invalid_argument("graph_transform: stream dimension mismatch");
    if (n < 0 || d_stream.rows() < n + 1 || (n > 1 && gen.length < n))
        throw std::invalid_argument("graph_transform: stream shorter than n");
    Vec z = Vec::Zero(gen.dim);
    for (Index k = 1; k <= n; ++k) {
        if (k > 1) z = gen.at(k - 1) * z;
        z += d_stream.row(k).transpose();
        if (!z.allFinite() || z.norm() > 1e300)
            throw DivergenceError("graph_transform overflow", k);
    }
    return z;
}

RateFit growth_rate(const std::vector<double>& norms, Index n0, Index n1) {
    const Index n = static_cast<Index>(norms.size());
    if (n1 < 0 || n1 > n) n1 = n;
    if (n0 < 0) {
        // knee: fit strictly below half of the final plateau
        const Index tail = std::max<Index>(1, n / 10);
        std::vector<double> last(norms.end() - tail, norms.end());
        std::nth_element(last.begin(), last.begin() + last.size() / 2, last.end());
        const double plateau = last[last.size() / 2];
        n0 = 0;
        while (n0 < n && !(norms[n0] > 0)) ++n0;
        Index k = n0;
        while (k < n1 && norms[k] < 0.5 * plateau) ++k;
        n1 = k;
    }
    if (n1 - n0 < 3) throw std::invalid_argument("growth_rate: fit window too short");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const Index cnt = n1 - n0;
    for (Index i = n0; i < n1; ++i) {
        if (!(norms[i] > 0))
            throw std::invalid_argument("growth_rate: nonpositive entry in fit window");
        const double x = static_cast<double>(i);
        const double y = std::log(norms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = cnt * sxx - sx * sx;
    RateFit fit;
    fit.n0 = n0;
    fit.n1 = n1;
    fit.rate = (cnt * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.rate * sx) / cnt;
    double ss = 0;
    for (Index i = n0; i < n1; ++i) {
        const double r = std::log(norms[i]) - (intercept + fit.rate * i);
        ss += r * r;
    }
    const double sigma2 = cnt > 2 ? ss / (cnt - 2) : 0.0;
    fit.stderr_ = std::sqrt(sigma2 * cnt / denom);
    return fit;
}

double c_phi_phi(const TrajectoryBundle& bundle, const SystemSpec& spec,
                 const ObservationMap& obs, int Q, Index t) {
    if (Q < 1) throw std::invalid_argument("c_phi_phi: Q must be >= 1");
    if (t - (Q - 1) < 0) throw std::invalid_argument("c_phi_phi: not enough history at t");
    const Index m = bundle.state_dim();
    const Vec x_t = bundle.states.row(t);
    const Mat A = obs.jac(x_t);  // d x m

    // DPhi rows: block q is Dphi(f^{-q} w) * [Df^q(f^{-q} w)]^{-1}
    Mat B(static_cast<Index>(Q) * obs.dim(), m);
    B.topRows(obs.dim()) = A;
    Mat back = Mat::Identity(m, m);  // [Df^q at w_{t-q}]^{-1}
    for (int q = 1; q < Q; ++q) {
        const Vec xq = bundle.states.row(t - q);
        const Mat J = jacobian(xq, spec);
        back = J.inverse() * back;  // D(f^{-q})(w_t) = J(w_{t-q})^{-1} ... J(w_{t-1})^{-1}
        B.middleRows(static_cast<Index>(q) * obs.dim(), obs.dim()) = obs.jac(xq) * back;
    }

    const Mat AtA = A.transpose() * A;
    const Mat BtB = B.transpose() * B;
    Eigen::FullPivLU<Mat> lu(BtB);
    if (lu.rank() < m) return std::numeric_limits<double>::infinity();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(AtA, BtB);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Mat residual_stream(const TrajectoryBundle& bundle, const EmbeddedOrbit& orbit,
                    const ReconstructedSystem& sys) {
    const Index n = std::min<Index>(orbit.size(), bundle.size() - 1 - orbit.align_offset);
    Mat r(n, sys.d);
    for (Index j = 0; j < n; ++j)
        r.row(j) = bundle.observations.row(orbit.base_index(j) + 1).transpose() -
                   sys.feedback(orbit.Y.row(j));
    return r;
}

Mat perturbation_stream(const ReconstructedSystem& sys, const EmbeddedOrbit& orbit,
                        const TrajectoryBundle& bundle, const Mat& residuals, Index j0, Index n) {
    Mat c = Mat::Zero(n, sys.L);
    if (sys.paradigm == Paradigm::Delay) {
        const Mat G1 = delay_g_jac_u(*sys.delay);
        for (Index k = 1; k < n; ++k)
            c.row(k) = (G1 * residuals.row(j0 + k - 1).transpose()).transpose();
    } else {
        const ReservoirParams& p = *sys.reservoir;
        for (Index k = 1; k < n; ++k) {
            const Vec y = orbit.Y.row(j0 + k);
            const Vec u = bundle.observations.row(orbit.base_index(j0 + k));
            const Vec z = p.W_in * u + p.W_Y * y + p.v_bias;
            const Vec dtanh = 1.0 - z.array().tanh().square();
            c.row(k) = (dtanh.asDiagonal() * p.W_in * residuals.row(j0 + k - 1).transpose())
                           .transpose();
        }
    }
    return c;
}

}  // namespace embedcast
