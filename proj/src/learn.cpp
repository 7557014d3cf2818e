#include "embedcast/learn.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace embedcast {

namespace {

// Phases and their Jacobian wrt y. Direct: alpha = y. PhasePairs:
// alpha_b = atan2(y_{2b+1}, y_{2b}).
Vec phases_of(const FeatureMap& f, const Vec& y) {
    if (f.fourier_mode == FourierMode::Direct) return y;
    Vec a(f.input_dim / 2);
    for (Index b = 0; b < a.size(); ++b) a[b] = std::atan2(y[2 * b + 1], y[2 * b]);
    return a;
}

Mat phases_jac(const FeatureMap& f, const Vec& y) {
    if (f.fourier_mode == FourierMode::Direct)
        return Mat::Identity(f.input_dim, f.input_dim);
    Mat J = Mat::Zero(f.input_dim / 2, f.input_dim);
    for (Index b = 0; b < J.rows(); ++b) {
        const double c = y[2 * b], s = y[2 * b + 1];
        const double r2 = c * c + s * s;
        J(b, 2 * b) = -s / r2;
        J(b, 2 * b + 1) = c / r2;
    }
    return J;
}

}  // namespace

Index FeatureMap::n_features() const {
    switch (kind) {
        case FeatureKind::Affine: return input_dim + 1;
        case FeatureKind::Fourier: return 1 + 2 * freqs.rows();
        case FeatureKind::Rbf: return 1 + centers.rows();
    }
    return 0;
}

Vec FeatureMap::eval(const Vec& y) const {
    Vec out(n_features());
    out[0] = 1.0;
    switch (kind) {
        case FeatureKind::Affine:
            out.tail(input_dim) = y;
            break;
        case FeatureKind::Fourier: {
            const Vec a = phases_of(*this, y);
            for (Index r = 0; r < freqs.rows(); ++r) {
                double phase = 0;
                for (Index c = 0; c < freqs.cols(); ++c) phase += freqs(r, c) * a[c];
                out[1 + 2 * r] = std::cos(phase);
                out[2 + 2 * r] = std::sin(phase);
            }
            break;
        }
        case FeatureKind::Rbf: {
            const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
            for (Index r = 0; r < centers.rows(); ++r)
                out[1 + r] = std::exp(-(y - centers.row(r).transpose()).squaredNorm() * inv);
            break;
        }
    }
    return out;
}

Mat FeatureMap::jac(const Vec& y) const {
    Mat J = Mat::Zero(n_features(), input_dim);
    switch (kind) {
        case FeatureKind::Affine:
            J.bottomRows(input_dim).setIdentity();
            break;
        case FeatureKind::Fourier: {
            const Vec a = phases_of(*this, y);
            const Mat Pa = phases_jac(*this, y);
            for (Index r = 0; r < freqs.rows(); ++r) {
                double phase = 0;
                Eigen::RowVectorXd dphase = Eigen::RowVectorXd::Zero(input_dim);
                for (Index c = 0; c < freqs.cols(); ++c) {
                    phase += freqs(r, c) * a[c];
                    dphase += freqs(r, c) * Pa.row(c);
                }
                J.row(1 + 2 * r) = -std::sin(phase) * dphase;
                J.row(2 + 2 * r) = std::cos(phase) * dphase;
            }
            break;
        }
        case FeatureKind::Rbf: {
            const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
            for (Index r = 0; r < centers.rows(); ++r) {
                const Vec diff = y - centers.row(r).transpose();
                J.row(1 + r) = -2.0 * inv * std::exp(-diff.squaredNorm() * inv) * diff.transpose();
            }
            break;
        }
    }
    return J;
}

Mat FeatureMap::eval_rows(const Mat& Y) const {
    Mat X(Y.rows(), n_features());
    for (Index i = 0; i < Y.rows(); ++i) X.row(i) = eval(Y.row(i));
    return X;
}

FeatureMap make_affine_features(Index L) {
    FeatureMap f;
    f.kind = FeatureKind::Affine;
    f.input_dim = L;
    return f;
}

FeatureMap make_fourier_features_from(Index L, Eigen::MatrixXi freqs, FourierMode mode) {
    if (mode == FourierMode::PhasePairs && L % 2 != 0)
        throw std::invalid_argument("phase-pairs fourier features need an even input dimension");
    FeatureMap f;
    f.kind = FeatureKind::Fourier;
    f.input_dim = L;
    f.fourier_mode = mode;
    const Index n_ph = mode == FourierMode::PhasePairs ? L / 2 : L;
    if (freqs.rows() == 0) throw std::invalid_argument("empty fourier frequency set");
    if (freqs.cols() != n_ph)
        throw std::invalid_argument("frequency vectors must have one entry per phase");
    f.freqs = std::move(freqs);
    return f;
}

FeatureMap make_fourier_features(Index L, int kmax, FourierMode mode) {
    if (kmax < 1) throw std::invalid_argument("fourier kmax must be >= 1");
    const Index n_ph = mode == FourierMode::PhasePairs ? L / 2 : L;
    if (mode == FourierMode::PhasePairs && L % 2 != 0)
        throw std::invalid_argument("phase-pairs fourier features need an even input dimension");
    // enumerate k in {-kmax..kmax}^n_ph, keep one representative per +-k pair
    std::vector<Eigen::VectorXi> ks;
    Eigen::VectorXi k = Eigen::VectorXi::Constant(n_ph, -kmax);
    while (true) {
        bool zero = true, canonical = false;
        for (Index i = 0; i < n_ph; ++i) {
            if (k[i] != 0) {
                zero = false;
                canonical = k[i] > 0;  // first nonzero entry positive
                break;
            }
        }
        if (!zero && canonical) ks.push_back(k);
        Index pos = n_ph - 1;
        while (pos >= 0 && k[pos] == kmax) k[pos--] = -kmax;
        if (pos < 0) break;
        ++k[pos];
    }
    Eigen::MatrixXi freqs(static_cast<Index>(ks.size()), n_ph);
    for (Index r = 0; r < freqs.rows(); ++r) freqs.row(r) = ks[r].transpose();
    return make_fourier_features_from(L, std::move(freqs), mode);
}

FeatureMap make_rbf_features(const EmbeddedOrbit& orbit, Index n_centers) {
    const Index n = orbit.size();
    if (n_centers < 1) throw std::invalid_argument("need at least one rbf center");
    n_centers = std::min(n_centers, n);
    const Index stride = (n + n_centers - 1) / n_centers;
    FeatureMap f;
    f.kind = FeatureKind::Rbf;
    f.input_dim = orbit.dim();
    std::vector<Index> rows;
    for (Index i = 0; i < n; i += stride) rows.push_back(i);
    f.centers.resize(static_cast<Index>(rows.size()), orbit.dim());
    for (Index i = 0; i < f.centers.rows(); ++i) f.centers.row(i) = orbit.Y.row(rows[i]);

    std::vector<double> dists;
    dists.reserve(f.centers.rows() * (f.centers.rows() - 1) / 2);
    for (Index i = 0; i < f.centers.rows(); ++i)
        for (Index j = i + 1; j < f.centers.rows(); ++j)
            dists.push_back((f.centers.row(i) - f.centers.row(j)).norm());
    if (dists.empty()) {
        f.bandwidth = 1.0;
    } else {
        auto mid = dists.begin() + dists.size() / 2;
        std::nth_element(dists.begin(), mid, dists.end());
        f.bandwidth = *mid;
        if (!(f.bandwidth > 0)) f.bandwidth = 1.0;
    }
    return f;
}

double auto_ridge(const Mat& features) {
    return 1e-8 * features.squaredNorm() / static_cast<double>(features.cols());
}

namespace {

// Ridge LS through a rank-revealing QR of the (optionally ridge-augmented)
// design matrix.
Mat solve_ridge(const Mat& X, const Mat& T, double ridge, FitDiagnostics* diag) {
    const Index M = X.cols();
    Mat A;
    Mat B;
    if (ridge > 0) {
        A.resize(X.rows() + M, M);
        A.topRows(X.rows()) = X;
        A.bottomRows(M) = std::sqrt(ridge) * Mat::Identity(M, M);
        B = Mat::Zero(A.rows(), T.cols());
        B.topRows(X.rows()) = T;
    } else {
        A = X;
        B = T;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    const Index rank = qr.rank();
    if (diag) {
        diag->rank = rank;
        const auto& R = qr.matrixR();
        const double r0 = std::abs(R(0, 0));
        const double rM = std::abs(R(std::min(M, rank) - 1, std::min(M, rank) - 1));
        diag->condition = rM > 0 ? r0 / rM : std::numeric_limits<double>::infinity();
    }
    if (ridge <= 0 && rank < M) throw RankDeficiencyError(rank, M);
    return qr.solve(B);
}

}  // namespace

FeedbackModel fit_feedback(const Mat& Y, const Mat& targets, const FeatureMap& fmap, double ridge,
                           int k, double holdout_fraction) {
    if (Y.rows() != targets.rows())
        throw std::invalid_argument("fit_feedback: row count mismatch");
    if (Y.cols() != fmap.input_dim)
        throw std::invalid_argument("fit_feedback: feature input dimension mismatch");
    if (ridge < 0) throw std::invalid_argument("ridge must be >= 0");
    if (!(holdout_fraction >= 0 && holdout_fraction < 1))
        throw std::invalid_argument("holdout fraction must lie in [0,1)");

    const Index n = Y.rows();
    Index n_train = n - static_cast<Index>(std::floor(holdout_fraction * n));
    if (n_train < 1) n_train = 1;

    const Mat X = fmap.eval_rows(Y);
    FeedbackModel m;
    m.fmap = fmap;
    m.horizon = k;
    m.ridge = ridge;
    m.coeffs = solve_ridge(X.topRows(n_train), targets.topRows(n_train), ridge, &m.diag);

    const Mat train_res = targets.topRows(n_train) - X.topRows(n_train) * m.coeffs;
    m.diag.train_rms = std::sqrt(train_res.rowwise().squaredNorm().mean());
    m.diag.n_train = n_train;
    m.diag.n_test = n - n_train;
    if (m.diag.n_test > 0) {
        const Mat test_res =
            targets.bottomRows(m.diag.n_test) - X.bottomRows(m.diag.n_test) * m.coeffs;
        m.delta = std::sqrt(test_res.rowwise().squaredNorm().mean());
    } else {
        m.delta = m.diag.train_rms;
    }
    return m;
}

TrainingSet make_training_set(const TrajectoryBundle& bundle, const EmbeddedOrbit& orbit, int k,
                              int max_k) {
    if (max_k < k) max_k = k;
    // entry j has base t = j + offset; target obs[t + k] must exist for max_k
    const Index n_usable =
        std::min(orbit.size(), bundle.size() - max_k - orbit.align_offset);
    if (n_usable < 1) throw std::invalid_argument("make_training_set: horizon exceeds bundle");
    TrainingSet ts;
    ts.Y = orbit.Y.topRows(n_usable);
    ts.targets.resize(n_usable, bundle.obs_dim());
    for (Index j = 0; j < n_usable; ++j)
        ts.targets.row(j) = bundle.observations.row(orbit.base_index(j) + k);
    return ts;
}

std::pair<Mat, double> project_empirical(const FeatureMap& fmap, const Mat& Y, const Mat& values) {
    if (Y.rows() != values.rows() || Y.rows() < 1)
        throw std::invalid_argument("project_empirical: bad sample rows");
    const Mat X = fmap.eval_rows(Y);
    Eigen::ColPivHouseholderQR<Mat> qr(X);
    const Mat C = qr.solve(values);
    const Mat fitted = X * C;
    const double rms = std::sqrt((values - fitted).rowwise().squaredNorm().mean());
    return {fitted, rms};
}

nlohmann::json FeatureMap::describe() const {
    nlohmann::json j;
    j["input_dim"] = input_dim;
    switch (kind) {
        case FeatureKind::Affine:
            j["kind"] = "affine";
            break;
        case FeatureKind::Fourier: {
            j["kind"] = "fourier";
            j["mode"] = fourier_mode == FourierMode::PhasePairs ? "phase-pairs" : "direct";
            std::vector<std::vector<int>> ks;
            for (Index r = 0; r < freqs.rows(); ++r) {
                std::vector<int> row(freqs.cols());
                for (Index c = 0; c < freqs.cols(); ++c) row[c] = freqs(r, c);
                ks.push_back(std::move(row));
            }
            j["frequencies"] = ks;
            break;
        }
        case FeatureKind::Rbf: {
            j["kind"] = "rbf";
            j["bandwidth"] = bandwidth;
            std::vector<std::vector<double>> cs;
            for (Index r = 0; r < centers.rows(); ++r) {
                std::vector<double> row(centers.cols());
                for (Index c = 0; c < centers.cols(); ++c) row[c] = centers(r, c);
                cs.push_back(std::move(row));
            }
            j["centers"] = cs;
            break;
        }
    }
    return j;
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
    FeatureMap f;
    f.input_dim = j.at("input_dim").get<Index>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "affine") {
        f.kind = FeatureKind::Affine;
    } else if (kind == "fourier") {
        f.kind = FeatureKind::Fourier;
        f.fourier_mode = j.at("mode").get<std::string>() == "phase-pairs"
                             ? FourierMode::PhasePairs
                             : FourierMode::Direct;
        const auto ks = j.at("frequencies").get<std::vector<std::vector<int>>>();
        f.freqs.resize(static_cast<Index>(ks.size()), static_cast<Index>(ks.at(0).size()));
        for (Index r = 0; r < f.freqs.rows(); ++r)
            for (Index c = 0; c < f.freqs.cols(); ++c) f.freqs(r, c) = ks[r][c];
    } else if (kind == "rbf") {
        f.kind = FeatureKind::Rbf;
        f.bandwidth = j.at("bandwidth").get<double>();
        const auto cs = j.at("centers").get<std::vector<std::vector<double>>>();
        f.centers.resize(static_cast<Index>(cs.size()), static_cast<Index>(cs.at(0).size()));
        for (Index r = 0; r < f.centers.rows(); ++r)
            for (Index c = 0; c < f.centers.cols(); ++c) f.centers(r, c) = cs[r][c];
    } else {
        throw std::invalid_argument("unknown feature kind: " + kind);
    }
    return f;
}

nlohmann::json model_to_json(const FeedbackModel& m) {
    nlohmann::json j;
    j["features"] = m.fmap.describe();
    j["horizon"] = m.horizon;
    j["ridge"] = m.ridge;
    j["delta"] = m.delta;
    std::vector<double> coeffs(m.coeffs.size());
    // row-major export
    Index p = 0;
    for (Index r = 0; r < m.coeffs.rows(); ++r)
        for (Index c = 0; c < m.coeffs.cols(); ++c) coeffs[p++] = m.coeffs(r, c);
    j["coefficients"] = coeffs;
    j["rows"] = m.coeffs.rows();
    j["cols"] = m.coeffs.cols();
    return j;
}

FeedbackModel model_from_json(const nlohmann::json& j) {
    FeedbackModel m;
    m.fmap = FeatureMap::from_json(j.at("features"));
    m.horizon = j.at("horizon").get<int>();
    m.ridge = j.at("ridge").get<double>();
    m.delta = j.at("delta").get<double>();
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (static_cast<Index>(coeffs.size()) != rows * cols)
        throw std::invalid_argument("coefficient count mismatch");
    m.coeffs.resize(rows, cols);
    Index p = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m.coeffs(r, c) = coeffs[p++];
    return m;
}

}  // namespace embedcast
