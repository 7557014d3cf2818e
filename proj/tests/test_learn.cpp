#include "embedcast/learn.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

using namespace embedcast;

namespace {

Mat random_mat(Index n, Index m, std::uint64_t seed, double scale = 1.0) {
    auto rng = make_stream(seed, 3);
    std::normal_distribution<double> gauss;
    Mat A(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) A(i, j) = scale * gauss(rng);
    return A;
}

// torus-rotation bundle observed through (cos, sin) of one or both angles
TrajectoryBundle torus_trig_bundle(Index n, bool both_angles = false, double rho1 = 1.1,
                                   double rho2 = 2.3) {
    SystemSpec spec;
    spec.kind = SystemKind::TorusRotation;
    spec.torus_rho = {rho1, rho2};
    spec.dt = 1.0;
    spec.substep = 1.0;
    auto obs = torus_trig_observation(2, both_angles ? std::vector<int>{0, 1}
                                                     : std::vector<int>{0});
    Vec x0(2);
    x0 << 0.123, 0.456;
    return generate_trajectory(spec, x0, n, 0, obs, 0);
}

}  // namespace

TEST_CASE("feature map definitions") {
    SUBCASE("affine on R^2") {
        FeatureMap f = make_affine_features(2);
        CHECK(f.n_features() == 3);
        Vec y(2);
        y << 4.0, -7.0;
        Vec v = f.eval(y);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == 4.0);
        CHECK(v[2] == -7.0);
    }

    SUBCASE("fourier on an angle with frequency set {1}") {
        FeatureMap f = make_fourier_features(1, 1);
        CHECK(f.n_features() == 3);
        Vec y(1);
        y << 0.8;
        Vec v = f.eval(y);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == doctest::Approx(std::cos(0.8)));
        CHECK(v[2] == doctest::Approx(std::sin(0.8)));
    }

    SUBCASE("rbf evaluates to 1 at its own center") {
        EmbeddedOrbit orbit;
        orbit.paradigm = Paradigm::Delay;
        orbit.Y = random_mat(1, 3, 5);
        FeatureMap f = make_rbf_features(orbit, 1);
        CHECK(f.n_features() == 2);
        Vec v = f.eval(orbit.Y.row(0));
        CHECK(v[0] == 1.0);
        CHECK(v[1] == 1.0);
    }

    SUBCASE("phase-pair fourier reproduces the pair coordinates at |k| = 1") {
        FeatureMap f = make_fourier_features(2, 1, FourierMode::PhasePairs);
        Vec y(2);
        y << std::cos(1.3), std::sin(1.3);
        Vec v = f.eval(y);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == doctest::Approx(y[0]).epsilon(1e-14));
        CHECK(v[2] == doctest::Approx(y[1]).epsilon(1e-14));
    }

    SUBCASE("empty frequency set is rejected") {
        Eigen::MatrixXi empty(0, 2);
        CHECK_THROWS_AS((void)make_fourier_features_from(2, empty, FourierMode::Direct),
                        std::invalid_argument);
    }
}

TEST_CASE("feature jacobians match finite differences") {
    const double eps = 1e-6;
    auto check_jac = [&](const FeatureMap& f, const Vec& y) {
        const Mat J = f.jac(y);
        for (Index c = 0; c < y.size(); ++c) {
            Vec yp = y, ym = y;
            yp[c] += eps;
            ym[c] -= eps;
            const Vec col = (f.eval(yp) - f.eval(ym)) / (2 * eps);
            CHECK((J.col(c) - col).norm() < 1e-6 * std::max(1.0, col.norm()));
        }
    };

    Vec y = random_mat(4, 1, 7).col(0);
    check_jac(make_affine_features(4), y);
    check_jac(make_fourier_features(4, 2), y);

    EmbeddedOrbit orbit;
    orbit.Y = random_mat(40, 4, 8);
    check_jac(make_rbf_features(orbit, 12), y);

    // phase pairs on near-unit pairs
    Vec yp(4);
    yp << std::cos(0.4), std::sin(0.4), std::cos(2.0), std::sin(2.0);
    check_jac(make_fourier_features(4, 2, FourierMode::PhasePairs), yp);
}

TEST_CASE("fit_feedback recovers exactly representable targets") {
    Mat Y = random_mat(400, 3, 11);
    FeatureMap f = make_affine_features(3);

    SUBCASE("affine targets at ridge 0: residual below 1e-9") {
        Mat C0 = random_mat(3, 2, 12);
        Vec b0 = random_mat(2, 1, 13).col(0);
        Mat T = (Y * C0).rowwise() + b0.transpose();
        FeedbackModel m = fit_feedback(Y, T, f, 0.0, 1);
        CHECK(m.delta <= 1e-9);
        CHECK(m.diag.train_rms <= 1e-9);
        Vec pred = m.predict(Y.row(5));
        CHECK((pred - T.row(5).transpose()).norm() < 1e-9);
    }

    SUBCASE("constant targets select the constant feature") {
        Mat T = Mat::Constant(400, 1, 3.25);
        FeedbackModel m = fit_feedback(Y, T, f, 0.0, 1);
        CHECK(m.coeffs(0, 0) == doctest::Approx(3.25).epsilon(1e-10));
        CHECK(m.coeffs.bottomRows(3).norm() < 1e-10);
        Vec anywhere = random_mat(3, 1, 77).col(0);
        CHECK(m.predict(anywhere)[0] == doctest::Approx(3.25).epsilon(1e-10));
    }

    SUBCASE("rank-deficient design with ridge 0 is reported") {
        Mat Ybad = Y;
        Ybad.col(2) = Ybad.col(1);  // collinear
        Mat T = random_mat(400, 1, 14);
        CHECK_THROWS_AS((void)fit_feedback(Ybad, T, f, 0.0, 1), RankDeficiencyError);
        // ridge > 0 resolves it
        FeedbackModel m = fit_feedback(Ybad, T, f, 1e-6, 1);
        CHECK(std::isfinite(m.delta));
    }
}

TEST_CASE("torus rotation with trig observation fits exactly through phase pairs") {
    // delayed blocks of a pure rotation are rigidly related, so the features
    // are rank deficient on this data; the default ridge floor handles it
    TrajectoryBundle b = torus_trig_bundle(3000);
    DelayParams dp{2, 2};
    EmbeddedOrbit orbit = delay_embed(b, dp);
    FeatureMap f = make_fourier_features(orbit.dim(), 1, FourierMode::PhasePairs);
    TrainingSet ts = make_training_set(b, orbit, 1);
    FeedbackModel m =
        fit_feedback(ts.Y, ts.targets, f, auto_ridge(f.eval_rows(ts.Y)), 1);
    CHECK(m.delta < 1e-6);
}

TEST_CASE("make_training_set aligns targets with embedded bases") {
    TrajectoryBundle b = torus_trig_bundle(50);
    DelayParams dp{3, 2};
    EmbeddedOrbit orbit = delay_embed(b, dp);
    TrainingSet ts = make_training_set(b, orbit, 2);
    CHECK(ts.Y.rows() == ts.targets.rows());
    for (Index j = 0; j < ts.Y.rows(); ++j) {
        CHECK(ts.targets.row(j) == b.observations.row(orbit.base_index(j) + 2));
        CHECK(ts.Y.row(j) == orbit.Y.row(j));
    }
}

TEST_CASE("project_empirical idempotence and mean removal") {
    Mat Y = random_mat(300, 2, 21);
    FeatureMap f = make_affine_features(2);

    SUBCASE("values in the span project to themselves") {
        Mat V = (Y * random_mat(2, 1, 22)).rowwise() + Eigen::RowVectorXd::Constant(1, 0.7);
        auto [fitted, rms] = project_empirical(f, Y, V);
        CHECK(rms <= 1e-9);
        auto [refit, rms2] = project_empirical(f, Y, fitted);
        CHECK((refit - fitted).norm() < 1e-10 * std::max(1.0, fitted.norm()));
    }

    SUBCASE("constant-only features remove exactly the mean") {
        FeatureMap c;
        c.kind = FeatureKind::Affine;
        c.input_dim = 0;  // only the constant feature
        Mat V = random_mat(300, 1, 23);
        Mat Y0(300, 0);
        auto [fitted, rms] = project_empirical(c, Y0, V);
        const double mean = V.col(0).mean();
        CHECK(fitted.col(0).isApproxToConstant(mean, 1e-10));
        const double expected = std::sqrt((V.col(0).array() - mean).square().mean());
        CHECK(rms == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("projection bounds and monotonicity") {
    // both angles observed: phases equidistribute on the 2-torus, so the
    // feature matrices are full rank and ridge 0 is admissible
    TrajectoryBundle b = torus_trig_bundle(4000, /*both_angles=*/true);
    DelayParams dp{1, 4};
    EmbeddedOrbit orbit = delay_embed(b, dp);
    TrainingSet ts = make_training_set(b, orbit, 1);

    SUBCASE("delta never exceeds the centered-target RMS") {
        FeatureMap c = make_affine_features(orbit.dim());
        FeedbackModel m = fit_feedback(ts.Y, ts.targets, c, 0.0, 1);
        Eigen::RowVectorXd mean = ts.targets.colwise().mean();
        const double rms_centered =
            std::sqrt((ts.targets.rowwise() - mean).rowwise().squaredNorm().mean());
        CHECK(m.delta <= rms_centered + 1e-9);
    }

    SUBCASE("delta is non-increasing over nested fourier sets") {
        double prev = std::numeric_limits<double>::infinity();
        for (int kmax : {1, 2, 3}) {
            FeatureMap f = make_fourier_features(orbit.dim(), kmax, FourierMode::PhasePairs);
            FeedbackModel m = fit_feedback(ts.Y, ts.targets, f, 0.0, 1);
            CHECK(m.delta <= prev + 1e-6);
            prev = m.delta;
        }
    }

    SUBCASE("train residual is non-decreasing in ridge") {
        FeatureMap f = make_affine_features(orbit.dim());
        double prev = -1;
        for (double ridge : {0.0, 1e-6, 1e-3, 1e-1, 10.0}) {
            FeedbackModel m = fit_feedback(ts.Y, ts.targets, f, ridge, 1);
            CHECK(m.diag.train_rms >= prev - 1e-12);
            prev = m.diag.train_rms;
        }
    }

    SUBCASE("held-out delta is non-decreasing in ridge on representable targets") {
        FeatureMap f = make_fourier_features(orbit.dim(), 1, FourierMode::PhasePairs);
        double prev = -1;
        for (double ridge : {0.0, 1e-8, 1e-4, 1e-2, 1.0}) {
            FeedbackModel m = fit_feedback(ts.Y, ts.targets, f, ridge, 1);
            CHECK(m.delta >= prev - 1e-12);
            prev = m.delta;
        }
    }
}

TEST_CASE("long-horizon projection approaches the signal deviation") {
    // projecting U^n phi onto affine delay features for mixing L63: residual
    // approaches the full signal spread (empirical variance oracle)
    SystemSpec spec;
    spec.kind = SystemKind::Lorenz63;
    auto obs = coordinate_observation(3, {0});
    TrajectoryBundle raw =
        generate_trajectory(spec, default_initial_state(spec), 40000, 10000, obs, 0);
    TrajectoryBundle b = subsample(raw, 5);
    Normalization nrm = Normalization::measure(b);
    b = nrm.apply(b);
    DelayParams dp{8, 1};
    EmbeddedOrbit orbit = delay_embed(b, dp);
    FeatureMap f = make_affine_features(orbit.dim());
    const int n_far = 120;  // far past the decorrelation time
    TrainingSet ts = make_training_set(b, orbit, n_far);
    auto [fitted, rms] = project_empirical(f, ts.Y, ts.targets);
    const double sd = std::sqrt(
        (ts.targets.rowwise() - ts.targets.colwise().mean()).rowwise().squaredNorm().mean());
    CHECK(rms == doctest::Approx(sd).epsilon(0.10));
}

TEST_CASE("model JSON round trip is bit-faithful on coefficients") {
    TrajectoryBundle b = torus_trig_bundle(500);
    DelayParams dp{2, 2};
    EmbeddedOrbit orbit = delay_embed(b, dp);
    TrainingSet ts = make_training_set(b, orbit, 1);
    for (int which = 0; which < 3; ++which) {
        FeatureMap f = which == 0 ? make_affine_features(orbit.dim())
                       : which == 1
                           ? make_fourier_features(orbit.dim(), 2, FourierMode::PhasePairs)
                           : make_rbf_features(orbit, 20);
        FeedbackModel m = fit_feedback(ts.Y, ts.targets, f, 1e-8, 1);
        const std::string text = model_to_json(m).dump();
        FeedbackModel back = model_from_json(nlohmann::json::parse(text));
        CHECK(back.coeffs == m.coeffs);
        CHECK(back.delta == m.delta);
        Vec y = orbit.Y.row(3);
        CHECK(back.predict(y) == m.predict(y));
    }
}

TEST_CASE("auto ridge scales with the gram trace") {
    Mat X = random_mat(100, 5, 31, 2.0);
    CHECK(auto_ridge(X) == doctest::Approx(1e-8 * X.squaredNorm() / 5.0));
}
