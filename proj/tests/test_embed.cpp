#include "embedcast/embed.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

using namespace embedcast;

namespace {

// power-iteration estimate of the largest singular value
double sigma_max_power(const Mat& A, int iters = 400) {
    Vec v = Vec::Ones(A.cols()).normalized();
    for (int i = 0; i < iters; ++i) v = (A.transpose() * (A * v)).normalized();
    return (A * v).norm();
}

Mat random_inputs(Index n, Index d, std::uint64_t seed) {
    auto rng = make_stream(seed, 2);
    std::normal_distribution<double> gauss;
    Mat U(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) U(i, j) = gauss(rng);
    return U;
}

TrajectoryBundle scalar_series_bundle(const std::vector<double>& values) {
    TrajectoryBundle b;
    b.states.resize(static_cast<Index>(values.size()), 1);
    b.observations.resize(static_cast<Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        b.states(static_cast<Index>(i), 0) = values[i];
        b.observations(static_cast<Index>(i), 0) = values[i];
    }
    return b;
}

}  // namespace

TEST_CASE("reservoir_init construction contract") {
    ReservoirParams p = reservoir_init(120, 3, 0.8, 21);
    CHECK(Eigen::JacobiSVD<Mat>(p.W_Y).singularValues()[0] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(Eigen::JacobiSVD<Mat>(p.W_in).singularValues()[0] ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p.v_bias.minCoeff() >= -1.0);
    CHECK(p.v_bias.maxCoeff() <= 1.0);

    ReservoirParams q = reservoir_init(120, 3, 0.8, 21);
    CHECK(p.W_Y == q.W_Y);
    CHECK(p.W_in == q.W_in);
    CHECK(p.v_bias == q.v_bias);

    CHECK_THROWS_AS((void)reservoir_init(10, 2, 1.2, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)reservoir_init(0, 2, 0.5, 0), std::invalid_argument);
}

TEST_CASE("reservoir_init norm verified by power iteration") {
    ReservoirParams p = reservoir_init(300, 3, 0.9, 5);
    CHECK(sigma_max_power(p.W_Y) == doctest::Approx(0.9).epsilon(1e-8));
}

TEST_CASE("reservoir_g range and zero case") {
    ReservoirParams p = reservoir_init(40, 2, 0.5, 9);
    p.W_in.setZero();
    p.W_Y.setZero();
    p.v_bias.setZero();
    Vec u(2);
    u << 3.0, -1.0;
    CHECK(reservoir_g(p, u, Vec::Ones(40)).norm() == 0.0);

    ReservoirParams q = reservoir_init(40, 2, 0.5, 9);
    auto rng = make_stream(1, 1);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        Vec uu(2), yy(40);
        for (Index i = 0; i < 2; ++i) uu[i] = 5 * gauss(rng);
        for (Index i = 0; i < 40; ++i) yy[i] = 5 * gauss(rng);
        CHECK(reservoir_g(q, uu, yy).cwiseAbs().maxCoeff() < 1.0);
    }
}

TEST_CASE("reservoir_g is a lambda-contraction in y") {
    ReservoirParams p = reservoir_init(60, 2, 0.7, 3);
    auto rng = make_stream(2, 1);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 1000; ++trial) {
        Vec u(2), y1(60), y2(60);
        for (Index i = 0; i < 2; ++i) u[i] = gauss(rng);
        for (Index i = 0; i < 60; ++i) {
            y1[i] = 3 * gauss(rng);
            y2[i] = 3 * gauss(rng);
        }
        const double lhs = (reservoir_g(p, u, y1) - reservoir_g(p, u, y2)).norm();
        CHECK(lhs <= 0.7 * (y1 - y2).norm());
    }
}

TEST_CASE("reservoir jacobian norms stay within the contraction bounds") {
    ReservoirParams p = reservoir_init(80, 3, 0.85, 8);
    Mat U = random_inputs(150, 3, 17);
    EmbeddedOrbit orbit = drive(p, U, Vec::Zero(80), 30);
    for (int trial = 0; trial < 100; ++trial) {
        const Index j = trial % orbit.size();
        const Vec y = orbit.Y.row(j);
        const Vec u = U.row(orbit.base_index(j));
        const Vec z = p.W_in * u + p.W_Y * y + p.v_bias;
        const Vec dtanh = 1.0 - z.array().tanh().square();
        const Mat Gy = dtanh.asDiagonal() * p.W_Y;
        const Mat Gu = dtanh.asDiagonal() * p.W_in;
        CHECK(Eigen::JacobiSVD<Mat>(Gy).singularValues()[0] <= 0.85 + 1e-12);
        CHECK(Eigen::JacobiSVD<Mat>(Gu).singularValues()[0] <= 1.0 + 1e-12);
    }
}

TEST_CASE("drive washout boundary and contraction telescoping") {
    ReservoirParams p = reservoir_init(50, 2, 0.9, 4);
    Mat U = random_inputs(200, 2, 11);

    SUBCASE("washout = len-1 leaves a single state") {
        EmbeddedOrbit orbit = drive(p, U, Vec::Zero(50), 199);
        CHECK(orbit.size() == 1);
        CHECK(orbit.align_offset == 199);
    }

    SUBCASE("two initializations collapse at rate lambda^washout") {
        auto rng = make_stream(3, 1);
        std::normal_distribution<double> gauss;
        Vec y0a(50), y0b(50);
        for (Index i = 0; i < 50; ++i) {
            y0a[i] = gauss(rng);
            y0b[i] = gauss(rng);
        }
        const Index washout = 40;
        EmbeddedOrbit oa = drive(p, U, y0a, washout);
        EmbeddedOrbit ob = drive(p, U, y0b, washout);
        double bound = std::pow(0.9, washout) * (y0a - y0b).norm();
        for (Index j = 0; j < oa.size(); ++j) {
            CHECK((oa.Y.row(j) - ob.Y.row(j)).norm() <= bound * 1.000001);
            bound *= 0.9;
        }
    }

    SUBCASE("constant input converges geometrically to the fixed point") {
        Vec ustar(2);
        ustar << 0.4, -0.2;
        // fixed-point iteration oracle
        Vec ystar = Vec::Zero(50);
        for (int i = 0; i < 2000; ++i) ystar = reservoir_g(p, ustar, ystar);
        Mat Uc(120, 2);
        Uc.rowwise() = ustar.transpose();
        Vec y0 = Vec::Constant(50, 0.5);
        EmbeddedOrbit orbit = drive(p, Uc, y0, 0);
        double prev = (orbit.Y.row(0).transpose() - ystar).norm();
        for (Index j = 1; j < orbit.size(); ++j) {
            const double cur = (orbit.Y.row(j).transpose() - ystar).norm();
            if (prev > 1e-13) CHECK(cur <= 0.9 * prev * 1.000001);
            prev = cur;
        }
        CHECK((orbit.Y.row(119).transpose() - ystar).norm() < 1e-4);
    }
}

TEST_CASE("drive consecutive entries satisfy the reservoir identity exactly") {
    ReservoirParams p = reservoir_init(30, 1, 0.8, 6);
    Mat U = random_inputs(100, 1, 13);
    EmbeddedOrbit orbit = drive(p, U, Vec::Zero(30), 10);
    for (Index j = 0; j + 1 < orbit.size(); ++j) {
        const Vec u = U.row(orbit.base_index(j));
        const Vec next = reservoir_g(p, u, orbit.Y.row(j));
        CHECK((next.transpose() - orbit.Y.row(j + 1)).norm() == 0.0);
    }
}

TEST_CASE("delay_embed windowing") {
    TrajectoryBundle b = scalar_series_bundle({1, 2, 3, 4, 5});
    DelayParams p{3, 1};

    EmbeddedOrbit orbit = delay_embed(b, p);
    CHECK(orbit.size() == 3);
    CHECK(orbit.align_offset == 3);
    // windows {1,2,3}, {2,3,4}, {3,4,5}, stored newest block first
    CHECK(orbit.Y(0, 0) == 3.0);
    CHECK(orbit.Y(0, 1) == 2.0);
    CHECK(orbit.Y(0, 2) == 1.0);
    CHECK(orbit.Y(1, 0) == 4.0);
    CHECK(orbit.Y(2, 0) == 5.0);
    CHECK(orbit.Y(2, 2) == 3.0);

    SUBCASE("Q = 1 reproduces the observation sequence") {
        DelayParams q1{1, 1};
        EmbeddedOrbit o1 = delay_embed(b, q1);
        CHECK(o1.size() == 5);
        for (Index j = 0; j < 5; ++j) CHECK(o1.Y(j, 0) == b.observations(j, 0));
    }

    SUBCASE("bundle shorter than Q is rejected") {
        DelayParams q9{9, 1};
        CHECK_THROWS_AS((void)delay_embed(b, q9), std::invalid_argument);
    }

    SUBCASE("windows are bit-identical copies of the source") {
        SystemSpec spec;
        spec.kind = SystemKind::Lorenz63;
        auto obs = coordinate_observation(3, {0, 1});
        TrajectoryBundle lb =
            generate_trajectory(spec, default_initial_state(spec), 200, 500, obs, 0);
        DelayParams lp{5, 2};
        EmbeddedOrbit lo = delay_embed(lb, lp);
        for (Index j = 0; j < lo.size(); ++j)
            for (int q = 0; q < 5; ++q)
                CHECK(lo.Y.row(j).segment(2 * q, 2) == lb.observations.row(j + 4 - q));
    }
}

TEST_CASE("delay identity Phi(f w) = g(phi(w), Phi(w)) holds exactly") {
    SystemSpec spec;
    spec.kind = SystemKind::Lorenz63;
    auto obs = coordinate_observation(3, {0});
    TrajectoryBundle b = generate_trajectory(spec, default_initial_state(spec), 300, 1000, obs, 0);
    DelayParams p{4, 1};
    EmbeddedOrbit orbit = delay_embed(b, p);
    for (Index j = 0; j + 1 < orbit.size(); ++j) {
        // the inserted u is the newest observation of window j+1
        const Vec u = b.observations.row(orbit.base_index(j));
        const Vec lhs = delay_g(u, orbit.Y.row(j), p);
        CHECK((lhs.transpose() - orbit.Y.row(j + 1)).norm() == 0.0);
    }
}

TEST_CASE("delay_g structure and jacobians") {
    DelayParams p{3, 2};
    Vec u(2), y(6);
    u << 10, 20;
    y << 1, 2, 3, 4, 5, 6;
    Vec out = delay_g(u, y, p);
    CHECK(out[0] == 10);
    CHECK(out[1] == 20);
    CHECK(out[2] == 1);
    CHECK(out[3] == 2);
    CHECK(out[4] == 3);
    CHECK(out[5] == 4);  // oldest block (5,6) dropped

    SUBCASE("Q = 1 is full replacement") {
        DelayParams q{1, 2};
        Vec y1(2);
        y1 << 7, 8;
        CHECK(delay_g(u, y1, q) == u);
    }

    SUBCASE("shift moves the first block into the second") {
        Vec e1 = Vec::Zero(6);
        e1[0] = 1.0;
        Vec shifted = delay_g(Vec::Zero(2), e1, p);
        CHECK(shifted[2] == 1.0);
        CHECK(shifted.sum() == 1.0);
    }

    SUBCASE("g is linear and equals its own jacobian") {
        const Mat Ju = delay_g_jac_u(p);
        const Mat Jy = delay_g_jac_y(p);
        CHECK((Ju.topRows(2) - Mat::Identity(2, 2)).norm() == 0.0);
        CHECK(Ju.bottomRows(4).norm() == 0.0);
        CHECK((Vec(Ju * u + Jy * y) - out).norm() == 0.0);
        for (Index r = 0; r < 6; ++r)
            for (Index c = 0; c < 6; ++c)
                CHECK(Jy(r, c) == ((r >= 2 && c == r - 2) ? 1.0 : 0.0));
    }
}

TEST_CASE("injectivity diagnostic flags non-injective observations") {
    SystemSpec spec;
    spec.kind = SystemKind::Lorenz63;

    SUBCASE("full-state Q=1 has zero false neighbors") {
        auto obs = full_state_observation(3);
        TrajectoryBundle b =
            generate_trajectory(spec, default_initial_state(spec), 2500, 2000, obs, 0);
        EmbeddedOrbit orbit = delay_embed(b, DelayParams{1, 3});
        InjectivityReport rep = injectivity_diagnostic(orbit, b, 0.5, 1.0);
        CHECK(rep.n_close > 0);
        CHECK(rep.n_false == 0);
    }

    SUBCASE("x-coordinate alone is non-injective; delays repair it") {
        auto obs = coordinate_observation(3, {0});
        TrajectoryBundle raw =
            generate_trajectory(spec, default_initial_state(spec), 30000, 2000, obs, 0);
        TrajectoryBundle b = subsample(raw, 10);
        EmbeddedOrbit o1 = delay_embed(b, DelayParams{1, 1});
        InjectivityReport r1 = injectivity_diagnostic(o1, b, 0.3, 5.0);
        CHECK(r1.n_false > 0);

        EmbeddedOrbit o8 = delay_embed(b, DelayParams{8, 1});
        InjectivityReport r8 = injectivity_diagnostic(o8, b, 0.3, 5.0);
        CHECK(r8.false_fraction < 0.01);
    }
}
