#include <cmath>

#include "doctest.h"
#include "ksmc/sde.hpp"

using namespace ksmc;

namespace {

ProcessModel scalar_model(std::function<double(double, double)> b, double f) {
    ProcessModel m;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.drift = [b](const Vec& x, double t) {
        Vec out(1);
        out[0] = b(x[0], t);
        return out;
    };
    m.diffusion = [f](const Vec&, double) { return Mat::Constant(1, 1, f); };
    return m;
}

}  // namespace

TEST_CASE("euler step hand values") {
    const auto decay = scalar_model([](double x, double) { return -x; }, 0.0);
    Vec x(1);
    x << 1.0;
    CHECK(em_step(decay, x, 0.0, 0.1, Vec::Zero(1))[0] == doctest::Approx(0.9));

    const auto still = scalar_model([](double, double) { return 0.0; }, 0.0);
    CHECK(em_step(still, x, 0.0, 0.1, Vec::Zero(1))[0] == doctest::Approx(1.0));
}

TEST_CASE("euler step flags a non-finite result") {
    const auto blow = scalar_model(
        [](double, double) { return std::numeric_limits<double>::infinity(); }, 0.0);
    Vec x(1);
    x << 1.0;
    CHECK_THROWS_AS(em_step(blow, x, 0.0, 0.1, Vec::Zero(1), 3, 7), numeric_overflow);
}

TEST_CASE("driven increments have Brownian variance") {
    const auto pure_noise = scalar_model([](double, double) { return 0.0; }, 1.0);
    const RngStream rng(5);
    const double dt = 0.01;
    const int n = 10000;
    double sumsq = 0.0;
    Vec x = Vec::Zero(1);
    for (int i = 0; i < n; ++i) {
        Vec dB(1);
        dB[0] = std::sqrt(dt) * rng.normal(RngDomain::truth_process, i, 0, 0);
        const Vec nx = em_step(pure_noise, x, 0.0, dt, dB);
        const double inc = nx[0] - x[0];
        sumsq += inc * inc;
        x = nx;
    }
    const double var = sumsq / n;
    CHECK(std::abs(var - dt) < 3.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("deterministic truth hits the known solution") {
    const auto still = scalar_model([](double, double) { return 1.0; }, 0.0);
    TruthOptions opt;
    opt.T = 1.0;
    opt.dt = 0.1;
    opt.refine = 4;
    opt.with_obs_noise = false;
    const RngStream rng(1);
    Vec x0 = Vec::Zero(1);
    const auto traj = generate_truth(still, x0, nullptr, nullptr, opt, rng);
    REQUIRE(traj.steps() == 10);
    CHECK(traj.times.back() == doctest::Approx(1.0));
    CHECK(traj.states.back()[0] == doctest::Approx(1.0));  // x(t) = t
    CHECK(traj.states[5][0] == doctest::Approx(0.5));
}

TEST_CASE("trapezoidal quadrature is exact for a linear integrand") {
    // x(t) = t and h(x) = x: Y(1) = 1/2 on any grid
    const auto still = scalar_model([](double, double) { return 1.0; }, 0.0);
    ObservationModel obs;
    obs.dim_obs = 1;
    obs.observe = [](const Vec& x, double) { return x; };
    obs.noise.covariance = Mat::Identity(1, 1);
    TruthOptions opt;
    opt.T = 1.0;
    opt.dt = 0.1;
    opt.refine = 2;
    opt.with_obs_noise = false;
    const RngStream rng(1);
    Vec x0 = Vec::Zero(1);
    const auto traj = generate_truth(still, x0, &obs, nullptr, opt, rng);
    CHECK(traj.obs_Y.back()[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quadrature error decays at second order in the fine step") {
    // x(t) = t, h(x) = x^2: trapezoid error for int_0^1 t^2 dt scales as dt_f^2
    const auto still = scalar_model([](double, double) { return 1.0; }, 0.0);
    ObservationModel obs;
    obs.dim_obs = 1;
    obs.observe = [](const Vec& x, double) {
        Vec h(1);
        h[0] = x[0] * x[0];
        return h;
    };
    obs.noise.covariance = Mat::Identity(1, 1);
    TruthOptions opt;
    opt.T = 1.0;
    opt.dt = 0.1;
    opt.with_obs_noise = false;
    const RngStream rng(1);
    Vec x0 = Vec::Zero(1);
    opt.refine = 1;
    const double e1 =
        std::abs(generate_truth(still, x0, &obs, nullptr, opt, rng).obs_Y.back()[0] - 1.0 / 3.0);
    opt.refine = 2;
    const double e2 =
        std::abs(generate_truth(still, x0, &obs, nullptr, opt, rng).obs_Y.back()[0] - 1.0 / 3.0);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("ou path reaches its stationary variance") {
    const auto ou = scalar_model([](double x, double) { return -x; }, 1.0);
    TruthOptions opt;
    opt.T = 200.0;
    opt.dt = 0.01;
    opt.refine = 1;
    const RngStream rng(11);
    Vec x0 = Vec::Zero(1);
    const auto traj = generate_truth(ou, x0, nullptr, nullptr, opt, rng);
    double sumsq = 0.0;
    int count = 0;
    for (std::size_t i = traj.states.size() / 2; i < traj.states.size(); ++i) {
        sumsq += traj.states[i][0] * traj.states[i][0];
        ++count;
    }
    CHECK(sumsq / count == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("subsampling is exact for states and cumulative records") {
    const auto ou = scalar_model([](double x, double) { return -x; }, 1.0);
    ObservationModel obs;
    obs.dim_obs = 1;
    obs.observe = [](const Vec& x, double) { return x; };
    obs.noise.covariance = Mat::Identity(1, 1);
    TruthOptions opt;
    opt.T = 1.0;
    opt.dt = 0.01;
    opt.refine = 1;
    const RngStream rng(3);
    Vec x0 = Vec::Zero(1);
    const auto fine = generate_truth(ou, x0, &obs, nullptr, opt, rng);
    const auto coarse = subsample(fine, 4);
    REQUIRE(coarse.steps() == 25);
    CHECK(coarse.dt == doctest::Approx(0.04));
    CHECK(coarse.states[3][0] == fine.states[12][0]);
    CHECK(coarse.obs_Y[25][0] == fine.obs_Y[100][0]);
    CHECK_THROWS_AS(subsample(fine, 3), invalid_model);
}

TEST_CASE("discrete models are never subdivided") {
    ProcessModel m;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.discrete = true;
    m.drift = [](const Vec& x, double) { return (0.5 * x).eval(); };
    m.diffusion = [](const Vec&, double) { return Mat::Identity(1, 1); };
    TruthOptions opt;
    opt.T = 1.0;
    opt.dt = 0.5;
    opt.with_obs_noise = false;
    const RngStream rng(9);
    Vec x0 = Vec::Ones(1);
    opt.refine = 1;
    const auto a = generate_truth(m, x0, nullptr, nullptr, opt, rng);
    opt.refine = 32;
    const auto b = generate_truth(m, x0, nullptr, nullptr, opt, rng);
    for (std::size_t i = 0; i < a.states.size(); ++i)
        CHECK(a.states[i][0] == b.states[i][0]);
}
