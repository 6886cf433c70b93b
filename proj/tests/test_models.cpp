#include <cmath>

#include "doctest.h"
#include "ksmc/models.hpp"

using namespace ksmc;

namespace {
const double pi = std::acos(-1.0);
Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}
}  // namespace

TEST_CASE("duffing reference parameters follow from the epsilons") {
    const auto m = make_duffing(0.25, 1.0, 5.0, 0.5, 0.2, vec3(0.1, 0.05, 0.1));
    REQUIRE(m.n_params() == 3);
    CHECK(m.reference_values[0] == doctest::Approx(39.478).epsilon(1e-3));  // k
    CHECK(m.reference_values[1] == doctest::Approx(1.5708).epsilon(1e-3));  // c
    CHECK(m.reference_values[2] == doctest::Approx(39.478).epsilon(1e-3));  // alpha
    CHECK(m.base.dim_state == 2);
    CHECK(m.augmented.dim_state == 5);
    CHECK(m.augmented.dim_noise == 4);
}

TEST_CASE("duffing drift hand values") {
    const auto m = make_duffing(0.25, 1.0, 5.0, 0.5, 0.2, vec3(0.1, 0.05, 0.1));
    const Vec at_origin = m.base.drift(Vec::Zero(2), 0.0);
    CHECK(at_origin[0] == 0.0);
    CHECK(at_origin[1] == doctest::Approx(4.0 * pi * pi * 5.0));

    Vec x(5);
    x << 1.0, 0.0, 1.0, 0.0, 1.0;  // unit stiffness and cubic term, no damping
    const Vec b = m.augmented.drift(x, 0.25);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(b[2] == 0.0);  // parameters are driftless random walks
    CHECK(b[3] == 0.0);
    CHECK(b[4] == 0.0);
}

TEST_CASE("duffing observation maps") {
    const auto m = make_duffing(0.25, 1.0, 5.0, 0.5, 0.2, vec3(0.1, 0.05, 0.1));
    Vec x(5);
    x << 0.3, -1.0, 39.0, 1.5, 39.0;
    CHECK(m.obs_sde.observe(x, 0.0)[0] == doctest::Approx(0.3 / 0.2));
    CHECK(m.obs_sde.noise.covariance(0, 0) == doctest::Approx(1.0));
    CHECK(m.obs_alg.observe(x, 0.0)[0] == doctest::Approx(0.3));
    CHECK(m.obs_alg.noise.covariance(0, 0) == doctest::Approx(0.04));
}

TEST_CASE("duffing rejects non-positive intensities") {
    CHECK_THROWS_AS(make_duffing(0.25, 1.0, 5.0, 0.0, 0.2, vec3(0.1, 0.05, 0.1)),
                    invalid_model);
    CHECK_THROWS_AS(make_duffing(0.25, 1.0, 5.0, 0.5, -1.0, vec3(0.1, 0.05, 0.1)),
                    invalid_model);
    CHECK_THROWS_AS(make_duffing(0.25, 1.0, 5.0, 0.5, 0.2, vec3(0.1, 0.0, 0.1)),
                    invalid_model);
}

TEST_CASE("chain matrix assembles the standard pattern") {
    const Mat K = chain_matrix(Vec::Ones(5));
    CHECK(K(0, 0) == doctest::Approx(2.0));
    CHECK(K(0, 1) == doctest::Approx(-1.0));
    CHECK(K(0, 2) == 0.0);
    CHECK(K(2, 1) == doctest::Approx(-1.0));
    CHECK(K(2, 2) == doctest::Approx(2.0));
    CHECK(K(4, 3) == doctest::Approx(-1.0));
    CHECK(K(4, 4) == doctest::Approx(1.0));
    CHECK((K - K.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("shear frame shapes and observation") {
    const auto m = make_shear_frame(Vec::Constant(5, 60.0), Vec::Constant(5, 2.0),
                                    nullptr, nullptr, 0.05, 0.01);
    CHECK(m.base.dim_state == 10);
    CHECK(m.augmented.dim_state == 20);
    CHECK(m.n_params() == 10);
    CHECK(m.obs_sde.dim_obs == 5);
    Vec x = Vec::Zero(10);
    for (int j = 0; j < 5; ++j) x[j] = 0.01 * (j + 1);
    const Vec h = m.obs_alg.observe(x, 0.0);
    for (int j = 0; j < 5; ++j) CHECK(h[j] == doctest::Approx(0.01 * (j + 1)));
    CHECK(m.obs_sde.observe(x, 0.0)[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_shear_frame(Vec::Ones(4), Vec::Ones(5), nullptr, nullptr,
                                     0.05, 0.01),
                    invalid_model);
}

TEST_CASE("shear frame restoring force pulls a displaced storey back") {
    const auto m = make_shear_frame(Vec::Constant(5, 60.0), Vec::Constant(5, 2.0),
                                    nullptr, [](double) { return Vec::Zero(5).eval(); },
                                    0.05, 0.01);
    Vec x = Vec::Zero(10);
    x[0] = 0.1;  // displace storey 1 only
    const Vec b = m.base.drift(x, 0.0);
    CHECK(b[5] == doctest::Approx(-0.1 * 120.0));  // -(K1+K2) x1
    CHECK(b[6] == doctest::Approx(0.1 * 60.0));    // +K2 x1
    CHECK(b[7] == 0.0);
}

TEST_CASE("cubic interstorey force vanishes at zero and is odd") {
    const auto f = cubic_interstorey(2.0);
    CHECK(f(Vec::Zero(5)).norm() == 0.0);
    Vec d = Vec::Zero(5);
    d[2] = 0.5;
    const Vec fp = f(d);
    const Vec fm = f((-d).eval());
    CHECK((fp + fm).norm() == doctest::Approx(0.0));
}

TEST_CASE("tracker transition and noise input") {
    Vec x0(4);
    x0 << 0.5, 3.0, 1.0, 1.0;
    const auto tr = make_tracker(1.0, x0, {}, 1.0, Vec::Zero(2), ObservationNoise{});
    CHECK(tr.F(0, 1) == doctest::Approx(1.0));
    CHECK(tr.F(1, 1) == doctest::Approx(1.0));
    CHECK(tr.F(0, 2) == 0.0);
    CHECK(tr.Gamma(0, 0) == doctest::Approx(0.5));
    CHECK(tr.Gamma(1, 0) == doctest::Approx(1.0));
    CHECK(tr.filter_process.discrete);
    // one deterministic step from x0 is F x0
    Vec x1 = x0 + tr.filter_process.drift(x0, 0.0) * tr.dt;
    CHECK((x1 - tr.F * x0).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tracker bearing and range with angular wrap") {
    Vec x0(4);
    x0 << 1.0, 0.0, 1.0, 0.0;
    ObservationNoise noise;
    noise.relative_std = 0.05;
    const auto tr = make_tracker(1.0, x0, {}, 1.0, Vec::Zero(2), noise);
    const Vec z = tr.obs.observe(x0, 0.0);
    CHECK(z[0] == doctest::Approx(pi / 4.0));
    CHECK(z[1] == doctest::Approx(std::sqrt(2.0)));
    CHECK(tr.obs.is_angular(0));
    CHECK(!tr.obs.is_angular(1));
    CHECK_THROWS_AS(tr.obs.observe(Vec::Zero(4), 0.0), singular_geometry);

    Vec za(2), ha(2);
    za << 3.0, 1.0;
    ha << -3.0, 1.0;
    const Vec r = observation_residual(tr.obs, za, ha);
    CHECK(r[0] == doctest::Approx(6.0 - 2.0 * pi));
    CHECK(r[1] == doctest::Approx(0.0));
}

TEST_CASE("tracker maneuver acts for exactly one step") {
    Vec x0(4);
    x0 << 0.5, 3.0, 1.0, 1.0;
    Vec a(2);
    a << -40.0, 40.0;
    const auto tr = make_tracker(1.0, x0, {{20.0, a}}, 1.0, Vec::Zero(2),
                                 ObservationNoise{});
    const Vec quiet = tr.truth_process.drift(x0, 10.0) - tr.filter_process.drift(x0, 10.0);
    CHECK(quiet.norm() == doctest::Approx(0.0));
    const Vec kick = tr.truth_process.drift(x0, 20.0) - tr.filter_process.drift(x0, 20.0);
    CHECK((kick - tr.Gamma * a / tr.dt).norm() == doctest::Approx(0.0).epsilon(1e-12));
    const Vec after = tr.truth_process.drift(x0, 21.0) - tr.filter_process.drift(x0, 21.0);
    CHECK(after.norm() == doctest::Approx(0.0));
}

TEST_CASE("glint mixture scales the base covariance") {
    ObservationNoise noise;
    noise.kind = ObservationNoise::Kind::glint_mixture;
    noise.relative_std = 0.1;
    noise.glint_gamma = 0.5;
    noise.glint_scale = 100.0;
    Vec z(2);
    z << 2.0, 4.0;
    const Mat S = noise.covariance_at(z);
    CHECK(S(0, 0) == doctest::Approx(0.04));
    CHECK(S(1, 1) == doctest::Approx(0.16));
    CHECK(S(0, 1) == 0.0);
}

TEST_CASE("fixed per-channel noise overrides the relative scaling") {
    ObservationNoise noise;
    noise.relative_std = 0.2;
    noise.fixed_std = Vec::Zero(2);
    noise.fixed_std[0] = 0.15;
    Vec z(2);
    z << -40.0, 3.0;
    const Mat S = noise.covariance_at(z);
    CHECK(S(0, 0) == doctest::Approx(0.15 * 0.15));
    CHECK(S(1, 1) == doctest::Approx(0.36));

    ObservationNoise pure;
    pure.fixed_std = Vec::Zero(2);
    pure.fixed_std[0] = 0.02;
    pure.fixed_std[1] = 20.0;
    const Mat P = pure.covariance_at(z);
    CHECK(P(0, 0) == doctest::Approx(4e-4));
    CHECK(P(1, 1) == doctest::Approx(400.0));
    CHECK(P(0, 1) == 0.0);
}

TEST_CASE("linear gaussian building blocks") {
    const auto lg = make_linear_gaussian(-1.0, 1.0, 1.0, 0.0, 1.0);
    Vec x(1);
    x << 2.0;
    CHECK(lg.process.drift(x, 0.0)[0] == doctest::Approx(-2.0));
    CHECK(lg.process.diffusion(x, 0.0)(0, 0) == doctest::Approx(1.0));
    CHECK(lg.obs_sde.observe(x, 0.0)[0] == doctest::Approx(2.0));
    CHECK(lg.obs_sde.noise.covariance(0, 0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_linear_gaussian(-1.0, 0.0, 1.0, 0.0, 1.0), invalid_model);

    // integrated channel is whitened; algebraic channel keeps the raw covariance
    const auto lg4 = make_linear_gaussian(-1.0, 1.0, 4.0, 0.0, 1.0);
    CHECK(lg4.obs_sde.observe(x, 0.0)[0] == doctest::Approx(1.0));
    CHECK(lg4.obs_sde.noise.covariance(0, 0) == doctest::Approx(1.0));
    CHECK(lg4.obs_alg.observe(x, 0.0)[0] == doctest::Approx(2.0));
    CHECK(lg4.obs_alg.noise.covariance(0, 0) == doctest::Approx(4.0));
}
