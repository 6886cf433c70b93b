#include <cmath>

#include "doctest.h"
#include "ksmc/annealing.hpp"
#include "ksmc/rng.hpp"

using namespace ksmc;

TEST_CASE("exponential schedule divides by exp(k+1)") {
    auto s = ScheduleState::exponential(1.0);
    CHECK(s.k == 1);
    next_beta_exponential(s);
    CHECK(s.beta == doctest::Approx(std::exp(-2.0)));
    CHECK(s.k == 2);
    for (int i = 0; i < 4; ++i) next_beta_exponential(s);
    // five advances in total: divided by exp(2+3+4+5+6)
    CHECK(s.beta == doctest::Approx(std::exp(-20.0)));
}

TEST_CASE("schedules reject a non-positive starting temperature") {
    CHECK_THROWS_AS(ScheduleState::exponential(0.0), invalid_model);
    CHECK_THROWS_AS(ScheduleState::exponential(-1.0), invalid_model);
    CHECK_THROWS_AS(ScheduleState::lam(1.0, 0.0), invalid_model);
}

TEST_CASE("lam recursion hand value") {
    // energies (0,0) -> (2,0): rho = 2, sigma = 1
    auto s = ScheduleState::lam(1.0, 0.5);
    next_beta_lam(s, {0.0, 0.0}, {2.0, 0.0});
    CHECK(s.beta == doctest::Approx(2.0 / 3.0));
    CHECK(!s.held);
}

TEST_CASE("lam leaves beta alone for stationary energies") {
    auto s = ScheduleState::lam(0.7, 0.5);
    next_beta_lam(s, {1.0, 3.0}, {1.0, 3.0});
    CHECK(s.beta == doctest::Approx(0.7));
    CHECK(!s.held);
}

TEST_CASE("lam cools monotonically") {
    auto s = ScheduleState::lam(1.0, 0.5);
    const RngStream rng(4);
    double prev_beta = s.beta;
    std::vector<double> prev(8), cur(8);
    for (int j = 0; j < 8; ++j) prev[j] = 1.0 + rng.uniform(RngDomain::truth_process, 0, j, 0);
    for (int k = 0; k < 6; ++k) {
        for (int j = 0; j < 8; ++j)
            cur[j] = 1.0 + rng.uniform(RngDomain::truth_process, k + 1, j, 0);
        next_beta_lam(s, prev, cur);
        CHECK(s.beta <= prev_beta);
        prev_beta = s.beta;
        prev = cur;
    }
}

TEST_CASE("lam holds on a degenerate ensemble") {
    auto s = ScheduleState::lam(0.4, 0.5);
    next_beta_lam(s, {0.0, 0.0}, {1.0, 1.0});  // zero spread in the current energies
    CHECK(s.beta == doctest::Approx(0.4));
    CHECK(s.held);
    CHECK(s.k == 2);
}

TEST_CASE("lam needs two matching snapshots") {
    auto s = ScheduleState::lam(1.0, 0.5);
    CHECK_THROWS_AS(next_beta_lam(s, {0.0}, {1.0, 2.0}), insufficient_data);
    CHECK_THROWS_AS(next_beta_lam(s, {}, {}), insufficient_data);
}
