#include <cmath>
#include <set>

#include "doctest.h"
#include "ksmc/rng.hpp"

using namespace ksmc;

TEST_CASE("philox block is a pure function of its counter and key") {
    const auto a = philox4x32(1, 2, 3, 4, 5);
    const auto b = philox4x32(1, 2, 3, 4, 5);
    CHECK(a.x[0] == b.x[0]);
    CHECK(a.x[1] == b.x[1]);
    CHECK(a.x[2] == b.x[2]);
    CHECK(a.x[3] == b.x[3]);
    const auto c = philox4x32(1, 2, 3, 5, 5);
    CHECK(a.x[0] != c.x[0]);
    const auto d = philox4x32(1, 2, 3, 4, 6);
    CHECK(a.x[0] != d.x[0]);
}

TEST_CASE("stream draws are reproducible and address-sensitive") {
    const RngStream r1(42), r2(42), r3(43);
    const double u = r1.uniform(RngDomain::truth_process, 7, 11, 2);
    CHECK(u == r2.uniform(RngDomain::truth_process, 7, 11, 2));
    CHECK(u != r3.uniform(RngDomain::truth_process, 7, 11, 2));
    CHECK(u != r1.uniform(RngDomain::truth_process, 7, 11, 3));
    CHECK(u != r1.uniform(RngDomain::truth_process, 8, 11, 2));
    CHECK(u != r1.uniform(RngDomain::filter_predict, 7, 11, 2));
    const double n = r1.normal(RngDomain::filter_predict, 1, 2, 3);
    CHECK(n == r2.normal(RngDomain::filter_predict, 1, 2, 3));
}

TEST_CASE("uniform draws land in [0,1) with the right first moments") {
    const RngStream rng(7);
    const int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(RngDomain::truth_process, i, 0, 0);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("normal draws match the standard moments") {
    const RngStream rng(7);
    const int n = 20000;
    double sum = 0.0, sumsq = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(RngDomain::filter_predict, i, 1, 0);
        sum += x;
        sumsq += x * x;
        sum4 += x * x * x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sum4 / n - 3.0) < 0.25);
}

TEST_CASE("distinct addresses give distinct values") {
    const RngStream rng(1);
    std::set<double> seen;
    for (int t = 0; t < 50; ++t)
        for (int p = 0; p < 20; ++p)
            seen.insert(rng.normal(RngDomain::abs_propagate, t, p, 0));
    CHECK(seen.size() == 1000);
}
