#include <cmath>

#include "doctest.h"
#include "ksmc/diagnostics.hpp"
#include "ksmc/rng.hpp"

using namespace ksmc;

TEST_CASE("ks statistic on exact quantile grids") {
    // samples at (i - 1/2)/n of the uniform law: D_n = 1/(2n) exactly
    for (int n : {10, 100}) {
        std::vector<double> s(n);
        for (int i = 0; i < n; ++i) s[i] = (i + 0.5) / n;
        const auto res = ks_test(s, [](double x) { return x; });
        CHECK(res.statistic == doctest::Approx(0.5 / n).epsilon(1e-12));
        CHECK(res.pass);
    }
}

TEST_CASE("ks critical value at the usual level") {
    CHECK(ks_critical(0.05) == doctest::Approx(1.358).epsilon(2e-3));
    CHECK(ks_critical(0.01) > ks_critical(0.05));
}

TEST_CASE("standard normal cdf values") {
    CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(standard_normal_cdf(1.96) == doctest::Approx(0.975).epsilon(1e-3));
    CHECK(standard_normal_cdf(-1.96) == doctest::Approx(0.025).epsilon(2e-2));
}

TEST_CASE("well matched normal samples pass, a shifted cloud fails") {
    const RngStream rng(13);
    std::vector<double> good(400), shifted(400);
    for (int i = 0; i < 400; ++i) {
        good[i] = rng.normal(RngDomain::truth_process, i, 0, 0);
        shifted[i] = good[i] + 3.0;
    }
    CHECK(ks_test(good, standard_normal_cdf).pass);
    const auto bad = ks_test(shifted, standard_normal_cdf);
    CHECK(!bad.pass);
    CHECK(bad.statistic > 5.0 * bad.critical);
}

TEST_CASE("ks test needs five samples") {
    CHECK_THROWS_AS(ks_test({0.1, 0.5, 0.9, 0.3}, [](double x) { return x; }),
                    insufficient_data);
}

TEST_CASE("sampling std across repeated runs") {
    Mat a = Mat::Constant(1, 1, 1.0);
    Mat b = Mat::Constant(1, 1, -1.0);
    const Mat s = sampling_std({a, b});
    CHECK(s(0, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(sampling_std({a}), insufficient_data);
}

TEST_CASE("rate fit recovers an exact power law") {
    const std::vector<double> levels = {50.0, 200.0, 800.0, 3200.0};
    std::vector<double> errors;
    for (double n : levels) errors.push_back(2.0 * std::pow(n, -0.5));
    const auto fit = rate_fit(levels, errors);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(rate_fit({1.0, 2.0}, {1.0, 0.5}), insufficient_data);
}

TEST_CASE("rmse hand values") {
    Mat est(2, 2), ref(2, 2);
    est << 1.0, 2.0, 3.0, 4.0;
    ref << 0.0, 2.0, 3.0, 2.0;
    CHECK(rmse(est, ref) == doctest::Approx(std::sqrt(5.0 / 4.0)));
    CHECK(rmse_columns(est, ref, {1}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(rmse_columns(est, ref, {0}) == doctest::Approx(std::sqrt(0.5)));
}
