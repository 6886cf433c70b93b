#pragma once

#include <functional>
#include <vector>

#include "ksmc/common.hpp"

namespace ksmc {

struct KsTestResult {
    double statistic = 0.0;   // sup |F_N - F|
    double critical = 0.0;    // c(alpha) / sqrt(N)
    bool pass = false;
};

/// One-sample Kolmogorov-Smirnov test against a continuous reference CDF.
/// Asymptotic critical value c(alpha) = sqrt(-ln(alpha/2) / 2). Requires at
/// least 5 samples (throws insufficient_data below that).
KsTestResult ks_test(std::vector<double> samples,
                     const std::function<double(double)>& reference_cdf,
                     double significance = 0.05);

double ks_critical(double significance);

double standard_normal_cdf(double x);

/// Per-time, per-component standard deviation across repeated runs (sample
/// convention, divisor R-1). runs[r] is a (time x component) matrix; all runs
/// must agree in shape. Needs at least 2 runs.
Mat sampling_std(const std::vector<Mat>& runs);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;  // in log space
    double r_squared = 1.0;
};

/// Least-squares fit of log(error) against log(level); the slope estimates an
/// empirical convergence order. Levels and errors must be positive, >= 3
/// points.
RateFit rate_fit(const std::vector<double>& levels, const std::vector<double>& errors);

/// Root-mean-square error over rows of (estimate - reference), optionally
/// restricted to a column subset.
double rmse(const Mat& estimate, const Mat& reference);
double rmse_columns(const Mat& estimate, const Mat& reference, const std::vector<int>& cols);

}  // namespace ksmc
