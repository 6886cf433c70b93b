#include "ksmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace ksmc {

double ks_critical(double significance) {
    require(significance > 0 && significance < 1, "ks_test: significance must be in (0,1)");
    return std::sqrt(-0.5 * std::log(0.5 * significance));
}

double standard_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730950488);
}

KsTestResult ks_test(std::vector<double> samples,
                     const std::function<double(double)>& reference_cdf,
                     double significance) {
    const std::size_t n = samples.size();
    if (n < 5) throw insufficient_data("ks_test: need at least 5 samples");
    std::sort(samples.begin(), samples.end());
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = reference_cdf(samples[k]);
        d = std::max(d, std::abs(static_cast<double>(k + 1) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(k) / n));
    }
    KsTestResult r;
    r.statistic = d;
    r.critical = ks_critical(significance) / std::sqrt(static_cast<double>(n));
    r.pass = d < r.critical;
    return r;
}

Mat sampling_std(const std::vector<Mat>& runs) {
    if (runs.size() < 2) throw insufficient_data("sampling_std: need at least 2 runs");
    const Eigen::Index rows = runs[0].rows(), cols = runs[0].cols();
    for (const Mat& r : runs)
        if (r.rows() != rows || r.cols() != cols)
            throw insufficient_data("sampling_std: run shapes differ");
    Mat mean = Mat::Zero(rows, cols);
    for (const Mat& r : runs) mean += r;
    mean /= static_cast<double>(runs.size());
    Mat ss = Mat::Zero(rows, cols);
    for (const Mat& r : runs) ss += (r - mean).cwiseProduct(r - mean);
    return (ss / static_cast<double>(runs.size() - 1)).cwiseSqrt();
}

RateFit rate_fit(const std::vector<double>& levels, const std::vector<double>& errors) {
    if (levels.size() != errors.size() || levels.size() < 3)
        throw insufficient_data("rate_fit: need >= 3 matching (level, error) points");
    const std::size_t n = levels.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(levels[i] > 0) || !(errors[i] > 0))
            throw insufficient_data("rate_fit: levels and errors must be positive");
        x[i] = std::log(levels[i]);
        y[i] = std::log(errors[i]);
    }
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < n; ++i) { xm += x[i]; ym += y[i]; }
    xm /= n; ym /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

double rmse(const Mat& estimate, const Mat& reference) {
    require(estimate.rows() == reference.rows() && estimate.cols() == reference.cols(),
            "rmse: shape mismatch");
    return std::sqrt((estimate - reference).squaredNorm() /
                     static_cast<double>(estimate.size()));
}

double rmse_columns(const Mat& estimate, const Mat& reference, const std::vector<int>& cols) {
    require(estimate.rows() == reference.rows(), "rmse: row mismatch");
    double acc = 0.0;
    for (int c : cols)
        acc += (estimate.col(c) - reference.col(c)).squaredNorm();
    return std::sqrt(acc / static_cast<double>(estimate.rows() * cols.size()));
}

}  // namespace ksmc
