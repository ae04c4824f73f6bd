#pragma once

#include <cstdint>
#include <vector>

namespace sinai {

// Least squares for y ~ a + b * ln(n). When the responses are essentially
// constant the r-squared ratio is 0/0; `degenerate` flags that case instead
// of returning NaN (a still holds the mean, b is 0).
struct LogFit {
    double a = 0.0;
    double b = 0.0;
    double r2 = 0.0;
    bool degenerate = false;
};

LogFit fit_log_growth(const std::vector<int64_t>& n, const std::vector<double>& y);

// Exact Kolmogorov-Smirnov distance between the empirical law of `samples`
// and the unit exponential. Requires at least 30 nonnegative samples.
double ks_exponential(std::vector<double> samples);

// Exact two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> x, std::vector<double> y);

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    size_t n = 0;
};

MeanSE mean_se(const std::vector<double>& x);

// Log-spaced integer grid over [lo, hi] with `per_decade` points per decade;
// always contains hi, sorted, duplicate-free.
std::vector<int64_t> log_checkpoints(int64_t lo, int64_t hi, int per_decade);

}  // namespace sinai
