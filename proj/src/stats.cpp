#include "sinai/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sinai {

LogFit fit_log_growth(const std::vector<int64_t>& n, const std::vector<double>& y) {
    if (n.size() != y.size()) throw std::invalid_argument("fit_log_growth: size mismatch");
    if (n.size() < 3) throw std::invalid_argument("fit_log_growth: need at least 3 points");
    const size_t m = n.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(m);
    for (size_t i = 0; i < m; ++i) {
        if (n[i] < 1) throw std::invalid_argument("fit_log_growth: n must be positive");
        lx[i] = std::log(static_cast<double>(n[i]));
        sx += lx[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_log_growth: n values all equal");
    LogFit fit;
    fit.b = sxy / sxx;
    fit.a = my - fit.b * mx;
    const double scale = std::max(1.0, my * my) * static_cast<double>(m);
    if (syy <= 1e-24 * scale) {
        fit.degenerate = true;
        fit.a = my;
        fit.b = 0.0;
        fit.r2 = 0.0;
        return fit;
    }
    const double ss_res = syy - fit.b * sxy;
    fit.r2 = 1.0 - std::max(0.0, ss_res) / syy;
    return fit;
}

double ks_exponential(std::vector<double> samples) {
    if (samples.size() < 30) throw std::invalid_argument("ks_exponential: need at least 30 samples");
    std::sort(samples.begin(), samples.end());
    if (samples.front() < 0.0) throw std::invalid_argument("ks_exponential: negative sample");
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = 1.0 - std::exp(-samples[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= t) ++i;
        while (j < y.size() && y[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

MeanSE mean_se(const std::vector<double>& x) {
    MeanSE r;
    r.n = x.size();
    if (x.empty()) return r;
    double s = 0.0;
    for (double v : x) s += v;
    r.mean = s / static_cast<double>(x.size());
    if (x.size() < 2) return r;
    double ss = 0.0;
    for (double v : x) ss += (v - r.mean) * (v - r.mean);
    const double var = ss / static_cast<double>(x.size() - 1);
    r.se = std::sqrt(var / static_cast<double>(x.size()));
    return r;
}

std::vector<int64_t> log_checkpoints(int64_t lo, int64_t hi, int per_decade) {
    if (lo < 1 || hi < lo) throw std::invalid_argument("log_checkpoints: need 1 <= lo <= hi");
    if (per_decade < 1) throw std::invalid_argument("log_checkpoints: per_decade must be positive");
    std::vector<int64_t> grid;
    const double step = 1.0 / static_cast<double>(per_decade);
    const long k0 = static_cast<long>(std::floor(std::log10(static_cast<double>(lo)) / step)) - 1;
    for (long k = std::max(0L, k0);; ++k) {
        const int64_t v = static_cast<int64_t>(std::llround(std::pow(10.0, step * static_cast<double>(k))));
        if (v > hi) break;
        if (v >= lo && (grid.empty() || grid.back() != v)) grid.push_back(v);
    }
    if (grid.empty() || grid.back() != hi) grid.push_back(hi);
    return grid;
}

}  // namespace sinai
