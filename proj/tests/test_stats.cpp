#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sinai/rng.hpp"
#include "sinai/stats.hpp"

using namespace sinai;

TEST_CASE("log fit recovers exact lines") {
    // ln 9 = 2 ln 3, so these responses are exactly linear in ln n
    const std::vector<int64_t> n = {1, 3, 9, 27};
    std::vector<double> y;
    for (int64_t v : n) y.push_back(2.5 + 0.75 * std::log(static_cast<double>(v)));
    const LogFit fit = fit_log_growth(n, y);
    CHECK(!fit.degenerate);
    CHECK(fit.a == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(fit.b == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> noisy = y;
    noisy[1] += 0.5;
    noisy[2] -= 0.5;
    const LogFit rough = fit_log_growth(n, noisy);
    CHECK(rough.r2 < 1.0);
    CHECK(rough.r2 >= 0.0);

    const LogFit flat = fit_log_growth(n, {4.0, 4.0, 4.0, 4.0});
    CHECK(flat.degenerate);
    CHECK(flat.a == 4.0);
    CHECK(flat.b == 0.0);
    CHECK(flat.r2 == 0.0);

    CHECK_THROWS_AS(fit_log_growth({1, 2}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_log_growth({1, 2, 3}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_log_growth({0, 2, 3}, {0.0, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_log_growth({5, 5, 5}, {0.0, 1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("exponential KS distance") {
    // midpoint quantiles of the unit exponential: the distance is exactly 1/(2n)
    const size_t n = 200;
    std::vector<double> q;
    for (size_t i = 0; i < n; ++i)
        q.push_back(-std::log(1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(n)));
    CHECK(ks_exponential(q) == doctest::Approx(0.5 / static_cast<double>(n)).epsilon(1e-10));

    // wrong scale: sup_x |e^{-x} - e^{-2x}| = 1/4, reached at x = ln 2
    std::vector<double> fast;
    for (size_t i = 0; i < 2000; ++i)
        fast.push_back(0.5 * -std::log(1.0 - (static_cast<double>(i) + 0.5) / 2000.0));
    CHECK(ks_exponential(fast) > 0.2);

    // seeded draws from the correct law sit well under the usual threshold
    rng::Stream st = rng::Stream::from_key({0x57A75, 1});
    std::vector<double> draws;
    for (int i = 0; i < 2000; ++i) draws.push_back(-std::log(1.0 - st.u01()));
    CHECK(ks_exponential(draws) < 0.04);

    CHECK_THROWS_AS(ks_exponential({1.0, 2.0}), std::invalid_argument);
    std::vector<double> neg(40, 0.5);
    neg[7] = -1e-9;
    CHECK_THROWS_AS(ks_exponential(neg), std::invalid_argument);
}

TEST_CASE("two-sample KS distance") {
    CHECK(ks_two_sample({1.0, 2.0, 3.0}, {1.5, 2.5}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ks_two_sample({1.0, 1.0, 2.0}, {1.0, 2.0, 2.0}) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(ks_two_sample({0.0, 0.0}, {0.0}) == 0.0);
    CHECK(ks_two_sample({1.0, 2.0}, {5.0, 6.0, 7.0}) == 1.0);

    rng::Stream st = rng::Stream::from_key({0x57A75, 2});
    std::vector<double> x, y;
    for (int i = 0; i < 1500; ++i) x.push_back(st.u01());
    for (int i = 0; i < 1500; ++i) y.push_back(st.u01());
    CHECK(ks_two_sample(x, y) < 0.06);

    CHECK_THROWS_AS(ks_two_sample({}, {1.0}), std::invalid_argument);
}

TEST_CASE("mean and standard error") {
    const MeanSE r = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(r.n == 4);
    CHECK(r.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(r.se == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-13));

    const MeanSE one = mean_se({7.0});
    CHECK(one.mean == 7.0);
    CHECK(one.se == 0.0);
    CHECK(one.n == 1);

    const MeanSE none = mean_se({});
    CHECK(none.n == 0);
    CHECK(none.mean == 0.0);
}

TEST_CASE("log-spaced checkpoints") {
    const std::vector<int64_t> grid = log_checkpoints(1, 1000, 20);
    CHECK(grid.front() == 1);
    CHECK(grid.back() == 1000);
    CHECK(std::is_sorted(grid.begin(), grid.end()));
    CHECK(std::adjacent_find(grid.begin(), grid.end()) == grid.end());
    CHECK(std::find(grid.begin(), grid.end(), 10) != grid.end());
    CHECK(std::find(grid.begin(), grid.end(), 100) != grid.end());
    for (int64_t v : grid) {
        CHECK(v >= 1);
        CHECK(v <= 1000);
    }
    // 20 per decade over three decades, minus rounding collisions near 1
    CHECK(grid.size() >= 50);
    CHECK(grid.size() <= 61);

    CHECK(log_checkpoints(5, 5, 20) == std::vector<int64_t>{5});
    const std::vector<int64_t> coarse = log_checkpoints(1, 100000, 1);
    CHECK(coarse == std::vector<int64_t>({1, 10, 100, 1000, 10000, 100000}));
    const std::vector<int64_t> band = log_checkpoints(5, 8, 20);
    CHECK(band.front() >= 5);
    CHECK(band.back() == 8);

    CHECK_THROWS_AS(log_checkpoints(0, 10, 20), std::invalid_argument);
    CHECK_THROWS_AS(log_checkpoints(10, 5, 20), std::invalid_argument);
    CHECK_THROWS_AS(log_checkpoints(1, 10, 0), std::invalid_argument);
}

TEST_CASE("sampled exponential data passes at the documented size") {
    rng::Stream s = rng::Stream::from_key({2718, 0, 0, 0});
    std::vector<double> x(2000);
    for (double& v : x) v = -std::log1p(-s.u01());
    CHECK(ks_exponential(x) <= 0.05);
}
