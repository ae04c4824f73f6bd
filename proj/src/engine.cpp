#include "sinai/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "sinai/stats.hpp"

namespace sinai {

// ---------------- WindowChain ----------------

WindowChain::WindowChain(const Environment& env, int64_t a, int64_t b, Boundary mode)
    : a_(a), b_(b), mode_(mode) {
    if (b - a < 2) throw std::invalid_argument("WindowChain: need b - a >= 2");
    const size_t w = static_cast<size_t>(b - a);
    om_.resize(w + 1);
    for (size_t i = 0; i <= w; ++i) om_[i] = env.omega(a + static_cast<int64_t>(i));
    up_ = om_;
    if (mode == Boundary::Reflecting) {
        up_.front() = 1.0;
        up_.back() = 0.0;
    }
    dn_.resize(w + 1);
    for (size_t i = 0; i <= w; ++i) dn_[i] = 1.0 - up_[i];
    vpot_ = env.potential_range(a, b);
}

double WindowChain::mu_hat(int64_t x) const {
    const size_t i = static_cast<size_t>(x - a_);
    if (x == a_) return std::exp(-vpot_[0]);
    if (x == b_) return std::exp(-vpot_[i - 1]);
    return std::exp(-vpot_[i]) + std::exp(-vpot_[i - 1]);
}

// ---------------- DistVector ----------------

DistVector DistVector::point(const WindowChain& chain, int64_t site) {
    if (chain.mode() == Boundary::Absorbing) {
        if (site <= chain.a() || site >= chain.b())
            throw std::invalid_argument("DistVector::point: start on an absorbing boundary");
    } else if (site < chain.a() || site > chain.b()) {
        throw std::invalid_argument("DistVector::point: start outside window");
    }
    DistVector d;
    d.a = chain.a();
    d.b = chain.b();
    d.mass.assign(static_cast<size_t>(chain.width()) + 1, 0.0);
    d.lo_idx = d.hi_idx = site - chain.a();
    d.mass[static_cast<size_t>(d.lo_idx)] = 1.0;
    d.parity = static_cast<int>(((site % 2) + 2) % 2);
    return d;
}

double DistVector::in_window() const {
    double s = 0.0;
    for (int64_t i = lo_idx; i <= hi_idx; ++i) s += mass[static_cast<size_t>(i)];
    return s;
}

// One buffer per parity; active ranges only grow, and every write pass also
// zeroes the cell just outside each end, so any stale cell a read can touch
// is still at its initial zero.
void evolve(const WindowChain& chain, DistVector& d, int64_t steps) {
    if (d.a != chain.a() || d.b != chain.b())
        throw std::invalid_argument("evolve: distribution window mismatch");
    const int64_t W = chain.width();
    const double* up = chain.up_.data();
    const double* dn = chain.dn_.data();
    std::vector<double> other(d.mass.size(), 0.0);
    double* cur = d.mass.data();
    double* nxt = other.data();
    int64_t lo = d.lo_idx, hi = d.hi_idx;
    const bool absorbing = chain.mode() == Boundary::Absorbing;

    for (int64_t s = 0; s < steps; ++s) {
        int64_t nlo, nhi;
        if (absorbing) {
            d.leaked_lo += dn[1] * cur[1];
            d.leaked_hi += up[W - 1] * cur[W - 1];
            nlo = std::max<int64_t>(1, lo - 1);
            nhi = std::min<int64_t>(W - 1, hi + 1);
            for (int64_t x = nlo; x <= nhi; ++x)
                nxt[x] = up[x - 1] * cur[x - 1] + dn[x + 1] * cur[x + 1];
        } else {
            nlo = std::max<int64_t>(0, lo - 1);
            nhi = std::min<int64_t>(W, hi + 1);
            const int64_t ilo = std::max<int64_t>(1, nlo);
            const int64_t ihi = std::min<int64_t>(W - 1, nhi);
            for (int64_t x = ilo; x <= ihi; ++x)
                nxt[x] = up[x - 1] * cur[x - 1] + dn[x + 1] * cur[x + 1];
            if (nlo == 0) nxt[0] = dn[1] * cur[1];
            if (nhi == W) nxt[W] = up[W - 1] * cur[W - 1];
        }
        if (nlo > 0) nxt[nlo - 1] = 0.0;
        if (nhi < W) nxt[nhi + 1] = 0.0;
        std::swap(cur, nxt);
        lo = nlo;
        hi = nhi;
    }

    if (cur != d.mass.data()) d.mass.swap(other);
    d.lo_idx = lo;
    d.hi_idx = hi;
    d.time += steps;
    if (steps % 2 != 0) d.parity ^= 1;
}

// ---------------- Window policy ----------------

DistVector distribution_at(const Environment& env, int64_t start, int64_t n, double tol,
                           int64_t max_width) {
    if (n < 0) throw std::invalid_argument("distribution_at: negative time");
    if (tol <= 0) throw std::invalid_argument("distribution_at: tol must be positive");
    const double ln = std::log(std::max<double>(2.0, static_cast<double>(n)));
    int64_t hw = static_cast<int64_t>(2.0 * ln * ln) + 8;  // half of the initial width
    hw = std::min(hw, n + 1);
    if (n == 0) hw = 1;
    for (;;) {
        if (2 * hw + 1 > max_width)
            throw WindowCapExceeded("distribution window exceeds the site cap");
        WindowChain chain(env, start - hw, start + hw, Boundary::Absorbing);
        DistVector d = DistVector::point(chain, start);
        evolve(chain, d, n);
        if (d.leaked() <= tol || hw >= n + 1) {
            assert(hw < n + 1 || d.leaked() == 0.0);
            return d;
        }
        hw = std::min(2 * hw, n + 1);
    }
}

ValueWithError point_prob(const Environment& env, int64_t start, int64_t n, int64_t site,
                          double tol, int64_t max_width) {
    if (n < 0) throw std::invalid_argument("point_prob: negative time");
    if (n == 0) return {site == start ? 1.0 : 0.0, 0.0};
    const int64_t dist = std::llabs(site - start);
    if (dist > n || ((site - start + n) % 2 != 0)) return {0.0, 0.0};
    DistVector d = distribution_at(env, start, n, tol, max_width);
    return {d.at(site), d.leaked()};
}

// ---------------- Hitting identities ----------------

double hitting_prob(const Environment& env, int64_t a, int64_t b, int64_t c) {
    if (!(a < b && b < c)) throw std::invalid_argument("hitting_prob: need a < b < c");
    const std::vector<double> v = env.potential_range(a, c - 1);
    const double m = *std::max_element(v.begin(), v.end());
    double num = 0.0, den = 0.0;
    for (int64_t j = a; j <= c - 1; ++j) {
        const double t = std::exp(v[static_cast<size_t>(j - a)] - m);
        den += t;
        if (j < b) num += t;
    }
    return num / den;
}

double hitting_prob_oracle(const Environment& env, int64_t a, int64_t b, int64_t c) {
    if (!(a < b && b < c)) throw std::invalid_argument("hitting_prob_oracle: need a < b < c");
    const int64_t n = c - a - 1;
    std::vector<double> diag(static_cast<size_t>(n), 1.0);
    std::vector<double> sub(static_cast<size_t>(n)), sup(static_cast<size_t>(n));
    std::vector<double> rhs(static_cast<size_t>(n), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        const double w = env.omega(a + 1 + i);
        sub[static_cast<size_t>(i)] = -(1.0 - w);
        sup[static_cast<size_t>(i)] = -w;
    }
    rhs[static_cast<size_t>(n - 1)] = env.omega(c - 1);
    for (int64_t i = 1; i < n; ++i) {
        const size_t k = static_cast<size_t>(i);
        const double f = sub[k] / diag[k - 1];
        diag[k] -= f * sup[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    std::vector<double> u(static_cast<size_t>(n));
    u[static_cast<size_t>(n - 1)] = rhs[static_cast<size_t>(n - 1)] / diag[static_cast<size_t>(n - 1)];
    for (int64_t i = n - 2; i >= 0; --i) {
        const size_t k = static_cast<size_t>(i);
        u[k] = (rhs[k] - sup[k] * u[k + 1]) / diag[k];
    }
    return u[static_cast<size_t>(b - a - 1)];
}

double expected_exit(const Environment& env, int64_t a, int64_t b, int64_t c) {
    if (!(a < b && b < c)) throw std::invalid_argument("expected_exit: need a < b < c");
    const int64_t n = c - a - 1;
    std::vector<double> diag(static_cast<size_t>(n), 1.0);
    std::vector<double> sub(static_cast<size_t>(n)), sup(static_cast<size_t>(n));
    std::vector<double> rhs(static_cast<size_t>(n), 1.0);
    for (int64_t i = 0; i < n; ++i) {
        const double w = env.omega(a + 1 + i);
        sub[static_cast<size_t>(i)] = -(1.0 - w);
        sup[static_cast<size_t>(i)] = -w;
    }
    for (int64_t i = 1; i < n; ++i) {
        const size_t k = static_cast<size_t>(i);
        const double f = sub[k] / diag[k - 1];
        diag[k] -= f * sup[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    std::vector<double> m(static_cast<size_t>(n));
    m[static_cast<size_t>(n - 1)] = rhs[static_cast<size_t>(n - 1)] / diag[static_cast<size_t>(n - 1)];
    for (int64_t i = n - 2; i >= 0; --i) {
        const size_t k = static_cast<size_t>(i);
        m[k] = (rhs[k] - sup[k] * m[k + 1]) / diag[k];
    }
    return m[static_cast<size_t>(b - a - 1)];
}

// ---------------- First-passage tails ----------------

namespace {

// Absorbed-at-target mass after running `steps` steps from `start` in a
// window whose far side sits `wall_dist` sites away from start, opposite the
// target. Returns {absorbed at target, absorbed at wall}.
std::pair<double, double> absorb_run(const Environment& env, int64_t start, int64_t target,
                                     int64_t wall_dist, int64_t steps) {
    int64_t a, b;
    bool target_high;
    if (target > start) {
        a = start - wall_dist;
        b = target;
        target_high = true;
    } else {
        a = target;
        b = start + wall_dist;
        target_high = false;
    }
    WindowChain chain(env, a, b, Boundary::Absorbing);
    DistVector d = DistVector::point(chain, start);
    evolve(chain, d, steps);
    return target_high ? std::make_pair(d.leaked_hi, d.leaked_lo)
                       : std::make_pair(d.leaked_lo, d.leaked_hi);
}

}  // namespace

ValueWithError hitting_tail(const Environment& env, int64_t start, int64_t target, int64_t k,
                            int64_t max_width) {
    if (target == start) throw std::invalid_argument("hitting_tail: target equals start");
    const int64_t dist = std::llabs(target - start);
    if (k <= dist) return {0.0, 0.0};  // k - 1 steps cannot cover the distance
    const int64_t exact_wall = k;  // unreachable within k - 1 steps
    if (dist + exact_wall + 1 <= max_width) {
        auto [hit, wall] = absorb_run(env, start, target, exact_wall, k - 1);
        assert(wall == 0.0);
        (void)wall;
        return {hit, 0.0};
    }
    const int64_t soft_wall = 4 * std::max<int64_t>(8, dist);
    if (dist + soft_wall + 1 > max_width)
        throw WindowCapExceeded("hitting_tail window exceeds the site cap");
    auto [hit, wall] = absorb_run(env, start, target, soft_wall, k - 1);
    return {hit, wall};
}

bool first_visit_bound_check(const Environment& env, int64_t a, int64_t b, int64_t k) {
    if (a == b) throw std::invalid_argument("first_visit_bound_check: a equals b");
    if (k < 1) throw std::invalid_argument("first_visit_bound_check: need k >= 1");

    // Right side: escape-before-return probability in closed form.
    double rhs;
    if (a < b) {
        const std::vector<double> v = env.potential_range(a, b - 1);
        const double m = *std::max_element(v.begin(), v.end());
        double den = 0.0;
        for (double x : v) den += std::exp(x - m);
        rhs = (1.0 - env.omega(b)) * std::exp(v.back() - m) / den;
    } else {
        const std::vector<double> v = env.potential_range(b, a - 1);
        const double m = *std::max_element(v.begin(), v.end());
        double den = 0.0;
        for (double x : v) den += std::exp(x - m);
        rhs = env.omega(b) * std::exp(v.front() - m) / den;
    }

    // Left side: exact probability that the first visit lands at step k.
    const int64_t dist = std::llabs(a - b);
    double lhs = 0.0;
    if (k >= dist && (k - dist) % 2 == 0) {
        auto [hit_before, wall0] = absorb_run(env, b, a, k + 1, k - 1);
        auto [hit_at, wall1] = absorb_run(env, b, a, k + 1, k);
        assert(wall0 == 0.0 && wall1 == 0.0);
        (void)wall0;
        (void)wall1;
        lhs = hit_at - hit_before;
    }
    return lhs <= rhs + 1e-13;
}

// ---------------- Reversible weights ----------------

double mu_weight(const Environment& env, int64_t x) {
    return std::exp(-env.potential(x)) + std::exp(-env.potential(x - 1));
}

std::vector<double> mu_hat_window(const Environment& env, int64_t x0, int64_t x2) {
    if (x2 - x0 < 2) throw std::invalid_argument("mu_hat_window: need x2 - x0 >= 2");
    const std::vector<double> v = env.potential_range(x0, x2 - 1);
    const double s = *std::min_element(v.begin(), v.end());
    std::vector<double> w(static_cast<size_t>(x2 - x0) + 1);
    w.front() = std::exp(-(v.front() - s));
    w.back() = std::exp(-(v.back() - s));
    for (int64_t x = x0 + 1; x < x2; ++x) {
        const size_t i = static_cast<size_t>(x - x0);
        w[i] = std::exp(-(v[i] - s)) + std::exp(-(v[i - 1] - s));
    }
    return w;
}

std::vector<double> reflected_nu(const Environment& env, int64_t x0, int64_t x2) {
    if (x0 % 2 != 0 || x2 % 2 != 0)
        throw std::invalid_argument("reflected_nu: endpoints must be even");
    const std::vector<double> w = mu_hat_window(env, x0, x2);
    std::vector<double> nu;
    nu.reserve(w.size() / 2 + 1);
    double total = 0.0;
    for (size_t i = 0; i < w.size(); i += 2) {
        nu.push_back(w[i]);
        total += w[i];
    }
    for (double& x : nu) x /= total;
    return nu;
}

// ---------------- Return-probability series ----------------

namespace {

// Smallest i > 0 with V(start + dir*i) - min over the nearer sites >= rise.
// 0 when not found within max_scan.
int64_t barrier_site(const Environment& env, int64_t start, int dir, double rise,
                     int64_t max_scan) {
    double run_min = env.potential(start);
    for (int64_t i = 1; i <= max_scan; ++i) {
        const double v = env.potential(start + dir * i);
        if (v - run_min >= rise) return i;
        run_min = std::min(run_min, v);
    }
    return 0;
}

}  // namespace

std::pair<int64_t, int64_t> barrier_halfwidths(const Environment& env, int64_t start, int64_t N,
                                               double tol, int64_t max_scan) {
    const double rise = std::log(8.0 * static_cast<double>(N) / tol);
    int64_t hw_r = barrier_site(env, start, +1, rise, max_scan);
    int64_t hw_l = barrier_site(env, start, -1, rise, max_scan);
    if (hw_r == 0) hw_r = std::min(N + 1, max_scan);
    if (hw_l == 0) hw_l = std::min(N + 1, max_scan);
    hw_r = std::min(hw_r + 2, N + 1);
    hw_l = std::min(hw_l + 2, N + 1);
    return {hw_l, hw_r};
}

std::vector<SeriesCurve> return_prob_series_multi(const Environment& env, int64_t N,
                                                  const std::vector<double>& thetas, double tol,
                                                  int64_t max_width) {
    if (N < 1) throw std::invalid_argument("return_prob_series: need N >= 1");
    if (thetas.empty()) throw std::invalid_argument("return_prob_series: no exponents");
    for (double theta : thetas)
        if (theta < 0.0 || theta > 1.0)
            throw std::invalid_argument("return_prob_series: theta outside [0, 1]");
    if (tol <= 0) throw std::invalid_argument("return_prob_series: tol must be positive");

    auto [hw_l, hw_r] = barrier_halfwidths(env, 0, N, tol, max_width / 2);
    const std::vector<int64_t> grid = log_checkpoints(1, N, 20);
    const size_t nt = thetas.size();

    for (;;) {
        if (hw_l + hw_r + 1 > max_width)
            throw WindowCapExceeded("return_prob_series window exceeds the site cap");
        WindowChain chain(env, -hw_l, hw_r, Boundary::Absorbing);
        DistVector d = DistVector::point(chain, 0);
        std::vector<SeriesCurve> curves(nt);
        for (auto& c : curves) {
            c.n.reserve(grid.size());
            c.partial_sum.reserve(grid.size());
        }
        std::vector<double> partial(nt, 0.0), weight_sum(nt, 0.0);
        size_t g = 0;
        for (int64_t n = 1; n <= N; ++n) {
            evolve(chain, d, 1);
            if (n % 2 == 0) {
                const double p = d.at(0);
                for (size_t i = 0; i < nt; ++i) {
                    const double w = std::pow(static_cast<double>(n), -thetas[i]);
                    partial[i] += p * w;
                    weight_sum[i] += w;
                }
            }
            while (g < grid.size() && grid[g] == n) {
                for (size_t i = 0; i < nt; ++i) {
                    curves[i].n.push_back(n);
                    curves[i].partial_sum.push_back(partial[i]);
                }
                ++g;
            }
        }
        if (d.leaked() <= tol || (hw_l >= N + 1 && hw_r >= N + 1)) {
            for (size_t i = 0; i < nt; ++i) curves[i].error_bound = d.leaked() * weight_sum[i];
            return curves;
        }
        hw_l = std::min(2 * hw_l, N + 1);
        hw_r = std::min(2 * hw_r, N + 1);
    }
}

SeriesCurve return_prob_series(const Environment& env, int64_t N, double theta, double tol,
                               int64_t max_width) {
    return return_prob_series_multi(env, N, {theta}, tol, max_width).front();
}

ValueWithError point_prob_floor(const Environment& env, int64_t site, int64_t n_lo, int64_t n_hi,
                                double tol, int64_t max_width) {
    if (n_lo < 1 || n_hi < n_lo) throw std::invalid_argument("point_prob_floor: bad time range");
    if (tol <= 0) throw std::invalid_argument("point_prob_floor: tol must be positive");
    int64_t first_even = n_lo + (n_lo % 2 != 0 ? 1 : 0);
    if (first_even > n_hi) throw std::invalid_argument("point_prob_floor: no even time in range");

    auto [hw_l, hw_r] = barrier_halfwidths(env, 0, n_hi, tol, max_width / 2);
    hw_l = std::max(hw_l, -site + 2);
    hw_r = std::max(hw_r, site + 2);

    for (;;) {
        if (hw_l + hw_r + 1 > max_width)
            throw WindowCapExceeded("point_prob_floor window exceeds the site cap");
        WindowChain chain(env, -hw_l, hw_r, Boundary::Absorbing);
        DistVector d = DistVector::point(chain, 0);
        double floor_val = -1.0;
        for (int64_t n = 1; n <= n_hi; ++n) {
            evolve(chain, d, 1);
            if (n >= n_lo && n % 2 == 0) {
                const double p = d.at(site);
                if (floor_val < 0.0 || p < floor_val) floor_val = p;
            }
        }
        if (d.leaked() <= tol || (hw_l >= n_hi + 1 && hw_r >= n_hi + 1))
            return {floor_val, d.leaked()};
        hw_l = std::min(2 * hw_l, n_hi + 1);
        hw_r = std::min(2 * hw_r, n_hi + 1);
    }
}

}  // namespace sinai
