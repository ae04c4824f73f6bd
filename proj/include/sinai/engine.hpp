#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sinai/env.hpp"

namespace sinai {

class WindowCapExceeded : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------- Finite-window chains ----------------

enum class Boundary { Absorbing, Reflecting };

// Nearest-neighbor chain restricted to [a, b]. Absorbing: the endpoints are
// sinks and arriving mass leaks out of the window. Reflecting: the endpoint
// steps are forced inward (up-probability 1 at a, 0 at b).
class WindowChain {
  public:
    WindowChain(const Environment& env, int64_t a, int64_t b, Boundary mode);

    int64_t a() const { return a_; }
    int64_t b() const { return b_; }
    int64_t width() const { return b_ - a_; }
    Boundary mode() const { return mode_; }

    double up(int64_t x) const { return up_[x - a_]; }       // boundary conventions applied
    double down(int64_t x) const { return dn_[x - a_]; }
    double omega(int64_t x) const { return om_[x - a_]; }    // raw environment value

    // Reversible weight exp(-V(x)) + exp(-V(x-1)), with the one-sided
    // endpoint conventions of the reflecting chain.
    double mu_hat(int64_t x) const;

    const std::vector<double>& potential() const { return vpot_; }  // V on [a, b]

  private:
    friend void evolve(const WindowChain&, struct DistVector&, int64_t);

    int64_t a_, b_;
    Boundary mode_;
    std::vector<double> up_, dn_, om_, vpot_;
};

// Probability mass over a window, with leak accounting and parity tracking.
struct DistVector {
    int64_t a = 0, b = 0;
    std::vector<double> mass;  // mass[x - a]
    double leaked_lo = 0.0, leaked_hi = 0.0;
    int64_t time = 0;
    int parity = 0;  // occupied sites x satisfy (x & 1) == parity
    int64_t lo_idx = 0, hi_idx = 0;  // active (possibly nonzero) index range

    static DistVector point(const WindowChain& chain, int64_t site);

    double at(int64_t x) const {
        return (x >= a && x <= b) ? mass[static_cast<size_t>(x - a)] : 0.0;
    }
    double in_window() const;
    double leaked() const { return leaked_lo + leaked_hi; }
};

void evolve(const WindowChain& chain, DistVector& d, int64_t steps);

// ---------------- Exact functionals ----------------

struct ValueWithError {
    double value = 0.0;
    double error = 0.0;  // bound on the absolute error (window leakage)
};

// P[Z_n = site | Z_0 = start], by absorbing-window evolution. The window is
// widened geometrically until the leaked mass is at most tol; throws
// WindowCapExceeded past max_width sites.
ValueWithError point_prob(const Environment& env, int64_t start, int64_t n, int64_t site,
                          double tol, int64_t max_width = int64_t{1} << 20);

// Full distribution at time n under the same window policy.
DistVector distribution_at(const Environment& env, int64_t start, int64_t n, double tol,
                           int64_t max_width = int64_t{1} << 20);

// P[hit c before a | start b], a < b < c: ratio of exp(V) partial sums,
// evaluated with max-subtraction.
double hitting_prob(const Environment& env, int64_t a, int64_t b, int64_t c);

// Same quantity from the linear system u(x) = w_x u(x+1) + (1-w_x) u(x-1),
// u(a) = 0, u(c) = 1, solved by tridiagonal elimination.
double hitting_prob_oracle(const Environment& env, int64_t a, int64_t b, int64_t c);

// E[exit time of (a, c) | start b] from the system
// m(x) = 1 + w_x m(x+1) + (1-w_x) m(x-1), m(a) = m(c) = 0.
double expected_exit(const Environment& env, int64_t a, int64_t b, int64_t c);

// P[tau(target) < k | start], tau being the first visit time (>= 1).
// Exact when the speed-limit window fits; otherwise a soft absorbing wall is
// placed 4 window-widths away from start and its leakage enters the error.
ValueWithError hitting_tail(const Environment& env, int64_t start, int64_t target, int64_t k,
                            int64_t max_width = int64_t{1} << 20);

// exp(-V(x)) + exp(-V(x-1)), the reversible weight of the free chain.
double mu_weight(const Environment& env, int64_t x);

// Stationary law of the two-step reflecting chain on [x0, x2], supported on
// even sites. Requires even endpoints; entry k corresponds to site x0 + 2k.
std::vector<double> reflected_nu(const Environment& env, int64_t x0, int64_t x2);

// mu_hat weights on every site of [x0, x2] (endpoint conventions applied),
// rescaled by exp(min V) for stability; any endpoint parity.
std::vector<double> mu_hat_window(const Environment& env, int64_t x0, int64_t x2);

// Half-widths (left, right) of an absorbing window around `start` whose
// leakage over N steps stays below tol, found by scanning the potential for
// the first barrier of height log(8 N / tol) on each side. A side without
// such a barrier within max_scan falls back to min(N + 1, max_scan).
std::pair<int64_t, int64_t> barrier_halfwidths(const Environment& env, int64_t start, int64_t N,
                                               double tol, int64_t max_scan);

// Partial sums of P[Z_n = 0 | Z_0 = 0] / n^theta up to N, reported on a
// log-spaced checkpoint grid (20 per decade, plus N itself).
struct SeriesCurve {
    std::vector<int64_t> n;
    std::vector<double> partial_sum;
    double error_bound = 0.0;
};

SeriesCurve return_prob_series(const Environment& env, int64_t N, double theta, double tol,
                               int64_t max_width = int64_t{1} << 20);

// Same sweep evaluated for several exponents at once (one curve per theta).
std::vector<SeriesCurve> return_prob_series_multi(const Environment& env, int64_t N,
                                                  const std::vector<double>& thetas, double tol,
                                                  int64_t max_width = int64_t{1} << 20);

// Minimum over even n in [n_lo, n_hi] of P[Z_n = site | Z_0 = 0], computed in
// a single absorbing sweep. error is the window leakage at time n_hi.
ValueWithError point_prob_floor(const Environment& env, int64_t site, int64_t n_lo, int64_t n_hi,
                                double tol, int64_t max_width = int64_t{1} << 20);

// Checks P[tau(a) = k | start b] <= P[tau(a) < tau(b) | start b] exactly
// (first-visit probability never beats the escape-before-return probability).
bool first_visit_bound_check(const Environment& env, int64_t a, int64_t b, int64_t k);

}  // namespace sinai
