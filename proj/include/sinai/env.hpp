#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sinai/rng.hpp"

namespace sinai {

// ---------------- Environment specification ----------------

enum class EnvLaw { TwoPoint, LogUniform };

// Law of the i.i.d. up-probabilities omega_x.
//   TwoPoint:   omega is p_low or 1-p_low with probability 1/2 each.
//   LogUniform: log rho is uniform on [-half_width, half_width],
//               rho = (1-omega)/omega.
// Both laws satisfy E[log rho] = 0 and omega in [epsilon0, 1-epsilon0].
struct EnvSpec {
    EnvLaw law = EnvLaw::TwoPoint;
    double p_low = 0.3;       // TwoPoint only
    double half_width = 0.8;  // LogUniform only
    double epsilon0 = 0.3;
    uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument
    double sigma2() const;  // Var(log rho), positive for valid specs
    double a0() const;      // log((1-epsilon0)/epsilon0), the step bound
};

// JSON round trip; tag identifies one environment among several sharing a seed.
std::string env_spec_to_json(const EnvSpec& spec, uint64_t tag);
std::pair<EnvSpec, uint64_t> env_spec_from_json(const std::string& text);

// ---------------- Environment ----------------

// One realized environment. omega(x) is a pure function of (seed, tag, x);
// the potential V is the prefix sum of log rho anchored at V(0) = 0 exactly,
// cached incrementally in both directions.
class Environment {
  public:
    explicit Environment(EnvSpec spec, uint64_t tag = 0);

    // Degenerate environment with constant up-probability (e.g. 1/2 for a
    // simple random walk). Bypasses EnvSpec validation; not serializable.
    static Environment constant(double omega_value);

    double omega(int64_t x) const;
    double log_rho(int64_t x) const;  // log((1-omega_x)/omega_x) = V(x)-V(x-1)
    double potential(int64_t x) const;

    // V on [lo, hi] inclusive as a dense vector (single lock).
    std::vector<double> potential_range(int64_t lo, int64_t hi) const;

    // Pre-fills the omega window for lock-free hot-loop access.
    // Call before sharing this object across threads.
    void materialize(int64_t lo, int64_t hi) const;

    // mean and population variance of log rho over sites [lo, hi]
    std::pair<double, double> log_rho_moments(int64_t lo, int64_t hi) const;

    const EnvSpec& spec() const { return spec_; }
    uint64_t tag() const { return tag_; }
    bool is_constant() const { return constant_; }

  private:
    struct ConstTag {};
    Environment(ConstTag, double omega_value);
    double omega_raw(int64_t x) const;
    void extend_potential(int64_t x) const;  // caller holds mu_

    EnvSpec spec_;
    uint64_t tag_ = 0;
    bool constant_ = false;
    double const_omega_ = 0.5;

    mutable std::mutex mu_;
    mutable std::vector<double> v_pos_;  // v_pos_[k] = V(k+1)
    mutable std::vector<double> v_neg_;  // v_neg_[k] = V(-(k+1))

    mutable std::vector<double> om_win_;  // materialized omega on [om_lo_, ...]
    mutable int64_t om_lo_ = 0;
};

}  // namespace sinai
