#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sinai/engine.hpp"
#include "sinai/env.hpp"
#include "sinai/landscape.hpp"
#include "sinai/rng.hpp"
#include "sinai/stats.hpp"

namespace sinai {

// Runs body(i) for i in [0, n), split across `workers` threads. Work items
// must not share mutable state; trial-indexed RNG keys keep results
// independent of the schedule.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& body);

// One walker trajectory; a single uniform decides each step.
int64_t simulate_walk(const Environment& env, int64_t start, int64_t steps, rng::Stream& stream);

// ---------------- Product walks ----------------

// d = m + r walkers stepping simultaneously: m symmetric walkers, then r
// walkers in random environments. The first `distinct_envs` of those get
// fresh independent environments; later ones reuse the last environment.
struct ProductConfig {
    int m = 0;
    int r = 0;
    int distinct_envs = 0;        // I, between 1 and r when r > 0
    EnvSpec env;
    std::vector<int64_t> starts;  // size m + r; empty means all zeros
    int64_t steps = 0;
    uint64_t master_seed = 1;

    int walkers() const { return m + r; }
    void validate() const;
};

// Cumulative event counts per trial, sampled on a shared checkpoint grid:
// meets[t][c]   = # times n <= checkpoint c with all walkers at one site,
// returns[t][c] = # times n <= checkpoint c with every walker at its start.
struct MeetingStats {
    std::vector<int64_t> checkpoints;
    std::vector<std::vector<int64_t>> meets;
    std::vector<std::vector<int64_t>> returns;

    MeanSE mean_meets_at(size_t c) const;
    MeanSE mean_returns_at(size_t c) const;
};

MeetingStats simulate_product(const ProductConfig& cfg, int trials, int workers = 1);

// (sum K / n)^2 / (sum K^2 / n) for per-trial counts K; 0 when all counts
// vanish. Values near 1 indicate the counting events keep recurring.
double kochen_stone_ratio(const std::vector<double>& per_trial_counts);

// ---------------- Localization ----------------

struct LocalizationResult {
    int trials = 0;
    int determined = 0;    // trials where the site set could be certified
    int undetermined = 0;
    int in_set = 0;        // walker sat inside the predicted set at time n
    double rate = 0.0;     // in_set / determined
    double mean_set_size = 0.0;
    double mean_walk_abs = 0.0;  // average |Z_n| across determined trials
};

// Fraction of (environment, walk) samples with Z_n inside the deep-valley
// site set of its own environment.
LocalizationResult localization_rate(const EnvSpec& spec, int64_t n, int trials,
                                     const XiParams& params, uint64_t master_seed,
                                     int workers = 1);

// ---------------- Collisions of independent-environment walkers ----------------

// Estimates P[Z_n = Z'_n] for two walkers from the origin in independent
// environments. Environment pairs are sampled; the walk randomness is summed
// out exactly, so each sample contributes sum_x p(x) p'(x).
struct CollisionEstimate {
    MeanSE stat;
    double max_window_error = 0.0;
};

CollisionEstimate collision_prob_indep(const EnvSpec& spec, int64_t n, int env_pairs,
                                       uint64_t master_seed, double tol, int workers = 1);

// Normalized meeting average for r walkers sharing one environment, all from
// the origin: at checkpoint n the curve holds
//   (1/log n) * sum_{m<=n} (1/m) * sum_x P[Z_m = x]^r,
// the walk randomness integrated out exactly in one absorbing-window sweep.
// With r = 1 the inner sum is the surviving mass, so the curve tracks
// H_n/log n. Requires N >= 2 so the normalization is meaningful.
SeriesCurve same_env_meeting_sum(const Environment& env, int64_t N, int r, double tol,
                                 int64_t max_width = int64_t{1} << 20);

// Same functional with one walker per entry of `starts`, all sharing the
// environment: the checkpoint value is
//   (1/log n) * sum_{m<=n} (1/m) * sum_x prod_j P[Z_m = x | Z_0 = starts[j]].
// Starts must share parity: walkers on opposite parities never co-locate, so
// the sum would be identically zero by parity alone.
SeriesCurve same_env_meeting_sum(const Environment& env, int64_t N,
                                 const std::vector<int64_t>& starts, double tol,
                                 int64_t max_width = int64_t{1} << 20);

// ---------------- Valley coupling ----------------

// One run of the two-chain experiment on a prepared environment: the free
// walker Z from 0, and the reflected-window walker from the stationary law
// of the two-step chain. The chains move independently until they share a
// site inside the window, then consume one uniform per step jointly until Z
// leaves the window; afterwards they are independent again. Locking never
// changes either marginal.
struct CouplingRun {
    int64_t horizon = 0;
    bool approach_resolved = false;  // Z reached b_hat or x_hat0 within the horizon
    bool d1 = false;                 // reached b_hat first
    bool d2 = false;                 // ... within floor(N^(1 - eps1)) steps
    bool d3 = false;                 // then stayed strictly inside the window for N steps
    int64_t tau_approach = -1;
    int64_t tau_bhat = -1;
    bool met = false;
    int64_t meet_time = -1;
    bool unlocked = false;
    int64_t unlock_time = -1;
    int64_t tau_wall = -1;  // first exit of Z from (L_minus, L_plus) after tau_bhat
    int64_t z_end = 0;
    int64_t zhat_end = 0;
};

CouplingRun run_coupling(const Environment& env, const GoodEnvReport& landmarks, int64_t N,
                         int64_t horizon, uint64_t master_seed, uint64_t trial);

}  // namespace sinai
