#include "sinai/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace sinai {

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto drain = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed)) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int k = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), n));
    pool.reserve(static_cast<size_t>(k));
    for (int w = 0; w < k; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int64_t simulate_walk(const Environment& env, int64_t start, int64_t steps,
                      rng::Stream& stream) {
    int64_t pos = start;
    for (int64_t k = 0; k < steps; ++k) pos += (stream.u01() < env.omega(pos)) ? 1 : -1;
    return pos;
}

// ---------------- Product walks ----------------

void ProductConfig::validate() const {
    if (m < 0 || r < 0 || m + r < 1) throw std::invalid_argument("ProductConfig: need m + r >= 1");
    if (r > 0) {
        if (distinct_envs < 1 || distinct_envs > r)
            throw std::invalid_argument("ProductConfig: need 1 <= distinct_envs <= r");
        env.validate();
    } else if (distinct_envs != 0) {
        throw std::invalid_argument("ProductConfig: distinct_envs without environment walkers");
    }
    if (!starts.empty() && starts.size() != static_cast<size_t>(m + r))
        throw std::invalid_argument("ProductConfig: starts size mismatch");
    if (steps < 1) throw std::invalid_argument("ProductConfig: need steps >= 1");
}

MeanSE MeetingStats::mean_meets_at(size_t c) const {
    std::vector<double> col(meets.size());
    for (size_t t = 0; t < meets.size(); ++t) col[t] = static_cast<double>(meets[t][c]);
    return mean_se(col);
}

MeanSE MeetingStats::mean_returns_at(size_t c) const {
    std::vector<double> col(returns.size());
    for (size_t t = 0; t < returns.size(); ++t) col[t] = static_cast<double>(returns[t][c]);
    return mean_se(col);
}

MeetingStats simulate_product(const ProductConfig& cfg, int trials, int workers) {
    cfg.validate();
    if (trials < 1) throw std::invalid_argument("simulate_product: need trials >= 1");
    const int d = cfg.walkers();
    MeetingStats stats;
    stats.checkpoints = log_checkpoints(1, cfg.steps, 20);
    const size_t nc = stats.checkpoints.size();
    stats.meets.assign(static_cast<size_t>(trials), std::vector<int64_t>(nc, 0));
    stats.returns.assign(static_cast<size_t>(trials), std::vector<int64_t>(nc, 0));

    const double ln = std::log(static_cast<double>(cfg.steps) + 2.0);
    const int64_t mat_hw = std::max<int64_t>(1024, static_cast<int64_t>(8.0 * ln * ln));

    parallel_for(static_cast<size_t>(trials), workers, [&](size_t t) {
        std::vector<std::unique_ptr<Environment>> envs;
        envs.reserve(static_cast<size_t>(cfg.distinct_envs));
        for (int i = 0; i < cfg.distinct_envs; ++i) {
            EnvSpec es = cfg.env;
            es.seed = rng::mix({cfg.master_seed, t, rng::kEnvSalt, static_cast<uint64_t>(i)});
            envs.push_back(std::make_unique<Environment>(es, static_cast<uint64_t>(i)));
            envs.back()->materialize(-mat_hw, mat_hw);
        }
        std::vector<rng::Stream> rngs;
        rngs.reserve(static_cast<size_t>(d));
        for (int j = 0; j < d; ++j)
            rngs.push_back(rng::Stream::from_key({cfg.master_seed, t, rng::kWalkerSalt,
                                             static_cast<uint64_t>(j)}));
        const Environment* env_of[16] = {};
        std::vector<const Environment*> env_of_v;
        const Environment** eo = env_of;
        if (d > 16) {
            env_of_v.assign(static_cast<size_t>(d), nullptr);
            eo = env_of_v.data();
        }
        for (int j = 0; j < d; ++j)
            eo[j] = (j < cfg.m) ? nullptr
                                : envs[static_cast<size_t>(std::min(j - cfg.m,
                                                                    cfg.distinct_envs - 1))].get();
        std::vector<int64_t> pos =
            cfg.starts.empty() ? std::vector<int64_t>(static_cast<size_t>(d), 0) : cfg.starts;
        const std::vector<int64_t> start = pos;

        int64_t meet_cum = 0, return_cum = 0;
        size_t g = 0;
        for (int64_t n = 1; n <= cfg.steps; ++n) {
            for (int j = 0; j < d; ++j) {
                const double u = rngs[static_cast<size_t>(j)].u01();
                const double w = eo[j] ? eo[j]->omega(pos[static_cast<size_t>(j)]) : 0.5;
                pos[static_cast<size_t>(j)] += (u < w) ? 1 : -1;
            }
            bool meet = true, back = true;
            for (int j = 0; j < d; ++j) {
                meet = meet && pos[static_cast<size_t>(j)] == pos[0];
                back = back && pos[static_cast<size_t>(j)] == start[static_cast<size_t>(j)];
            }
            meet_cum += meet ? 1 : 0;
            return_cum += back ? 1 : 0;
            while (g < nc && stats.checkpoints[g] == n) {
                stats.meets[t][g] = meet_cum;
                stats.returns[t][g] = return_cum;
                ++g;
            }
        }
    });
    return stats;
}

double kochen_stone_ratio(const std::vector<double>& per_trial_counts) {
    if (per_trial_counts.empty()) throw std::invalid_argument("kochen_stone_ratio: empty input");
    double s1 = 0.0, s2 = 0.0;
    for (double k : per_trial_counts) {
        s1 += k;
        s2 += k * k;
    }
    const double n = static_cast<double>(per_trial_counts.size());
    if (s2 <= 0.0) return 0.0;
    return (s1 / n) * (s1 / n) / (s2 / n);
}

// ---------------- Localization ----------------

LocalizationResult localization_rate(const EnvSpec& spec, int64_t n, int trials,
                                     const XiParams& params, uint64_t master_seed, int workers) {
    if (trials < 1) throw std::invalid_argument("localization_rate: need trials >= 1");
    LocalizationResult res;
    res.trials = trials;
    std::vector<int8_t> outcome(static_cast<size_t>(trials), 0);  // -1 undet, 0 out, 1 in
    std::vector<double> set_size(static_cast<size_t>(trials), 0.0);
    std::vector<double> walk_abs(static_cast<size_t>(trials), 0.0);

    const double ln = std::log(static_cast<double>(n) + 2.0);
    const int64_t mat_hw = std::max<int64_t>(1024, static_cast<int64_t>(8.0 * ln * ln));

    parallel_for(static_cast<size_t>(trials), workers, [&](size_t t) {
        EnvSpec es = spec;
        es.seed = rng::mix({master_seed, t, rng::kEnvSalt, 0});
        Environment env(es, 0);
        env.materialize(-mat_hw, mat_hw);
        rng::Stream walk_rng = rng::Stream::from_key({master_seed, t, rng::kWalkerSalt, 0});
        const int64_t z = simulate_walk(env, 0, n, walk_rng);
        try {
            const XiSet xi = xi_set(env, n, params);
            outcome[t] = xi.contains(z) ? 1 : 0;
            set_size[t] = static_cast<double>(xi.sites.size());
            walk_abs[t] = static_cast<double>(std::llabs(z));
        } catch (const LandscapeUndetermined&) {
            outcome[t] = -1;
        }
    });

    double size_sum = 0.0, abs_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        if (outcome[static_cast<size_t>(t)] < 0) {
            ++res.undetermined;
            continue;
        }
        ++res.determined;
        res.in_set += outcome[static_cast<size_t>(t)] == 1 ? 1 : 0;
        size_sum += set_size[static_cast<size_t>(t)];
        abs_sum += walk_abs[static_cast<size_t>(t)];
    }
    if (res.determined > 0) {
        res.rate = static_cast<double>(res.in_set) / static_cast<double>(res.determined);
        res.mean_set_size = size_sum / static_cast<double>(res.determined);
        res.mean_walk_abs = abs_sum / static_cast<double>(res.determined);
    }
    return res;
}

// ---------------- Collisions across independent environments ----------------

CollisionEstimate collision_prob_indep(const EnvSpec& spec, int64_t n, int env_pairs,
                                       uint64_t master_seed, double tol, int workers) {
    if (env_pairs < 2) throw std::invalid_argument("collision_prob_indep: need env_pairs >= 2");
    if (n < 0) throw std::invalid_argument("collision_prob_indep: negative time");
    std::vector<double> overlap(static_cast<size_t>(env_pairs), 0.0);
    std::vector<double> errs(static_cast<size_t>(env_pairs), 0.0);

    parallel_for(static_cast<size_t>(env_pairs), workers, [&](size_t t) {
        Environment* pair[2] = {nullptr, nullptr};
        std::unique_ptr<Environment> hold[2];
        for (uint64_t i = 0; i < 2; ++i) {
            EnvSpec es = spec;
            es.seed = rng::mix({master_seed, t, rng::kEnvSalt, i});
            hold[i] = std::make_unique<Environment>(es, i);
            pair[i] = hold[i].get();
        }
        const DistVector d0 = distribution_at(*pair[0], 0, n, tol);
        const DistVector d1 = distribution_at(*pair[1], 0, n, tol);
        const int64_t lo = std::max(d0.a + d0.lo_idx, d1.a + d1.lo_idx);
        const int64_t hi = std::min(d0.a + d0.hi_idx, d1.a + d1.hi_idx);
        double s = 0.0;
        for (int64_t x = lo; x <= hi; ++x) s += d0.at(x) * d1.at(x);
        overlap[t] = s;
        errs[t] = d0.leaked() + d1.leaked();
    });

    CollisionEstimate est;
    est.stat = mean_se(overlap);
    for (double e : errs) est.max_window_error = std::max(est.max_window_error, e);
    return est;
}

SeriesCurve same_env_meeting_sum(const Environment& env, int64_t N, int r, double tol,
                                 int64_t max_width) {
    if (N < 2) throw std::invalid_argument("same_env_meeting_sum: need N >= 2");
    if (r < 1) throw std::invalid_argument("same_env_meeting_sum: need r >= 1");
    if (tol <= 0) throw std::invalid_argument("same_env_meeting_sum: tol must be positive");

    auto [hw_l, hw_r] = barrier_halfwidths(env, 0, N, tol, max_width / 2);
    const std::vector<int64_t> grid = log_checkpoints(2, N, 20);

    for (;;) {
        if (hw_l + hw_r + 1 > max_width)
            throw WindowCapExceeded("same_env_meeting_sum window exceeds the site cap");
        WindowChain chain(env, -hw_l, hw_r, Boundary::Absorbing);
        DistVector d = DistVector::point(chain, 0);
        SeriesCurve curve;
        curve.n.reserve(grid.size());
        curve.partial_sum.reserve(grid.size());
        double weighted = 0.0, wsum = 0.0;
        size_t g = 0;
        for (int64_t n = 1; n <= N; ++n) {
            evolve(chain, d, 1);
            double term = 0.0;
            for (int64_t i = d.lo_idx; i <= d.hi_idx; ++i) {
                const double p = d.mass[static_cast<size_t>(i)];
                if (p <= 0.0) continue;
                double q = p;
                for (int j = 1; j < r; ++j) q *= p;
                term += q;
            }
            const double w = 1.0 / static_cast<double>(n);
            weighted += w * term;
            wsum += w;
            while (g < grid.size() && grid[g] == n) {
                curve.n.push_back(n);
                curve.partial_sum.push_back(weighted / std::log(static_cast<double>(n)));
                ++g;
            }
        }
        if (d.leaked() <= tol || (hw_l >= N + 1 && hw_r >= N + 1)) {
            // each step's deficit is at most r times the (final) leaked mass
            curve.error_bound = static_cast<double>(r) * d.leaked() * wsum /
                                std::log(static_cast<double>(N));
            return curve;
        }
        hw_l = std::min(2 * hw_l, N + 1);
        hw_r = std::min(2 * hw_r, N + 1);
    }
}

SeriesCurve same_env_meeting_sum(const Environment& env, int64_t N,
                                 const std::vector<int64_t>& starts, double tol,
                                 int64_t max_width) {
    if (N < 2) throw std::invalid_argument("same_env_meeting_sum: need N >= 2");
    if (starts.empty()) throw std::invalid_argument("same_env_meeting_sum: need a start site");
    if (tol <= 0) throw std::invalid_argument("same_env_meeting_sum: tol must be positive");
    for (int64_t s : starts)
        if (((s ^ starts.front()) & 1) != 0)
            throw std::invalid_argument("same_env_meeting_sum: starts must share parity");

    const int64_t lo_start = *std::min_element(starts.begin(), starts.end());
    const int64_t hi_start = *std::max_element(starts.begin(), starts.end());
    // One window hosts every walker: the left barrier is scanned from the
    // leftmost start, the right barrier from the rightmost.
    int64_t hw_l = barrier_halfwidths(env, lo_start, N, tol, max_width / 2).first;
    int64_t hw_r = barrier_halfwidths(env, hi_start, N, tol, max_width / 2).second;
    const std::vector<int64_t> grid = log_checkpoints(2, N, 20);
    const size_t r = starts.size();

    for (;;) {
        const int64_t a = lo_start - hw_l, b = hi_start + hw_r;
        if (b - a + 1 > max_width)
            throw WindowCapExceeded("same_env_meeting_sum window exceeds the site cap");
        WindowChain chain(env, a, b, Boundary::Absorbing);
        std::vector<DistVector> ds;
        ds.reserve(r);
        for (int64_t s : starts) ds.push_back(DistVector::point(chain, s));
        SeriesCurve curve;
        curve.n.reserve(grid.size());
        curve.partial_sum.reserve(grid.size());
        double weighted = 0.0, wsum = 0.0;
        size_t g = 0;
        for (int64_t n = 1; n <= N; ++n) {
            int64_t lo = a, hi = b;
            for (DistVector& d : ds) {
                evolve(chain, d, 1);
                lo = std::max(lo, a + d.lo_idx);
                hi = std::min(hi, a + d.hi_idx);
            }
            double term = 0.0;
            for (int64_t x = lo; x <= hi; ++x) {
                double q = 1.0;
                for (const DistVector& d : ds) q *= d.mass[static_cast<size_t>(x - a)];
                term += q;
            }
            const double w = 1.0 / static_cast<double>(n);
            weighted += w * term;
            wsum += w;
            while (g < grid.size() && grid[g] == n) {
                curve.n.push_back(n);
                curve.partial_sum.push_back(weighted / std::log(static_cast<double>(n)));
                ++g;
            }
        }
        double leaked = 0.0;
        for (const DistVector& d : ds) leaked = std::max(leaked, d.leaked());
        if (leaked <= tol || (hw_l >= N + 1 && hw_r >= N + 1)) {
            curve.error_bound = static_cast<double>(r) * leaked * wsum /
                                std::log(static_cast<double>(N));
            return curve;
        }
        hw_l = std::min(2 * hw_l, N + 1);
        hw_r = std::min(2 * hw_r, N + 1);
    }
}

// ---------------- Valley coupling ----------------

CouplingRun run_coupling(const Environment& env, const GoodEnvReport& landmarks, int64_t N,
                         int64_t horizon, uint64_t master_seed, uint64_t trial) {
    const int64_t x0 = landmarks.xhat0, x2 = landmarks.xhat2, bh = landmarks.b_hat;
    if (!(x0 < bh && bh < x2) || x0 > 0)
        throw std::invalid_argument("run_coupling: malformed landmarks");
    if (horizon < 1) throw std::invalid_argument("run_coupling: need horizon >= 1");

    rng::Stream zs = rng::Stream::from_key({master_seed, trial, rng::kWalkerSalt, 0});
    rng::Stream hs = rng::Stream::from_key({master_seed, trial, rng::kWalkerSalt, 1});

    // Stationary start for the window walker: reversible weights on the even
    // parity class (the free walker starts at 0, so both stay even-even).
    const std::vector<double> w = mu_hat_window(env, x0, x2);
    double total = 0.0;
    for (int64_t x = x0; x <= x2; ++x)
        if (((x % 2) + 2) % 2 == 0) total += w[static_cast<size_t>(x - x0)];
    const double u0 = hs.u01() * total;
    int64_t zhat = 0;
    double acc = 0.0;
    for (int64_t x = x0; x <= x2; ++x) {
        if (((x % 2) + 2) % 2 != 0) continue;
        acc += w[static_cast<size_t>(x - x0)];
        zhat = x;
        if (acc >= u0) break;
    }

    CouplingRun run;
    run.horizon = horizon;
    const int64_t d2_cut =
        static_cast<int64_t>(std::floor(std::pow(static_cast<double>(N), 1.0 - landmarks.eps.e1)));

    int64_t z = 0;
    bool locked = false;
    bool d3_viol = false;
    if (z == bh) {
        run.tau_approach = 0;
        run.tau_bhat = 0;
        run.d1 = true;
    } else if (z == x0) {
        run.tau_approach = 0;
    }

    for (int64_t k = 1; k <= horizon; ++k) {
        double uz, uh;
        if (locked) {
            uz = uh = zs.u01();
        } else {
            uz = zs.u01();
            uh = hs.u01();
        }
        z += (uz < env.omega(z)) ? 1 : -1;
        if (zhat == x0) {
            ++zhat;
        } else if (zhat == x2) {
            --zhat;
        } else {
            zhat += (uh < env.omega(zhat)) ? 1 : -1;
        }

        if (locked && z != zhat) {
            assert(z < x0 || z > x2);
            locked = false;
            run.unlocked = true;
            run.unlock_time = k;
        }
        if (!run.met && !run.unlocked && !locked && z == zhat && z >= x0 && z <= x2) {
            run.met = true;
            run.meet_time = k;
            locked = true;
        }

        if (run.tau_approach < 0) {
            if (z == bh) {
                run.tau_approach = k;
                run.d1 = true;
            } else if (z == x0) {
                run.tau_approach = k;
            }
        }
        if (run.tau_bhat < 0 && z == bh) run.tau_bhat = k;
        if (run.tau_bhat >= 0 && k >= run.tau_bhat && k <= run.tau_bhat + N - 1 &&
            (z <= x0 || z >= x2))
            d3_viol = true;
        if (run.tau_bhat >= 0 && run.tau_wall < 0 && landmarks.L_found &&
            (z <= landmarks.L_minus || z >= landmarks.L_plus))
            run.tau_wall = k;
    }

    run.approach_resolved = run.tau_approach >= 0;
    run.d2 = run.tau_approach >= 0 && run.tau_approach <= d2_cut;
    run.d3 = run.tau_bhat >= 0 && run.tau_bhat + N - 1 <= horizon && !d3_viol;
    run.z_end = z;
    run.zhat_end = zhat;
    return run;
}

}  // namespace sinai
