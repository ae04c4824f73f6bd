#include "sinai/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sinai/engine.hpp"
#include "sinai/env.hpp"
#include "sinai/landscape.hpp"
#include "sinai/montecarlo.hpp"
#include "sinai/stats.hpp"

namespace sinai {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV sink; numeric cells go through fmt17 so artifacts are reproducible
// bit-for-bit across runs.
class Csv {
  public:
    Csv(const std::filesystem::path& dir, const std::string& name, const std::string& header,
        Report& report)
        : out_(dir / name) {
        if (!out_) throw std::runtime_error("cannot open " + (dir / name).string());
        out_ << header << "\n";
        report.artifacts.push_back(name);
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

EnvSpec parse_env(const json& j) {
    auto [spec, tag] = env_spec_from_json(j.dump());
    (void)tag;
    return spec;
}

EpsVector parse_eps(const json& params) {
    EpsVector eps;
    if (!params.contains("eps")) return eps;
    const json& e = params.at("eps");
    eps.e1 = e.value("e1", eps.e1);
    eps.e2 = e.value("e2", eps.e2);
    eps.e3 = e.value("e3", eps.e3);
    eps.e4 = e.value("e4", eps.e4);
    eps.e5 = e.value("e5", eps.e5);
    eps.e6 = e.value("e6", eps.e6);
    return eps;
}

VerdictLine verdict(const std::string& name, bool pass, double value, double threshold,
                    std::string detail = {}) {
    VerdictLine v;
    v.name = name;
    v.pass = pass;
    v.value = value;
    v.threshold = threshold;
    v.detail = std::move(detail);
    return v;
}

// Index of the last checkpoint at most `cut`, clamped to the first one.
size_t decade_start(const std::vector<int64_t>& grid, int64_t cut) {
    size_t idx = 0;
    for (size_t i = 0; i < grid.size(); ++i)
        if (grid[i] <= cut) idx = i;
    return idx;
}

// ---------------- product-walk scenarios ----------------

void run_product(const json& params, const json& thresholds, uint64_t seed,
                 const std::string& default_target, const RunOptions& opt,
                 const std::filesystem::path& dir, Report& report) {
    ProductConfig cfg;
    cfg.m = params.at("m").get<int>();
    cfg.r = params.at("r").get<int>();
    cfg.distinct_envs = params.value("distinct_envs", cfg.r > 0 ? 1 : 0);
    if (cfg.r > 0) cfg.env = parse_env(params.at("env"));
    cfg.steps = params.at("steps").get<int64_t>();
    if (params.contains("starts")) cfg.starts = params.at("starts").get<std::vector<int64_t>>();
    cfg.master_seed = seed;
    const int trials = params.at("trials").get<int>();

    const MeetingStats stats = simulate_product(cfg, trials, opt.workers);
    const size_t nc = stats.checkpoints.size();

    Csv csv(dir, "curve.csv", "n,mean_meets,se_meets,mean_returns,se_returns", report);
    for (size_t c = 0; c < nc; ++c) {
        const MeanSE mm = stats.mean_meets_at(c);
        const MeanSE mr = stats.mean_returns_at(c);
        csv.row({std::to_string(stats.checkpoints[c]), fmt17(mm.mean), fmt17(mm.se),
                 fmt17(mr.mean), fmt17(mr.se)});
    }

    const std::string target = params.value("target", default_target);
    const auto& mat = target == "meets" ? stats.meets : stats.returns;
    const size_t c0 = decade_start(stats.checkpoints, cfg.steps / 10);
    const size_t cN = nc - 1;
    std::vector<double> incs(static_cast<size_t>(trials));
    std::vector<double> finals(static_cast<size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        incs[static_cast<size_t>(t)] = static_cast<double>(mat[static_cast<size_t>(t)][cN] -
                                                           mat[static_cast<size_t>(t)][c0]);
        finals[static_cast<size_t>(t)] = static_cast<double>(mat[static_cast<size_t>(t)][cN]);
    }
    const MeanSE inc = mean_se(incs);
    const double ks_ratio = kochen_stone_ratio(finals);
    const double min_z = thresholds.value("min_z", 2.0);
    const std::string expect = thresholds.at("expect").get<std::string>();

    std::ostringstream detail;
    detail << "target=" << target << " last_decade_mean=" << fmt17(inc.mean)
           << " se=" << fmt17(inc.se) << " kochen_stone=" << fmt17(ks_ratio);
    if (expect == "grow") {
        const double t_stat = inc.se > 0.0 ? inc.mean / inc.se : (inc.mean > 0.0 ? 1e300 : 0.0);
        report.verdicts.push_back(
            verdict("last_decade_growth", inc.mean > 0.0 && t_stat >= min_z, t_stat, min_z,
                    detail.str()));
    } else if (expect == "flatten") {
        const double bound = inc.mean + min_z * inc.se;
        const double max_mean = thresholds.at("max_last_decade_mean").get<double>();
        report.verdicts.push_back(
            verdict("last_decade_plateau", bound <= max_mean, bound, max_mean, detail.str()));
    } else {
        throw std::invalid_argument("product scenario: expect must be grow or flatten");
    }
}

// ---------------- localization ----------------

void run_localization(const json& params, const json& thresholds, uint64_t seed,
                      const RunOptions& opt, const std::filesystem::path& dir, Report& report) {
    const EnvSpec es = parse_env(params.at("env"));
    XiParams xp;
    xp.C2 = params.value("C2", xp.C2);
    xp.alpha = params.value("alpha", xp.alpha);
    const std::vector<int64_t> grid = params.at("n_grid").get<std::vector<int64_t>>();
    const int trials = params.at("trials").get<int>();
    if (grid.empty()) throw std::invalid_argument("localization: empty n_grid");

    Csv csv(dir, "localization.csv",
            "n,trials,determined,undetermined,in_set,rate,mean_set_size,mean_walk_abs", report);
    std::vector<LocalizationResult> rows;
    rows.reserve(grid.size());
    for (int64_t n : grid) {
        const LocalizationResult r = localization_rate(es, n, trials, xp, seed, opt.workers);
        rows.push_back(r);
        csv.row({std::to_string(n), std::to_string(r.trials), std::to_string(r.determined),
                 std::to_string(r.undetermined), std::to_string(r.in_set), fmt17(r.rate),
                 fmt17(r.mean_set_size), fmt17(r.mean_walk_abs)});
    }

    const double final_miss = 1.0 - rows.back().rate;
    report.verdicts.push_back(verdict("final_miss", final_miss <= thresholds.at("max_final_miss"),
                                      final_miss, thresholds.at("max_final_miss"),
                                      "miss rate at n=" + std::to_string(grid.back())));
    double max_drop = 0.0;
    for (size_t i = 0; i + 1 < rows.size(); ++i)
        max_drop = std::max(max_drop, rows[i].rate - rows[i + 1].rate);
    const double slack = thresholds.value("monotone_slack", 0.02);
    report.verdicts.push_back(verdict("monotone_rate", max_drop <= slack, max_drop, slack,
                                      "largest rate drop between consecutive grid points"));
    double min_det = 1.0;
    for (const auto& r : rows)
        min_det = std::min(min_det, static_cast<double>(r.determined) /
                                        static_cast<double>(r.trials));
    const double min_det_frac = thresholds.value("min_determined_frac", 0.9);
    report.verdicts.push_back(verdict("determined_frac", min_det >= min_det_frac, min_det,
                                      min_det_frac, "worst fraction of certifiable trials"));
}

// ---------------- collision decay ----------------

void run_collision(const json& params, const json& thresholds, uint64_t seed,
                   const RunOptions& opt, const std::filesystem::path& dir, Report& report) {
    const EnvSpec es = parse_env(params.at("env"));
    const std::vector<int64_t> grid = params.at("n_grid").get<std::vector<int64_t>>();
    std::vector<int> pairs;
    if (params.at("pairs").is_array())
        pairs = params.at("pairs").get<std::vector<int>>();
    else
        pairs.assign(grid.size(), params.at("pairs").get<int>());
    if (pairs.size() != grid.size())
        throw std::invalid_argument("collision scenario: pairs/n_grid size mismatch");
    const double tol = params.value("tol", 1e-6);

    Csv csv(dir, "collision.csv", "n,pairs,estimate,se,max_window_error", report);
    std::vector<CollisionEstimate> est;
    est.reserve(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        est.push_back(collision_prob_indep(es, grid[i], pairs[i], seed, tol, opt.workers));
        csv.row({std::to_string(grid[i]), std::to_string(pairs[i]), fmt17(est[i].stat.mean),
                 fmt17(est[i].stat.se), fmt17(est[i].max_window_error)});
    }

    double min_t = 1e300;
    for (size_t i = 0; i + 1 < est.size(); ++i) {
        const double gap = est[i].stat.mean - est[i + 1].stat.mean;
        const double se = std::sqrt(est[i].stat.se * est[i].stat.se +
                                    est[i + 1].stat.se * est[i + 1].stat.se);
        min_t = std::min(min_t, se > 0.0 ? gap / se : (gap > 0.0 ? 1e300 : 0.0));
    }
    const double min_z = thresholds.value("min_z", 2.0);
    report.verdicts.push_back(verdict("strictly_decreasing", min_t >= min_z, min_t, min_z,
                                      "worst separation between consecutive grid points"));
}

// ---------------- return-probability series ----------------

double last_decade_frac(const SeriesCurve& c) {
    const size_t i0 = decade_start(c.n, c.n.back() / 10);
    const double total = c.partial_sum.back();
    if (total <= 0.0) return 0.0;
    return (c.partial_sum.back() - c.partial_sum[i0]) / total;
}

// Relative increase of the partial sum over the last decade: (S_N - S_{N/10}) / S_{N/10}.
// Unlike last_decade_frac this is unbounded above, so a sum that doubles late in the
// horizon registers as growth 1.0 rather than saturating near a fraction of 1.
double last_decade_growth(const SeriesCurve& c) {
    const size_t i0 = decade_start(c.n, c.n.back() / 10);
    const double prev = c.partial_sum[i0];
    const double gain = c.partial_sum.back() - prev;
    if (prev <= 0.0) return gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return gain / prev;
}

void run_series(const json& params, const json& thresholds, uint64_t seed, const RunOptions& opt,
                const std::filesystem::path& dir, Report& report) {
    (void)opt;
    const EnvSpec base = parse_env(params.at("env"));
    const int64_t N = params.at("N").get<int64_t>();
    const std::vector<double> thetas = params.at("thetas").get<std::vector<double>>();
    const double tol = params.value("tol", 1e-9);
    const int env_count = params.value("env_count", 1);
    if (env_count < 1) throw std::invalid_argument("series scenario: need env_count >= 1");

    Csv curve_csv(dir, "series.csv", "env_index,theta,n,partial_sum", report);
    Csv sum_csv(dir, "series_summary.csv",
                "env_index,theta,total,last_decade_frac,last_decade_growth,error_bound", report);
    // fractions[t][e]: last-decade share of the final total for theta t, env e;
    // growths[t][e]: last-decade increase relative to the sum a decade earlier.
    std::vector<std::vector<double>> fractions(thetas.size());
    std::vector<std::vector<double>> growths(thetas.size());
    for (int e = 0; e < env_count; ++e) {
        EnvSpec es = base;
        es.seed = rng::mix({seed, static_cast<uint64_t>(e), rng::kEnvSalt, 0});
        const Environment env(es, 0);
        const std::vector<SeriesCurve> curves = return_prob_series_multi(env, N, thetas, tol);
        for (size_t t = 0; t < thetas.size(); ++t) {
            const SeriesCurve& c = curves[t];
            for (size_t i = 0; i < c.n.size(); ++i)
                curve_csv.row({std::to_string(e), fmt17(thetas[t]), std::to_string(c.n[i]),
                               fmt17(c.partial_sum[i])});
            const double frac = last_decade_frac(c);
            const double growth = last_decade_growth(c);
            fractions[t].push_back(frac);
            growths[t].push_back(growth);
            sum_csv.row({std::to_string(e), fmt17(thetas[t]), fmt17(c.partial_sum.back()),
                         fmt17(frac), fmt17(growth), fmt17(c.error_bound)});
        }
    }

    auto theta_index = [&](double theta) -> size_t {
        for (size_t t = 0; t < thetas.size(); ++t)
            if (std::abs(thetas[t] - theta) < 1e-12) return t;
        throw std::invalid_argument("series scenario: threshold refers to an absent theta");
    };
    // Each verdict block may aggregate its per-environment statistic either by the
    // worst case (default; max for plateau, min for growth) or by the panel mean.
    // The mean is the right statistic when individual environments are allowed to
    // sit on either side of the dividing line and only the ensemble must move.
    auto aggregate = [](const json& p, const std::vector<double>& v, bool upper_bound,
                        const char* stat) {
        const std::string mode = p.value("aggregate", std::string("worst"));
        if (mode == "mean")
            return std::pair<double, std::string>(
                std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()),
                std::string("mean ") + stat + " across environments");
        if (mode != "worst")
            throw std::invalid_argument("series scenario: aggregate must be worst or mean");
        return upper_bound ? std::pair<double, std::string>(
                                 *std::max_element(v.begin(), v.end()),
                                 std::string("largest ") + stat + " across environments")
                           : std::pair<double, std::string>(
                                 *std::min_element(v.begin(), v.end()),
                                 std::string("smallest ") + stat + " across environments");
    };
    if (thresholds.contains("plateau")) {
        const json& p = thresholds.at("plateau");
        const size_t t = theta_index(p.at("theta").get<double>());
        const auto [value, note] = aggregate(p, fractions[t], true, "last-decade fraction");
        report.verdicts.push_back(verdict("plateau_theta_" + fmt17(thetas[t]),
                                          value <= p.at("max_frac").get<double>(), value,
                                          p.at("max_frac").get<double>(), note));
    }
    if (thresholds.contains("growth")) {
        const json& p = thresholds.at("growth");
        const size_t t = theta_index(p.at("theta").get<double>());
        const auto [value, note] = aggregate(p, growths[t], false, "last-decade growth");
        report.verdicts.push_back(verdict("growth_theta_" + fmt17(thetas[t]),
                                          value >= p.at("min_growth").get<double>(), value,
                                          p.at("min_growth").get<double>(), note));
    }
}

// ---------------- same-environment meeting sums ----------------

void run_same_env_sum(const json& params, const json& thresholds, uint64_t seed,
                      const RunOptions& opt, const std::filesystem::path& dir, Report& report) {
    (void)opt;
    const EnvSpec base = parse_env(params.at("env"));
    const int64_t N = params.at("N").get<int64_t>();
    const int r = params.at("r").get<int>();
    const double tol = params.value("tol", 1e-9);
    const int env_count = params.value("env_count", 1);
    if (env_count < 1) throw std::invalid_argument("same-env-sum scenario: need env_count >= 1");

    Csv curve_csv(dir, "meeting_sum.csv", "env_index,n,value", report);
    Csv sum_csv(dir, "meeting_sum_summary.csv", "env_index,final,error_bound", report);
    std::vector<double> finals;
    for (int e = 0; e < env_count; ++e) {
        EnvSpec es = base;
        es.seed = rng::mix({seed, static_cast<uint64_t>(e), rng::kEnvSalt, 0});
        const Environment env(es, 0);
        const SeriesCurve c = same_env_meeting_sum(env, N, r, tol);
        for (size_t i = 0; i < c.n.size(); ++i)
            curve_csv.row({std::to_string(e), std::to_string(c.n[i]), fmt17(c.partial_sum[i])});
        finals.push_back(c.partial_sum.back());
        sum_csv.row({std::to_string(e), fmt17(c.partial_sum.back()), fmt17(c.error_bound)});
    }

    // the normalized average converges to a positive constant when walkers
    // share an environment and decays otherwise; the scenario declares which
    // side it expects via a bound on the worst final value
    if (!thresholds.contains("min_final") && !thresholds.contains("max_final"))
        throw std::invalid_argument("same-env-sum scenario: need min_final and/or max_final");
    if (thresholds.contains("min_final")) {
        const double worst = *std::min_element(finals.begin(), finals.end());
        report.verdicts.push_back(verdict("final_value_floor",
                                          worst >= thresholds.at("min_final").get<double>(),
                                          worst, thresholds.at("min_final").get<double>(),
                                          "smallest final value across environments"));
    }
    if (thresholds.contains("max_final")) {
        const double worst = *std::max_element(finals.begin(), finals.end());
        report.verdicts.push_back(verdict("final_value_cap",
                                          worst <= thresholds.at("max_final").get<double>(),
                                          worst, thresholds.at("max_final").get<double>(),
                                          "largest final value across environments"));
    }
}

// ---------------- valley screening shared by coupling and floor ----------------

struct ScreenedEnv {
    int candidate = 0;
    EnvSpec spec;
    GoodEnvReport landmarks;
};

std::vector<ScreenedEnv> screen_envs(const EnvSpec& base, int64_t N, const EpsVector& eps,
                                     uint64_t seed, int candidates, int want,
                                     bool need_walls) {
    std::vector<ScreenedEnv> out;
    for (int c = 0; c < candidates && static_cast<int>(out.size()) < want; ++c) {
        EnvSpec es = base;
        es.seed = rng::mix({seed, static_cast<uint64_t>(c), rng::kEnvSalt, 0});
        const Environment env(es, 0);
        try {
            GoodEnvReport rep = delta_checks(env, N, eps);
            // b_hat rounds the bottom landmark to an even site; in freak tie
            // cases it can touch a wall, which makes the report unusable
            const bool usable = rep.xhat0 <= 0 && rep.xhat0 < rep.b_hat && rep.b_hat < rep.xhat2;
            if (rep.all() && usable && (!need_walls || rep.L_found))
                out.push_back({c, es, std::move(rep)});
        } catch (const LandscapeUndetermined&) {
        }
    }
    return out;
}

// ---------------- coupling ----------------

void run_coupling_scn(const json& params, const json& thresholds, uint64_t seed,
                      const RunOptions& opt, const std::filesystem::path& dir, Report& report) {
    const EnvSpec base = parse_env(params.at("env"));
    const int64_t N = params.at("N").get<int64_t>();
    const int64_t horizon = params.value("horizon", N);
    const int trials = params.at("trials").get<int>();
    const int candidates = params.value("candidates", 400);
    const int env_count = params.at("env_count").get<int>();
    const EpsVector eps = parse_eps(params);

    const std::vector<ScreenedEnv> envs =
        screen_envs(base, N, eps, seed, candidates, env_count, true);
    report.verdicts.push_back(verdict("screened_envs",
                                      static_cast<int>(envs.size()) == env_count,
                                      static_cast<double>(envs.size()),
                                      static_cast<double>(env_count),
                                      "environments passing all landmark checks"));

    // a run "meets slowly" when the walkers have not coupled by N^slow_exponent
    const double slow_exp = params.value("slow_exponent", 0.9);
    const int64_t slow_cut = static_cast<int64_t>(
        std::pow(static_cast<double>(N), slow_exp));

    Csv csv(dir, "coupling.csv",
            "candidate,b_hat,meet_rate,slow_meet_rate,unlock_rate,d1_rate,d2_rate,d3_rate,ks_env",
            report);
    std::vector<double> pooled_coupled, pooled_plain;
    double min_meet = 1.0;
    double slow_total = 0.0;
    for (const ScreenedEnv& se : envs) {
        const Environment env(se.spec, 0);
        const int64_t w = se.landmarks.xhat2 - se.landmarks.xhat0;
        env.materialize(se.landmarks.xhat0 - 2 * w - 64, se.landmarks.xhat2 + 2 * w + 64);
        const uint64_t mc = rng::mix({seed, static_cast<uint64_t>(se.candidate), 0x636F7570ULL});
        std::vector<double> zc(static_cast<size_t>(trials)), zp(static_cast<size_t>(trials));
        std::vector<int8_t> met(static_cast<size_t>(trials)), slow(static_cast<size_t>(trials)),
            unl(static_cast<size_t>(trials));
        std::vector<int8_t> d1(static_cast<size_t>(trials)), d2(static_cast<size_t>(trials)),
            d3(static_cast<size_t>(trials));
        parallel_for(static_cast<size_t>(trials), opt.workers, [&](size_t t) {
            const CouplingRun run = run_coupling(env, se.landmarks, N, horizon, mc, t);
            zc[t] = static_cast<double>(run.z_end);
            met[t] = run.met ? 1 : 0;
            slow[t] = (!run.met || run.meet_time > slow_cut) ? 1 : 0;
            unl[t] = run.unlocked ? 1 : 0;
            d1[t] = run.d1 ? 1 : 0;
            d2[t] = run.d2 ? 1 : 0;
            d3[t] = run.d3 ? 1 : 0;
            rng::Stream ps = rng::Stream::from_key({mc, t, rng::kWalkerSalt, 2});
            zp[t] = static_cast<double>(simulate_walk(env, 0, horizon, ps));
        });
        auto rate = [&](const std::vector<int8_t>& f) {
            double s = 0.0;
            for (int8_t x : f) s += x;
            return s / static_cast<double>(f.size());
        };
        const double ks_env = ks_two_sample(zc, zp);
        min_meet = std::min(min_meet, rate(met));
        slow_total += rate(slow) * static_cast<double>(trials);
        csv.row({std::to_string(se.candidate), std::to_string(se.landmarks.b_hat),
                 fmt17(rate(met)), fmt17(rate(slow)), fmt17(rate(unl)), fmt17(rate(d1)),
                 fmt17(rate(d2)), fmt17(rate(d3)), fmt17(ks_env)});
        pooled_coupled.insert(pooled_coupled.end(), zc.begin(), zc.end());
        pooled_plain.insert(pooled_plain.end(), zp.begin(), zp.end());
    }

    if (!envs.empty()) {
        const double ks = ks_two_sample(pooled_coupled, pooled_plain);
        report.verdicts.push_back(verdict("marginal_ks",
                                          ks <= thresholds.at("max_ks").get<double>(), ks,
                                          thresholds.at("max_ks").get<double>(),
                                          "pooled free-walker law, locked runs vs plain runs"));
        if (thresholds.contains("min_meet_rate"))
            report.verdicts.push_back(verdict("meet_rate",
                                              min_meet >=
                                                  thresholds.at("min_meet_rate").get<double>(),
                                              min_meet,
                                              thresholds.at("min_meet_rate").get<double>(),
                                              "worst per-environment meeting rate"));
        if (thresholds.contains("max_slow_meet_frac")) {
            const double frac =
                slow_total / static_cast<double>(envs.size() * static_cast<size_t>(trials));
            report.verdicts.push_back(
                verdict("slow_meet_frac", frac <= thresholds.at("max_slow_meet_frac").get<double>(),
                        frac, thresholds.at("max_slow_meet_frac").get<double>(),
                        "pooled fraction of runs not coupled by the cutoff"));
        }
    }
}

// ---------------- valley floor ----------------

void run_valley_floor(const json& params, const json& thresholds, uint64_t seed,
                      const RunOptions& opt, const std::filesystem::path& dir, Report& report) {
    (void)opt;
    const EnvSpec base = parse_env(params.at("env"));
    const int64_t N = params.at("N").get<int64_t>();
    const int candidates = params.value("candidates", 400);
    const int env_count = params.at("env_count").get<int>();
    const double tol = params.value("tol", 1e-9);
    const double expo = params.value("exponent", 0.9);
    const EpsVector eps = parse_eps(params);

    const std::vector<ScreenedEnv> envs =
        screen_envs(base, N, eps, seed, candidates, env_count, false);
    report.verdicts.push_back(verdict("screened_envs",
                                      static_cast<int>(envs.size()) == env_count,
                                      static_cast<double>(envs.size()),
                                      static_cast<double>(env_count),
                                      "environments passing all landmark checks"));

    Csv csv(dir, "floor.csv", "candidate,b_hat,floor,window_error", report);
    double worst = 1.0;
    const int64_t n_lo =
        static_cast<int64_t>(std::ceil(std::pow(static_cast<double>(N), expo)));
    for (const ScreenedEnv& se : envs) {
        const Environment env(se.spec, 0);
        const ValueWithError f = point_prob_floor(env, se.landmarks.b_hat, n_lo, N, tol);
        const double lb = std::max(0.0, f.value - f.error);
        worst = std::min(worst, lb);
        csv.row({std::to_string(se.candidate), std::to_string(se.landmarks.b_hat), fmt17(f.value),
                 fmt17(f.error)});
    }
    if (!envs.empty())
        report.verdicts.push_back(
            verdict("floor", worst >= thresholds.at("min_floor").get<double>(), worst,
                    thresholds.at("min_floor").get<double>(),
                    "smallest exact occupation floor at the valley bottom"));
}

// ---------------- slope statistics ----------------

void run_landscape_stats(const json& params, const json& thresholds, uint64_t seed,
                         const RunOptions& opt, const std::filesystem::path& dir,
                         Report& report) {
    (void)opt;
    const EnvSpec base = parse_env(params.at("env"));
    const double h = params.contains("h")
                         ? params.at("h").get<double>()
                         : params.value("h_sigma", 25.0) * std::sqrt(base.sigma2());
    const size_t side_target = params.value("side_samples", 2000);
    const size_t central_target = params.value("central_samples", 300);
    const int max_envs = params.value("max_envs", 4000);
    const int per_env_side = params.value("per_env_side", 6);
    const double sigma = std::sqrt(base.sigma2());
    const int64_t hw0 = static_cast<int64_t>(8.0 * (h / sigma) * (h / sigma)) + 64;

    Csv csv(dir, "slopes.csv", "env_index,central,height,excess,ratio", report);
    std::vector<double> side, central;
    int skipped = 0;
    for (int e = 0; e < max_envs; ++e) {
        if (side.size() >= side_target && central.size() >= central_target) break;
        EnvSpec es = base;
        es.seed = rng::mix({seed, static_cast<uint64_t>(e), rng::kEnvSalt, 0});
        const Environment env(es, 0);
        int64_t hw = hw0;
        bool done = false;
        for (int grow = 0; grow < 6 && !done; ++grow, hw *= 2) {
            const PathWindow path = potential_window(env, -hw, hw);
            const ExtremaDecomposition dec = h_extrema(path, h);
            // slope straddling the origin
            int central_idx = -1;
            for (size_t k = 0; k + 1 < dec.extrema.size(); ++k)
                if (dec.extrema[k].site <= 0 && dec.extrema[k + 1].site > 0)
                    central_idx = static_cast<int>(k);
            if (central_idx < 0 || !dec.slopes[static_cast<size_t>(central_idx)].certified)
                continue;
            int used = 0;
            for (size_t k = 0; k < dec.slopes.size(); ++k) {
                if (!dec.slopes[k].certified) continue;
                const bool is_central = static_cast<int>(k) == central_idx;
                // the subtraction height - h can round a hair negative when a
                // height lands exactly on h; clamp so the sample stays valid
                const double ratio = std::max(0.0, dec.slopes[k].excess) / h;
                if (is_central) {
                    central.push_back(ratio);
                } else {
                    if (used >= per_env_side) continue;
                    ++used;
                    side.push_back(ratio);
                }
                csv.row({std::to_string(e), is_central ? "1" : "0", fmt17(dec.slopes[k].height),
                         fmt17(dec.slopes[k].excess), fmt17(ratio)});
            }
            done = true;
        }
        if (!done) ++skipped;
    }

    std::ostringstream note;
    note << "side=" << side.size() << " central=" << central.size() << " skipped=" << skipped;
    const double ks = ks_exponential(side);
    report.verdicts.push_back(verdict("side_excess_ks",
                                      ks <= thresholds.at("max_ks").get<double>(), ks,
                                      thresholds.at("max_ks").get<double>(), note.str()));
    const MeanSE cm = mean_se(central);
    const double target = thresholds.at("central_mean_target").get<double>();
    const double tol = thresholds.at("central_mean_tol").get<double>();
    report.verdicts.push_back(verdict("central_excess_mean", std::abs(cm.mean - target) <= tol,
                                      std::abs(cm.mean - target), tol,
                                      "mean=" + fmt17(cm.mean) + " se=" + fmt17(cm.se)));
}

}  // namespace

// ---------------- dispatch ----------------

bool Report::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return !verdicts.empty();
}

std::string Report::to_json() const {
    json j;
    j["name"] = name;
    j["kind"] = kind;
    j["seed"] = seed;
    j["version"] = "sinai-lab 1.0.0";
    j["all_pass"] = all_pass();
    j["verdicts"] = json::array();
    for (const auto& v : verdicts) {
        json jv;
        jv["name"] = v.name;
        jv["pass"] = v.pass;
        jv["value"] = v.value;
        jv["threshold"] = v.threshold;
        jv["detail"] = v.detail;
        j["verdicts"].push_back(jv);
    }
    j["artifacts"] = artifacts;
    return j.dump(2) + "\n";
}

Report run_scenario_text(const std::string& json_text, const RunOptions& opt) {
    const json scn = json::parse(json_text);
    Report report;
    report.name = scn.at("name").get<std::string>();
    report.kind = scn.at("kind").get<std::string>();
    report.seed = opt.seed_override.value_or(scn.value("seed", uint64_t{1}));
    const json params = scn.value("params", json::object());
    const json thresholds = scn.value("thresholds", json::object());

    const std::filesystem::path dir = std::filesystem::path(opt.out_dir) / report.name;
    std::filesystem::create_directories(dir);

    if (report.kind == "recurrence")
        run_product(params, thresholds, report.seed, "returns", opt, dir, report);
    else if (report.kind == "meetings")
        run_product(params, thresholds, report.seed, "meets", opt, dir, report);
    else if (report.kind == "localization")
        run_localization(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "collision-decay")
        run_collision(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "series")
        run_series(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "same-env-sum")
        run_same_env_sum(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "coupling")
        run_coupling_scn(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "valley-floor")
        run_valley_floor(params, thresholds, report.seed, opt, dir, report);
    else if (report.kind == "landscape-stats")
        run_landscape_stats(params, thresholds, report.seed, opt, dir, report);
    else
        throw std::invalid_argument("unknown scenario kind '" + report.kind + "'");

    std::ofstream out(dir / "report.json");
    out << report.to_json();
    return report;
}

Report run_scenario_file(const std::string& path, const RunOptions& opt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_scenario_text(ss.str(), opt);
}

}  // namespace sinai
