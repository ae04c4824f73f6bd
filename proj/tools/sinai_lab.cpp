// Command-line front end: scenario runner plus small exact-computation
// utilities for poking at single environments.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sinai/engine.hpp"
#include "sinai/env.hpp"
#include "sinai/landscape.hpp"
#include "sinai/scenario.hpp"

namespace {

std::pair<sinai::EnvSpec, uint64_t> load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return sinai::env_spec_from_json(ss.str());
}

int cmd_run(const std::string& path, const sinai::RunOptions& opt) {
    const sinai::Report report = sinai::run_scenario_file(path, opt);
    for (const auto& v : report.verdicts)
        std::printf("[%s] %-24s value=%.17g threshold=%.17g %s\n", v.pass ? "pass" : "FAIL",
                    v.name.c_str(), v.value, v.threshold, v.detail.c_str());
    std::printf("%s: %s\n", report.name.c_str(), report.all_pass() ? "all pass" : "FAILED");
    return report.all_pass() ? 0 : 1;
}

int cmd_hitting(const std::string& spec_path, int64_t a, int64_t b, int64_t c) {
    auto [spec, tag] = load_spec(spec_path);
    const sinai::Environment env(spec, tag);
    const double closed = sinai::hitting_prob(env, a, b, c);
    const double solved = sinai::hitting_prob_oracle(env, a, b, c);
    const double exit_time = sinai::expected_exit(env, a, b, c);
    std::printf("P[hit %" PRId64 " before %" PRId64 " | start %" PRId64 "]\n", c, a, b);
    std::printf("  closed_form   %.17g\n", closed);
    std::printf("  linear_solve  %.17g\n", solved);
    std::printf("  expected_exit %.17g\n", exit_time);
    return 0;
}

int cmd_landscape(const std::string& spec_path, int64_t n, const std::string& csv_path) {
    auto [spec, tag] = load_spec(spec_path);
    const sinai::Environment env(spec, tag);
    const double h = std::log(static_cast<double>(n));
    const double ln = std::log(static_cast<double>(n));
    const int64_t hw = std::max<int64_t>(256, static_cast<int64_t>(4.0 * ln * ln));
    const sinai::PathWindow path = sinai::potential_window(env, -hw, hw);
    const sinai::ExtremaDecomposition dec = sinai::h_extrema(path, h);
    const std::string csv = sinai::decomposition_to_csv(dec);
    if (csv_path.empty() || csv_path == "-") {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot open " + csv_path);
        out << csv;
        std::printf("wrote %zu extrema (h=%.17g, window +-%" PRId64 ") to %s\n",
                    dec.extrema.size(), h, hw, csv_path.c_str());
    }
    return 0;
}

int cmd_env_sample(const std::string& spec_path, int64_t lo, int64_t hi) {
    auto [spec, tag] = load_spec(spec_path);
    const sinai::Environment env(spec, tag);
    if (hi < lo) throw std::runtime_error("bad range");
    std::printf("x,omega,log_rho,V\n");
    for (int64_t x = lo; x <= hi; ++x)
        std::printf("%" PRId64 ",%.17g,%.17g,%.17g\n", x, env.omega(x), env.log_rho(x),
                    env.potential(x));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recurrent random walks in random environments: scenarios and exact tools"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a scenario file and write its artifacts");
    std::string scenario_path;
    sinai::RunOptions opt;
    uint64_t seed_flag = 0;
    bool seed_set = false;
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--workers", opt.workers, "worker threads");
    run->add_option("--out", opt.out_dir, "output directory (default: current)");
    run->add_option("--seed", seed_flag, "override the scenario master seed")
        ->each([&](const std::string&) { seed_set = true; });

    // exact hitting
    auto* exact = app.add_subcommand("exact", "closed-form quenched quantities");
    auto* hitting = exact->add_subcommand("hitting", "exit probabilities and times on [a, c]");
    std::string spec_path;
    int64_t a = 0, b = 0, c = 0;
    hitting->add_option("--spec", spec_path, "environment spec JSON file")->required();
    hitting->add_option("--a", a, "left endpoint")->required();
    hitting->add_option("--b", b, "start")->required();
    hitting->add_option("--c", c, "right endpoint")->required();

    // landscape
    auto* land = app.add_subcommand("landscape", "potential extrema decomposition as CSV");
    std::string land_spec, land_csv;
    int64_t land_n = 0;
    land->add_option("--spec", land_spec, "environment spec JSON file")->required();
    land->add_option("--n", land_n, "time scale; level h = log n")->required()
        ->check(CLI::PositiveNumber);
    land->add_option("--csv", land_csv, "output file ('-' for stdout)");

    // env sample
    auto* envcmd = app.add_subcommand("env", "environment inspection");
    auto* sample = envcmd->add_subcommand("sample", "print omega and V over a site range");
    std::string env_spec;
    std::vector<int64_t> range;
    sample->add_option("--spec", env_spec, "environment spec JSON file")->required();
    sample->add_option("--range", range, "site range: lo hi")->expected(2)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (seed_set) opt.seed_override = seed_flag;
            return cmd_run(scenario_path, opt);
        }
        if (*hitting) return cmd_hitting(spec_path, a, b, c);
        if (*land) return cmd_landscape(land_spec, land_n, land_csv);
        if (*sample) return cmd_env_sample(env_spec, range[0], range[1]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
