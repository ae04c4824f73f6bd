#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sinai {

// One pass/fail check performed by a scenario, with the measured value and
// the cutoff it was held against (cutoffs come from the scenario file).
struct VerdictLine {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Report {
    std::string name;
    std::string kind;
    uint64_t seed = 0;
    std::vector<VerdictLine> verdicts;
    std::vector<std::string> artifacts;  // paths written, relative to the output dir

    bool all_pass() const;
    // Deterministic content: same scenario + seed gives identical bytes
    // (no clocks, hosts, or durations).
    std::string to_json() const;
};

struct RunOptions {
    std::string out_dir = ".";
    int workers = 1;
    std::optional<uint64_t> seed_override;
};

// Runs the experiment described by a scenario JSON document and writes its
// artifacts (CSV curves, report.json) under out_dir/<name>/.
Report run_scenario_text(const std::string& json_text, const RunOptions& opt);
Report run_scenario_file(const std::string& path, const RunOptions& opt);

}  // namespace sinai
