#include "sinai/env.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace sinai {

// ---------------- EnvSpec ----------------

void EnvSpec::validate() const {
    if (!(epsilon0 > 0.0 && epsilon0 < 0.5))
        throw std::invalid_argument("EnvSpec: epsilon0 must lie in (0, 1/2)");
    switch (law) {
        case EnvLaw::TwoPoint:
            if (!(p_low >= epsilon0))
                throw std::invalid_argument("EnvSpec: p_low below epsilon0");
            if (!(p_low < 0.5))
                throw std::invalid_argument(
                    "EnvSpec: TwoPoint needs p_low < 1/2 (p_low = 1/2 degenerates to sigma2 = 0)");
            break;
        case EnvLaw::LogUniform: {
            if (!(half_width > 0.0))
                throw std::invalid_argument("EnvSpec: half_width must be positive");
            const double bound = std::log((1.0 - epsilon0) / epsilon0);
            if (half_width > bound + 1e-12)
                throw std::invalid_argument(
                    "EnvSpec: half_width exceeds log((1-epsilon0)/epsilon0)");
            break;
        }
    }
}

double EnvSpec::sigma2() const {
    switch (law) {
        case EnvLaw::TwoPoint: {
            const double step = std::log((1.0 - p_low) / p_low);
            return step * step;
        }
        case EnvLaw::LogUniform:
            return half_width * half_width / 3.0;
    }
    return 0.0;
}

double EnvSpec::a0() const { return std::log((1.0 - epsilon0) / epsilon0); }

std::string env_spec_to_json(const EnvSpec& spec, uint64_t tag) {
    nlohmann::json j;
    j["law"] = spec.law == EnvLaw::TwoPoint ? "two_point" : "log_uniform";
    if (spec.law == EnvLaw::TwoPoint)
        j["p_low"] = spec.p_low;
    else
        j["half_width"] = spec.half_width;
    j["epsilon0"] = spec.epsilon0;
    j["seed"] = spec.seed;
    j["tag"] = tag;
    return j.dump();
}

std::pair<EnvSpec, uint64_t> env_spec_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    EnvSpec spec;
    const std::string law = j.at("law").get<std::string>();
    if (law == "two_point") {
        spec.law = EnvLaw::TwoPoint;
        spec.p_low = j.at("p_low").get<double>();
    } else if (law == "log_uniform") {
        spec.law = EnvLaw::LogUniform;
        spec.half_width = j.at("half_width").get<double>();
    } else {
        throw std::invalid_argument("EnvSpec: unknown law '" + law + "'");
    }
    if (j.contains("epsilon0")) spec.epsilon0 = j.at("epsilon0").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
    const uint64_t tag = j.contains("tag") ? j.at("tag").get<uint64_t>() : 0;
    spec.validate();
    return {spec, tag};
}

// ---------------- Environment ----------------

Environment::Environment(EnvSpec spec, uint64_t tag) : spec_(spec), tag_(tag) {
    spec_.validate();
}

Environment::Environment(ConstTag, double omega_value)
    : constant_(true), const_omega_(omega_value) {}

Environment Environment::constant(double omega_value) {
    if (!(omega_value > 0.0 && omega_value < 1.0))
        throw std::invalid_argument("Environment::constant: omega must lie in (0, 1)");
    return Environment(ConstTag{}, omega_value);
}

double Environment::omega_raw(int64_t x) const {
    const double u = rng::u01_from_key(spec_.seed, tag_, x);
    switch (spec_.law) {
        case EnvLaw::TwoPoint:
            return u < 0.5 ? spec_.p_low : 1.0 - spec_.p_low;
        case EnvLaw::LogUniform: {
            const double lr = (2.0 * u - 1.0) * spec_.half_width;
            return 1.0 / (1.0 + std::exp(lr));
        }
    }
    return 0.5;
}

double Environment::omega(int64_t x) const {
    if (constant_) return const_omega_;
    if (!om_win_.empty()) {
        const int64_t i = x - om_lo_;
        if (i >= 0 && i < static_cast<int64_t>(om_win_.size())) return om_win_[i];
    }
    return omega_raw(x);
}

double Environment::log_rho(int64_t x) const {
    const double w = omega(x);
    return std::log((1.0 - w) / w);
}

void Environment::extend_potential(int64_t x) const {
    if (x > 0) {
        while (static_cast<int64_t>(v_pos_.size()) < x) {
            const int64_t k = static_cast<int64_t>(v_pos_.size()) + 1;
            const double prev = k == 1 ? 0.0 : v_pos_[k - 2];
            v_pos_.push_back(prev + log_rho(k));
        }
    } else if (x < 0) {
        while (static_cast<int64_t>(v_neg_.size()) < -x) {
            const int64_t k = static_cast<int64_t>(v_neg_.size()) + 1;  // site -k
            const double prev = k == 1 ? 0.0 : v_neg_[k - 2];
            v_neg_.push_back(prev - log_rho(-k + 1));
        }
    }
}

double Environment::potential(int64_t x) const {
    if (x == 0) return 0.0;
    std::lock_guard<std::mutex> lock(mu_);
    extend_potential(x);
    return x > 0 ? v_pos_[x - 1] : v_neg_[-x - 1];
}

std::vector<double> Environment::potential_range(int64_t lo, int64_t hi) const {
    if (lo > hi) throw std::invalid_argument("potential_range: lo > hi");
    std::lock_guard<std::mutex> lock(mu_);
    extend_potential(lo);
    extend_potential(hi);
    std::vector<double> out;
    out.reserve(hi - lo + 1);
    for (int64_t x = lo; x <= hi; ++x)
        out.push_back(x == 0 ? 0.0 : (x > 0 ? v_pos_[x - 1] : v_neg_[-x - 1]));
    return out;
}

void Environment::materialize(int64_t lo, int64_t hi) const {
    if (constant_ || lo > hi) return;
    std::vector<double> win;
    win.reserve(hi - lo + 1);
    for (int64_t x = lo; x <= hi; ++x) win.push_back(omega_raw(x));
    std::lock_guard<std::mutex> lock(mu_);
    om_win_ = std::move(win);
    om_lo_ = lo;
}

std::pair<double, double> Environment::log_rho_moments(int64_t lo, int64_t hi) const {
    if (lo > hi) throw std::invalid_argument("log_rho_moments: lo > hi");
    double sum = 0.0, sumsq = 0.0;
    const int64_t n = hi - lo + 1;
    for (int64_t x = lo; x <= hi; ++x) {
        const double lr = log_rho(x);
        sum += lr;
        sumsq += lr * lr;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    return {mean, var};
}

}  // namespace sinai
