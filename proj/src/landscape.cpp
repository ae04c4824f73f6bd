#include "sinai/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

namespace sinai {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int64_t floordiv2(int64_t x) { return x >= 0 ? x / 2 : -((-x + 1) / 2); }

void append_csv_double(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

PathWindow potential_window(const Environment& env, int64_t lo, int64_t hi) {
    PathWindow w;
    w.lo = lo;
    w.values = env.potential_range(lo, hi);
    return w;
}

// ---------------- h-extrema scan ----------------

ExtremaDecomposition h_extrema(const PathWindow& path, double h) {
    if (path.values.empty()) throw std::invalid_argument("h_extrema: empty window");
    if (!(h > 0.0)) throw std::invalid_argument("h_extrema: h must be positive");

    const auto& w = path.values;
    const int64_t L = static_cast<int64_t>(w.size());

    ExtremaDecomposition out;
    out.h = h;

    enum class Mode { Unset, SeekMax, SeekMin };
    Mode mode = Mode::Unset;

    // Unset phase: running extremes since the window start (earliest site kept)
    // plus the best witness value strictly left of each candidate.
    int64_t min_idx = 0, max_idx = 0;
    double min_val = w[0], max_val = w[0];
    double wit_above_min = -kInf;  // max over sites left of min_idx
    double wit_below_max = kInf;   // min over sites left of max_idx
    double pref_max = w[0], pref_min = w[0];

    // Seek phase: candidate for the next extremum (opposite kind of the last).
    int64_t cand_idx = 0;
    double cand_val = 0.0;

    auto emit = [&](int64_t idx, bool is_min, bool certified) {
        out.extrema.push_back({path.lo + idx, w[idx], is_min, certified});
    };

    for (int64_t i = 1; i < L; ++i) {
        const double v = w[i];
        if (mode == Mode::Unset) {
            if (v < min_val) {
                min_val = v;
                min_idx = i;
                wit_above_min = pref_max;
            }
            if (v > max_val) {
                max_val = v;
                max_idx = i;
                wit_below_max = pref_min;
            }
        }
        // An update may trigger several emissions at the same site.
        for (;;) {
            if (mode == Mode::Unset) {
                const bool min_trig = v >= min_val + h;
                const bool max_trig = v <= max_val - h;
                if (!min_trig && !max_trig) break;
                if (min_trig && (!max_trig || min_idx < max_idx)) {
                    emit(min_idx, true, wit_above_min >= min_val + h);
                    mode = Mode::SeekMax;
                    if (max_trig && max_idx > min_idx) {
                        cand_idx = max_idx;
                        cand_val = max_val;
                    } else {
                        cand_idx = i;
                        cand_val = v;
                    }
                } else {
                    emit(max_idx, false, wit_below_max <= max_val - h);
                    mode = Mode::SeekMin;
                    if (min_trig && min_idx > max_idx) {
                        cand_idx = min_idx;
                        cand_val = min_val;
                    } else {
                        cand_idx = i;
                        cand_val = v;
                    }
                }
                continue;
            }
            if (mode == Mode::SeekMax) {
                if (v > cand_val) {
                    cand_val = v;
                    cand_idx = i;
                }
                if (v <= cand_val - h) {
                    emit(cand_idx, false, true);
                    mode = Mode::SeekMin;
                    cand_idx = i;
                    cand_val = v;
                    continue;
                }
                break;
            }
            // SeekMin
            if (v < cand_val) {
                cand_val = v;
                cand_idx = i;
            }
            if (v >= cand_val + h) {
                emit(cand_idx, true, true);
                mode = Mode::SeekMax;
                cand_idx = i;
                cand_val = v;
                continue;
            }
            break;
        }
        if (v > pref_max) pref_max = v;
        if (v < pref_min) pref_min = v;
    }

    // Trailing candidate: no right witness inside the window.
    if (mode == Mode::SeekMax)
        emit(cand_idx, false, false);
    else if (mode == Mode::SeekMin)
        emit(cand_idx, true, false);

    out.slopes.reserve(out.extrema.empty() ? 0 : out.extrema.size() - 1);
    for (size_t k = 0; k + 1 < out.extrema.size(); ++k) {
        Slope s;
        s.height = std::fabs(out.extrema[k + 1].value - out.extrema[k].value);
        s.excess = s.height - h;
        s.certified = out.extrema[k].certified && out.extrema[k + 1].certified;
        out.slopes.push_back(s);
    }
    return out;
}

std::string decomposition_to_csv(const ExtremaDecomposition& d) {
    std::string out = "site,kind,value,height,excess,certified\n";
    for (size_t k = 0; k < d.extrema.size(); ++k) {
        const Extremum& e = d.extrema[k];
        out += std::to_string(e.site);
        out += e.is_min ? ",min," : ",max,";
        append_csv_double(out, e.value);
        if (k < d.slopes.size()) {
            out += ',';
            append_csv_double(out, d.slopes[k].height);
            out += ',';
            append_csv_double(out, d.slopes[k].excess);
        } else {
            out += ",,";  // last extremum starts no slope
        }
        out += e.certified ? ",1\n" : ",0\n";
    }
    return out;
}

// ---------------- Valley labels ----------------

ValleyLandmarks valley_landmarks(const ExtremaDecomposition& d) {
    std::vector<Extremum> cert;
    for (const Extremum& e : d.extrema)
        if (e.certified) cert.push_back(e);
    ValleyLandmarks lm;
    bool any_min = false;
    for (const Extremum& e : cert) any_min = any_min || e.is_min;
    if (!any_min) throw LandscapeUndetermined("valley_landmarks: no certified minimum in window");

    for (size_t k = 0; k + 1 < cert.size(); ++k)
        if (cert[k].is_min == cert[k + 1].is_min)
            throw std::logic_error("valley_landmarks: certified extrema do not alternate");

    // anchor position: last extremum at a site <= 0 has x-index 0
    int64_t k0 = -1;
    for (size_t k = 0; k < cert.size(); ++k)
        if (cert[k].site <= 0) k0 = static_cast<int64_t>(k);
    // all extrema right of the origin: treat the first as x_1
    const int64_t anchor = k0 >= 0 ? k0 : -1;

    for (size_t k = 0; k < cert.size(); ++k) {
        const int64_t xi = static_cast<int64_t>(k) - anchor;  // x-index of this extremum
        if (cert[k].is_min) {
            const bool min_on_even = (xi % 2 == 0);
            // b_j = x_{2j} when the anchor parity puts minima on even indices
            const int64_t j = min_on_even ? floordiv2(xi) : floordiv2(xi - 1);
            lm.minima.emplace(static_cast<int>(j), cert[k]);
        }
    }
    // M_j sits immediately after b_j in the alternating list
    for (size_t k = 0; k + 1 < cert.size(); ++k) {
        if (cert[k].is_min && !cert[k + 1].is_min) {
            const int64_t xi = static_cast<int64_t>(k) - anchor;
            const int64_t j = (xi % 2 == 0) ? floordiv2(xi) : floordiv2(xi - 1);
            lm.maxima.emplace(static_cast<int>(j), cert[k + 1]);
        }
    }
    // the maximum before the first minimum, if certified, is M_{j_first - 1}
    if (!lm.minima.empty()) {
        const int jf = lm.minima.begin()->first;
        for (size_t k = 0; k + 1 < cert.size(); ++k) {
            if (!cert[k].is_min && cert[k + 1].is_min &&
                cert[k + 1].site == lm.minima.begin()->second.site) {
                lm.maxima.emplace(jf - 1, cert[k]);
                break;
            }
        }
    }
    return lm;
}

// ---------------- Near-bottom sets ----------------

namespace {

struct CertifiedValleys {
    PathWindow path;
    ExtremaDecomposition decomp;
    ValleyLandmarks lm;
};

// Expand a centered window until the requested b_j / M_j labels certify.
CertifiedValleys certify_valleys(const Environment& env, double h, int b_lo, int b_hi,
                                 int M_lo, int M_hi, int64_t start_halfwidth,
                                 int64_t max_halfwidth) {
    int64_t W = std::max<int64_t>(64, start_halfwidth);
    for (;;) {
        CertifiedValleys cv;
        cv.path = potential_window(env, -W, W);
        cv.decomp = h_extrema(cv.path, h);
        bool ok = true;
        try {
            cv.lm = valley_landmarks(cv.decomp);
        } catch (const LandscapeUndetermined&) {
            ok = false;
        }
        if (ok) {
            for (int j = b_lo; j <= b_hi && ok; ++j) ok = cv.lm.has_b(j);
            for (int j = M_lo; j <= M_hi && ok; ++j) ok = cv.lm.has_M(j);
        }
        if (ok) return cv;
        if (W >= max_halfwidth)
            throw LandscapeUndetermined(
                "landscape undetermined: window cap reached before the required valleys certified");
        W = std::min(max_halfwidth, W * 2);
    }
}

}  // namespace

bool XiSet::contains(int64_t x) const {
    return std::binary_search(sites.begin(), sites.end(), x);
}

XiSet xi_set(const Environment& env, int64_t n, const XiParams& params) {
    if (n < 3) throw std::invalid_argument("xi_set: n must be at least 3");
    const double ln_n = std::log(static_cast<double>(n));
    const double lln = std::log(ln_n);
    const double h = ln_n - 5.0 * params.C2 * lln;
    if (!(h > 0.0))
        throw std::domain_error("xi_set: log n - 5*C2*loglog n is not positive at this n");
    const double slack = params.C2 * lln;

    const auto start = static_cast<int64_t>(std::pow(ln_n, params.alpha));
    CertifiedValleys cv =
        certify_valleys(env, h, -2, 2, -3, 2, start, params.max_halfwidth);

    XiSet xi;
    xi.n = n;
    xi.h = h;
    xi.slack = slack;
    for (int j = -2; j <= 2; ++j) xi.b_sites[j] = cv.lm.b(j);
    for (int j = -3; j <= 2; ++j) xi.M_sites[j] = cv.lm.M(j);

    for (int j = -2; j <= 2; ++j) {
        const double cutoff = cv.path.at(cv.lm.b(j)) + slack;
        for (int64_t x = cv.lm.M(j - 1); x <= cv.lm.M(j); ++x)
            if (cv.path.at(x) <= cutoff) xi.sites.push_back(x);
    }
    std::sort(xi.sites.begin(), xi.sites.end());
    xi.sites.erase(std::unique(xi.sites.begin(), xi.sites.end()), xi.sites.end());
    return xi;
}

std::pair<int64_t, int64_t> m_pm(const Environment& env, int64_t n, int j,
                                 const XiParams& params) {
    if (n < 3) throw std::invalid_argument("m_pm: n must be at least 3");
    const double ln_n = std::log(static_cast<double>(n));
    const double lln = std::log(ln_n);
    const double h = ln_n - 5.0 * params.C2 * lln;
    if (!(h > 0.0))
        throw std::domain_error("m_pm: log n - 5*C2*loglog n is not positive at this n");
    const double slack = params.C2 * lln;

    const auto start = static_cast<int64_t>(std::pow(ln_n, params.alpha));
    CertifiedValleys cv = certify_valleys(env, h, j - 1, j + 1, j - 1, j,
                                          start, params.max_halfwidth);

    const double cutoff = cv.path.at(cv.lm.b(j)) + slack;

    int64_t m_minus = cv.lm.b(j - 1);
    for (int64_t k = cv.lm.M(j - 1); k >= cv.lm.b(j - 1); --k) {
        if (cv.path.at(k) <= cutoff) {
            m_minus = std::max(m_minus, k);
            break;
        }
    }
    int64_t m_plus = cv.lm.b(j + 1);
    for (int64_t k = cv.lm.M(j); k <= cv.lm.b(j + 1); ++k) {
        if (cv.path.at(k) <= cutoff) {
            m_plus = std::min(m_plus, k);
            break;
        }
    }
    return {m_minus, m_plus};
}

// ---------------- Central landmarks ----------------

CentralLandmarks central_landmarks(const Environment& env, int64_t N, double eps1,
                                   int64_t max_scan) {
    if (N < 3) throw std::invalid_argument("central_landmarks: N must be at least 3");
    const double rise = (1.0 + eps1) * std::log(static_cast<double>(N));

    CentralLandmarks lm;
    {
        double run_min = 0.0;
        int64_t argmin = 0;  // latest site attaining the running minimum
        bool found = false;
        for (int64_t i = 1; i <= max_scan; ++i) {
            const double v = env.potential(i);
            if (v <= run_min) {
                run_min = v;
                argmin = i;
            }
            if (v - run_min >= rise) {
                lm.theta_R = i;
                lm.beta_R = argmin;
                found = true;
                break;
            }
        }
        if (!found)
            throw LandscapeUndetermined("central_landmarks: right rise not reached in scan range");
    }
    {
        double run_min = 0.0;
        int64_t argmin = 0;  // leftmost site attaining the running minimum
        bool found = false;
        for (int64_t i = -1; i >= -max_scan; --i) {
            const double v = env.potential(i);
            if (v - run_min >= rise) {
                lm.theta_L = i;
                lm.beta_L = argmin;
                found = true;
                break;
            }
            if (v <= run_min) {
                run_min = v;
                argmin = i;
            }
        }
        if (!found)
            throw LandscapeUndetermined("central_landmarks: left rise not reached in scan range");
    }
    return lm;
}

// ---------------- Environment screening ----------------

GoodEnvReport delta_checks(const Environment& env, int64_t N, const EpsVector& eps,
                           int64_t max_halfwidth) {
    if (N < 3) throw std::invalid_argument("delta_checks: N must be at least 3");
    const double ln_n = std::log(static_cast<double>(N));
    const double h1 = (1.0 - 2.0 * eps.e1) * ln_n;
    if (!(h1 > 0.0)) throw std::invalid_argument("delta_checks: eps1 too large");

    GoodEnvReport rep;
    rep.eps = eps;

    // expand until the four anchor extrema x_{-1}, x_0, x_1, x_2 certify
    int64_t W = std::max<int64_t>(64, static_cast<int64_t>(4.0 * ln_n * ln_n));
    PathWindow path;
    std::vector<Extremum> cert;
    int64_t k0 = -1;
    for (;;) {
        path = potential_window(env, -W, W);
        const ExtremaDecomposition d = h_extrema(path, h1);
        cert.clear();
        for (const Extremum& e : d.extrema)
            if (e.certified) cert.push_back(e);
        k0 = -1;
        for (size_t k = 0; k < cert.size(); ++k)
            if (cert[k].site <= 0) k0 = static_cast<int64_t>(k);
        if (k0 >= 1 && k0 + 2 < static_cast<int64_t>(cert.size())) break;
        if (W >= max_halfwidth)
            throw LandscapeUndetermined(
                "delta_checks: window cap reached before anchor extrema certified");
        W = std::min(max_halfwidth, W * 2);
    }

    const Extremum& xm1 = cert[k0 - 1];
    const Extremum& x0 = cert[k0];
    const Extremum& x1 = cert[k0 + 1];
    const Extremum& x2 = cert[k0 + 2];
    rep.side_right = x1.is_min;
    // store the triple (left wall, valley bottom, right wall) around the
    // bottom that b_hat will round to; which consecutive extrema play those
    // roles depends on whether the minimum straddling the origin is x1 or x0
    if (rep.side_right) {
        rep.xhat0 = x0.site;
        rep.xhat1 = x1.site;
        rep.xhat2 = x2.site;
    } else {
        rep.xhat0 = xm1.site;
        rep.xhat1 = x0.site;
        rep.xhat2 = x1.site;
    }

    const double need_height = (1.0 + 2.0 * eps.e1) * ln_n;
    rep.d1 = std::fabs(x0.value - xm1.value) >= need_height &&
             std::fabs(x1.value - x0.value) >= need_height &&
             std::fabs(x2.value - x1.value) >= need_height;

    auto range_max = [&](int64_t a, int64_t b) {
        double m = -kInf;
        for (int64_t x = a; x <= b; ++x) m = std::max(m, path.at(x));
        return m;
    };
    auto range_min = [&](int64_t a, int64_t b) {
        double m = kInf;
        for (int64_t x = a; x <= b; ++x) m = std::min(m, path.at(x));
        return m;
    };

    if (rep.side_right) {
        rep.d2 = range_max(0, x1.site) < x0.value - eps.e2 * ln_n;
        rep.d5 = range_min(x0.site, 0) > x1.value + eps.e5 * ln_n;
    } else {
        rep.d2 = range_max(x0.site, 0) < x1.value - eps.e2 * ln_n;
        rep.d5 = range_min(0, x1.site) > x0.value + eps.e5 * ln_n;
    }

    const double spread = ln_n * ln_n / eps.e3;
    rep.d3 = static_cast<double>(xm1.site) >= -spread && static_cast<double>(x2.site) <= spread;

    rep.d4 = std::fabs(x0.value) > eps.e4 * ln_n && std::fabs(x1.value) > eps.e4 * ln_n;

    rep.central = central_landmarks(env, N, eps.e1, max_halfwidth);

    {
        const double vR = env.potential(rep.central.beta_R);
        double sum = 0.0;
        for (int64_t i = 0; i < rep.central.theta_R; ++i)
            sum += std::exp(-(env.potential(i) - vR));
        bool okR = sum <= 1.0 / eps.e6;
        const double vL = env.potential(rep.central.beta_L);
        sum = 0.0;
        for (int64_t i = rep.central.theta_L; i <= -1; ++i)
            sum += std::exp(-(env.potential(i) - vL));
        rep.d6 = okR && sum <= 1.0 / eps.e6;
    }

    rep.b_hat = 2 * floordiv2(rep.side_right ? rep.central.beta_R : rep.central.beta_L);

    // nearest sites around b_hat where the path has risen (1-eps1)*log N
    const double wall = (1.0 - eps.e1) * ln_n;
    const double vb = env.potential(rep.b_hat);
    rep.L_found = false;
    int64_t lminus = 0, lplus = 0;
    bool found_minus = false, found_plus = false;
    for (int64_t k = rep.b_hat - 1; k >= path.lo; --k) {
        if (path.contains(k) && path.at(k) - vb >= wall) {
            lminus = k;
            found_minus = true;
            break;
        }
    }
    for (int64_t k = rep.b_hat + 1; k <= path.hi(); ++k) {
        if (path.contains(k) && path.at(k) - vb >= wall) {
            lplus = k;
            found_plus = true;
            break;
        }
    }
    rep.L_found = found_minus && found_plus;
    rep.L_minus = lminus;
    rep.L_plus = lplus;

    return rep;
}

std::string GoodEnvReport::to_json() const {
    nlohmann::json j;
    j["flags"] = {{"d0", d0}, {"d1", d1}, {"d2", d2}, {"d3", d3},
                  {"d4", d4}, {"d5", d5}, {"d6", d6}};
    j["all"] = all();
    j["side"] = side_right ? "right" : "left";
    j["theta_R"] = central.theta_R;
    j["beta_R"] = central.beta_R;
    j["theta_L"] = central.theta_L;
    j["beta_L"] = central.beta_L;
    j["b_hat"] = b_hat;
    j["xhat0"] = xhat0;
    j["xhat1"] = xhat1;
    j["xhat2"] = xhat2;
    j["L_found"] = L_found;
    j["L_minus"] = L_minus;
    j["L_plus"] = L_plus;
    j["eps"] = {eps.e1, eps.e2, eps.e3, eps.e4, eps.e5, eps.e6};
    return j.dump(2);
}

}  // namespace sinai
