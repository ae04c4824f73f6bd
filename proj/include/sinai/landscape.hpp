#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sinai/env.hpp"

namespace sinai {

// Raised when a requested landscape feature cannot be certified within the
// allowed window (the answer would depend on sites outside it).
class LandscapeUndetermined : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------- Path windows ----------------

struct PathWindow {
    int64_t lo = 0;
    std::vector<double> values;  // values[i] = w(lo + i)

    int64_t hi() const { return lo + static_cast<int64_t>(values.size()) - 1; }
    bool contains(int64_t x) const { return x >= lo && x <= hi(); }
    double at(int64_t x) const { return values[static_cast<size_t>(x - lo)]; }
};

PathWindow potential_window(const Environment& env, int64_t lo, int64_t hi);

// ---------------- h-extrema ----------------

struct Extremum {
    int64_t site = 0;
    double value = 0.0;
    bool is_min = false;
    // An extremum is certified when both witnesses of the defining test lie
    // inside the window; boundary candidates whose status depends on unseen
    // sites are kept but flagged.
    bool certified = false;
};

struct Slope {
    double height = 0.0;  // |w(x_{i+1}) - w(x_i)|
    double excess = 0.0;  // height - h
    bool certified = false;
};

struct ExtremaDecomposition {
    double h = 0.0;
    std::vector<Extremum> extrema;  // alternating kinds, sites increasing
    std::vector<Slope> slopes;      // slopes[i] joins extrema[i] and extrema[i+1]
};

// Single left-to-right scan. A minimum candidate is emitted once the path has
// risen h above it, a maximum candidate once the path has dropped h below it;
// value ties resolve to the earliest site. The trailing candidate (no right
// witness yet) is appended uncertified.
ExtremaDecomposition h_extrema(const PathWindow& path, double h);

std::string decomposition_to_csv(const ExtremaDecomposition& d);

// ---------------- Valley labels ----------------

// Certified minima b_j and maxima M_j indexed so that b_0 is the first
// minimum at or right of the anchor pair x_0 <= 0 < x_1; M_j is the unique
// certified maximum between b_j and b_{j+1}.
struct ValleyLandmarks {
    std::map<int, Extremum> minima;  // j -> b_j
    std::map<int, Extremum> maxima;  // j -> M_j

    bool has_b(int j) const { return minima.count(j) != 0; }
    bool has_M(int j) const { return maxima.count(j) != 0; }
    int64_t b(int j) const { return minima.at(j).site; }
    int64_t M(int j) const { return maxima.at(j).site; }
};

ValleyLandmarks valley_landmarks(const ExtremaDecomposition& d);

// ---------------- Near-bottom sets ----------------

struct XiParams {
    double C2 = 8.0;
    double alpha = 3.0;               // initial half-width (log n)^alpha
    int64_t max_halfwidth = 1 << 22;  // expansion cap
};

struct XiSet {
    int64_t n = 0;
    double h = 0.0;      // log n - 5*C2*loglog n
    double slack = 0.0;  // C2*loglog n
    std::map<int, int64_t> b_sites;
    std::map<int, int64_t> M_sites;
    std::vector<int64_t> sites;  // sorted union over the five central valleys

    bool contains(int64_t x) const;
};

// Sites within `slack` of their valley bottom over the five valleys around
// the origin. The window expands geometrically until valleys -2..2 certify.
XiSet xi_set(const Environment& env, int64_t n, const XiParams& params);

// Boundary pair (M_j^-, M_j^+): nearest sites beyond M_{j-1} (left) and M_j
// (right) at which the path dips back to V(b_j) + slack, clamped to the
// neighboring valley bottoms.
std::pair<int64_t, int64_t> m_pm(const Environment& env, int64_t n, int j,
                                 const XiParams& params);

// ---------------- Central landmarks and environment screening ----------------

struct CentralLandmarks {
    int64_t theta_R = 0;
    int64_t beta_R = 0;
    int64_t theta_L = 0;
    int64_t beta_L = 0;
};

// theta: first site (per direction) where the path has risen (1+eps1)*log N
// above its running minimum from the origin; beta: site of that minimum
// (right side keeps the latest tie, left side the leftmost).
CentralLandmarks central_landmarks(const Environment& env, int64_t N, double eps1,
                                   int64_t max_scan);

struct EpsVector {
    double e1 = 0.04, e2 = 0.02, e3 = 0.05, e4 = 0.02, e5 = 0.02, e6 = 0.05;
};

struct GoodEnvReport {
    bool d0 = true;  // continuum-approximation flag; holds by construction here
    bool d1 = false, d2 = false, d3 = false, d4 = false, d5 = false, d6 = false;
    bool side_right = false;  // anchor pattern: x_1 is a minimum
    CentralLandmarks central;
    int64_t b_hat = 0;
    // certified valley around b_hat: walls at xhat0 and xhat2, bottom at
    // xhat1, with xhat0 <= 0
    int64_t xhat0 = 0, xhat1 = 0, xhat2 = 0;
    bool L_found = false;
    int64_t L_minus = 0, L_plus = 0;
    EpsVector eps;

    bool all() const { return d0 && d1 && d2 && d3 && d4 && d5 && d6; }
    std::string to_json() const;
};

GoodEnvReport delta_checks(const Environment& env, int64_t N, const EpsVector& eps,
                           int64_t max_halfwidth = 1 << 22);

}  // namespace sinai
