#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cubic.hpp"
#include "errors.hpp"
#include "locus.hpp"
#include "ode.hpp"
#include "tolerances.hpp"

namespace ffnet {

/// dx/dt = mu x - x^3,  dy/dt = (mu+eps) y - y^3 - lambda x
struct PitchforkParams {
    double mu = 0.0;
    double eps = 0.0;
    double lambda = 1.0;
};

enum class Stability { StableNode, Saddle, Source, NonHyperbolic };

inline const char* to_string(Stability s) {
    switch (s) {
    case Stability::StableNode: return "StableNode";
    case Stability::Saddle: return "Saddle";
    case Stability::Source: return "Source";
    case Stability::NonHyperbolic: return "NonHyperbolic";
    }
    return "?";
}

/// Class of a fixed point with real eigenvalues.
template <class Range>
inline Stability classify_real_spectrum(const Range& eigs, double tol = tolerances::hyp) {
    bool any_neg = false, any_pos = false, any_zero = false;
    for (double e : eigs) {
        if (e < -tol) any_neg = true;
        else if (e > tol) any_pos = true;
        else any_zero = true;
    }
    if (any_zero) return Stability::NonHyperbolic;
    if (any_neg && any_pos) return Stability::Saddle;
    return any_neg ? Stability::StableNode : Stability::Source;
}

struct Equilibrium2D {
    double x = 0.0;
    double y = 0.0;
    double eig1 = 0.0; // mu - 3x^2
    double eig2 = 0.0; // mu + eps - 3y^2
    Stability stability = Stability::NonHyperbolic;
};

inline std::array<double, 2> pitchfork_field(const PitchforkParams& p, double x, double y) {
    return {p.mu * x - x * x * x, (p.mu + p.eps) * y - y * y * y - p.lambda * x};
}

inline void require_lambda(double lambda) {
    if (!(lambda > 0.0)) throw error(errc::invalid_lambda, "lambda must be positive");
}

/// x-values of the first cell's equilibria, ascending.
inline std::vector<double> first_cell_states(double mu) {
    if (mu <= 0.0) return {0.0};
    const double r = std::sqrt(mu);
    return {-r, 0.0, r};
}

/// y-cross-section cubic for a pinned x-value.
inline Cubic y_section(const PitchforkParams& p, double x) {
    return {-1.0, 0.0, p.mu + p.eps, -p.lambda * x};
}

/// All equilibria, sorted by (x, y).
inline std::vector<Equilibrium2D> equilibria(const PitchforkParams& p) {
    require_lambda(p.lambda);
    std::vector<Equilibrium2D> out;
    for (double x : first_cell_states(p.mu)) {
        for (double y : solve_cubic_real(y_section(p, x)).roots) {
            Equilibrium2D e{x, y, p.mu - 3.0 * x * x, p.mu + p.eps - 3.0 * y * y, Stability::NonHyperbolic};
            e.stability = classify_real_spectrum(std::array{e.eig1, e.eig2});
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    return out;
}

inline int count_stable(const std::vector<Equilibrium2D>& eqs) {
    return static_cast<int>(std::count_if(eqs.begin(), eqs.end(),
                                          [](const auto& e) { return e.stability == Stability::StableNode; }));
}

enum class RegionTag {
    EpsNegPreBif,
    EpsNegPostBif,
    ZeroEpsPre,
    ZeroEpsPost,
    SmallEpsFourSink,
    SmallEpsTwoSink,
    SmallEpsPostMu2,
    LargeEps,
    MuNegOne,
    MuNegThree,
};

inline const char* to_string(RegionTag t) {
    switch (t) {
    case RegionTag::EpsNegPreBif: return "EpsNegPreBif";
    case RegionTag::EpsNegPostBif: return "EpsNegPostBif";
    case RegionTag::ZeroEpsPre: return "ZeroEpsPre";
    case RegionTag::ZeroEpsPost: return "ZeroEpsPost";
    case RegionTag::SmallEpsFourSink: return "SmallEpsFourSink";
    case RegionTag::SmallEpsTwoSink: return "SmallEpsTwoSink";
    case RegionTag::SmallEpsPostMu2: return "SmallEpsPostMu2";
    case RegionTag::LargeEps: return "LargeEps";
    case RegionTag::MuNegOne: return "MuNegOne";
    case RegionTag::MuNegThree: return "MuNegThree";
    }
    return "?";
}

struct EquilibriumCounts {
    int total = 0;
    int stable = 0;
    bool operator==(const EquilibriumCounts&) const = default;
};

struct RegionP {
    RegionTag tag = RegionTag::MuNegOne;
    EquilibriumCounts expected;
    bool boundary = false;
    bool operator==(const RegionP&) const = default;
};

/// Phase-diagram region of (mu, eps) measured in lambda units, with the case-table counts.
inline RegionP classify_region(const PitchforkParams& p) {
    require_lambda(p.lambda);
    const double m = p.mu / p.lambda, e = p.eps / p.lambda;
    const double tol = tolerances::curve;
    auto near = [tol](double v, double ref) { return std::abs(v - ref) <= tol * std::max(1.0, std::abs(ref)); };

    RegionP r;
    if (m <= 0.0) {
        r.boundary = near(m, 0.0) || near(m + e, 0.0);
        if (m + e < 0.0) {
            r.tag = RegionTag::MuNegOne;
            r.expected = {1, 1};
        } else {
            r.tag = RegionTag::MuNegThree;
            r.expected = {3, 2};
        }
        return r;
    }

    int roots_pm = 3; // real roots of each of p+ and p-
    if (near(e, 0.0)) {
        const double crit = 1.5 * std::sqrt(3.0);
        const bool pre = m < crit;
        r.tag = pre ? RegionTag::ZeroEpsPre : RegionTag::ZeroEpsPost;
        roots_pm = pre ? 1 : 3;
        r.boundary = e != 0.0 || near(m, crit);
    } else if (e < 0.0) {
        const double crit = critical_mu_roots(e, 1.0).mu.front();
        const bool pre = m < crit;
        r.tag = pre ? RegionTag::EpsNegPreBif : RegionTag::EpsNegPostBif;
        roots_pm = pre ? 1 : 3;
        r.boundary = near(m, crit);
    } else if (e < 1.0 || near(e, 1.0)) {
        const auto crit = critical_mu_roots(std::min(e, 1.0), 1.0);
        const double mu1 = crit.mu.front(), mu2 = crit.mu.back();
        if (m < mu1) {
            r.tag = RegionTag::SmallEpsFourSink;
        } else if (m < mu2) {
            r.tag = RegionTag::SmallEpsTwoSink;
            roots_pm = 1;
        } else {
            r.tag = RegionTag::SmallEpsPostMu2;
        }
        r.boundary = near(m, mu1) || near(m, mu2) || near(e, 1.0);
    } else {
        r.tag = RegionTag::LargeEps;
    }
    r.boundary = r.boundary || near(m + e, 0.0);
    r.expected.total = (m + e > 0.0 ? 3 : 1) + 2 * roots_pm;
    r.expected.stable = roots_pm == 3 ? 4 : 2;
    return r;
}

/// Coupling strength at which p+ has a double root, as a function of eps, at fixed mu.
/// aux carries the location of the double root.
inline LocusCurve saddle_node_locus(double mu, double eps_lo, double eps_hi, int n_pts) {
    if (!(mu > 0.0)) throw error(errc::invalid_mu, "mu must be positive");
    if (n_pts < 2 || !(eps_hi > eps_lo)) throw error(errc::invalid_params, "empty eps range");
    LocusCurve c{"saddle-node", "eps", "lambda", "y_double", {}};
    const double hyst = -mu;
    bool hyst_done = !(hyst >= eps_lo && hyst <= eps_hi);
    auto emit = [&](double eps) {
        const double s = mu + eps;
        c.points.push_back({eps, std::sqrt(4.0 * s * s * s / (27.0 * mu)), 0, std::sqrt(s / 3.0)});
    };
    for (int i = 0; i < n_pts; ++i) {
        const double eps = eps_lo + (eps_hi - eps_lo) * i / (n_pts - 1);
        if (!hyst_done && eps >= hyst) {
            c.points.push_back({hyst, 0.0, 0, 0.0});
            hyst_done = true;
            if (eps == hyst) continue;
        }
        if (eps < hyst) continue;
        emit(eps);
    }
    return c;
}

/// Largest inhomogeneity for which a jump of mu0 still crosses the first critical value.
inline double sensitivity_epsilon_bound(double mu0, double lambda) {
    return 3.0 * std::cbrt(mu0) * std::pow(lambda, 2.0 / 3.0) / std::cbrt(4.0);
}

struct JumpRecord {
    double mu = 0.0;
    int x_sign = 1;
    double delta_y = 0.0;
    double y_initial = 0.0;
    double y_final = 0.0;
};

struct JumpOptions {
    double dt = 1e-2;
    double t_max = 1e5;
    double tol_settle = tolerances::settle;
};

inline double pre_jump_y(double eps, int initial_y_sign) {
    return eps <= 0.0 ? 0.0 : (initial_y_sign >= 0 ? 1.0 : -1.0) * std::sqrt(eps);
}

/// Second-cell response to a sudden jump of mu with the first cell pinned at each of +-sqrt(mu).
inline std::vector<JumpRecord> jump_response(double eps, double lambda, const std::vector<double>& mu_values,
                                             int initial_y_sign, const JumpOptions& opt = {}) {
    require_lambda(lambda);
    std::vector<JumpRecord> out;
    const double y0 = pre_jump_y(eps, initial_y_sign);
    for (double mu : mu_values) {
        if (!(mu > 0.0)) throw error(errc::invalid_mu, "jump target mu must be positive");
        for (int s : {1, -1}) {
            const PitchforkParams p{mu, eps, lambda};
            const double x = s * std::sqrt(mu);
            auto f = [&](double, const State<1>& y, State<1>& dy) { dy[0] = pitchfork_field(p, x, y[0])[1]; };
            State<1> y{y0};
            double t = 0.0;
            const bool ok = integrate_until<1>(f, y, t, opt.dt, opt.t_max, [&](double, const State<1>& v) {
                return std::abs(pitchfork_field(p, x, v[0])[1]) < opt.tol_settle;
            });
            if (!ok) throw error(errc::non_convergence, "pinned jump did not settle");
            bool polished = true;
            const double y_final = detail::newton_polish(y_section(p, x), y[0], tolerances::resid, polished);
            out.push_back({mu, s, std::abs(y_final - y0), y0, y_final});
        }
    }
    return out;
}

struct Equilibrium3D {
    double x = 0.0, y = 0.0, z = 0.0;
    std::array<double, 3> eig{}; // mu - 3x^2, mu+eps - 3y^2, mu+eps - 3z^2
    Stability stability = Stability::NonHyperbolic;
};

/// Equilibria of the three-cell upgrade where cell one drives y with -lambda x and z with +lambda x.
inline std::vector<Equilibrium3D> three_cell_equilibria(const PitchforkParams& p) {
    require_lambda(p.lambda);
    std::vector<Equilibrium3D> out;
    for (double x : first_cell_states(p.mu)) {
        const auto ys = solve_cubic_real(y_section(p, x)).roots;
        const auto zs = solve_cubic_real(y_section(p, -x)).roots;
        for (double y : ys)
            for (double z : zs) {
                Equilibrium3D e{x, y, z, {p.mu - 3 * x * x, p.mu + p.eps - 3 * y * y, p.mu + p.eps - 3 * z * z},
                                Stability::NonHyperbolic};
                e.stability = classify_real_spectrum(e.eig);
                out.push_back(e);
            }
    }
    return out;
}

/// Jump magnitude the three-cell design guarantees whichever branch x takes: the larger of
/// the y and z responses, minimised over the two branches.
inline double three_cell_guaranteed_jump(double eps, double lambda, double mu, int initial_sign,
                                         const JumpOptions& opt = {}) {
    const auto r = jump_response(eps, lambda, {mu}, initial_sign, opt);
    // z under branch s behaves as y under branch -s, so both branches see the same pair
    return std::max(r[0].delta_y, r[1].delta_y);
}

} // namespace ffnet
