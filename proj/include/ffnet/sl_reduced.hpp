#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "cubic.hpp"
#include "errors.hpp"
#include "locus.hpp"
#include "tolerances.hpp"

namespace ffnet {

/// z1' = (mu + i omega) z1 - |z1|^2 z1
/// z2' = (mu + eps + i(omega + sigma)) z2 - (1 + i gamma)|z2|^2 z2 - lambda z1
struct SLParams {
    double mu = 0.0;
    double eps = 0.0;
    double omega = 1.0;
    double sigma = 0.0;
    double lambda = 1.0;
    double gamma = 0.0;
};

enum class ReductionCase { Plus, Minus, Zero };

inline const char* to_string(ReductionCase c) {
    switch (c) {
    case ReductionCase::Plus: return "Plus";
    case ReductionCase::Minus: return "Minus";
    case ReductionCase::Zero: return "Zero";
    }
    return "?";
}

/// Co-rotating, rescaled second cell: v' = (mu_t g(x) + i(sigma_t - mu_t gamma x)) v - 1, x = |v|^2,
/// with g = 1 - x (Plus), -(1 + x) (Minus), -x (Zero).
struct ReducedParams {
    double mu_t = 1.0;
    double sigma_t = 0.0;
    double gamma = 0.0;
    ReductionCase rcase = ReductionCase::Plus;
    double time_scale = 1.0; // tau = time_scale * t
    double amp_scale = 1.0;  // |u| = amp_scale * |v|
};

inline ReducedParams reduced_plus(double sigma_t, double mu_t, double gamma = 0.0) {
    return {mu_t, sigma_t, gamma, ReductionCase::Plus, 1.0, 1.0};
}

inline ReducedParams reduce(const SLParams& p) {
    if (!(p.mu > 0.0)) throw error(errc::invalid_params, "reduction needs mu > 0");
    if (!(p.lambda > 0.0)) throw error(errc::invalid_params, "reduction needs lambda > 0");
    const double s = p.mu + p.eps;
    ReducedParams r;
    r.gamma = p.gamma;
    if (std::abs(s) <= tolerances::zero_case * p.mu) {
        r.rcase = ReductionCase::Zero;
        r.mu_t = p.mu / p.lambda;
        r.sigma_t = p.sigma / p.lambda;
        r.amp_scale = std::sqrt(p.mu);
        r.time_scale = p.lambda;
        return r;
    }
    const double a = std::abs(s);
    const double root = std::sqrt(a / p.mu);
    r.rcase = s > 0.0 ? ReductionCase::Plus : ReductionCase::Minus;
    r.mu_t = a / p.lambda * root;
    r.sigma_t = p.sigma / p.lambda * root;
    r.amp_scale = std::sqrt(a);
    r.time_scale = p.lambda / root;
    return r;
}

namespace detail {
/// g(x) = g0 + g1 x for the three reduction cases.
inline std::array<double, 2> growth_coeffs(ReductionCase c) {
    switch (c) {
    case ReductionCase::Plus: return {1.0, -1.0};
    case ReductionCase::Minus: return {-1.0, -1.0};
    case ReductionCase::Zero: return {0.0, -1.0};
    }
    return {1.0, -1.0};
}
} // namespace detail

inline std::array<double, 2> reduced_vector_field(const ReducedParams& rp, double vR, double vI) {
    const auto [g0, g1] = detail::growth_coeffs(rp.rcase);
    const double x = vR * vR + vI * vI;
    const double a = rp.mu_t * (g0 + g1 * x);
    const double w = rp.sigma_t - rp.mu_t * rp.gamma * x;
    return {a * vR - w * vI - 1.0, a * vI + w * vR};
}

inline std::array<std::array<double, 2>, 2> reduced_jacobian(const ReducedParams& rp, double vR, double vI) {
    const auto [g0, g1] = detail::growth_coeffs(rp.rcase);
    const double m = rp.mu_t, gam = rp.gamma;
    const double x = vR * vR + vI * vI;
    const double a = m * (g0 + g1 * x);
    const double w = rp.sigma_t - m * gam * x;
    return {{{a + 2 * m * g1 * vR * vR + 2 * m * gam * vR * vI, 2 * m * g1 * vR * vI - w + 2 * m * gam * vI * vI},
             {2 * m * g1 * vR * vI + w - 2 * m * gam * vR * vR, a + 2 * m * g1 * vI * vI - 2 * m * gam * vR * vI}}};
}

/// Cubic in x = |v|^2 whose positive roots are the equilibrium amplitudes.
inline Cubic amplitude_cubic(const ReducedParams& rp) {
    const auto [g0, g1] = detail::growth_coeffs(rp.rcase);
    const double m = rp.mu_t, s = rp.sigma_t, gam = rp.gamma;
    return {m * m * (g1 * g1 + gam * gam), 2.0 * m * m * g0 * g1 - 2.0 * s * m * gam, m * m * g0 * g0 + s * s, -1.0};
}

struct DetTrace {
    double det = 0.0;
    double tr = 0.0;
};

/// Jacobian determinant and trace at any point with |v|^2 = x (they depend on x only).
inline DetTrace reduced_det_trace(const ReducedParams& rp, double x) {
    const auto [g0, g1] = detail::growth_coeffs(rp.rcase);
    const double m = rp.mu_t;
    const double g = g0 + g1 * x;
    const double w = rp.sigma_t - m * rp.gamma * x;
    return {m * m * g * (g + 2.0 * g1 * x) + w * (w - 2.0 * m * rp.gamma * x), 2.0 * m * (g0 + 2.0 * g1 * x)};
}

struct ReducedEquilibrium {
    double vR = 0.0;
    double vI = 0.0;
    double x = 0.0;
    double detJ = 0.0;
    double trJ = 0.0;
    bool stable = false;
    bool hyperbolic = false;
};

inline bool is_stable(const DetTrace& dt, double tol = tolerances::hyp) { return dt.det > tol && dt.tr < -tol; }
inline bool is_hyperbolic(const DetTrace& dt, double tol = tolerances::hyp) {
    return std::abs(dt.det) > tol && !(dt.det > 0.0 && std::abs(dt.tr) <= tol);
}

/// Equilibria of the reduced system, ascending in |v|^2.
inline std::vector<ReducedEquilibrium> equilibria_reduced(const ReducedParams& rp) {
    const auto [g0, g1] = detail::growth_coeffs(rp.rcase);
    const RealRoots roots = solve_cubic_real(amplitude_cubic(rp));
    std::vector<ReducedEquilibrium> out;
    for (double x : roots.roots) {
        if (!(x > 0.0)) continue;
        const double a = rp.mu_t * (g0 + g1 * x);
        const double w = rp.sigma_t - rp.mu_t * rp.gamma * x;
        double det = a * a + w * w;
        if (det < 1e-14) det = 1.0 / x; // equals a^2 + w^2 exactly at a root
        ReducedEquilibrium e;
        e.vR = a / det;
        e.vI = -w / det;
        e.x = x;
        const DetTrace dt = reduced_det_trace(rp, x);
        e.detJ = dt.det;
        e.trJ = dt.tr;
        e.stable = is_stable(dt);
        e.hyperbolic = is_hyperbolic(dt);
        out.push_back(e);
    }
    if (out.empty()) throw error(errc::internal, "amplitude cubic has no positive root");
    return out;
}

/// Curve in the (sigma_t, mu_t) half-plane on which an equilibrium has |v|^2 = x.
/// Sampled in polar angle, so points run from sigma_t > 0 to sigma_t < 0.
inline LocusCurve level_set_ellipse(double x, double gamma, int n_pts, double mu_max = 4.0) {
    if (!(x > 0.0)) throw error(errc::invalid_params, "level must be positive");
    if (n_pts < 2) throw error(errc::invalid_params, "need at least two points");
    LocusCurve c{"level-set", "sigma_t", "mu_t", "x", {}};
    if (std::abs(x - 1.0) < tolerances::curve) {
        for (int seg = 0; seg < 2; ++seg) {
            const double off = seg == 0 ? 1.0 : -1.0;
            for (int k = 0; k < n_pts; ++k) {
                const double mu = mu_max * (k + 0.5) / n_pts;
                c.points.push_back({gamma * mu + off, mu, seg, x});
            }
        }
        return c;
    }
    const double m11 = x, m12 = -gamma * x * x, m22 = x * (1 - x) * (1 - x) + gamma * gamma * x * x * x;
    for (int k = 0; k < n_pts; ++k) {
        const double phi = std::numbers::pi * (k + 0.5) / n_pts;
        const double cs = std::cos(phi), sn = std::sin(phi);
        const double r = 1.0 / std::sqrt(m11 * cs * cs + 2 * m12 * cs * sn + m22 * sn * sn);
        c.points.push_back({r * cs, r * sn, 0, x});
    }
    return c;
}

/// Parametric fold curve (det J = 0, gamma = 0) for x in [1/3, 1): returns (sigma_t >= 0, mu_t).
inline std::array<double, 2> det_zero_curve(double x) {
    return {std::sqrt((3.0 * x - 1.0) / (2.0 * x * x)), 1.0 / (x * std::sqrt(2.0 * (1.0 - x)))};
}

inline LocusCurve det_zero_locus(int n_pts, double x_max = 0.99) {
    LocusCurve c{"det-zero", "sigma_t", "mu_t", "x", {}};
    for (int seg = 0; seg < 2; ++seg)
        for (int k = 0; k < n_pts; ++k) {
            const double x = 1.0 / 3.0 + (x_max - 1.0 / 3.0) * k / (n_pts - 1);
            const auto [s, m] = det_zero_curve(x);
            c.points.push_back({seg == 0 ? s : -s, m, seg, x});
        }
    return c;
}

namespace landmarks {
inline const double fold_start_mu = 1.5 * std::sqrt(3.0);                  // (0, 3 sqrt3 / 2)
inline const double cusp_sigma = 3.0 / (2.0 * std::sqrt(2.0));            // x = 2/3
inline const double cusp_mu = 3.0 * std::sqrt(3.0) / (2.0 * std::sqrt(2.0));
inline const double torus_switch_sigma = std::sqrt(10.0) / 3.0;           // x = 3/4
inline const double torus_switch_mu = 4.0 * std::sqrt(2.0) / 3.0;

/// Value of mu_t^2/8 + sigma_t^2/2 - 1; negative inside the trace-zero ellipse.
inline double trace_ellipse(double sigma_t, double mu_t) { return mu_t * mu_t / 8.0 + sigma_t * sigma_t / 2.0 - 1.0; }

/// Fold-curve amplitude on the lower branch, x in [1/3, 2/3], as a function of |sigma_t| <= cusp_sigma.
inline double lower_fold_x(double s) { return 2.0 / (3.0 + std::sqrt(std::max(0.0, 9.0 - 8.0 * s * s))); }
/// Upper branch, x in [2/3, 1); >= 1 means the branch is absent at this sigma.
inline double upper_fold_x(double s) {
    if (s == 0.0) return INFINITY;
    return (3.0 + std::sqrt(std::max(0.0, 9.0 - 8.0 * s * s))) / (4.0 * s * s);
}
} // namespace landmarks

enum class SLRegionTag { UniqueStable, TwoStableOneUnstable, OneStableTwoUnstable, ThreeNoneStable, UniqueUnstableTorus };

inline const char* to_string(SLRegionTag t) {
    switch (t) {
    case SLRegionTag::UniqueStable: return "UniqueStable";
    case SLRegionTag::TwoStableOneUnstable: return "TwoStableOneUnstable";
    case SLRegionTag::OneStableTwoUnstable: return "OneStableTwoUnstable";
    case SLRegionTag::ThreeNoneStable: return "ThreeNoneStable";
    case SLRegionTag::UniqueUnstableTorus: return "UniqueUnstableTorus";
    }
    return "?";
}

struct SLRegion {
    SLRegionTag tag = SLRegionTag::UniqueStable;
    int n_equilibria = 1;
    int n_stable = 1;
    bool boundary = false;
};

inline SLRegionTag region_tag_for(int n_equilibria, int n_stable) {
    if (n_equilibria <= 1) return n_stable > 0 ? SLRegionTag::UniqueStable : SLRegionTag::UniqueUnstableTorus;
    if (n_stable >= 2) return SLRegionTag::TwoStableOneUnstable;
    return n_stable == 1 ? SLRegionTag::OneStableTwoUnstable : SLRegionTag::ThreeNoneStable;
}

/// Region from the equilibria themselves; valid for every gamma.
inline SLRegion classify_region_sl_counts(const ReducedParams& rp) {
    const auto eqs = equilibria_reduced(rp);
    SLRegion r;
    r.n_equilibria = static_cast<int>(eqs.size());
    r.n_stable = static_cast<int>(std::count_if(eqs.begin(), eqs.end(), [](const auto& e) { return e.stable; }));
    r.boundary = std::any_of(eqs.begin(), eqs.end(), [](const auto& e) { return !e.hyperbolic; }) ||
                 solve_cubic_real(amplitude_cubic(rp)).has_multiple_root();
    r.tag = region_tag_for(r.n_equilibria, r.n_stable);
    return r;
}

/// Region from the closed-form gamma = 0 boundary curves: the fold curve bounds the
/// three-equilibria cusp, the trace ellipse and the line |sigma_t| = 1 decide stability.
inline SLRegion classify_region_sl_analytic(double sigma_t, double mu_t) {
    using namespace landmarks;
    const double s = std::abs(sigma_t), m = mu_t;
    const double tol = tolerances::curve;
    auto fold_mu = [](double x) { return det_zero_curve(x)[1]; };

    const double E = trace_ellipse(s, m);
    bool three = false;
    bool boundary = std::abs(E) <= tol || std::abs(s - 1.0) <= tol;
    if (s <= cusp_sigma) {
        const double xl = lower_fold_x(s), xu = upper_fold_x(s);
        const double mu_lo = fold_mu(xl);
        const double mu_hi = xu < 1.0 ? fold_mu(xu) : INFINITY;
        three = m > mu_lo && m < mu_hi;
        boundary = boundary || std::abs(m - mu_lo) <= tol || std::abs(m - mu_hi) <= tol ||
                   std::abs(s - cusp_sigma) <= tol;
    }

    SLRegion r;
    r.boundary = boundary;
    r.n_equilibria = three ? 3 : 1;
    if (!three) r.n_stable = (s <= 1.0 || E < 0.0) ? 1 : 0;
    else if (s <= 1.0) r.n_stable = 1;
    else r.n_stable = E < 0.0 ? 2 : 1;
    r.tag = region_tag_for(r.n_equilibria, r.n_stable);
    return r;
}

inline SLRegion classify_region_sl(const ReducedParams& rp) {
    if (rp.rcase != ReductionCase::Plus) {
        SLRegion r;
        r.boundary = false;
        return r;
    }
    if (rp.gamma == 0.0) return classify_region_sl_analytic(rp.sigma_t, rp.mu_t);
    return classify_region_sl_counts(rp);
}

enum class TorusBirth { SaddleNode, Hopf, Boundary };

inline const char* to_string(TorusBirth t) {
    switch (t) {
    case TorusBirth::SaddleNode: return "SaddleNode";
    case TorusBirth::Hopf: return "Hopf";
    case TorusBirth::Boundary: return "Boundary";
    }
    return "?";
}

/// Mechanism by which the torus appears when sigma_t crosses the stability boundary.
inline TorusBirth torus_birth_type(double mu_t) {
    const double d = mu_t - landmarks::torus_switch_mu;
    if (std::abs(d) <= tolerances::curve) return TorusBirth::Boundary;
    return d > 0.0 ? TorusBirth::SaddleNode : TorusBirth::Hopf;
}

/// Determinant and trace of the co-rotating second-cell Jacobian in unscaled variables.
inline DetTrace unreduced_stability(double uR, double uI, const SLParams& p) {
    const double x = uR * uR + uI * uI;
    const double s = p.mu + p.eps;
    return {(s - x) * (s - 3 * x) + (p.sigma - p.gamma * x) * (p.sigma - 3 * p.gamma * x), 2 * (s - 2 * x)};
}

} // namespace ffnet
