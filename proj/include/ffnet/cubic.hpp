#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "tolerances.hpp"

namespace ffnet {

/// c3*y^3 + c2*y^2 + c1*y + c0
struct Cubic {
    double c3 = 1.0;
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;

    double operator()(double y) const { return ((c3 * y + c2) * y + c1) * y + c0; }
    double derivative(double y) const { return (3.0 * c3 * y + 2.0 * c2) * y + c1; }

    double scale() const {
        return std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    }

    /// Classical discriminant; positive means three distinct real roots.
    double discriminant() const {
        return 18.0 * c3 * c2 * c1 * c0 - 4.0 * c2 * c2 * c2 * c0 + c2 * c2 * c1 * c1 -
               4.0 * c3 * c1 * c1 * c1 - 27.0 * c3 * c3 * c0 * c0;
    }
};

struct RealRoots {
    std::vector<double> roots;       // strictly ascending
    std::vector<int> multiplicities; // same length as roots
    bool polished = true;            // false if Newton hit its cap above tolerance

    std::size_t size() const { return roots.size(); }
    int multiplicity_of(std::size_t i) const { return multiplicities[i]; }
    bool has_multiple_root() const {
        return std::any_of(multiplicities.begin(), multiplicities.end(), [](int m) { return m > 1; });
    }
};

namespace detail {

/// Newton iteration that only accepts residual-decreasing steps.
inline double newton_polish(const Cubic& c, double r, double tol_resid, bool& converged) {
    const double target = tol_resid * c.scale();
    double f = c(r);
    for (int it = 0; it < tolerances::newton_max_iter; ++it) {
        if (f == 0.0) break;
        const double df = c.derivative(r);
        if (df == 0.0) break;
        const double next = r - f / df;
        const double fn = c(next);
        if (!(std::abs(fn) < std::abs(f))) break;
        const bool tiny_step = std::abs(next - r) <= 4.0 * 2.220446049250313e-16 * std::abs(next);
        r = next;
        f = fn;
        if (tiny_step) break;
    }
    converged = converged && std::abs(f) <= target;
    return r;
}

/// Root of the derivative quadratic closest to `guess`; exact location of a double root.
inline double nearest_critical_point(const Cubic& c, double guess) {
    const double qa = 3.0 * c.c3, qb = 2.0 * c.c2, qc = c.c1;
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) disc = 0.0;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (qb + std::copysign(sq, qb));
    double r1 = q / qa;
    double r2 = (q != 0.0) ? qc / q : r1;
    return std::abs(r1 - guess) <= std::abs(r2 - guess) ? r1 : r2;
}

} // namespace detail

/// All real roots of `c`, ascending, with multiplicities.
///
/// A double root is reported when the depressed-cubic discriminant R^2 - Q^3 is within
/// a relative band of zero; the double root itself is then taken from the derivative.
inline RealRoots solve_cubic_real(const Cubic& c, double tol_resid = tolerances::resid) {
    if (c.c3 == 0.0) throw error(errc::degenerate_degree, "leading coefficient is zero");
    if (!(tol_resid > 0.0)) throw error(errc::invalid_params, "tol_resid must be positive");

    const double a = c.c2 / c.c3, b = c.c1 / c.c3, d = c.c0 / c.c3;
    const double shift = a / 3.0;
    const double Q = (a * a - 3.0 * b) / 9.0;
    const double R = (2.0 * a * a * a - 9.0 * a * b + 27.0 * d) / 54.0;
    const double Q3 = Q * Q * Q;
    const double R2 = R * R;
    const double gap = R2 - Q3;
    const double band = tolerances::disc_rel * (R2 + std::abs(Q3));

    RealRoots out;
    bool ok = true;

    if (std::abs(gap) <= band) {
        const double qscale = std::max(a * a / 9.0, std::abs(b) / 3.0);
        if (Q <= tolerances::disc_rel * qscale) {
            out.roots = {-shift};
            out.multiplicities = {3};
            return out;
        }
        const double sq = std::sqrt(Q);
        const double s = R >= 0.0 ? 1.0 : -1.0;
        const double dbl = detail::nearest_critical_point(c, s * sq - shift);
        double simple = -a - 2.0 * dbl;
        simple = detail::newton_polish(c, simple, tol_resid, ok);
        if (dbl < simple) {
            out.roots = {dbl, simple};
            out.multiplicities = {2, 1};
        } else {
            out.roots = {simple, dbl};
            out.multiplicities = {1, 2};
        }
        out.polished = ok;
        return out;
    }

    if (gap < 0.0) {
        const double sq = std::sqrt(Q);
        double arg = R / (sq * sq * sq);
        if (std::abs(arg) > 1.0) {
            if (std::abs(arg) - 1.0 > 1e-12)
                throw error(errc::internal, "arccos argument out of range in three-root branch");
            arg = std::clamp(arg, -1.0, 1.0);
        }
        const double th = std::acos(arg);
        constexpr double two_pi = 2.0 * std::numbers::pi;
        std::array<double, 3> r = {-2.0 * sq * std::cos(th / 3.0) - shift,
                                   -2.0 * sq * std::cos((th + two_pi) / 3.0) - shift,
                                   -2.0 * sq * std::cos((th - two_pi) / 3.0) - shift};
        for (double& x : r) x = detail::newton_polish(c, x, tol_resid, ok);
        std::sort(r.begin(), r.end());
        out.roots.assign(r.begin(), r.end());
        out.multiplicities = {1, 1, 1};
        out.polished = ok;
        return out;
    }

    const double A = -std::copysign(std::cbrt(std::abs(R) + std::sqrt(gap)), R);
    const double B = (A != 0.0) ? Q / A : 0.0;
    double root = detail::newton_polish(c, (A + B) - shift, tol_resid, ok);
    out.roots = {root};
    out.multiplicities = {1};
    out.polished = ok;
    return out;
}

/// p_plus(y) = (mu+eps) y - y^3 - lambda sqrt(mu); p_minus has the opposite forcing sign.
inline Cubic p_plus(double mu, double eps, double lambda) {
    return {-1.0, 0.0, mu + eps, -lambda * std::sqrt(mu)};
}
inline Cubic p_minus(double mu, double eps, double lambda) {
    return {-1.0, 0.0, mu + eps, lambda * std::sqrt(mu)};
}
/// Cross-section through x = 0.
inline Cubic p_zero(double mu, double eps) { return {-1.0, 0.0, mu + eps, 0.0}; }

struct PmRoots {
    RealRoots plus;
    RealRoots minus;
};

inline PmRoots root_structure_p_pm(double mu, double eps, double lambda) {
    if (!(mu > 0.0)) throw error(errc::invalid_mu, "mu must be positive");
    PmRoots out{solve_cubic_real(p_plus(mu, eps, lambda)), solve_cubic_real(p_minus(mu, eps, lambda))};
    const auto& rp = out.plus.roots;
    const auto& rm = out.minus.roots;
    const double tol = 1e-9 * std::max(1.0, p_plus(mu, eps, lambda).scale());
    bool mirrored = rp.size() == rm.size();
    for (std::size_t i = 0; mirrored && i < rp.size(); ++i) {
        const std::size_t j = rp.size() - 1 - i;
        mirrored = std::abs(rm[i] + rp[j]) <= tol &&
                   out.minus.multiplicities[i] == out.plus.multiplicities[j];
    }
    if (!mirrored) throw error(errc::internal, "roots of p- are not the mirror of p+");
    return out;
}

struct CriticalMu {
    std::vector<double> mu; // ascending
    bool doubled = false;   // the two critical values coalesced (eps == lambda)
    bool zero_boundary = false; // mu = 0 included as the degenerate root at eps == 0
};

/// Residual of 2(mu+eps)^{3/2} = 3 sqrt(3) lambda sqrt(mu).
inline double critical_mu_residual(double mu, double eps, double lambda) {
    return 2.0 * std::pow(mu + eps, 1.5) - 3.0 * std::sqrt(3.0) * lambda * std::sqrt(mu);
}

/// Positive excitation values where p+ and p- acquire a double root.
inline CriticalMu critical_mu_roots(double eps, double lambda) {
    if (!(lambda > 0.0)) throw error(errc::invalid_lambda, "lambda must be positive");
    const double a = std::pow(1.5 * std::sqrt(3.0) * lambda, 2.0 / 3.0);
    const RealRoots t = solve_cubic_real(Cubic{1.0, 0.0, -a, eps});

    CriticalMu out;
    const double zero_band = 1e-12 * std::sqrt(a);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ti = t.roots[i];
        if (eps == 0.0 && std::abs(ti) <= zero_band) {
            out.mu.push_back(0.0);
            out.zero_boundary = true;
            continue;
        }
        if (!(ti > 0.0)) continue;
        double mu = ti * ti * ti;
        if (t.multiplicities[i] > 1) {
            out.doubled = true;
        } else {
            double f = critical_mu_residual(mu, eps, lambda);
            for (int it = 0; it < tolerances::newton_max_iter && f != 0.0; ++it) {
                const double df = 3.0 * std::sqrt(mu + eps) - 1.5 * std::sqrt(3.0) * lambda / std::sqrt(mu);
                if (df == 0.0) break;
                const double next = mu - f / df;
                if (!(next > 0.0) || !(next + eps >= 0.0)) break;
                const double fn = critical_mu_residual(next, eps, lambda);
                if (!(std::abs(fn) < std::abs(f))) break;
                mu = next;
                f = fn;
            }
        }
        out.mu.push_back(mu);
    }
    std::sort(out.mu.begin(), out.mu.end());
    return out;
}

/// Leading-order roots of p+ for small mu: {sqrt(eps) - s, -sqrt(eps) - s, lambda sqrt(mu)/eps}.
inline std::array<double, 3> approx_small_mu_roots(double mu, double eps, double lambda) {
    const double se = std::sqrt(eps);
    const double s = lambda * std::sqrt(mu) / (2.0 * eps);
    return {se - s, -se - s, 2.0 * s};
}

} // namespace ffnet
