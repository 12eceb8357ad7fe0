#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cubic.hpp"
#include "errors.hpp"
#include "sl_reduced.hpp"
#include "tolerances.hpp"

namespace ffnet {

/// One point of parameter space together with the amplitude x = |u|^2 of the second cell.
struct UnfoldingPoint {
    double x = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double eps = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
};

/// Steady-amplitude polynomial of the second oscillator and the partials used to find its singular points.
struct GValues {
    double G = 0.0;
    double G_x = 0.0;
    double G_xx = 0.0;
    double G_sigma = 0.0;
};

/// G(x) = (1+gamma^2) x^3 - 2(mu+eps+sigma gamma) x^2 + ((mu+eps)^2 + sigma^2) x - lambda^2 mu.
inline GValues G_and_partials(double x, double mu, double sigma, double eps, double lambda, double gamma) {
    const double s = mu + eps;
    const double k = 1.0 + gamma * gamma;
    const double b = s + sigma * gamma;
    GValues g;
    g.G = ((k * x - 2.0 * b) * x + (s * s + sigma * sigma)) * x - lambda * lambda * mu;
    g.G_x = (3.0 * k * x - 4.0 * b) * x + s * s + sigma * sigma;
    g.G_xx = 6.0 * k * x - 4.0 * b;
    g.G_sigma = 2.0 * x * (sigma - gamma * x);
    return g;
}

inline GValues G_and_partials(const UnfoldingPoint& p) {
    return G_and_partials(p.x, p.mu, p.sigma, p.eps, p.lambda, p.gamma);
}

/// G as a cubic in x at fixed parameters.
inline Cubic G_cubic(double mu, double sigma, double eps, double lambda, double gamma) {
    const double s = mu + eps;
    return {1.0 + gamma * gamma, -2.0 * (s + sigma * gamma), s * s + sigma * sigma, -lambda * lambda * mu};
}

enum class SingularKind { Hysteresis, Bifurcation };

inline const char* to_string(SingularKind k) { return k == SingularKind::Hysteresis ? "Hysteresis" : "Bifurcation"; }

struct SingularBranch {
    std::string label; // "+" / "-" for hysteresis, "trivial" / "cubic" for bifurcation
    std::vector<UnfoldingPoint> points;
    bool axis_marker = false; // the lambda = 0 line; not sampled
};

struct SingularSet {
    SingularKind kind = SingularKind::Hysteresis;
    std::vector<SingularBranch> branches;
    std::vector<std::string> omitted; // branch labels that do not exist for these parameters
};

namespace detail {
inline void require_mu(double mu) {
    if (!(mu > 0.0)) throw error(errc::invalid_mu, "mu must be positive");
}

/// Hysteresis point on branch sign (+1 or -1); false when mu + eps would be non-positive.
inline bool hysteresis_point(double mu, double lambda, double gamma, int sign, UnfoldingPoint& out) {
    const double k = 1.0 + gamma * gamma;
    const double c = std::cbrt(lambda * lambda * mu / k);
    const double r3 = std::sqrt(3.0);
    const double shifted = 1.5 * (1.0 + sign * gamma / r3) * c;
    if (!(shifted > 0.0)) return false;
    out = {c, mu, 1.5 * (gamma - sign / r3) * c, shifted - mu, lambda, gamma};
    return true;
}
} // namespace detail

/// Points where G = G_x = G_xx = 0 at fixed lambda: one per branch that exists.
inline SingularSet hysteresis_set(double mu, double lambda, double gamma) {
    detail::require_mu(mu);
    SingularSet out{SingularKind::Hysteresis, {}, {}};
    for (int sign : {1, -1}) {
        const std::string label = sign > 0 ? "+" : "-";
        UnfoldingPoint p;
        if (detail::hysteresis_point(mu, lambda, gamma, sign, p)) out.branches.push_back({label, {p}, false});
        else out.omitted.push_back(label);
    }
    return out;
}

/// Hysteresis set traced over a lambda grid; a branch is omitted if it exists nowhere on the grid.
inline SingularSet hysteresis_slice(double mu, double gamma, const std::vector<double>& lambdas) {
    detail::require_mu(mu);
    SingularSet out{SingularKind::Hysteresis, {}, {}};
    for (int sign : {1, -1}) {
        SingularBranch b{sign > 0 ? "+" : "-", {}, false};
        for (double lam : lambdas) {
            UnfoldingPoint p;
            if (detail::hysteresis_point(mu, lam, gamma, sign, p)) b.points.push_back(p);
        }
        if (b.points.empty()) out.omitted.push_back(b.label);
        else out.branches.push_back(std::move(b));
    }
    return out;
}

/// Points where G = G_x = G_sigma = 0 over an eps grid.
/// The cubic component has 4(mu+eps)^3 = 27 lambda^2 mu; eps <= -mu is dropped.
inline SingularSet bifurcation_set(double mu, double gamma, double eps_lo, double eps_hi, int n_pts = 400) {
    detail::require_mu(mu);
    if (n_pts < 2) throw error(errc::invalid_params, "need at least two points");
    SingularSet out{SingularKind::Bifurcation, {}, {}};
    SingularBranch axis{"trivial", {}, true};
    SingularBranch cubic{"cubic", {}, false};
    for (int k = 0; k < n_pts; ++k) {
        const double eps = eps_lo + (eps_hi - eps_lo) * k / (n_pts - 1);
        const double s = mu + eps;
        if (!(s > 0.0)) continue;
        axis.points.push_back({s, mu, gamma * s, eps, 0.0, gamma});
        cubic.points.push_back({s / 3.0, mu, gamma * s / 3.0, eps, std::sqrt(4.0 * s * s * s / (27.0 * mu)), gamma});
    }
    out.branches.push_back(std::move(axis));
    if (cubic.points.empty()) out.omitted.push_back("cubic");
    else out.branches.push_back(std::move(cubic));
    return out;
}

struct ReducedCoordinate {
    double sigma_t = 0.0;
    double mu_t = 0.0;
    double x_v = 0.0;
};

/// Rescales singular points into the (sigma_t, mu_t) phase-diagram plane of the reduced system.
inline std::vector<ReducedCoordinate> to_reduced_coordinates(const SingularSet& set) {
    std::vector<ReducedCoordinate> out;
    for (const auto& b : set.branches) {
        if (b.axis_marker) continue;
        for (const auto& p : b.points) {
            const double s = p.mu + p.eps;
            if (!(s > 0.0)) throw error(errc::non_positive_shifted_mu, "mu + eps must be positive");
            if (!(p.lambda > 0.0)) throw error(errc::invalid_lambda, "lambda must be positive");
            const double root = std::sqrt(s / p.mu);
            out.push_back({p.sigma / p.lambda * root, s / p.lambda * root, p.x / s});
        }
    }
    return out;
}

struct BranchRoot {
    double x = 0.0;
    bool stable = false;
    bool vertical_tangent = false;
};

struct BranchSlice {
    double sigma = 0.0;
    std::vector<BranchRoot> roots; // ascending in x
};

struct BranchDiagram {
    std::vector<BranchSlice> slices; // ascending in sigma, folds inserted at their refined sigma
    /// Connected components of {G = 0, x > 0} over the whole sigma line: 1, or 2 when an isola splits off.
    int components = 1;
};

namespace detail {
inline int positive_root_count(double mu, double sigma, double eps, double lambda, double gamma) {
    const auto r = solve_cubic_real(G_cubic(mu, sigma, eps, lambda, gamma));
    return static_cast<int>(std::count_if(r.roots.begin(), r.roots.end(), [](double x) { return x > 0.0; }));
}

inline BranchSlice branch_slice(double mu, double sigma, double eps, double lambda, double gamma) {
    const SLParams p{mu, eps, 1.0, sigma, lambda, gamma};
    const Cubic c = G_cubic(mu, sigma, eps, lambda, gamma);
    const auto r = solve_cubic_real(c);
    BranchSlice s{sigma, {}};
    const double scale = c.scale();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double x = r.roots[i];
        if (!(x > 0.0)) continue;
        const GValues g = G_and_partials(x, mu, sigma, eps, lambda, gamma);
        const DetTrace dt = unreduced_stability(std::sqrt(x), 0.0, p);
        s.roots.push_back({x, is_stable(dt), r.multiplicities[i] > 1 || std::abs(g.G_x) < 1e-8 * scale});
    }
    return s;
}
} // namespace detail

/// Amplitudes x = |u|^2 of all equilibria of the second cell across a sigma grid.
/// Fold points between grid nodes are located by bisection on the root count and inserted.
inline BranchDiagram branch_diagram(double mu, double eps, double lambda, double gamma, double sigma_lo,
                                    double sigma_hi, int n_pts) {
    detail::require_mu(mu);
    if (n_pts < 2) throw error(errc::invalid_params, "need at least two points");
    BranchDiagram out;
    int prev_count = -1;
    double prev_sigma = sigma_lo;
    for (int k = 0; k < n_pts; ++k) {
        const double sigma = sigma_lo + (sigma_hi - sigma_lo) * k / (n_pts - 1);
        const int count = detail::positive_root_count(mu, sigma, eps, lambda, gamma);
        if (prev_count >= 0 && count != prev_count) {
            double a = prev_sigma, b = sigma;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
                const double m = 0.5 * (a + b);
                (detail::positive_root_count(mu, m, eps, lambda, gamma) == prev_count ? a : b) = m;
            }
            // the side with more roots carries the nearly coalesced pair
            const double fold = prev_count > count ? a : b;
            auto slice = detail::branch_slice(mu, fold, eps, lambda, gamma);
            for (std::size_t i = 0; i + 1 < slice.roots.size(); ++i) {
                auto& lo = slice.roots[i];
                auto& hi = slice.roots[i + 1];
                const double gap = hi.x - lo.x;
                if (gap < 1e-4 * std::max(1.0, hi.x)) lo.vertical_tangent = hi.vertical_tangent = true;
            }
            out.slices.push_back(std::move(slice));
        }
        out.slices.push_back(detail::branch_slice(mu, sigma, eps, lambda, gamma));
        prev_count = count;
        prev_sigma = sigma;
    }
    // x (s - x)^2 <= lambda^2 mu is where real sigma exists; a second interval of x is an isola
    const double s = mu + eps;
    const auto h = solve_cubic_real(Cubic{1.0, -2.0 * s, s * s, -lambda * lambda * mu});
    const auto distinct = std::count_if(h.roots.begin(), h.roots.end(), [](double x) { return x > 0.0; });
    out.components = distinct == 3 ? 2 : 1;
    return out;
}

} // namespace ffnet
