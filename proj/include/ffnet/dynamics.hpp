#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "cubic.hpp"
#include "errors.hpp"
#include "ode.hpp"
#include "parallel.hpp"
#include "pitchfork.hpp"
#include "singularity.hpp"
#include "sl_reduced.hpp"
#include "tolerances.hpp"

namespace ffnet {

/// Three Hopf cells in a chain: z1 is driven by itself when self-coupled, z2 by z1, z3 by z2.
struct Hopf3Params {
    double mu = 0.0;
    double omega = 1.0;
    double lambda = 1.0;
    bool self_coupling = true;
};

enum class SystemKind { Pitchfork2, Pitchfork3, Hopf3, SL2Full, SL2Reduced };

inline const char* to_string(SystemKind k) {
    switch (k) {
    case SystemKind::Pitchfork2: return "pitchfork2";
    case SystemKind::Pitchfork3: return "pitchfork3";
    case SystemKind::Hopf3: return "hopf3";
    case SystemKind::SL2Full: return "sl-full";
    case SystemKind::SL2Reduced: return "sl-reduced";
    }
    return "?";
}

inline std::size_t dimension(SystemKind k) {
    switch (k) {
    case SystemKind::Pitchfork2: return 2;
    case SystemKind::Pitchfork3: return 3;
    case SystemKind::Hopf3: return 6;
    case SystemKind::SL2Full: return 4;
    case SystemKind::SL2Reduced: return 2;
    }
    return 0;
}

struct SystemSpec {
    SystemKind kind = SystemKind::Pitchfork2;
    std::variant<PitchforkParams, Hopf3Params, SLParams, ReducedParams> params;

    static SystemSpec pitchfork2(const PitchforkParams& p) { return {SystemKind::Pitchfork2, p}; }
    static SystemSpec pitchfork3(const PitchforkParams& p) { return {SystemKind::Pitchfork3, p}; }
    static SystemSpec hopf3(const Hopf3Params& p) { return {SystemKind::Hopf3, p}; }
    static SystemSpec sl_full(const SLParams& p) { return {SystemKind::SL2Full, p}; }
    static SystemSpec sl_reduced(const ReducedParams& p) { return {SystemKind::SL2Reduced, p}; }

    std::size_t dim() const { return dimension(kind); }
};

namespace detail {
using cplx = std::complex<double>;

inline cplx cell(const double* x, int k) { return {x[2 * k], x[2 * k + 1]}; }
inline void set_cell(double* d, int k, cplx v) {
    d[2 * k] = v.real();
    d[2 * k + 1] = v.imag();
}

/// Calls vis(integral_constant<N>, field) with the concrete vector field of the chosen system.
template <class Visitor>
decltype(auto) dispatch(const SystemSpec& s, Visitor&& vis) {
    switch (s.kind) {
    case SystemKind::Pitchfork2: {
        const auto p = std::get<PitchforkParams>(s.params);
        return vis(std::integral_constant<std::size_t, 2>{}, [p](double, const State<2>& x, State<2>& d) {
            d = pitchfork_field(p, x[0], x[1]);
        });
    }
    case SystemKind::Pitchfork3: {
        const auto p = std::get<PitchforkParams>(s.params);
        return vis(std::integral_constant<std::size_t, 3>{}, [p](double, const State<3>& x, State<3>& d) {
            const double sh = p.mu + p.eps;
            d[0] = p.mu * x[0] - x[0] * x[0] * x[0];
            d[1] = sh * x[1] - x[1] * x[1] * x[1] - p.lambda * x[0];
            d[2] = sh * x[2] - x[2] * x[2] * x[2] + p.lambda * x[0];
        });
    }
    case SystemKind::Hopf3: {
        const auto p = std::get<Hopf3Params>(s.params);
        return vis(std::integral_constant<std::size_t, 6>{}, [p](double, const State<6>& x, State<6>& d) {
            const cplx lin(p.mu, p.omega);
            const cplx z1 = cell(x.data(), 0), z2 = cell(x.data(), 1), z3 = cell(x.data(), 2);
            const cplx self = p.self_coupling ? p.lambda * z1 : cplx{};
            set_cell(d.data(), 0, lin * z1 - std::norm(z1) * z1 - self);
            set_cell(d.data(), 1, lin * z2 - std::norm(z2) * z2 - p.lambda * z1);
            set_cell(d.data(), 2, lin * z3 - std::norm(z3) * z3 - p.lambda * z2);
        });
    }
    case SystemKind::SL2Full: {
        const auto p = std::get<SLParams>(s.params);
        return vis(std::integral_constant<std::size_t, 4>{}, [p](double, const State<4>& x, State<4>& d) {
            const cplx z1 = cell(x.data(), 0), z2 = cell(x.data(), 1);
            set_cell(d.data(), 0, cplx(p.mu, p.omega) * z1 - std::norm(z1) * z1);
            set_cell(d.data(), 1, cplx(p.mu + p.eps, p.omega + p.sigma) * z2 - cplx(1.0, p.gamma) * std::norm(z2) * z2 -
                                      p.lambda * z1);
        });
    }
    case SystemKind::SL2Reduced: {
        const auto p = std::get<ReducedParams>(s.params);
        return vis(std::integral_constant<std::size_t, 2>{}, [p](double, const State<2>& x, State<2>& d) {
            d = reduced_vector_field(p, x[0], x[1]);
        });
    }
    }
    throw error(errc::internal, "unknown system kind");
}

template <std::size_t N>
State<N> to_state(std::span<const double> x0) {
    if (x0.size() != N) throw error(errc::invalid_params, "initial state has the wrong dimension");
    State<N> x{};
    std::copy(x0.begin(), x0.end(), x.begin());
    return x;
}
} // namespace detail

/// Samples of a fixed-step run; state i occupies data[i*dim, (i+1)*dim).
struct Trajectory {
    std::size_t dim = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> data;

    std::size_t size() const { return times.size(); }
    std::span<const double> state(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<const double> back() const { return state(size() - 1); }
};

/// Classical RK4 from t = 0 to t_end, recording every `stride` steps and the final state.
inline Trajectory integrate(const SystemSpec& s, std::span<const double> x0, double t_end, double dt,
                            std::size_t stride = 1) {
    if (!(dt > 0.0)) throw error(errc::invalid_params, "dt must be positive");
    if (!(t_end > 0.0)) throw error(errc::invalid_params, "t_end must be positive");
    if (stride == 0) stride = 1;
    return detail::dispatch(s, [&](auto n, const auto& f) {
        constexpr std::size_t N = decltype(n)::value;
        auto x = detail::to_state<N>(x0);
        check_blowup(x);
        Trajectory tr{N, dt, {}, {}};
        const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
        auto record = [&](double t) {
            tr.times.push_back(t);
            tr.data.insert(tr.data.end(), x.begin(), x.end());
        };
        record(0.0);
        for (std::size_t k = 1; k <= steps; ++k) {
            rk4_step<N>(f, (k - 1) * dt, x, dt);
            check_blowup(x);
            if (k % stride == 0 || k == steps) record(k * dt);
        }
        return tr;
    });
}

enum class AttractorClass { FixedPoint, PhaseLocked, Torus, Undetermined };

inline const char* to_string(AttractorClass c) {
    switch (c) {
    case AttractorClass::FixedPoint: return "FixedPoint";
    case AttractorClass::PhaseLocked: return "PhaseLocked";
    case AttractorClass::Torus: return "Torus";
    case AttractorClass::Undetermined: return "Undetermined";
    }
    return "?";
}

struct AttractorReport {
    AttractorClass cls = AttractorClass::Undetermined;
    double amp_mean = 0.0;         // of |u| (full) or |v| (reduced) over the window
    double amp_var = 0.0;
    double amp_ptp = 0.0;
    double phase_lock_angle = 0.0; // arg u, PhaseLocked only
    double phase_var = 0.0;
    double secondary_period = 0.0; // Torus only
    std::vector<double> final_state;
};

struct AttractorOptions {
    double t_transient = 2000.0;
    double t_window = 500.0;
    double dt = 1e-2;
    int max_extensions = 6; // extra windows granted while the verdict is still Undetermined
    double tol_amp = tolerances::amp;
    double torus_ptp = tolerances::torus_ptp;
};

namespace detail {
inline AttractorReport window_report(const std::vector<cplx>& u, double dt, const AttractorOptions& opt) {
    AttractorReport r;
    const std::size_t n = u.size();
    std::vector<double> amp(n), ph(n);
    for (std::size_t i = 0; i < n; ++i) {
        amp[i] = std::abs(u[i]);
        ph[i] = std::arg(u[i]);
        if (i > 0) { // unwrap
            double d = ph[i] - ph[i - 1];
            d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
            ph[i] = ph[i - 1] + d;
        }
    }
    auto mean_var = [](const std::vector<double>& v, std::size_t a, std::size_t b) {
        double m = 0.0;
        for (std::size_t i = a; i < b; ++i) m += v[i];
        m /= static_cast<double>(b - a);
        double var = 0.0;
        for (std::size_t i = a; i < b; ++i) var += (v[i] - m) * (v[i] - m);
        return std::array<double, 2>{m, var / static_cast<double>(b - a)};
    };
    auto ptp = [&](std::size_t a, std::size_t b) {
        const auto [lo, hi] = std::minmax_element(amp.begin() + a, amp.begin() + b);
        return *hi - *lo;
    };
    const auto [am, av] = mean_var(amp, 0, n);
    const auto [pm, pv] = mean_var(ph, 0, n);
    r.amp_mean = am;
    r.amp_var = av;
    r.amp_ptp = ptp(0, n);
    r.phase_var = pv;

    if (am < 1e-9 && r.amp_ptp < opt.torus_ptp) {
        r.cls = AttractorClass::FixedPoint;
        return r;
    }
    if (r.amp_ptp < opt.torus_ptp && av <= opt.tol_amp * am * am && pv < 1e-6) {
        r.cls = AttractorClass::PhaseLocked;
        r.phase_lock_angle = std::remainder(pm, 2.0 * std::numbers::pi);
        return r;
    }
    // sustained oscillation of the co-rotating amplitude, with at least two full secondary cycles
    std::vector<double> ups;
    for (std::size_t i = 1; i < n; ++i)
        if (amp[i - 1] < am && amp[i] >= am) ups.push_back(static_cast<double>(i) * dt);
    const double first_half = ptp(0, n / 2), second_half = ptp(n / 2, n);
    const bool sustained = second_half >= 0.9 * first_half;
    if (r.amp_ptp >= std::max(opt.torus_ptp, 10.0 * opt.tol_amp) && ups.size() >= 3 && sustained) {
        r.cls = AttractorClass::Torus;
        r.secondary_period = (ups.back() - ups.front()) / static_cast<double>(ups.size() - 1);
        return r;
    }
    // the phase may drift while the amplitude is flat, which is also a closed co-rotating orbit
    if (r.amp_ptp < opt.torus_ptp && std::abs(ph.back() - ph.front()) > std::numbers::pi) {
        r.cls = AttractorClass::Torus;
        r.secondary_period = 2.0 * std::numbers::pi * (static_cast<double>(n) * dt) / std::abs(ph.back() - ph.front());
        return r;
    }
    r.cls = AttractorClass::Undetermined;
    return r;
}
} // namespace detail

/// Long-time behaviour of the second oscillator in the frame rotating with the first.
inline AttractorReport classify_attractor(const SystemSpec& s, std::span<const double> x0,
                                          const AttractorOptions& opt = {}) {
    if (s.kind != SystemKind::SL2Full && s.kind != SystemKind::SL2Reduced)
        throw error(errc::invalid_params, "attractor classification needs an oscillator system");
    if (!(opt.dt > 0.0) || !(opt.t_window > 0.0) || opt.t_transient < 0.0)
        throw error(errc::invalid_params, "invalid attractor options");
    return detail::dispatch(s, [&](auto n, const auto& f) {
        constexpr std::size_t N = decltype(n)::value;
        auto x = detail::to_state<N>(x0);
        auto frame = [&](const State<N>& st) -> detail::cplx {
            if constexpr (N == 4) {
                const detail::cplx z1(st[0], st[1]), z2(st[2], st[3]);
                const double a = std::abs(z1);
                return a < 1e-12 ? z2 : z2 * std::conj(z1) / a;
            } else {
                return {st[0], st[1]};
            }
        };
        double t = 0.0;
        const auto transient = static_cast<std::size_t>(std::llround(opt.t_transient / opt.dt));
        for (std::size_t k = 0; k < transient; ++k) {
            rk4_step<N>(f, t, x, opt.dt);
            t += opt.dt;
            check_blowup(x);
        }
        const auto wsteps = std::max<std::size_t>(16, static_cast<std::size_t>(std::llround(opt.t_window / opt.dt)));
        AttractorReport r;
        for (int ext = 0; ext <= opt.max_extensions; ++ext) {
            std::vector<detail::cplx> u;
            u.reserve(wsteps);
            for (std::size_t k = 0; k < wsteps; ++k) {
                rk4_step<N>(f, t, x, opt.dt);
                t += opt.dt;
                check_blowup(x);
                u.push_back(frame(x));
            }
            r = detail::window_report(u, opt.dt, opt);
            if (r.cls != AttractorClass::Undetermined) break;
        }
        r.final_state.assign(x.begin(), x.end());
        return r;
    });
}

// ---------------------------------------------------------------------------------------------
// Basins of the pitchfork pair

struct BasinGrid {
    double x_lo = -1.0, x_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    int nx = 201, ny = 201;

    double x_at(int i) const { return x_lo + (x_hi - x_lo) * i / (nx - 1); }
    double y_at(int j) const { return y_lo + (y_hi - y_lo) * j / (ny - 1); }
};

inline BasinGrid default_basin_grid(double mu) {
    const double h = 2.0 * std::sqrt(std::max(mu, 0.0)) + 1.0;
    return {-h, h, -h, h, 201, 201};
}

struct BasinOptions {
    double dt = 5e-2;
    double t_max = 0.0; // 0 selects max(5e3, 40/mu): the first cell relaxes at rate 2 mu
    unsigned workers = 0;
};

struct BasinMap {
    BasinGrid grid;
    std::vector<Equilibrium2D> equilibria; // the label indexes into this list
    std::vector<int> labels;               // row-major: labels[j * nx + i] for (x_i, y_j); -1 = no convergence

    int label(int i, int j) const { return labels[static_cast<std::size_t>(j) * grid.nx + i]; }
    int distinct_labels() const {
        std::vector<int> seen;
        for (int l : labels)
            if (l >= 0 && std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
        return static_cast<int>(seen.size());
    }
};

namespace detail {
/// Radius around each sink inside which a trajectory is declared captured: a small fraction
/// of the distance to the nearest other equilibrium.
inline std::vector<double> capture_radii(const std::vector<Equilibrium2D>& eqs) {
    std::vector<double> r(eqs.size(), 0.0);
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        if (eqs[i].stability != Stability::StableNode) continue;
        double dmin = INFINITY;
        for (std::size_t j = 0; j < eqs.size(); ++j)
            if (j != i) dmin = std::min(dmin, std::hypot(eqs[i].x - eqs[j].x, eqs[i].y - eqs[j].y));
        r[i] = std::min(1e-3, 0.01 * dmin);
    }
    return r;
}

/// Index of the sink captured from (x, y), or -1 on timeout.
inline int settle_to_sink(const PitchforkParams& p, const std::vector<Equilibrium2D>& eqs,
                          const std::vector<double>& radii, State<2>& st, double dt, double t_max) {
    auto f = [&p](double, const State<2>& x, State<2>& d) { d = pitchfork_field(p, x[0], x[1]); };
    bool stuck = false; // parked on the stable manifold of a saddle, e.g. the invariant line x = 0
    auto captured = [&]() {
        for (std::size_t i = 0; i < eqs.size(); ++i) {
            const double d = std::hypot(st[0] - eqs[i].x, st[1] - eqs[i].y);
            if (radii[i] > 0.0 && d < radii[i]) return static_cast<int>(i);
            if (radii[i] == 0.0 && d < 1e-10) stuck = true;
        }
        return -1;
    };
    double t = 0.0;
    int hit = captured();
    while (hit < 0 && !stuck && t < t_max) {
        rk4_step<2>(f, t, st, dt);
        t += dt;
        check_blowup(st);
        hit = captured();
    }
    return hit;
}
} // namespace detail

/// Labels each grid cell by the sink its trajectory reaches (index into equilibria(p)).
inline BasinMap basin_map(const PitchforkParams& p, const BasinGrid& grid, const BasinOptions& opt = {}) {
    if (!(p.mu > 0.0)) throw error(errc::invalid_mu, "basin map needs mu > 0");
    if (grid.nx < 2 || grid.ny < 2) throw error(errc::invalid_params, "basin grid needs at least 2x2 cells");
    BasinMap out{grid, equilibria(p), {}};
    const auto radii = detail::capture_radii(out.equilibria);
    const double t_max = opt.t_max > 0.0 ? opt.t_max : std::max(5e3, 40.0 / p.mu);
    // the sign of x is invariant; a sign with a single sink decides the label without integrating
    auto only_sink = [&](int sign) {
        int found = -1, n = 0;
        for (std::size_t i = 0; i < out.equilibria.size(); ++i)
            if (out.equilibria[i].stability == Stability::StableNode && out.equilibria[i].x * sign > 0.0) {
                found = static_cast<int>(i);
                ++n;
            }
        return n == 1 ? found : -2;
    };
    const int only_pos = only_sink(1), only_neg = only_sink(-1);
    out.labels.assign(static_cast<std::size_t>(grid.nx) * grid.ny, -1);
    parallel_for(
        out.labels.size(),
        [&](std::size_t k) {
            const int i = static_cast<int>(k % grid.nx), j = static_cast<int>(k / grid.nx);
            State<2> st{grid.x_at(i), grid.y_at(j)};
            if (st[0] == 0.0) return; // stays on x = 0, whose equilibria are all saddles
            const int shortcut = st[0] > 0.0 ? only_pos : only_neg;
            out.labels[k] = shortcut >= 0 ? shortcut
                                          : detail::settle_to_sink(p, out.equilibria, radii, st, opt.dt, t_max);
        },
        opt.workers);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Amplitude scaling

struct ScalingOptions {
    double dt = 1e-2; // RK4 damping of the first cell's circle competes with its restoring rate 2 mu
    double window = 200.0;
    double t_max = 2e5;
    double rel_change = 1e-9; // successive window means must agree to this relative level
    double seed_perturbation = 1e-2;
    unsigned workers = 0;
};

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0; // log of the prefactor
    double r2 = 0.0;
    std::vector<double> mu;
    std::vector<double> amplitude;
};

namespace detail {
/// Largest root of x (mu - x)^2 = f^2 with x > mu: the squared amplitude of a resonantly forced cell.
inline double forced_amplitude2(double mu, double forcing) {
    const auto r = solve_cubic_real(Cubic{1.0, -2.0 * mu, mu * mu, -forcing * forcing});
    return r.roots.back();
}

/// Near-attractor initial state, so that only the slow approach remains to be integrated.
inline std::vector<double> scaling_seed(const SystemSpec& s, double perturb) {
    const double k = 1.0 + perturb;
    if (s.kind == SystemKind::SL2Full) {
        const auto p = std::get<SLParams>(s.params);
        const double a1 = std::sqrt(p.mu);
        const auto roots = solve_cubic_real(G_cubic(p.mu, p.sigma, p.eps, p.lambda, p.gamma));
        const double x = roots.roots.back();
        const cplx u = p.lambda * a1 / cplx(p.mu + p.eps - x, p.sigma - p.gamma * x);
        return {a1, 0.0, k * u.real(), k * u.imag()};
    }
    const auto p = std::get<Hopf3Params>(s.params);
    double a1 = p.self_coupling ? (p.mu > p.lambda ? std::sqrt(p.mu - p.lambda) : 0.0) : std::sqrt(p.mu);
    double a2 = a1 == 0.0 ? std::sqrt(p.mu) : -std::sqrt(forced_amplitude2(p.mu, p.lambda * a1));
    double a3 = -std::copysign(std::sqrt(forced_amplitude2(p.mu, p.lambda * a2)), a2);
    // a free second cell relaxes at rate ~mu, so it is left exactly on its circle
    const double k2 = a1 == 0.0 ? 1.0 : k;
    return {a1, 0.0, k2 * a2, 0.0, k * a3, 0.0};
}

inline SystemSpec with_mu(SystemSpec s, double mu) {
    std::visit([mu](auto& p) {
        if constexpr (requires { p.mu; }) p.mu = mu;
    }, s.params);
    return s;
}
} // namespace detail

/// Settled oscillation amplitude |z_cell| of an oscillator chain, averaged over one window.
inline double settled_amplitude(const SystemSpec& s, std::span<const double> x0, int read_cell,
                                const ScalingOptions& opt = {}) {
    if (s.kind != SystemKind::SL2Full && s.kind != SystemKind::Hopf3)
        throw error(errc::invalid_params, "amplitude scaling needs an oscillator chain");
    const int cells = static_cast<int>(s.dim() / 2);
    if (read_cell < 0 || read_cell >= cells) throw error(errc::invalid_params, "read_cell out of range");
    return detail::dispatch(s, [&](auto n, const auto& f) -> double {
        constexpr std::size_t N = decltype(n)::value;
        auto x = detail::to_state<N>(x0);
        double t = 0.0, prev = NAN;
        const auto wsteps = static_cast<std::size_t>(std::llround(opt.window / opt.dt));
        while (t < opt.t_max) {
            double sum = 0.0;
            for (std::size_t k = 0; k < wsteps; ++k) {
                rk4_step<N>(f, t, x, opt.dt);
                t += opt.dt;
                sum += std::hypot(x[2 * read_cell], x[2 * read_cell + 1]);
            }
            check_blowup(x);
            const double m = sum / static_cast<double>(wsteps);
            if (std::abs(m - prev) <= opt.rel_change * m) return m;
            prev = m;
        }
        throw error(errc::non_convergence, "amplitude did not settle");
    });
}

/// Least-squares fit of log(amplitude) against log(mu) over settled runs.
inline ScalingFit scaling_fit(const SystemSpec& s, const std::vector<double>& mu_values, int read_cell,
                              const ScalingOptions& opt = {}) {
    if (s.kind != SystemKind::SL2Full && s.kind != SystemKind::Hopf3)
        throw error(errc::invalid_params, "amplitude scaling needs an oscillator chain");
    if (mu_values.size() < 2) throw error(errc::invalid_params, "need at least two mu values");
    for (double m : mu_values)
        if (!(m > 0.0)) throw error(errc::invalid_mu, "scaling needs mu > 0");
    ScalingFit fit;
    fit.mu = mu_values;
    fit.amplitude.assign(mu_values.size(), 0.0);
    parallel_for(
        mu_values.size(),
        [&](std::size_t i) {
            const SystemSpec si = detail::with_mu(s, mu_values[i]);
            const auto x0 = detail::scaling_seed(si, opt.seed_perturbation);
            fit.amplitude[i] = settled_amplitude(si, x0, read_cell, opt);
        },
        opt.workers);
    const double n = static_cast<double>(mu_values.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < mu_values.size(); ++i) {
        const double lx = std::log(fit.mu[i]), ly = std::log(fit.amplitude[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    fit.slope = cxy / cxx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r2 = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------------------------
// Jumps of the pitchfork pair with both cells free

struct JumpTrajectoryOptions {
    double dt = 5e-2;
    double t_max = 1e7;
    double delta0 = tolerances::jump_seed;
};

struct JumpTrajectoryRecord {
    double mu = 0.0;
    int x_sign = 1;
    double delta_y = 0.0;
    double y_initial = 0.0;
    double y_final = 0.0;
    double x_final = 0.0;
    int landing_index = -1; // into equilibria({mu, eps, lambda})
};

/// Coupled response to a sudden switch of mu to mu_new, starting from the pre-jump rest state
/// with x nudged by delta0 toward the requested branch.
inline JumpTrajectoryRecord jump_trajectory(const PitchforkParams& p, int branch_sign, double mu_new,
                                            int initial_y_sign = 1, const JumpTrajectoryOptions& opt = {}) {
    if (!(mu_new > 0.0)) throw error(errc::invalid_mu, "jump target mu must be positive");
    const PitchforkParams q{mu_new, p.eps, p.lambda};
    const auto eqs = equilibria(q);
    const auto radii = detail::capture_radii(eqs);
    const double y0 = pre_jump_y(p.eps, initial_y_sign);
    const int s = branch_sign >= 0 ? 1 : -1;
    State<2> st{s * opt.delta0, y0};
    const int hit = detail::settle_to_sink(q, eqs, radii, st, opt.dt, opt.t_max);
    if (hit < 0) throw error(errc::non_convergence, "coupled jump did not reach a sink");
    const auto& e = eqs[static_cast<std::size_t>(hit)];
    return {mu_new, s, std::abs(e.y - y0), y0, e.y, e.x, hit};
}

// ---------------------------------------------------------------------------------------------
// One-parameter sweeps of the Stuart-Landau pair

enum class SweepParam { Mu, Eps, Sigma, Lambda };

inline const char* to_string(SweepParam p) {
    switch (p) {
    case SweepParam::Mu: return "mu";
    case SweepParam::Eps: return "eps";
    case SweepParam::Sigma: return "sigma";
    case SweepParam::Lambda: return "lambda";
    }
    return "?";
}

struct SweepSpec {
    SweepParam param = SweepParam::Mu;
    double lo = 0.0;
    double hi = 1.0;
    int n = 100;
};

enum class SweepAttractor { Rest, SecondCellCycle, PhaseLocked, Torus };

inline const char* to_string(SweepAttractor a) {
    switch (a) {
    case SweepAttractor::Rest: return "Rest";
    case SweepAttractor::SecondCellCycle: return "SecondCellCycle";
    case SweepAttractor::PhaseLocked: return "PhaseLocked";
    case SweepAttractor::Torus: return "Torus";
    }
    return "?";
}

/// A phase-locked periodic solution: an equilibrium of the co-rotating second cell.
struct LockedBranch {
    int id = 0;
    double amplitude2 = 0.0; // |u|^2
    bool stable = false;
};

struct SweepPoint {
    double param = 0.0;
    std::vector<LockedBranch> locked; // ascending amplitude
    std::vector<int> terminated;      // ids that could not be continued into this point
    bool rest_stable = false;         // z1 = z2 = 0
    bool second_cell_cycle = false;   // z1 = 0 with z2 on its own circle |z2|^2 = mu + eps
    SweepAttractor attractor = SweepAttractor::Rest;
};

struct SweepEvent {
    double param = 0.0;
    std::string label; // HB, SN or TR
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepPoint> points;
    std::vector<SweepEvent> events;
    std::vector<std::array<double, 2>> three_locked_windows; // grid intervals with three coexisting solutions
};

namespace detail {
inline SLParams with_param(SLParams p, SweepParam which, double v) {
    switch (which) {
    case SweepParam::Mu: p.mu = v; break;
    case SweepParam::Eps: p.eps = v; break;
    case SweepParam::Sigma: p.sigma = v; break;
    case SweepParam::Lambda: p.lambda = v; break;
    }
    return p;
}

inline std::vector<double> locked_amplitudes(const SLParams& p) {
    if (!(p.mu > 0.0)) return {};
    std::vector<double> out;
    for (double x : solve_cubic_real(G_cubic(p.mu, p.sigma, p.eps, p.lambda, p.gamma)).roots)
        if (x > 0.0) out.push_back(x);
    return out;
}

inline bool locked_stable(const SLParams& p, double x) { return is_stable(unreduced_stability(std::sqrt(x), 0.0, p)); }

inline bool has_stable_lock(const SLParams& p) {
    const auto xs = locked_amplitudes(p);
    return std::any_of(xs.begin(), xs.end(), [&](double x) { return locked_stable(p, x); });
}

/// Bisection for the switch of a discrete indicator between two parameter values.
template <class Ind>
double refine_switch(double a, double b, const Ind& ind) {
    const auto left = ind(a);
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        (ind(m) == left ? a : b) = m;
    }
    return 0.5 * (a + b);
}

/// Newton on G from a previous amplitude; NaN when it fails to land on a positive root.
inline double continue_root(const SLParams& p, double x) {
    const Cubic c = G_cubic(p.mu, p.sigma, p.eps, p.lambda, p.gamma);
    for (int it = 0; it < tolerances::newton_max_iter; ++it) {
        const double d = c.derivative(x);
        if (d == 0.0) return NAN;
        const double step = c(x) / d;
        x -= step;
        if (!(x > 0.0)) return NAN;
        if (std::abs(step) <= 1e-14 * std::max(1.0, x)) break;
    }
    return std::abs(c(x)) <= tolerances::resid * std::max(1.0, c.scale() * x * x * x) ? x : NAN;
}
} // namespace detail

/// Natural-parameter continuation of the rest state, the lone second-cell cycle and the
/// phase-locked solutions, with the analytic events between grid points.
inline SweepResult branch_sweep(const SLParams& base, const SweepSpec& sw) {
    if (sw.n < 2) throw error(errc::invalid_params, "sweep needs at least two points");
    if (!(sw.hi > sw.lo)) throw error(errc::invalid_params, "sweep range is empty");
    if (sw.param != SweepParam::Lambda && !(base.lambda > 0.0))
        throw error(errc::invalid_lambda, "lambda must be positive");
    SweepResult res;
    res.spec = sw;
    int next_id = 0;
    std::vector<LockedBranch> prev_locked;
    double prev_v = NAN;
    for (int k = 0; k < sw.n; ++k) {
        const double v = sw.lo + (sw.hi - sw.lo) * k / (sw.n - 1);
        const SLParams p = detail::with_param(base, sw.param, v);
        if (!(p.lambda > 0.0)) throw error(errc::invalid_lambda, "lambda must be positive");
        SweepPoint pt;
        pt.param = v;
        const double shifted = p.mu + p.eps;
        pt.rest_stable = p.mu < 0.0 && shifted < 0.0;
        pt.second_cell_cycle = p.mu <= 0.0 && shifted > 0.0;

        auto fresh = detail::locked_amplitudes(p);
        std::vector<bool> used(fresh.size(), false);
        for (const auto& b : prev_locked) {
            const double x = detail::continue_root(p, b.amplitude2);
            std::size_t match = fresh.size();
            for (std::size_t i = 0; i < fresh.size(); ++i)
                if (!used[i] && std::isfinite(x) && std::abs(fresh[i] - x) <= 1e-6 * std::max(1.0, x)) match = i;
            if (match == fresh.size()) {
                pt.terminated.push_back(b.id);
                continue;
            }
            used[match] = true;
            pt.locked.push_back({b.id, fresh[match], detail::locked_stable(p, fresh[match])});
        }
        for (std::size_t i = 0; i < fresh.size(); ++i)
            if (!used[i]) pt.locked.push_back({next_id++, fresh[i], detail::locked_stable(p, fresh[i])});
        std::sort(pt.locked.begin(), pt.locked.end(), [](auto& a, auto& b) { return a.amplitude2 < b.amplitude2; });

        const bool any_stable = std::any_of(pt.locked.begin(), pt.locked.end(), [](auto& b) { return b.stable; });
        if (p.mu <= 0.0) pt.attractor = shifted > 0.0 ? SweepAttractor::SecondCellCycle : SweepAttractor::Rest;
        else pt.attractor = any_stable ? SweepAttractor::PhaseLocked : SweepAttractor::Torus;

        if (k > 0) {
            const SLParams q = detail::with_param(base, sw.param, prev_v);
            auto at = [&](double t) { return detail::with_param(base, sw.param, t); };
            if ((q.mu + q.eps > 0.0) != (shifted > 0.0))
                res.events.push_back({detail::refine_switch(prev_v, v, [&](double t) { auto r = at(t); return r.mu + r.eps > 0.0; }), "HB"});
            if ((q.mu > 0.0) != (p.mu > 0.0))
                res.events.push_back({detail::refine_switch(prev_v, v, [&](double t) { return at(t).mu > 0.0; }), "HB"});
            if (q.mu > 0.0 && p.mu > 0.0) {
                if (detail::locked_amplitudes(q).size() != fresh.size())
                    res.events.push_back({detail::refine_switch(prev_v, v, [&](double t) { return detail::locked_amplitudes(at(t)).size(); }), "SN"});
                if (detail::has_stable_lock(q) != any_stable)
                    res.events.push_back({detail::refine_switch(prev_v, v, [&](double t) { return detail::has_stable_lock(at(t)); }), "TR"});
            }
        }
        if (pt.locked.size() == 3) {
            if (!res.three_locked_windows.empty() && res.three_locked_windows.back()[1] == prev_v && k > 0 &&
                res.points.back().locked.size() == 3)
                res.three_locked_windows.back()[1] = v;
            else
                res.three_locked_windows.push_back({v, v});
        }
        prev_locked = pt.locked;
        prev_v = v;
        res.points.push_back(std::move(pt));
    }
    return res;
}

} // namespace ffnet
