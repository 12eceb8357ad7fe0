#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "errors.hpp"
#include "tolerances.hpp"

namespace ffnet {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
inline double norm(const State<N>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

/// One classical Runge-Kutta step. `f(t, x, dx)` writes the vector field into dx.
template <std::size_t N, class F>
inline void rk4_step(const F& f, double t, State<N>& x, double dt) {
    State<N> k1, k2, k3, k4, tmp;
    f(t, x, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    f(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    f(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + dt * k3[i];
    f(t + dt, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

template <std::size_t N>
inline void check_blowup(const State<N>& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw error(errc::blowup, "state became non-finite");
    if (norm(x) > tolerances::blowup) throw error(errc::blowup, "state norm exceeded 1e6");
}

/// Integrates until `settled(t, x)` returns true or t_max passes; returns false on timeout.
template <std::size_t N, class F, class Stop>
inline bool integrate_until(const F& f, State<N>& x, double& t, double dt, double t_max, const Stop& settled) {
    while (t < t_max) {
        rk4_step<N>(f, t, x, dt);
        t += dt;
        check_blowup(x);
        if (settled(t, x)) return true;
    }
    return false;
}

} // namespace ffnet
