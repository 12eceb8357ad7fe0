#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace ffnet {

/// Uniform linear array of N elements spaced d apart, fed with a progressive phase theta.
struct ArrayConfig {
    int N = 1;
    double k = 2.0 * std::numbers::pi; // wave number
    double d = 0.5;                    // element spacing
    double theta = 0.0;                // phase-lock angle between neighbouring elements
};

inline void validate(const ArrayConfig& c) {
    if (c.N < 1) throw error(errc::invalid_params, "array needs at least one element");
    if (!(c.k > 0.0) || !(c.d > 0.0)) throw error(errc::invalid_params, "wave number and spacing must be positive");
}

/// Normalised array factor at phase argument psi = k d sin(phi):
/// sin(N a) / (N sin a) * exp(i (N-1) a) with a = (psi + theta) / 2.
inline std::complex<double> array_factor(const ArrayConfig& c, double psi) {
    validate(c);
    const double a = 0.5 * (psi + c.theta);
    const double n = c.N;
    // a = m pi + delta and sin(N a) / (N sin a) = (-1)^{m(N-1)} sin(N delta) / (N sin delta);
    // working with delta keeps full precision next to the removable points
    const double m = std::round(a / std::numbers::pi);
    const double delta = a - m * std::numbers::pi;
    const bool odd = std::fmod(std::abs(m) * (c.N - 1), 2.0) == 1.0;
    const double s = std::sin(delta);
    const double core = std::abs(s) < 1e-9 ? 1.0 - (n * n - 1.0) * delta * delta / 6.0 : std::sin(n * delta) / (n * s);
    const double ratio = odd ? -core : core;
    return std::polar(1.0, (n - 1.0) * a) * ratio;
}

struct PatternSample {
    double phi = 0.0;
    double magnitude = 0.0;
};

struct Pattern {
    std::vector<PatternSample> samples;
    double main_lobe_phi = 0.0; // argmax of the sampled magnitude; first one on ties
};

/// Far-field magnitude over emission angles phi (radians from broadside).
inline Pattern pattern(const ArrayConfig& c, const std::vector<double>& phis) {
    validate(c);
    Pattern out;
    out.samples.reserve(phis.size());
    double best = -1.0;
    for (double phi : phis) {
        const double mag = std::abs(array_factor(c, c.k * c.d * std::sin(phi)));
        out.samples.push_back({phi, mag});
        if (mag > best) {
            best = mag;
            out.main_lobe_phi = phi;
        }
    }
    return out;
}

} // namespace ffnet
