#pragma once

namespace ffnet {

/// Every floating default used across the library, in one place.
struct tolerances {
    static constexpr double resid = 1e-10;     // polynomial / vector-field residual
    static constexpr double hyp = 1e-9;        // eigenvalue band treated as zero
    static constexpr double curve = 1e-6;      // distance to a separating curve
    static constexpr double amp = 1e-8;        // relative amplitude variance for phase lock
    static constexpr double disc_rel = 1e-12;  // relative discriminant band for double roots
    static constexpr double zero_case = 1e-9;  // |mu+eps| / mu routed to the Zero reduction
    static constexpr double settle = 1e-8;     // vector-field norm for a settled state
    static constexpr double blowup = 1e6;      // state norm treated as divergence
    static constexpr double torus_ptp = 1e-4;  // amplitude peak-to-peak marking a torus
    static constexpr double jump_seed = 1e-6;  // basin-choosing perturbation delta_0
    static constexpr double dt_per_lambda = 1e-3;
    static constexpr double transient_per_lambda = 200.0;
    static constexpr int newton_max_iter = 50;
};

} // namespace ffnet
