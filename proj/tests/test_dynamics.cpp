// Trajectories, attractor classification, basins, scaling fits, coupled jumps and sweeps.

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "ffnet/dynamics.hpp"
#include "oracles.hpp"

using namespace ffnet;

namespace {
double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// sigma_t where the last stable equilibrium disappears along a mu_t scan line, by bisection on the classifier.
double stability_boundary(double mu_t) {
    auto stable = [&](double s) { return classify_region_sl_analytic(s, mu_t).n_stable > 0; };
    return oracle::bisect([&](double s) { return stable(s) ? -1.0 : 1.0; }, 0.0, 3.0);
}
} // namespace

TEST(Integrate, FirstOscillatorStaysOnItsCircle) {
    const double mu = 0.3;
    const std::vector<double> x0{std::sqrt(mu), 0.0, 0.2, -0.1};
    const auto tr = integrate(SystemSpec::sl_full({mu, 0.1, 1.0, 0.4, 1.0, 0.5}), x0, 100.0, 1e-2, 10);
    EXPECT_EQ(tr.dim, 4u);
    EXPECT_NEAR(tr.times.back(), 100.0, 1e-12);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto s = tr.state(i);
        EXPECT_NEAR(std::hypot(s[0], s[1]), std::sqrt(mu), 1e-6);
    }
}

TEST(Integrate, PitchforkConvergesToTheSinkAtXEqualsOne) {
    const PitchforkParams p{1.0, 0.0, 1.0};
    const std::vector<double> x0{0.9, 0.1};
    const auto tr = integrate(SystemSpec::pitchfork2(p), x0, 60.0, 1e-2);
    const auto end = tr.back();
    bool matched = false;
    for (const auto& e : equilibria(p))
        if (std::hypot(end[0] - e.x, end[1] - e.y) < 1e-8) {
            matched = true;
            EXPECT_EQ(e.stability, Stability::StableNode);
            EXPECT_NEAR(e.x, 1.0, 1e-15);
        }
    EXPECT_TRUE(matched);
}

TEST(IntegrateProperty, FourthOrderOnEverySystem) {
    const std::vector<std::pair<SystemSpec, std::vector<double>>> cases = {
        {SystemSpec::pitchfork2({0.5, 0.2, 1.0}), {0.3, -0.7}},
        {SystemSpec::pitchfork3({0.5, 0.2, 1.0}), {0.3, -0.7, 0.4}},
        {SystemSpec::hopf3({0.2, 1.0, 1.0, false}), {0.4, 0.1, -0.3, 0.2, 0.1, 0.5}},
        {SystemSpec::sl_full({0.3, 0.1, 1.0, 0.5, 0.8, 0.7}), {0.5, 0.0, 0.2, 0.3}},
        {SystemSpec::sl_reduced(reduced_plus(0.8, 1.2, 0.3)), {0.4, -0.2}},
    };
    for (const auto& [spec, x0] : cases) {
        const double dt = 0.2;
        const auto a = integrate(spec, x0, 4.0, dt);
        const auto b = integrate(spec, x0, 4.0, dt / 2);
        const auto c = integrate(spec, x0, 4.0, dt / 4);
        const double order = std::log2(dist(a.back(), b.back()) / dist(b.back(), c.back()));
        EXPECT_GE(order, 3.7) << to_string(spec.kind);
        EXPECT_LE(order, 4.3) << to_string(spec.kind);
    }
}

TEST(Integrate, ErrorsAndBlowup) {
    const auto spec = SystemSpec::pitchfork2({1.0, 0.0, 1.0});
    const std::vector<double> good{1.0, 1.0}, wrong{1.0};
    EXPECT_THROW(integrate(spec, wrong, 1.0, 0.1), error);
    EXPECT_THROW(integrate(spec, good, 1.0, 0.0), error);
    EXPECT_THROW(integrate(spec, good, -1.0, 0.1), error);
    try {
        const std::vector<double> big{10.0, 0.0};
        integrate(spec, big, 10.0, 1.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::blowup);
        EXPECT_EQ(e.family(), error_family::numeric);
    }
}

TEST(Attractor, PhaseLockedMatchesReducedEquilibrium) {
    // sigma_t = 0.5, mu_t = 1 with eps = 0, lambda = 1 means mu = 1 and sigma = 0.5
    const SLParams p{1.0, 0.0, 1.0, 0.5, 1.0, 0.0};
    const std::vector<double> x0{1.0, 0.0, 0.1, 0.0};
    const auto r = classify_attractor(SystemSpec::sl_full(p), x0);
    ASSERT_EQ(r.cls, AttractorClass::PhaseLocked);
    const auto eqs = equilibria_reduced(reduced_plus(0.5, 1.0));
    ASSERT_EQ(eqs.size(), 1u);
    EXPECT_NEAR(r.amp_mean, std::sqrt(p.mu) * std::sqrt(eqs[0].x), 1e-4);
    EXPECT_LT(r.phase_var, 1e-6);
    EXPECT_NEAR(r.phase_lock_angle, std::atan2(eqs[0].vI, eqs[0].vR), 1e-4);
}

TEST(Attractor, TorusBeyondTheBoundary) {
    const std::vector<double> x0{1.0, 0.0, 0.1, 0.0};
    const auto r = classify_attractor(SystemSpec::sl_full({1.0, 0.0, 1.0, 2.5, 1.0, 0.0}), x0);
    EXPECT_EQ(r.cls, AttractorClass::Torus);
    EXPECT_GE(r.amp_ptp, 10.0 * tolerances::amp);
    EXPECT_GT(r.secondary_period, 0.0);
}

TEST(Attractor, HopfSideFlipAcrossTheEllipse) {
    const double mu_t = 0.5;
    const double sb = stability_boundary(mu_t);
    EXPECT_NEAR(landmarks::trace_ellipse(sb, mu_t), 0.0, 1e-9);
    EXPECT_EQ(torus_birth_type(mu_t), TorusBirth::Hopf);
    const std::vector<double> v0{0.1, 0.0};
    std::vector<AttractorClass> seen;
    for (double d : {-0.1, -0.05, 0.05, 0.1})
        seen.push_back(classify_attractor(SystemSpec::sl_reduced(reduced_plus(sb + d, mu_t)), v0).cls);
    EXPECT_EQ(seen[0], AttractorClass::PhaseLocked);
    EXPECT_EQ(seen[1], AttractorClass::PhaseLocked);
    EXPECT_EQ(seen[2], AttractorClass::Torus);
    EXPECT_EQ(seen[3], AttractorClass::Torus);
}

TEST(Attractor, RejectsNonOscillatorSystems) {
    const std::vector<double> x0{0.1, 0.1};
    EXPECT_THROW(classify_attractor(SystemSpec::pitchfork2({1.0, 0.0, 1.0}), x0), error);
}

TEST(AttractorProperty, FullSystemAmplitudeMatchesReduction) {
    std::mt19937_64 rng(131);
    std::uniform_real_distribution<double> Umu(0.1, 1.5), Ueps(-0.5, 0.8), Us(-1.5, 1.5), Ul(0.5, 1.5);
    int done = 0;
    AttractorOptions opt;
    opt.t_transient = 1000.0;
    opt.t_window = 200.0;
    while (done < 50) {
        const SLParams p{Umu(rng), Ueps(rng), 1.0, Us(rng), Ul(rng), 0.0};
        const auto rp = reduce(p);
        const auto region = classify_region_sl_counts(rp);
        if (region.boundary || region.n_stable == 0) continue;
        const auto eqs = equilibria_reduced(rp);
        const auto it = std::find_if(eqs.begin(), eqs.end(), [](auto& e) { return e.stable; });
        if (std::abs(it->trJ) < 0.05) continue; // slow spirals need longer transients than this sample budget
        ++done;
        const std::vector<double> x0{std::sqrt(p.mu), 0.0, 1.02 * rp.amp_scale * it->vR, 1.02 * rp.amp_scale * it->vI};
        const auto r = classify_attractor(SystemSpec::sl_full(p), x0, opt);
        ASSERT_EQ(r.cls, AttractorClass::PhaseLocked) << p.mu << " " << p.eps << " " << p.sigma;
        const double expect = rp.amp_scale * std::sqrt(it->x);
        EXPECT_NEAR(r.amp_mean / expect, 1.0, 1e-3);
        EXPECT_LT(r.phase_var, 1e-6);
    }
}

TEST(AttractorProperty, TorusWhereNoEquilibriumIsStable) {
    std::mt19937_64 rng(137);
    std::uniform_real_distribution<double> Us(1.3, 3.0), Um(0.2, 4.0);
    int done = 0;
    const std::vector<double> v0{0.2, 0.0};
    while (done < 20) {
        const double s = Us(rng), m = Um(rng);
        const auto region = classify_region_sl(reduced_plus(s, m));
        if (region.boundary || region.n_stable != 0) continue;
        if (std::abs(s - stability_boundary(m)) < 0.05) continue;
        ++done;
        const auto r = classify_attractor(SystemSpec::sl_reduced(reduced_plus(s, m)), v0);
        EXPECT_EQ(r.cls, AttractorClass::Torus) << s << " " << m;
    }
}

TEST(Basins, FourSinksBelowTheCriticalMu) {
    const PitchforkParams p{0.05, 0.8, 1.0};
    ASSERT_LT(p.mu, critical_mu_roots(0.8, 1.0).mu.front());
    auto grid = default_basin_grid(p.mu);
    grid.nx = grid.ny = 41;
    const auto b = basin_map(p, grid);
    EXPECT_EQ(b.distinct_labels(), 4);
    EXPECT_EQ(count_stable(b.equilibria), 4);
    for (int l : b.labels)
        if (l >= 0) {
            EXPECT_EQ(b.equilibria[static_cast<std::size_t>(l)].stability, Stability::StableNode);
        }
}

TEST(Basins, NegativeEpsHasTwoMirroredBasins) {
    const PitchforkParams p{0.3, -0.3, 1.0};
    auto grid = default_basin_grid(p.mu);
    grid.nx = grid.ny = 41;
    const auto b = basin_map(p, grid);
    EXPECT_EQ(b.distinct_labels(), 2);
    auto mirror = [&](int l) {
        if (l < 0) return -1;
        const auto& e = b.equilibria[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < b.equilibria.size(); ++k)
            if (std::abs(b.equilibria[k].x + e.x) < 1e-12 && std::abs(b.equilibria[k].y + e.y) < 1e-9)
                return static_cast<int>(k);
        return -2;
    };
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            EXPECT_EQ(b.label(grid.nx - 1 - i, grid.ny - 1 - j), mirror(b.label(i, j)));
}

TEST(Basins, TwoSinksAboveTheCriticalMu) {
    const double mu1 = critical_mu_roots(0.1, 1.0).mu.front();
    const PitchforkParams p{1.05 * mu1, 0.1, 1.0};
    auto grid = default_basin_grid(p.mu);
    grid.nx = grid.ny = 21;
    EXPECT_EQ(basin_map(p, grid).distinct_labels(), 2);
}

TEST(BasinsProperty, CountMatchesStableEquilibriaAndIsWorkerInvariant) {
    for (const PitchforkParams& p : {PitchforkParams{0.1, 0.5, 1.0}, PitchforkParams{0.02, 0.3, 1.0},
                                     PitchforkParams{0.5, 0.2, 1.0}, PitchforkParams{1.0, -2.0, 1.0}}) {
        auto grid = default_basin_grid(p.mu);
        grid.nx = grid.ny = 25;
        BasinOptions one, many;
        one.workers = 1;
        many.workers = 4;
        const auto a = basin_map(p, grid, one);
        const auto b = basin_map(p, grid, many);
        EXPECT_EQ(a.labels, b.labels);
        EXPECT_EQ(a.distinct_labels(), count_stable(a.equilibria)) << p.mu << " " << p.eps;
    }
}

TEST(Scaling, SecondOscillatorSixthRootLaw) {
    std::vector<double> mus;
    for (int i = 0; i < 8; ++i) mus.push_back(1e-6 * std::pow(1e3, i / 7.0));
    for (double lam : {1.0, 2.0}) {
        const auto fit = scaling_fit(SystemSpec::sl_full({0.0, 0.0, 1.0, 0.0, lam, 0.0}), mus, 1);
        EXPECT_NEAR(fit.slope, 1.0 / 6.0, 0.02);
        EXPECT_NEAR(std::exp(fit.intercept) / std::cbrt(lam), 1.0, 0.1);
        EXPECT_GT(fit.r2, 0.999);
        // each settled amplitude equals the largest root of the amplitude polynomial
        for (std::size_t i = 0; i < mus.size(); ++i) {
            const double x = solve_cubic_real(G_cubic(mus[i], 0.0, 0.0, lam, 0.0)).roots.back();
            EXPECT_NEAR(fit.amplitude[i] / std::sqrt(x), 1.0, 1e-6);
        }
    }
}

TEST(Scaling, GammaShrinksThePrefactorBySixthRootOfTwo) {
    std::vector<double> mus;
    for (int i = 0; i < 8; ++i) mus.push_back(1e-6 * std::pow(1e3, i / 7.0));
    const auto a = scaling_fit(SystemSpec::sl_full({0.0, 0.0, 1.0, 0.0, 1.0, 0.0}), mus, 1);
    const auto b = scaling_fit(SystemSpec::sl_full({0.0, 0.0, 1.0, 0.0, 1.0, 1.0}), mus, 1);
    EXPECT_NEAR(b.slope, 1.0 / 6.0, 0.02);
    // |u|^2 carries the factor (1+gamma^2)^(-1/3), so |u| carries its square root
    EXPECT_NEAR(std::exp(b.intercept - a.intercept), std::pow(2.0, -1.0 / 6.0), 0.01);
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const double x = solve_cubic_real(G_cubic(mus[i], 0.0, 0.0, 1.0, 1.0)).roots.back();
        EXPECT_NEAR(b.amplitude[i] / std::sqrt(x), 1.0, 1e-6);
    }
}

TEST(Scaling, ThreeCellChain) {
    std::vector<double> mus;
    for (int i = 0; i < 8; ++i) mus.push_back(1e-6 * std::pow(1e3, i / 7.0));
    const auto self = scaling_fit(SystemSpec::hopf3({0.0, 1.0, 1.0, true}), mus, 2);
    const auto free = scaling_fit(SystemSpec::hopf3({0.0, 1.0, 1.0, false}), mus, 2);
    EXPECT_NEAR(self.slope, 1.0 / 6.0, 0.02);
    // without self-coupling the third cell sees a cube root of a cube root: exponent 1/18
    EXPECT_NEAR(free.slope, 1.0 / 18.0, 0.01);
    for (std::size_t i = 0; i < mus.size(); ++i) EXPECT_GT(free.amplitude[i], self.amplitude[i]);
    // the self-coupled first cell is quenched and the middle cell oscillates at sqrt(mu)
    const auto mid = scaling_fit(SystemSpec::hopf3({0.0, 1.0, 1.0, true}), {1e-4, 1e-3}, 1);
    EXPECT_NEAR(mid.slope, 0.5, 1e-6);
}

TEST(Scaling, Validation) {
    EXPECT_THROW(scaling_fit(SystemSpec::sl_full({}), {1e-3}, 1), error);
    EXPECT_THROW(scaling_fit(SystemSpec::sl_full({}), {1e-3, -1.0}, 1), error);
    EXPECT_THROW(scaling_fit(SystemSpec::sl_full({}), {1e-3, 1e-2}, 2), error);
    EXPECT_THROW(scaling_fit(SystemSpec::pitchfork2({}), {1e-3, 1e-2}, 0), error);
}

TEST(JumpTrajectory, SymmetricAtZeroEps) {
    for (double mu : {1e-3, 1e-2, 0.1}) {
        const auto a = jump_trajectory({0.0, 0.0, 1.0}, 1, mu);
        const auto b = jump_trajectory({0.0, 0.0, 1.0}, -1, mu);
        EXPECT_NEAR(a.delta_y, b.delta_y, 1e-6);
        EXPECT_NEAR(a.x_final, std::sqrt(mu), 1e-12);
        EXPECT_NEAR(b.x_final, -std::sqrt(mu), 1e-12);
    }
}

TEST(JumpTrajectory, AgreesWithPinnedResponse) {
    for (double eps : {-0.05, 0.0}) {
        for (double mu : {2e-3, 2e-2}) {
            const auto pinned = jump_response(eps, 1.0, {mu}, 1);
            for (const auto& rec : pinned) {
                const auto full = jump_trajectory({0.0, eps, 1.0}, rec.x_sign, mu);
                EXPECT_NEAR(full.y_final, rec.y_final, 1e-6);
            }
        }
    }
}

TEST(JumpTrajectory, AmplifiedJumpAndNegativeEps) {
    const double eps = 0.1;
    const double mu = 1.2 * critical_mu_roots(eps, 1.0).mu.front();
    const auto a = jump_trajectory({0.0, eps, 1.0}, 1, mu);
    const auto b = jump_trajectory({0.0, eps, 1.0}, -1, mu);
    const double big = std::max(a.delta_y, b.delta_y);
    EXPECT_NEAR(big / (2.0 * std::sqrt(eps)), 1.0, 0.15);
    for (int k = 1; k <= 5; ++k) {
        const double m = 1e-3 * k;
        EXPECT_LE(jump_trajectory({0.0, -0.01, 1.0}, 1, m).delta_y, jump_trajectory({0.0, 0.0, 1.0}, 1, m).delta_y);
    }
}

TEST(Sweep, MuPathEvents) {
    const auto r = branch_sweep({0.0, 0.2, 1.0, 0.98, 1.0, 0.0}, {SweepParam::Mu, -0.4, 2.0, 241});
    const double step = 2.4 / 240;
    auto has = [&](const std::string& label, double lo, double hi) {
        return std::any_of(r.events.begin(), r.events.end(),
                           [&](auto& e) { return e.label == label && e.param >= lo && e.param <= hi; });
    };
    EXPECT_TRUE(has("HB", -0.2 - step, -0.2 + step));
    EXPECT_TRUE(has("HB", -step, step));
    EXPECT_TRUE(has("TR", 0.1, 0.5));
    ASSERT_FALSE(r.three_locked_windows.empty());
    EXPECT_GT(r.three_locked_windows.front()[1], r.three_locked_windows.front()[0]);
    // the first points are at rest, the cell-2 cycle follows, and the last point is phase-locked
    EXPECT_EQ(r.points.front().attractor, SweepAttractor::Rest);
    EXPECT_EQ(r.points[30].attractor, SweepAttractor::SecondCellCycle);
    EXPECT_EQ(r.points.back().attractor, SweepAttractor::PhaseLocked);
    // every locked branch satisfies the amplitude polynomial and ids are unique at each point
    for (const auto& pt : r.points) {
        std::vector<int> ids;
        for (const auto& b : pt.locked) {
            ids.push_back(b.id);
            const auto g = G_and_partials(b.amplitude2, pt.param, 0.98, 0.2, 1.0, 0.0);
            EXPECT_LT(std::abs(g.G), 1e-9);
        }
        std::sort(ids.begin(), ids.end());
        EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
    }
}

TEST(Sweep, EpsPathEndsOnTorus) {
    const auto r = branch_sweep({0.2, 0.0, 1.0, 0.98, 1.0, 0.0}, {SweepParam::Eps, -0.1, 2.0, 200});
    EXPECT_EQ(r.points.front().attractor, SweepAttractor::PhaseLocked);
    EXPECT_EQ(r.points.front().locked.size(), 1u);
    EXPECT_EQ(r.points.back().attractor, SweepAttractor::Torus);
    EXPECT_TRUE(std::any_of(r.events.begin(), r.events.end(), [](auto& e) { return e.label == "TR"; }));
    EXPECT_THROW(branch_sweep({}, {SweepParam::Eps, 1.0, 1.0, 10}), error);
    EXPECT_THROW(branch_sweep({}, {SweepParam::Eps, 0.0, 1.0, 1}), error);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
    std::vector<int> out(100, 0);
    parallel_for(100, [&](std::size_t i) { out[i] = static_cast<int>(i * i); }, 4);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
    try {
        parallel_for(
            50,
            [](std::size_t i) {
                if (i == 7 || i == 30) throw error(errc::internal, std::to_string(i));
            },
            3);
        FAIL();
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
    }
}
