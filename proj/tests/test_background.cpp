#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "krf/background.hpp"

#include <cmath>

using namespace krf;

TEST_CASE("catalog scenarios satisfy the scenario invariants") {
    for (const Scenario& s : builtin_scenarios()) {
        CAPTURE(s.name);
        CHECK_NOTHROW(validate_scenario(s));
    }
}

TEST_CASE("interpolation closed forms") {
    // B0 = 2I, Binf = I, psi = 0: at t = ln 2 the field is 1.5 I
    const Scenario s = make_homogeneous(2.0, 1.0, 2, 8);
    const HermitianField mid = interpolate_background(s, std::log(2.0));
    CHECK(mid.comps[0](0).real() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(mid.comps[3](7).real() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(mid.comps[1].abs().maxCoeff() <= 1e-16);
}

TEST_CASE("interpolation returns omega_0 bit-identically at t = 0") {
    const Scenario s = make_generic_ample(2, 8);
    const HermitianField at0 = interpolate_background(s, 0.0);
    for (int c = 0; c < 4; ++c)
        CHECK(((at0.comps[c] - s.omega0.comps[c]).abs().maxCoeff()) == 0.0);
}

TEST_CASE("interpolation approaches omega_inf at the stated rate") {
    const Scenario s = make_generic_ample(2, 8);
    double dist0 = 0.0;
    for (int c = 0; c < 4; ++c)
        dist0 = std::max(dist0,
                         (s.omega0.comps[c] - s.omega_inf.comps[c]).abs().maxCoeff());
    for (double t : {2.0, 5.0}) {
        const HermitianField w = interpolate_background(s, t);
        double dist = 0.0;
        for (int c = 0; c < 4; ++c)
            dist = std::max(dist,
                            (w.comps[c] - s.omega_inf.comps[c]).abs().maxCoeff());
        CHECK(dist <= std::exp(-t) * dist0 * (1.0 + 1e-12));
    }
}

TEST_CASE("interpolation is affine in e^{-t}") {
    const Scenario s = make_generic_ample(2, 8, 3);
    const double t1 = 0.4, t2 = 1.1;
    const double w1 = std::exp(-t1), w2 = std::exp(-t2);
    const double wm = 0.5 * (w1 + w2);
    const double tm = -std::log(wm);
    const HermitianField f1 = interpolate_background(s, t1);
    const HermitianField f2 = interpolate_background(s, t2);
    const HermitianField fm = interpolate_background(s, tm);
    for (int c = 0; c < 4; ++c) {
        const Eigen::ArrayXcd affine = 0.5 * (f1.comps[c] + f2.comps[c]);
        CHECK(((fm.comps[c] - affine).abs().maxCoeff()) <= 1e-14);
    }
}

TEST_CASE("horizon guard") {
    const Scenario s = make_finite_time(1.0, 1, 8);
    CHECK_NOTHROW(interpolate_background(s, 0.9));
    CHECK_THROWS_AS(interpolate_background(s, 1.0), HorizonError);
    CHECK_THROWS_AS(interpolate_background(s, 1.5), HorizonError);
}

TEST_CASE("compute_C_u closed forms") {
    // KE fixed point: ratio identically 1, so the constant is 0
    CHECK(compute_C_u(make_ke_fixed_point(2, 8), 5.0) == 0.0);

    // homogeneous n=1, a=2, b=1: sup at t = 0 gives log 2 + margin
    const double c = compute_C_u(make_homogeneous(2.0, 1.0, 1, 8), 5.0);
    CHECK(c == doctest::Approx(std::log(2.0) + 0.01).epsilon(1e-6));

    // dense t-scan oracle: the coarse sample plus margin dominates it
    const Scenario s = make_homogeneous(2.0, 1.0, 1, 8);
    double dense = 0.0;
    for (int i = 0; i <= 4096; ++i) {
        const double t = 5.0 * i / 4096.0;
        dense = std::max(dense, std::log(1.0 + std::exp(-t)));
    }
    CHECK(c >= dense);
    CHECK(c <= dense + 0.011);

    // log det omega_t <= log Omega everywhere: constant clamps to 0
    CHECK(compute_C_u(make_homogeneous(0.5, 0.25, 1, 8), 5.0) == 0.0);
}

TEST_CASE("finite_time constant solves the degeneration equation") {
    const Scenario s = make_finite_time(1.0, 1, 8);
    const double binf = s.Binf(0, 0).real();
    CHECK(binf == doctest::Approx(-2.0 / (std::exp(1.0) - 1.0)).epsilon(1e-12));
    CHECK(binf == doctest::Approx(-1.16395).epsilon(1e-4));
    // B_T = Binf + e^{-T}(B0 - Binf) = 0 at T
    const double BT = binf + std::exp(-1.0) * (2.0 - binf);
    CHECK(std::abs(BT) <= 1e-12);
    // omega_t > 0 numerically for t < T
    for (int i = 1; i <= 64; ++i) {
        const double t = 0.999 * i / 64.0;
        CHECK(reduce(min_eigenvalue_field(interpolate_background(s, t)),
                     Reduce::Min) > 0.0);
    }
}

TEST_CASE("finite_time degeneration is linear in e^{-t} - e^{-T}") {
    const Scenario s = make_finite_time(1.0, 1, 8);
    auto min_eig_at = [&](double t) {
        return reduce(min_eigenvalue_field(interpolate_background(s, t)),
                      Reduce::Min);
    };
    const double slope = 2.0 - s.Binf(0, 0).real();  // B0 - Binf
    for (double t : {0.5, 0.8, 0.95}) {
        const double expect = slope * (std::exp(-t) - std::exp(-1.0));
        CHECK(min_eig_at(t) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("fibration reference form is the flat pull-back") {
    const Scenario s = make_fibration(8);
    CHECK(s.fibration);
    // omega_inf has only the (1,1bar) base entry
    CHECK(s.omega_inf.comps[0].real().maxCoeff() == doctest::Approx(1.0));
    CHECK(s.omega_inf.comps[0].real().minCoeff() == doctest::Approx(1.0));
    CHECK(s.omega_inf.comps[1].abs().maxCoeff() <= 1e-16);
    CHECK(s.omega_inf.comps[3].abs().maxCoeff() <= 1e-16);
    // trace against I depends only on base coordinates (here: constant)
    const HermitianField I = make_hermitian_constant(s.spec, [] {
        SmallMat m = SmallMat::Zero(2, 2);
        m(0, 0) = m(1, 1) = 1.0;
        return m;
    }());
    const ScalarField tr = trace_pair(I, s.omega_inf);
    CHECK((tr.values - tr.values(0)).abs().maxCoeff() <= 1e-16);
}

TEST_CASE("fibration with n = 1 is rejected") {
    CHECK_THROWS_AS(make_scenario("fibration", 1, 8, 0, 0, 0, 7), ScenarioError);
}

TEST_CASE("unknown scenario names are rejected") {
    CHECK_THROWS_AS(make_scenario("torus_of_revolution", 1, 8, 0, 0, 0, 7),
                    ScenarioError);
}

TEST_CASE("generic_ample potentials keep the stated margins") {
    const Scenario s = make_generic_ample(2, 16);
    CHECK(reduce(min_eigenvalue_field(s.omega0), Reduce::Min) >= 0.2 * 2.0);
    CHECK(reduce(min_eigenvalue_field(s.omega_inf), Reduce::Min) >= 0.2);
    // potentials are genuinely nonconstant
    CHECK(reduce(s.psi0, Reduce::SupNorm) > 1e-3);
}
