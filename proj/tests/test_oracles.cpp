#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "krf/oracles.hpp"

#include <cmath>

using namespace krf;

TEST_CASE("stationary homogeneous trajectory") {
    const auto tr = solve_homogeneous(1.0, 1.0, 0.0, 2, {0.0, 0.5, 1.0, 3.0});
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        CHECK(std::abs(tr.u[i]) <= 1e-13);
        CHECK(std::abs(tr.udot[i]) <= 1e-13);
        CHECK(std::abs(tr.uddot[i]) <= 1e-13);
    }
}

TEST_CASE("initial slope and long-time limit") {
    const auto tr = solve_homogeneous(2.0, 1.0, 0.0, 1, {0.0, 20.0});
    CHECK(tr.udot[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(tr.u[1]) <= 1e-7);  // u -> n log b = 0
}

TEST_CASE("quadrature and ODE-integration routes agree") {
    const auto tr = solve_homogeneous(2.0, 1.0, 0.0, 1, {1.0});
    const double u_rk = homogeneous_u_rk4(2.0, 1.0, 0.0, 1, 1.0, 1e-4);
    CHECK(std::abs(tr.u[0] - u_rk) <= 1e-9);

    const auto tr2 = solve_homogeneous(3.0, 0.5, 0.25, 2, {2.5});
    const double u_rk2 = homogeneous_u_rk4(3.0, 0.5, 0.25, 2, 2.5, 1e-4);
    CHECK(std::abs(tr2.u[0] - u_rk2) <= 1e-9);
}

TEST_CASE("trajectory satisfies the scalar ODE") {
    const auto tr = solve_homogeneous(2.0, 1.0, 0.0, 1,
                                      {0.1, 0.5, 1.0, 2.0, 4.0});
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const double w = 1.0 + std::exp(-tr.t[i]);
        const double rhs = std::log(w) - tr.u[i];
        CHECK(std::abs(tr.udot[i] - rhs) <= 1e-10);
    }
}

TEST_CASE("numerical derivative of the quadrature u matches the ODE") {
    const double h = 1e-5;
    for (double t : {0.3, 1.2, 3.0}) {
        const auto tr =
            solve_homogeneous(2.0, 1.0, 0.0, 1, {t - h, t, t + h});
        const double dudt = (tr.u[2] - tr.u[0]) / (2.0 * h);
        CHECK(std::abs(dudt - tr.udot[1]) <= 1e-8);
    }
}

TEST_CASE("degenerate interpolant is a domain error") {
    CHECK_THROWS_AS(solve_homogeneous(2.0, -1.0, 0.0, 1, {3.0}), OracleError);
}

TEST_CASE("fixed point reference tuples") {
    SmallMat I1 = SmallMat::Zero(1, 1);
    I1(0, 0) = 1.0;
    const KeReference a = ke_fixed_point_reference(I1, 1);
    CHECK(a.phi == 1.0);
    SmallMat I2 = SmallMat::Zero(2, 2);
    I2(0, 0) = I2(1, 1) = 1.0;
    const KeReference b = ke_fixed_point_reference(I2, 2);
    CHECK(b.R_tw == -2.0);
    CHECK(b.u == 0.0);
    CHECK(b.v == 0.0);
    SmallMat B = SmallMat::Zero(1, 1);
    B(0, 0) = 2.0;
    CHECK(ke_fixed_point_reference(B, 1).u == 0.0);
}

TEST_CASE("pointwise algebra fuzzer") {
    const FuzzReport rep = algebra_fuzzer(7, 10000);
    CHECK(rep.pass);
    CHECK(rep.worst_wedge <= 1e-12);
    CHECK(rep.worst_cs >= -1e-10);
}
