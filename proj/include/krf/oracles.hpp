#ifndef KRF_ORACLES_HPP
#define KRF_ORACLES_HPP

#include "krf/hermitian.hpp"

#include <cstdint>
#include <vector>

// Independent ground-truth generators: the spatially homogeneous ODE
// reduction of the potential flow, the Kahler-Einstein fixed point, and a
// randomized pointwise-algebra fuzzer. Everything here is decoupled from the
// PDE integrator so that a solver bug cannot validate itself.

namespace krf {

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Homogeneous reduction: with omega_0 = a I, omega_inf = b I and Omega = e^{c0},
// the potential is spatially constant and solves
//   u' = n log(b + e^{-t}(a - b)) + c0 - u,  u(0) = 0.
struct HomogeneousTrajectory {
    double a = 0, b = 0, c0 = 0;
    int n = 1;
    std::vector<double> t;
    std::vector<double> u, udot, uddot;
};

// Quadrature route: u(t) = e^{-t} int_0^t e^s [n log(b + e^{-s}(a-b)) + c0] ds
// by adaptive Gauss-Kronrod; u', u'' from the ODE and its derivative.
// Throws OracleError when the interpolant b + e^{-t}(a-b) degenerates.
HomogeneousTrajectory solve_homogeneous(double a, double b, double c0, int n,
                                        const std::vector<double>& t_samples);

// Independent second route: fixed-step RK4 on the scalar ODE.
double homogeneous_u_rk4(double a, double b, double c0, int n, double t,
                         double dt = 1e-4);

// Expected invariants of the stationary solution with Omega = det B.
struct KeReference {
    double u = 0.0;
    double R_tw;  // -n
    double phi;   // n
    double v = 0.0;
};
KeReference ke_fixed_point_reference(const SmallMat& B, int n);

// Draws `count` random positive 2x2 Hermitian metrics and Hermitian forms
// (fixed seed), checks wedge_ratio == trace_pair/2 to 1e-12 and the
// Cauchy-Schwarz floor tr((g^-1 H)^2) >= tr(g^-1 H)^2 / n on Hessian
// stand-ins. Returns the worst deviation observed.
struct FuzzReport {
    bool pass = false;
    double worst_wedge = 0.0;
    double worst_cs = 0.0;  // most negative CS margin
};
FuzzReport algebra_fuzzer(std::uint64_t seed, int count);

}  // namespace krf

#endif
