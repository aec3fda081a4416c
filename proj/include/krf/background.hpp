#ifndef KRF_BACKGROUND_HPP
#define KRF_BACKGROUND_HPP

#include "krf/hermitian.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

// Scenario definitions: background data (omega_0, omega_inf, Omega), the
// interpolation omega_t, the twist decomposition, the horizon T and derived
// certificate constants. All catalog scenarios are deterministic (fixed seed).

namespace krf {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HorizonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kInfiniteHorizon =
    std::numeric_limits<double>::infinity();

struct Scenario {
    std::string name;  // catalog identifier, e.g. "homogeneous"
    GridSpec spec;

    SmallMat B0;    // constant part of omega_0
    SmallMat Binf;  // constant part of omega_inf (= the twist)
    ScalarField psi0, psi_inf;  // potentials: omega = B + i dd~ psi
    ScalarField log_omega;      // volume density, log Omega = psi_inf + c0
    double c0 = 0.0;

    double T_horizon = kInfiniteHorizon;
    double t_end_default = 5.0;

    // derived fields
    HermitianField omega0, omega_inf, omega_T;
    HermitianField omega_diff;  // omega_0 - omega_inf, cached for hot paths
    SmallMat twist;             // = Binf

    bool fibration = false;
    double base_metric = 1.0;  // (omega_base)_{1 1bar} of the flat base form

    std::uint64_t seed = 0;
    double param_a = 0.0, param_b = 0.0, param_T = 0.0;

    bool finite_horizon() const { return std::isfinite(T_horizon); }
};

struct CertificateConstants {
    double C_u = 0.0;   // sup bound for u (compute_C_u unless overridden)
    double C_v = 10.0;  // denominator constant for Psi and Phi
    double tol_certificate = 1e-6;
    double tol_schwarz = 1e-4;
    double tol_gradient = 1e-6;
    double tol_laplacian = 1e-5;
    double tol_identity = 1e-8;
};

// omega_inf + e^{-t} (omega_0 - omega_inf); bit-identical omega_0 at t = 0.
// Throws HorizonError for t beyond the horizon (t < T required when finite).
HermitianField interpolate_background(const Scenario& s, double t);

// max(0, sup over sampled t and grid of [log det omega_t - log Omega]) with a
// +0.01 safety margin; t sampled on a uniform grid of 64 interior values in
// [0, min(T, t_end)] plus endpoints (log-concavity of det along the affine
// interpolation justifies the coarse sampling).
double compute_C_u(const Scenario& s, double t_end);

// Scenario constructors. Potentials are fixed-seed random trigonometric
// polynomials with |wavevector| <= 3, scaled to keep eigenvalue margins.
Scenario make_ke_fixed_point(int n, int N);
Scenario make_homogeneous(double a, double b, int n, int N);
Scenario make_generic_ample(int n, int N, std::uint64_t seed = 7);
Scenario make_fibration(int N, std::uint64_t seed = 7);
Scenario make_finite_time(double T, int n, int N);

// The five-entry catalog at desk-scale defaults.
std::vector<Scenario> builtin_scenarios();

// Catalog lookup used by the CLI; throws ScenarioError for unknown names.
Scenario make_scenario(const std::string& name, int n, int N, double a,
                       double b, double T, std::uint64_t seed);

// Enforces the Scenario invariants (positivity, twist consistency, finite-T
// degeneration structure); throws ScenarioError on violation.
void validate_scenario(const Scenario& s);

}  // namespace krf

#endif
