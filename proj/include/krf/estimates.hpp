#ifndef KRF_ESTIMATES_HPP
#define KRF_ESTIMATES_HPP

#include "krf/flow.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// The monitor suite: every derived evolution identity evaluated as a
// pointwise residual, and every estimate as a bound certificate with an
// explicitly computed constant. Time derivatives of monitored fields use
// analytic expressions where available (u'' in closed form, dg~/dt in closed
// form) and centered snapshot differences otherwise; monitors that difference
// snapshots need neighbors and report InsufficientData without them.

namespace krf {

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedCase : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CertificateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// v = (1 - e^{t-T}) u' + u; the factor is exactly 1 when T = infinity.
ScalarField v_field(const Scenario& s, const FlowState& st);

// Analytic dv/dt (uses second_time_derivative).
ScalarField v_dot_field(const Scenario& s, const FlowState& st);

// u''_fd - [Lap u' - e^{-t} <g~, omega_0 - omega_inf> - u'] with u''_fd from
// differencing the u' fields of adjacent snapshots (index i interior).
ScalarField residual_first_tderiv(const Scenario& s,
                                  const std::vector<FlowState>& snaps,
                                  std::size_t i);

// (d/dt - Lap) v - [-n + <g~, omega_T>], all-analytic route.
ScalarField residual_v_evolution(const Scenario& s, const FlowState& st);

struct ScalarIdentities {
    ScalarField R_tw;
    ScalarField residual1;  // R_tw - [e^{-t}<g~,omega_0-omega_inf> - Lap u' - n]
    ScalarField residual2;  // R_tw - [-n - (u'' + u')], analytic u''
};
ScalarIdentities scalar_curvature_identities(const Scenario& s,
                                             const FlowState& st);

// Measured route for the twisted scalar identity: sup |R_tw + n + d/dt(u'+u)|
// with d/dt estimated from snapshots (4th-order centered stencil when five
// uniformly spaced snapshots surround i, else 3-point).
double scalar_identity_fd_sup(const Scenario& s,
                              const std::vector<FlowState>& snaps,
                              std::size_t i);

struct CertificateResult {
    std::string name;
    bool pass = true;
    bool applicable = true;
    bool review_only = false;  // reported, never gates the exit code
    double margin = 0.0;       // >= 0 means pass
    double witness_t = 0.0;
    std::int64_t witness_point = -1;
    double witness_value = 0.0;
    std::string note;
};

CertificateResult certificate_u_upper(const Scenario& s,
                                      const std::vector<FlowState>& snaps,
                                      double C_u, double tol = 1e-6);
CertificateResult certificate_udot_decay(const Scenario& s,
                                         const std::vector<FlowState>& snaps,
                                         double C_u, double tol = 1e-6);
// m(t) = max_grid e^t (u'' + u') non-increasing within 1e-6 (1 + |m|).
CertificateResult certificate_volume_decay(const Scenario& s,
                                           const std::vector<FlowState>& snaps);
std::vector<CertificateResult> finite_time_certificates(
    const Scenario& s, const std::vector<FlowState>& snaps);

struct SchwarzResult {
    bool applicable = false;  // needs interior snapshot and phi > 1e-6
    ScalarField phi;
    ScalarField logphi_residual;  // (d/dt - Lap) log phi - 1
    double logphi_margin = 0.0;   // max of the residual (<= tol passes)
    bool has_H = false;           // fibration only
    ScalarField H;
    double sharp_margin = 0.0;    // max of (d/dt-Lap)phi - (phi - H), scaled
    double h_gradphi_margin = 0.0;  // min of H - |grad phi|^2/(2 phi)
};
SchwarzResult schwarz_monitor(const Scenario& s,
                              const std::vector<FlowState>& snaps,
                              std::size_t i);

struct FiberwiseRatio {
    ScalarField chain;   // (1/2)<g~,omega_T> * g~^2 / (omega_0 ^ omega_T)
    ScalarField direct;  // g~_{2 2bar} / (omega_0)_{2 2bar}
};
FiberwiseRatio fiberwise_ratio(const Scenario& s, const FlowState& st);

struct GradientMonitor {
    ScalarField Psi;          // |grad v|^2 / (C_v - v)
    ScalarField defect;       // (d/dt - Lap)|grad v|^2 minus the Bochner expansion
    ScalarField expected;     // -B_inf(grad v, grad~ v)
    ScalarField grad_norm2;   // |grad v|^2
    double scaled_sup = 0.0;  // sup |defect - expected| / (1 + |grad v|^2)
    std::int64_t worst_point = 0;
};
GradientMonitor gradient_monitor(const Scenario& s, const FlowState& st,
                                 const CertificateConstants& cc);

struct LaplacianMonitor {
    ScalarField Phi;       // (C_v - Lap v)/(C_v - v)
    ScalarField residual;  // (d/dt - Lap)(Lap v) - [Lap v + (Ric_tw, i dd~ v) + Lap phi]
    ScalarField lap_v;
    ScalarField R_tw;
    ScalarField phi;
    ScalarField cs_margin;     // |grad grad~ v|^2 - (Lap v)^2/n
    double scaled_sup = 0.0;   // sup |residual| / (1 + |Lap v|)
    double identity_sup = 0.0; // sup |Lap v + R_tw + phi|
    std::int64_t worst_point = 0;
};
LaplacianMonitor laplacian_monitor(const Scenario& s, const FlowState& st,
                                   const CertificateConstants& cc);

struct SeriesRow {
    double t = 0.0, dt = 0.0;
    double sup_u = 0.0, sup_udot = 0.0, sup_v = 0.0, min_v = 0.0;
    double sup_phi = 0.0, sup_Psi = 0.0, sup_negLapV = 0.0, sup_R_tw = 0.0;
    double res_first_tderiv = 0.0;   // FD route (NaN at schedule ends)
    double res_v_evolution = 0.0;    // analytic
    double res_scalar_id1 = 0.0;     // analytic
    double res_scalar_id2 = 0.0;     // analytic
    double res_scalar_id2_fd = 0.0;  // measured d/dt route
    double res_gradient_defect = 0.0;
    double res_laplacian = 0.0;
    double schwarz_logphi_margin = 0.0;
    double fiber_chain_err = 0.0;
    double spectral_tail = 0.0;
};

struct MonitorOptions {
    bool gradient = true;
    bool laplacian = true;
    bool schwarz = true;
    bool fiber = true;
    std::vector<std::string> plateaus;  // of: phi, R_tw, negLapV, Psi, abs_v
    double plateau_tol = 0.05;
};

struct MonitorReport {
    std::vector<SeriesRow> rows;
    std::vector<CertificateResult> certificates;
    CertificateConstants constants;
    bool all_pass() const;  // applicable, non-review certificates
};

MonitorReport evaluate_monitors(const Scenario& s, const RunResult& run,
                                const CertificateConstants& cc,
                                const MonitorOptions& opt);

}  // namespace krf

#endif
