#ifndef KRF_FLOW_HPP
#define KRF_FLOW_HPP

#include "krf/background.hpp"

#include <string>
#include <vector>

// The parabolic Monge-Ampere integrator: right-hand side evaluation, explicit
// adaptive time stepping with a Kahler-positivity guard, a linearly implicit
// path for stiff (collapsing) scenarios, and checkpoint management.

namespace krf {

struct KahlerLostError : std::runtime_error {
    KahlerLostError(double t, std::int64_t point, double eig)
        : std::runtime_error("Kahler positivity lost at t = " +
                             std::to_string(t) + " (point " +
                             std::to_string(point) + ", min eigenvalue " +
                             std::to_string(eig) + ")"),
          t(t), point(point), min_eig(eig) {}
    double t;
    std::int64_t point;
    double min_eig;
};

struct StepFailureError : std::runtime_error {
    StepFailureError(const std::string& what, double t)
        : std::runtime_error(what), t(t) {}
    double t;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Integrator { RK4, ROS2 };

struct StepControl {
    // explicit stability rule dt = sigma / (lambda_max K^2), K = N/2;
    // default is 0.9 * 2.8 / 4 (4-stage real-axis limit over the four
    // z-direction second-derivative channels at n = 2)
    double sigma = 0.9 * 2.8 / 4.0;
    double eps_T = 1e-3;    // stop-gap before a finite horizon
    int max_halvings = 20;  // dt retries on KahlerLost / non-finite values
    double dt_fixed = 0.0;  // > 0 forces a fixed explicit step
    Integrator integrator = Integrator::RK4;
    double dt_imex = 0.02;      // ROS2 step size
    double krylov_tol = 1e-11;  // relative residual for the W-solves
    int krylov_max_iters = 500;
};

struct FlowState {
    double t = 0.0;
    ScalarField u;
    ScalarField udot;        // rhs at (u, t), kept coherent
    HermitianField g_tilde;  // omega_t + i dd~ u
    double min_eig = 0.0;    // pointwise minimum eigenvalue of g_tilde
    long step_count = 0;
    double dt_current = 0.0;
    long retry_count = 0;    // cumulative dt halvings (positivity/finiteness)
};

struct RhsResult {
    ScalarField udot;
    HermitianField g_tilde;
    double min_eig;
};

// udot = log det(omega_t + i dd~ u) - log Omega - u.
// Throws KahlerLostError when omega_t + i dd~ u stops being a metric.
RhsResult rhs(const Scenario& s, const ScalarField& u, double t);

// u'' = -e^{-t} <g~, omega_0 - omega_inf> + Lap(u') - u'.
ScalarField second_time_derivative(const Scenario& s, const FlowState& st);

FlowState make_initial_state(const Scenario& s);

// One accepted step (dt by the stability rule, capped), retrying with halved
// dt on positivity loss or non-finite values.
FlowState step(const Scenario& s, const FlowState& st, const StepControl& ctl,
               double dt_cap);

// Integrates st in place to exactly t_target (within the horizon); st always
// holds the most recent accepted state, also when this throws.
void advance_to(const Scenario& s, FlowState& st, double t_target,
                const StepControl& ctl);

enum class RunTermination { Completed, HorizonReached };

struct RunResult {
    std::vector<FlowState> snapshots;
    RunTermination termination = RunTermination::Completed;
    long total_steps = 0;
};

// Thrown when stepping fails mid-run; carries the snapshots collected so far
// (the last one is the most recent good checkpoint).
struct RunFailure : std::runtime_error {
    RunFailure(const std::string& what, RunResult partial)
        : std::runtime_error(what), partial(std::move(partial)) {}
    RunResult partial;
};

// Integrates from u(0) = 0, emitting exact-coherent snapshots at the
// scheduled times (landing steps hit them exactly). A finite horizon stops
// the run at T - eps_T with termination HorizonReached.
RunResult run(const Scenario& s, const std::vector<double>& schedule,
              const StepControl& ctl);

// Checkpoint file: magic "KRFL", u16 version, u16 n, u32 N, f64 t, then the
// u values as little-endian f64, row-major. Round-trips bit-exactly.
void write_checkpoint(const std::string& path, const FlowState& st);

struct CheckpointData {
    int n = 0, N = 0;
    double t = 0.0;
    Eigen::ArrayXd u;
};
CheckpointData read_checkpoint(const std::string& path);

// Rebuilds a coherent state from checkpoint data.
FlowState state_from_checkpoint(const Scenario& s, const CheckpointData& data);

}  // namespace krf

#endif
