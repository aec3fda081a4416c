#include "krf/flow.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace krf {

namespace {

double stability_dt(const Scenario& s, double min_eig, const StepControl& ctl) {
    const double K = 0.5 * s.spec.N;
    const double lambda_max = 1.0 / min_eig;
    return ctl.sigma / (lambda_max * K * K);
}

ScalarField lap(const HermitianField& g, const ScalarField& f) {
    return trace_pair(g, complex_hessian(f));
}

// ---- linearly implicit (ROS2) machinery ----------------------------------

// W x = (1 + gamma dt) x - gamma dt Lap_g x, solved by BiCGStab with an
// anisotropic constant-coefficient Fourier preconditioner.
struct WSolver {
    const Scenario* s;
    HermitianField g, ginv;
    double shift;     // 1 + gamma dt
    double gdt;       // gamma dt
    Eigen::ArrayXd precond_symbol;  // m(k)

    WSolver(const Scenario& sc, const HermitianField& metric, double gamma_dt)
        : s(&sc), g(metric), ginv(inverse_metric(metric)), shift(1.0 + gamma_dt),
          gdt(gamma_dt) {
        const GridSpec& spec = sc.spec;
        const int n = spec.n;
        // per-direction coefficient bounds c_j = max_z sum_i |(g^-1)_{ji}|
        std::vector<double> c(n, 0.0);
        for (int j = 0; j < n; ++j) {
            Eigen::ArrayXd row = ginv.comps[j * n + j].abs();
            for (int i = 0; i < n; ++i)
                if (i != j) row += ginv.comps[j * n + i].abs();
            c[j] = row.maxCoeff();
        }
        precond_symbol.resize(spec.points());
        for (std::int64_t i = 0; i < spec.points(); ++i) {
            double q = 0.0;
            for (int j = 0; j < n; ++j) {
                const double kx = wavenumber(spec, i, 2 * j);
                const double ky = wavenumber(spec, i, 2 * j + 1);
                q += c[j] * 0.25 * (kx * kx + ky * ky);
            }
            precond_symbol(i) = shift + gdt * q;
        }
    }

    Eigen::ArrayXd apply(const Eigen::ArrayXd& x) const {
        ScalarField xf{s->spec, x};
        return shift * x - gdt * lap(g, xf).values;
    }

    Eigen::ArrayXd precondition(const Eigen::ArrayXd& r) const {
        Eigen::ArrayXcd spec = forward_dft(s->spec, r.cast<cd>());
        spec /= precond_symbol.cast<cd>();
        return inverse_dft(s->spec, spec).real();
    }

    // right-preconditioned BiCGStab
    Eigen::ArrayXd solve(const Eigen::ArrayXd& b, double tol, int maxit) const {
        const double bnorm = std::sqrt(b.square().sum());
        if (bnorm == 0.0) return Eigen::ArrayXd::Zero(b.size());
        Eigen::ArrayXd x = precondition(b);
        Eigen::ArrayXd r = b - apply(x);
        const Eigen::ArrayXd rhat = r;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        Eigen::ArrayXd v = Eigen::ArrayXd::Zero(b.size());
        Eigen::ArrayXd p = Eigen::ArrayXd::Zero(b.size());
        for (int it = 0; it < maxit; ++it) {
            if (std::sqrt(r.square().sum()) <= tol * bnorm) return x;
            const double rho1 = (rhat * r).sum();
            if (rho1 == 0.0) break;
            if (it == 0) {
                p = r;
            } else {
                const double beta = (rho1 / rho) * (alpha / omega);
                p = r + beta * (p - omega * v);
            }
            rho = rho1;
            const Eigen::ArrayXd ph = precondition(p);
            v = apply(ph);
            alpha = rho1 / (rhat * v).sum();
            const Eigen::ArrayXd sv = r - alpha * v;
            if (std::sqrt(sv.square().sum()) <= tol * bnorm) {
                x += alpha * ph;
                return x;
            }
            const Eigen::ArrayXd sh = precondition(sv);
            const Eigen::ArrayXd tv = apply(sh);
            omega = (tv * sv).sum() / (tv * tv).sum();
            x += alpha * ph + omega * sh;
            r = sv - omega * tv;
        }
        if (std::sqrt(r.square().sum()) <= 1e3 * tol * bnorm) return x;
        throw StepFailureError("implicit stage solve failed to converge", 0.0);
    }
};

FlowState assemble_state(const Scenario& s, ScalarField u, double t,
                         long step_count, double dt) {
    RhsResult r = rhs(s, u, t);
    FlowState out;
    out.t = t;
    out.u = std::move(u);
    out.udot = std::move(r.udot);
    out.g_tilde = std::move(r.g_tilde);
    out.min_eig = r.min_eig;
    out.step_count = step_count;
    out.dt_current = dt;
    return out;
}

FlowState try_rk4(const Scenario& s, const FlowState& st, double dt) {
    const double t = st.t;
    const ScalarField& u = st.u;
    const ScalarField& k1 = st.udot;  // coherent cache

    ScalarField u2{s.spec, u.values + 0.5 * dt * k1.values};
    const RhsResult r2 = rhs(s, u2, t + 0.5 * dt);
    ScalarField u3{s.spec, u.values + 0.5 * dt * r2.udot.values};
    const RhsResult r3 = rhs(s, u3, t + 0.5 * dt);
    ScalarField u4{s.spec, u.values + dt * r3.udot.values};
    const RhsResult r4 = rhs(s, u4, t + dt);

    ScalarField unew{s.spec,
                     u.values + dt / 6.0 *
                                    (k1.values + 2.0 * r2.udot.values +
                                     2.0 * r3.udot.values + r4.udot.values)};
    if (!all_finite(unew)) throw GridError("non-finite state");
    return assemble_state(s, std::move(unew), t + dt, st.step_count + 1, dt);
}

FlowState try_ros2(const Scenario& s, const FlowState& st,
                   const StepControl& ctl, double dt) {
    static const double gamma = 1.0 - 1.0 / std::sqrt(2.0);
    const WSolver W(s, st.g_tilde, gamma * dt);

    const Eigen::ArrayXd k1 =
        W.solve(st.udot.values, ctl.krylov_tol, ctl.krylov_max_iters);

    ScalarField u2{s.spec, st.u.values + dt * k1};
    const RhsResult f2 = rhs(s, u2, st.t + dt);
    // J k1 = Lap(k1) - k1 at the frozen metric
    ScalarField k1f{s.spec, k1};
    const Eigen::ArrayXd Jk1 = lap(st.g_tilde, k1f).values - k1;
    const Eigen::ArrayXd b2 = f2.udot.values - 2.0 * gamma * dt * Jk1;
    const Eigen::ArrayXd k2 = W.solve(b2, ctl.krylov_tol, ctl.krylov_max_iters);

    ScalarField unew{s.spec, st.u.values + 0.5 * dt * (k1 + k2)};
    if (!all_finite(unew)) throw GridError("non-finite state");
    return assemble_state(s, std::move(unew), st.t + dt, st.step_count + 1, dt);
}

}  // namespace

RhsResult rhs(const Scenario& s, const ScalarField& u, double t) {
    if (t < 0.0 || (s.finite_horizon() && t >= s.T_horizon))
        throw HorizonError("rhs requested beyond the horizon");
    HermitianField g = complex_hessian(u);
    add_scaled(g, 1.0, s.omega_inf);
    add_scaled(g, std::exp(-t), s.omega_diff);
    hermitize(g);
    double min_eig = 0.0;
    try {
        min_eig = require_metric(g, "flow rhs");
    } catch (const PositivityError& e) {
        throw KahlerLostError(t, e.point, e.min_eig);
    }
    ScalarField udot{s.spec, det_field(g).values.log() - s.log_omega.values -
                                 u.values};
    return RhsResult{std::move(udot), std::move(g), min_eig};
}

ScalarField second_time_derivative(const Scenario& s, const FlowState& st) {
    const ScalarField tr = trace_pair(st.g_tilde, s.omega_diff);
    const ScalarField lap_udot = lap(st.g_tilde, st.udot);
    return ScalarField{s.spec, -std::exp(-st.t) * tr.values + lap_udot.values -
                                   st.udot.values};
}

FlowState make_initial_state(const Scenario& s) {
    return assemble_state(s, make_constant(s.spec, 0.0), 0.0, 0, 0.0);
}

FlowState step(const Scenario& s, const FlowState& st, const StepControl& ctl,
               double dt_cap) {
    double dt;
    if (ctl.integrator == Integrator::ROS2) {
        dt = ctl.dt_imex;
    } else if (ctl.dt_fixed > 0.0) {
        dt = ctl.dt_fixed;
    } else {
        dt = stability_dt(s, st.min_eig, ctl);
    }
    dt = std::min(dt, dt_cap);

    for (int attempt = 0; attempt <= ctl.max_halvings; ++attempt) {
        try {
            FlowState out = (ctl.integrator == Integrator::ROS2)
                                ? try_ros2(s, st, ctl, dt)
                                : try_rk4(s, st, dt);
            out.retry_count = st.retry_count + attempt;
            return out;
        } catch (const KahlerLostError&) {
            dt *= 0.5;
        } catch (const GridError&) {
            dt *= 0.5;
        } catch (const StepFailureError&) {
            dt *= 0.5;
        }
    }
    throw StepFailureError("step failed after " +
                               std::to_string(ctl.max_halvings) +
                               " dt halvings at t = " + std::to_string(st.t),
                           st.t);
}

void advance_to(const Scenario& s, FlowState& st, double t_target,
                const StepControl& ctl) {
    if (s.finite_horizon() && t_target > s.T_horizon - ctl.eps_T + 1e-15)
        throw HorizonError("advance target beyond T - eps_T");
    while (st.t < t_target) {
        const double cap = t_target - st.t;
        st = step(s, st, ctl, cap);
        if (st.dt_current >= cap * (1.0 - 1e-14)) st.t = t_target;
    }
}

RunResult run(const Scenario& s, const std::vector<double>& schedule,
              const StepControl& ctl) {
    for (size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!(schedule[i] < schedule[i + 1]))
            throw std::invalid_argument("schedule must be increasing");
    if (!schedule.empty() && schedule.front() < 0.0)
        throw std::invalid_argument("schedule must start at t >= 0");

    RunResult out;
    FlowState st = make_initial_state(s);
    const double t_stop =
        s.finite_horizon() ? s.T_horizon - ctl.eps_T : kInfiniteHorizon;

    try {
        for (double tau : schedule) {
            if (tau >= t_stop) {
                advance_to(s, st, t_stop, ctl);
                out.snapshots.push_back(st);
                out.termination = RunTermination::HorizonReached;
                out.total_steps = st.step_count;
                return out;
            }
            if (tau > st.t) advance_to(s, st, tau, ctl);
            out.snapshots.push_back(st);
        }
    } catch (const StepFailureError& e) {
        out.snapshots.push_back(st);  // last good state
        throw RunFailure(e.what(), std::move(out));
    }
    out.total_steps = st.step_count;
    return out;
}

void write_checkpoint(const std::string& path, const FlowState& st) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
    const char magic[4] = {'K', 'R', 'F', 'L'};
    const std::uint16_t version = 1;
    const std::uint16_t n = std::uint16_t(st.u.spec.n);
    const std::uint32_t N = std::uint32_t(st.u.spec.N);
    f.write(magic, 4);
    f.write(reinterpret_cast<const char*>(&version), 2);
    f.write(reinterpret_cast<const char*>(&n), 2);
    f.write(reinterpret_cast<const char*>(&N), 4);
    f.write(reinterpret_cast<const char*>(&st.t), 8);
    f.write(reinterpret_cast<const char*>(st.u.values.data()),
            std::streamsize(sizeof(double) * st.u.values.size()));
    if (!f) throw CheckpointError("short write on checkpoint: " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "KRFL", 4) != 0)
        throw CheckpointError("bad checkpoint magic in " + path);
    std::uint16_t version = 0, n = 0;
    std::uint32_t N = 0;
    f.read(reinterpret_cast<char*>(&version), 2);
    f.read(reinterpret_cast<char*>(&n), 2);
    f.read(reinterpret_cast<char*>(&N), 4);
    if (!f || version != 1)
        throw CheckpointError("unsupported checkpoint version in " + path);
    CheckpointData data;
    data.n = n;
    data.N = int(N);
    f.read(reinterpret_cast<char*>(&data.t), 8);
    const GridSpec spec = make_grid(data.n, data.N);
    data.u.resize(spec.points());
    f.read(reinterpret_cast<char*>(data.u.data()),
           std::streamsize(sizeof(double) * data.u.size()));
    if (!f) throw CheckpointError("truncated checkpoint: " + path);
    return data;
}

FlowState state_from_checkpoint(const Scenario& s, const CheckpointData& data) {
    if (data.n != s.spec.n || data.N != s.spec.N)
        throw CheckpointError("checkpoint grid does not match the scenario");
    FlowState st = assemble_state(s, ScalarField{s.spec, data.u}, data.t, 0, 0.0);
    return st;
}

}  // namespace krf
