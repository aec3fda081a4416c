#include "krf/estimates.hpp"

#include <cmath>
#include <limits>

namespace krf {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField phi_field(const Scenario& s, const FlowState& st) {
    return trace_pair(st.g_tilde, s.omega_T);
}

HermitianField dt_g_tilde(const Scenario& s, const FlowState& st) {
    HermitianField r = complex_hessian(st.udot);
    add_scaled(r, -std::exp(-st.t), s.omega_diff);
    hermitize(r);
    return r;
}

// first derivative at the middle of three nonuniformly spaced samples
Eigen::ArrayXd fd1_center(const Eigen::ArrayXd& fm, const Eigen::ArrayXd& f0,
                          const Eigen::ArrayXd& fp, double h1, double h2) {
    const double cm = -h2 / (h1 * (h1 + h2));
    const double c0 = (h2 - h1) / (h1 * h2);
    const double cp = h1 / (h2 * (h1 + h2));
    return cm * fm + c0 * f0 + cp * fp;
}

double sup_abs(const ScalarField& f) { return reduce(f, Reduce::SupNorm); }

}  // namespace

ScalarField v_field(const Scenario& s, const FlowState& st) {
    if (!s.finite_horizon())
        return ScalarField{s.spec, st.udot.values + st.u.values};
    const double factor = 1.0 - std::exp(st.t - s.T_horizon);
    return ScalarField{s.spec, factor * st.udot.values + st.u.values};
}

ScalarField v_dot_field(const Scenario& s, const FlowState& st) {
    const ScalarField uddot = second_time_derivative(s, st);
    if (!s.finite_horizon())
        return ScalarField{s.spec, uddot.values + st.udot.values};
    const double e = std::exp(st.t - s.T_horizon);
    return ScalarField{s.spec, (1.0 - e) * uddot.values +
                                   (1.0 - e) * st.udot.values};
}

ScalarField residual_first_tderiv(const Scenario& s,
                                  const std::vector<FlowState>& snaps,
                                  std::size_t i) {
    if (snaps.size() < 3 || i == 0 || i + 1 >= snaps.size())
        throw InsufficientData(
            "residual_first_tderiv needs an interior snapshot");
    const FlowState& st = snaps[i];
    const double h1 = st.t - snaps[i - 1].t;
    const double h2 = snaps[i + 1].t - st.t;
    Eigen::ArrayXd uddot_fd = fd1_center(snaps[i - 1].udot.values,
                                         st.udot.values,
                                         snaps[i + 1].udot.values, h1, h2);
    const ScalarField uddot_an = second_time_derivative(s, st);
    return ScalarField{s.spec, uddot_fd - uddot_an.values};
}

ScalarField residual_v_evolution(const Scenario& s, const FlowState& st) {
    const ScalarField vdot = v_dot_field(s, st);
    const ScalarField v = v_field(s, st);
    const ScalarField lap_v = trace_pair(st.g_tilde, complex_hessian(v));
    const ScalarField phi = phi_field(s, st);
    return ScalarField{s.spec, vdot.values - lap_v.values -
                                   (phi.values - double(s.spec.n))};
}

ScalarIdentities scalar_curvature_identities(const Scenario& s,
                                             const FlowState& st) {
    const RicciScalar rs = ricci_and_scalar(st.g_tilde, s.twist);
    const ScalarField tr_diff = trace_pair(st.g_tilde, s.omega_diff);
    const ScalarField lap_udot =
        trace_pair(st.g_tilde, complex_hessian(st.udot));
    const double w = std::exp(-st.t);
    const double n = double(s.spec.n);

    ScalarIdentities out{rs.R_tw, ScalarField{}, ScalarField{}};
    out.residual1 = ScalarField{
        s.spec, rs.R_tw.values -
                    (w * tr_diff.values - lap_udot.values - n)};
    const ScalarField uddot = second_time_derivative(s, st);
    out.residual2 = ScalarField{
        s.spec, rs.R_tw.values + n + uddot.values + st.udot.values};
    return out;
}

double scalar_identity_fd_sup(const Scenario& s,
                              const std::vector<FlowState>& snaps,
                              std::size_t i) {
    if (snaps.size() < 3 || i == 0 || i + 1 >= snaps.size())
        throw InsufficientData("scalar identity (measured) needs an interior "
                               "snapshot");
    auto wfield = [&](std::size_t j) {
        return Eigen::ArrayXd(snaps[j].udot.values + snaps[j].u.values);
    };
    const double h2 = snaps[i + 1].t - snaps[i].t;
    // 4th-order centered stencil over a uniformly spaced 5-snapshot window
    bool fd4 = i >= 2 && i + 2 < snaps.size();
    if (fd4) {
        const double gaps[4] = {snaps[i - 1].t - snaps[i - 2].t,
                                snaps[i].t - snaps[i - 1].t,
                                snaps[i + 1].t - snaps[i].t,
                                snaps[i + 2].t - snaps[i + 1].t};
        for (int k = 0; k < 4; ++k)
            if (std::abs(gaps[k] - h2) > 1e-8 * std::max(1.0, h2)) fd4 = false;
    }
    if (!fd4)
        throw InsufficientData("scalar identity (measured) needs five "
                               "uniformly spaced snapshots around i");
    const Eigen::ArrayXd dvdt =
        (wfield(i - 2) - 8.0 * wfield(i - 1) + 8.0 * wfield(i + 1) -
         wfield(i + 2)) /
        (12.0 * h2);
    const RicciScalar rs = ricci_and_scalar(snaps[i].g_tilde, s.twist);
    const Eigen::ArrayXd res = rs.R_tw.values + double(s.spec.n) + dvdt;
    return res.abs().maxCoeff();
}

CertificateResult certificate_u_upper(const Scenario&,
                                      const std::vector<FlowState>& snaps,
                                      double C_u, double tol) {
    CertificateResult r;
    r.name = "u_upper";
    r.margin = std::numeric_limits<double>::infinity();
    for (const FlowState& st : snaps) {
        std::int64_t idx = 0;
        const double m = st.u.values.maxCoeff(&idx);
        if (C_u + tol - m < r.margin) {
            r.margin = C_u + tol - m;
            r.witness_t = st.t;
            r.witness_point = idx;
            r.witness_value = m;
        }
    }
    r.pass = r.margin >= 0.0;
    return r;
}

CertificateResult certificate_udot_decay(const Scenario& s,
                                         const std::vector<FlowState>& snaps,
                                         double C_u, double tol) {
    CertificateResult r;
    r.name = "udot_decay";
    r.margin = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const FlowState& st : snaps) {
        if (st.t < 0.1) continue;
        any = true;
        std::int64_t idx = 0;
        const double m = st.udot.values.maxCoeff(&idx);
        const double bound =
            (double(s.spec.n) * st.t + C_u) / (std::exp(st.t) - 1.0) + tol;
        if (bound - m < r.margin) {
            r.margin = bound - m;
            r.witness_t = st.t;
            r.witness_point = idx;
            r.witness_value = m;
        }
    }
    r.applicable = any;
    r.pass = !any || r.margin >= 0.0;
    if (!any) r.note = "no snapshots at t >= 0.1";
    return r;
}

CertificateResult certificate_volume_decay(const Scenario& s,
                                           const std::vector<FlowState>& snaps) {
    CertificateResult r;
    r.name = "volume_decay";
    r.applicable = snaps.size() >= 2;
    r.margin = std::numeric_limits<double>::infinity();
    if (!r.applicable) {
        r.note = "needs at least two snapshots";
        return r;
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        const ScalarField uddot = second_time_derivative(s, snaps[i]);
        const double m = std::exp(snaps[i].t) *
                         (uddot.values + snaps[i].udot.values).maxCoeff();
        if (i > 0) {
            const double slack = 1e-6 * (1.0 + std::abs(prev));
            if (prev + slack - m < r.margin) {
                r.margin = prev + slack - m;
                r.witness_t = snaps[i].t;
                r.witness_value = m;
            }
        }
        prev = m;
    }
    r.pass = r.margin >= 0.0;
    return r;
}

std::vector<CertificateResult> finite_time_certificates(
    const Scenario& s, const std::vector<FlowState>& snaps) {
    if (!s.finite_horizon())
        throw UnsupportedCase("finite-time certificates need T < infinity");
    const double T = s.T_horizon;
    double C_early = 0.0;
    bool have_early = false;
    for (const FlowState& st : snaps) {
        if (st.t <= 0.2 * T) {
            C_early = std::max(C_early, sup_abs(v_field(s, st)));
            have_early = true;
        }
    }
    if (!have_early)
        throw InsufficientData("finite-time certificates need early snapshots");
    C_early += 0.5;

    CertificateResult lower, abs_bound, udot_lower;
    lower.name = "finite_time_v_lower";
    abs_bound.name = "finite_time_v_abs";
    udot_lower.name = "finite_time_udot_lower";
    lower.margin = abs_bound.margin = udot_lower.margin =
        std::numeric_limits<double>::infinity();
    lower.note = abs_bound.note = udot_lower.note =
        "C_early = " + std::to_string(C_early);

    for (const FlowState& st : snaps) {
        if (st.t <= 0.2 * T) continue;
        const ScalarField v = v_field(s, st);
        std::int64_t idx = 0;
        const double vmin = v.values.minCoeff(&idx);
        if (vmin + C_early < lower.margin) {
            lower.margin = vmin + C_early;
            lower.witness_t = st.t;
            lower.witness_point = idx;
            lower.witness_value = vmin;
        }
        const double vsup = sup_abs(v);
        if (C_early * 1.2 - vsup < abs_bound.margin) {
            abs_bound.margin = C_early * 1.2 - vsup;
            abs_bound.witness_t = st.t;
            abs_bound.witness_value = vsup;
        }
        const double bound =
            -C_early / (1.0 - std::exp(st.t - T)) - 1e-4;
        const double um = st.udot.values.minCoeff(&idx);
        if (um - bound < udot_lower.margin) {
            udot_lower.margin = um - bound;
            udot_lower.witness_t = st.t;
            udot_lower.witness_point = idx;
            udot_lower.witness_value = um;
        }
    }
    lower.pass = lower.margin >= 0.0;
    abs_bound.pass = abs_bound.margin >= 0.0;
    udot_lower.pass = udot_lower.margin >= 0.0;
    return {lower, abs_bound, udot_lower};
}

SchwarzResult schwarz_monitor(const Scenario& s,
                              const std::vector<FlowState>& snaps,
                              std::size_t i) {
    if (snaps.size() < 3 || i == 0 || i + 1 >= snaps.size())
        throw InsufficientData("schwarz_monitor needs an interior snapshot");
    SchwarzResult out;
    const FlowState& st = snaps[i];
    out.phi = phi_field(s, st);
    if (reduce(out.phi, Reduce::Min) <= 1e-6) {
        out.applicable = false;  // degenerate reference form
        return out;
    }
    out.applicable = true;

    const ScalarField phim = phi_field(s, snaps[i - 1]);
    const ScalarField phip = phi_field(s, snaps[i + 1]);
    const double h1 = st.t - snaps[i - 1].t;
    const double h2 = snaps[i + 1].t - st.t;

    const Eigen::ArrayXd dlogphi =
        fd1_center(phim.values.log(), out.phi.values.log(),
                   phip.values.log(), h1, h2);
    const ScalarField logphi{s.spec, out.phi.values.log()};
    const ScalarField lap_logphi =
        trace_pair(st.g_tilde, complex_hessian(logphi));
    out.logphi_residual =
        ScalarField{s.spec, dlogphi - lap_logphi.values - 1.0};
    out.logphi_margin = reduce(out.logphi_residual, Reduce::Max);

    if (s.fibration) {
        out.has_H = true;
        const ConnectionField gamma = christoffel(st.g_tilde);
        const HermitianField ginv = inverse_metric(st.g_tilde);
        const int n = s.spec.n;
        const std::int64_t P = s.spec.points();
        Eigen::ArrayXd H(P);
        for (std::int64_t p = 0; p < P; ++p) {
            SmallMat Pm = ginv.at(p);
            SmallMat G1(n, n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) G1(a, b) = gamma.gamma(0, a, b)(p);
            SmallMat PSPt = Pm * G1 * Pm.transpose();
            H(p) = s.base_metric *
                   (G1.array().conjugate() * PSPt.array()).sum().real();
        }
        out.H = ScalarField{s.spec, H};

        // sharpened pointwise inequality (d/dt - Lap) phi <= phi - H
        const Eigen::ArrayXd dphi =
            fd1_center(phim.values, out.phi.values, phip.values, h1, h2);
        const ScalarField lap_phi =
            trace_pair(st.g_tilde, complex_hessian(out.phi));
        const Eigen::ArrayXd sharp = (dphi - lap_phi.values) -
                                     (out.phi.values - H);
        out.sharp_margin =
            (sharp / (1.0 + out.phi.values)).maxCoeff();

        // review: H >= |grad phi|^2 / (2 phi)
        const std::vector<Eigen::ArrayXcd> gphi = z_gradient(out.phi);
        Eigen::ArrayXd gp2(P);
        for (std::int64_t p = 0; p < P; ++p) {
            SmallMat Pm = ginv.at(p);
            SmallVec q(n);
            for (int a = 0; a < n; ++a) q(a) = gphi[a](p);
            gp2(p) = (q.adjoint() * Pm * q)(0, 0).real();
        }
        out.h_gradphi_margin =
            (H - gp2 / (2.0 * out.phi.values)).minCoeff();
    }
    return out;
}

FiberwiseRatio fiberwise_ratio(const Scenario& s, const FlowState& st) {
    if (s.spec.n != 2 || !s.fibration)
        throw UnsupportedCase("fiberwise ratio needs the n = 2 fibration");
    const ScalarField tp = trace_pair(st.g_tilde, s.omega_T);
    const ScalarField det_g = det_field(st.g_tilde);
    const ScalarField den = wedge_density(s.omega0, s.omega_T);
    FiberwiseRatio out;
    out.chain = ScalarField{
        s.spec, 0.5 * tp.values * (2.0 * det_g.values) / den.values};
    out.direct = ScalarField{
        s.spec, st.g_tilde.comps[3].real() / s.omega0.comps[3].real()};
    return out;
}

GradientMonitor gradient_monitor(const Scenario& s, const FlowState& st,
                                 const CertificateConstants& cc) {
    const int n = s.spec.n;
    const std::int64_t P = s.spec.points();

    const ScalarField v = v_field(s, st);
    const double worst_den = cc.C_v - reduce(v, Reduce::Max);
    if (worst_den < 1.0)
        throw CertificateError(
            "C_v - v >= 1 violated (C_v - max v = " +
            std::to_string(worst_den) + "); raise C_v");

    const ScalarField vdot = v_dot_field(s, st);
    const HermitianField ginv = inverse_metric(st.g_tilde);
    const HermitianField dtg = dt_g_tilde(s, st);
    const CovariantHessians cov = covariant_hessians(st.g_tilde, v);
    const ScalarField& w = cov.norm2_grad;

    const ScalarField lap_w = trace_pair(st.g_tilde, complex_hessian(w));
    const ScalarField phi = phi_field(s, st);
    const std::vector<Eigen::ArrayXcd> gv = z_gradient(v);
    const std::vector<Eigen::ArrayXcd> gvdot = z_gradient(vdot);
    const std::vector<Eigen::ArrayXcd> gphi = z_gradient(phi);

    Eigen::ArrayXd dtw(P), rhs_bochner(P), expected(P);
    for (std::int64_t p = 0; p < P; ++p) {
        SmallMat Pm = ginv.at(p);
        SmallMat dG = dtg.at(p);
        SmallVec av(n), avd(n), aphi(n);
        for (int a = 0; a < n; ++a) {
            av(a) = gv[a](p);
            avd(a) = gvdot[a](p);
            aphi(a) = gphi[a](p);
        }
        SmallVec q = Pm * av;
        const double term1 = -(q.adjoint() * dG * q)(0, 0).real();
        const double term2 = 2.0 * (av.adjoint() * Pm * avd)(0, 0).real();
        dtw(p) = term1 + term2;
        const double re_phi_v = (av.adjoint() * Pm * aphi)(0, 0).real();
        rhs_bochner(p) = w.values(p) - cov.norm2_h20.values(p) -
                       cov.norm2_h11.values(p) + 2.0 * re_phi_v;
        expected(p) = -(q.adjoint() * s.twist * q)(0, 0).real();
    }

    GradientMonitor out;
    out.grad_norm2 = w;
    out.defect = ScalarField{s.spec, dtw - lap_w.values - rhs_bochner};
    out.expected = ScalarField{s.spec, expected};
    out.Psi = ScalarField{s.spec, w.values / (cc.C_v - v.values)};
    const Eigen::ArrayXd scaled =
        (out.defect.values - expected).abs() / (1.0 + w.values);
    out.scaled_sup = scaled.maxCoeff(&out.worst_point);
    return out;
}

LaplacianMonitor laplacian_monitor(const Scenario& s, const FlowState& st,
                                   const CertificateConstants& cc) {
    if (s.finite_horizon())
        throw UnsupportedCase(
            "laplacian monitor applies to infinite-horizon scenarios only");
    const ScalarField v = v_field(s, st);
    const double worst_den = cc.C_v - reduce(v, Reduce::Max);
    if (worst_den < 1.0)
        throw CertificateError(
            "C_v - v >= 1 violated (C_v - max v = " +
            std::to_string(worst_den) + "); raise C_v");

    const ScalarField vdot = v_dot_field(s, st);
    const HermitianField ginv = inverse_metric(st.g_tilde);
    const HermitianField dtg = dt_g_tilde(s, st);
    const HermitianField Hv = complex_hessian(v);

    const ScalarField lap_v = trace_pair(st.g_tilde, Hv);
    const ScalarField dt_lapv{
        s.spec, -metric_pairing(ginv, dtg, Hv).values +
                    trace_pair(st.g_tilde, complex_hessian(vdot)).values};
    const ScalarField lap_lapv = trace_pair(st.g_tilde, complex_hessian(lap_v));
    const RicciScalar rs = ricci_and_scalar(st.g_tilde, s.twist);
    const ScalarField pairing = metric_pairing(ginv, rs.ric_tw, Hv);
    const ScalarField phi = phi_field(s, st);
    const ScalarField lap_phi = trace_pair(st.g_tilde, complex_hessian(phi));

    LaplacianMonitor out;
    out.lap_v = lap_v;
    out.R_tw = rs.R_tw;
    out.phi = phi;
    out.residual = ScalarField{
        s.spec, dt_lapv.values - lap_lapv.values -
                    (lap_v.values + pairing.values + lap_phi.values)};
    const Eigen::ArrayXd scaled =
        out.residual.values.abs() / (1.0 + lap_v.values.abs());
    out.scaled_sup = scaled.maxCoeff(&out.worst_point);
    out.identity_sup =
        (lap_v.values + rs.R_tw.values + phi.values).abs().maxCoeff();
    out.Phi = ScalarField{
        s.spec, (cc.C_v - lap_v.values) / (cc.C_v - v.values)};
    const CovariantHessians cov = covariant_hessians(st.g_tilde, v);
    out.cs_margin = ScalarField{
        s.spec, cov.norm2_h11.values -
                    lap_v.values.square() / double(s.spec.n)};
    return out;
}

bool MonitorReport::all_pass() const {
    for (const auto& c : certificates)
        if (c.applicable && !c.review_only && !c.pass) return false;
    return true;
}

MonitorReport evaluate_monitors(const Scenario& s, const RunResult& run,
                                const CertificateConstants& cc,
                                const MonitorOptions& opt) {
    MonitorReport rep;
    rep.constants = cc;
    const auto& snaps = run.snapshots;
    const double n = double(s.spec.n);

    // worst value of each aggregated quantity plus its witness (t, point)
    struct Worst {
        double value;
        double t = 0.0;
        std::int64_t point = -1;
        bool any = false;
        void max(double x, double at_t, std::int64_t at_p) {
            if (!any || x > value) {
                value = x;
                t = at_t;
                point = at_p;
            }
            any = true;
        }
        void min(double x, double at_t, std::int64_t at_p) {
            if (!any || x < value) {
                value = x;
                t = at_t;
                point = at_p;
            }
            any = true;
        }
    };
    Worst fiber_worst, grad_worst, lap_worst, lap_id_worst, cs_worst,
        schwarz_worst, sharp_worst, hgp_worst, tail_worst;

    for (std::size_t i = 0; i < snaps.size(); ++i) {
        const FlowState& st = snaps[i];
        SeriesRow row;
        row.t = st.t;
        row.dt = st.dt_current;
        row.sup_u = reduce(st.u, Reduce::SupNorm);
        row.sup_udot = reduce(st.udot, Reduce::SupNorm);
        const ScalarField v = v_field(s, st);
        row.sup_v = reduce(v, Reduce::Max);
        row.min_v = reduce(v, Reduce::Min);
        row.sup_phi = reduce(phi_field(s, st), Reduce::Max);
        const ScalarField lap_v = trace_pair(st.g_tilde, complex_hessian(v));
        row.sup_negLapV = (-lap_v.values).maxCoeff();

        const ScalarIdentities ids = scalar_curvature_identities(s, st);
        row.sup_R_tw = reduce(ids.R_tw, Reduce::Max);
        row.res_scalar_id1 = sup_abs(ids.residual1);
        row.res_scalar_id2 = sup_abs(ids.residual2);
        row.res_v_evolution = sup_abs(residual_v_evolution(s, st));
        row.spectral_tail = spectral_tail_fraction(st.u);
        tail_worst.max(row.spectral_tail, st.t, -1);

        try {
            row.res_first_tderiv = sup_abs(residual_first_tderiv(s, snaps, i));
        } catch (const InsufficientData&) {
            row.res_first_tderiv = kNaN;
        }
        try {
            row.res_scalar_id2_fd = scalar_identity_fd_sup(s, snaps, i);
        } catch (const InsufficientData&) {
            row.res_scalar_id2_fd = kNaN;
        }

        if (opt.gradient) {
            const GradientMonitor gm = gradient_monitor(s, st, cc);
            row.sup_Psi = reduce(gm.Psi, Reduce::Max);
            row.res_gradient_defect = gm.scaled_sup;
            grad_worst.max(gm.scaled_sup, st.t, gm.worst_point);
        } else {
            row.sup_Psi = kNaN;
            row.res_gradient_defect = kNaN;
        }

        if (opt.laplacian && !s.finite_horizon()) {
            const LaplacianMonitor lm = laplacian_monitor(s, st, cc);
            row.res_laplacian = lm.scaled_sup;
            lap_worst.max(lm.scaled_sup, st.t, lm.worst_point);
            lap_id_worst.max(lm.identity_sup, st.t, -1);
            const double scale =
                1.0 + lm.lap_v.values.square().maxCoeff() / n;
            std::int64_t cs_point = 0;
            const double cs = lm.cs_margin.values.minCoeff(&cs_point) / scale;
            cs_worst.min(cs, st.t, cs_point);
        } else {
            row.res_laplacian = kNaN;
        }

        if (opt.schwarz) {
            try {
                const SchwarzResult sr = schwarz_monitor(s, snaps, i);
                if (sr.applicable) {
                    row.schwarz_logphi_margin = sr.logphi_margin;
                    std::int64_t pt = 0;
                    sr.logphi_residual.values.maxCoeff(&pt);
                    schwarz_worst.max(sr.logphi_margin, st.t, pt);
                    if (sr.has_H) {
                        sharp_worst.max(sr.sharp_margin, st.t, -1);
                        hgp_worst.min(sr.h_gradphi_margin, st.t, -1);
                    }
                } else {
                    row.schwarz_logphi_margin = kNaN;
                }
            } catch (const InsufficientData&) {
                row.schwarz_logphi_margin = kNaN;
            }
        } else {
            row.schwarz_logphi_margin = kNaN;
        }

        if (opt.fiber && s.fibration) {
            const FiberwiseRatio fr = fiberwise_ratio(s, st);
            std::int64_t pt = 0;
            row.fiber_chain_err =
                (fr.chain.values - fr.direct.values).abs().maxCoeff(&pt);
            fiber_worst.max(row.fiber_chain_err, st.t, pt);
        } else {
            row.fiber_chain_err = kNaN;
        }

        rep.rows.push_back(row);
    }

    // certificates
    rep.certificates.push_back(
        certificate_u_upper(s, snaps, cc.C_u, cc.tol_certificate));
    rep.certificates.push_back(
        certificate_udot_decay(s, snaps, cc.C_u, cc.tol_certificate));
    rep.certificates.push_back(certificate_volume_decay(s, snaps));

    if (s.finite_horizon()) {
        try {
            for (auto& c : finite_time_certificates(s, snaps))
                rep.certificates.push_back(c);
        } catch (const InsufficientData& e) {
            CertificateResult c;
            c.name = "finite_time";
            c.applicable = false;
            c.note = e.what();
            rep.certificates.push_back(c);
        }
    }

    auto push_sup_cert = [&](const std::string& name, const Worst& worst,
                             double tol, bool review = false) {
        CertificateResult c;
        c.name = name;
        c.applicable = worst.any;
        c.review_only = review;
        if (worst.any) {
            c.margin = tol - worst.value;
            c.witness_value = worst.value;
            c.witness_t = worst.t;
            c.witness_point = worst.point;
            c.pass = c.margin >= 0.0;
        } else {
            c.note = "skipped";
        }
        rep.certificates.push_back(c);
    };

    push_sup_cert("gradient_defect", grad_worst, cc.tol_gradient);
    push_sup_cert("laplacian_residual", lap_worst, cc.tol_laplacian);
    push_sup_cert("laplacian_trace_identity", lap_id_worst, cc.tol_identity);
    {
        CertificateResult c;
        c.name = "cauchy_schwarz_floor";
        c.applicable = cs_worst.any;
        if (cs_worst.any) {
            c.margin = cs_worst.value + 1e-10;
            c.witness_value = cs_worst.value;
            c.witness_t = cs_worst.t;
            c.witness_point = cs_worst.point;
            c.pass = c.margin >= 0.0;
        } else {
            c.note = "skipped";
        }
        rep.certificates.push_back(c);
    }
    push_sup_cert("schwarz_logphi", schwarz_worst, cc.tol_schwarz);
    push_sup_cert("schwarz_sharpened", sharp_worst, cc.tol_schwarz);
    {
        CertificateResult c;
        c.name = "schwarz_H_gradphi";
        c.applicable = hgp_worst.any;
        c.review_only = true;
        if (hgp_worst.any) {
            c.margin = hgp_worst.value;
            c.witness_value = hgp_worst.value;
            c.witness_t = hgp_worst.t;
            c.pass = c.margin >= -1e-10;
            c.note = "review";
        } else {
            c.note = "skipped";
        }
        rep.certificates.push_back(c);
    }
    push_sup_cert("fiberwise_chain", fiber_worst, 1e-8);
    push_sup_cert("spectral_tail", tail_worst, 1e-8, true);

    // plateau certificates over [t_end/2, t_end]
    if (!rep.rows.empty() && !opt.plateaus.empty()) {
        const double t_end = rep.rows.back().t;
        const double t_ref = 0.5 * t_end;
        auto column = [&](const SeriesRow& r, const std::string& q) {
            if (q == "phi") return r.sup_phi;
            if (q == "R_tw") return r.sup_R_tw;
            if (q == "negLapV") return r.sup_negLapV;
            if (q == "Psi") return r.sup_Psi;
            if (q == "abs_v") return std::max(std::abs(r.sup_v),
                                              std::abs(r.min_v));
            throw std::invalid_argument("unknown plateau quantity " + q);
        };
        for (const std::string& q : opt.plateaus) {
            CertificateResult c;
            c.name = "plateau_" + q;
            std::size_t ref_i = rep.rows.size();
            for (std::size_t i = 0; i < rep.rows.size(); ++i)
                if (rep.rows[i].t >= t_ref) {
                    ref_i = i;
                    break;
                }
            if (ref_i >= rep.rows.size()) {
                c.applicable = false;
                c.note = "no snapshots in the plateau window";
            } else {
                const double ref = column(rep.rows[ref_i], q);
                double dev = 0.0;
                for (std::size_t i = ref_i; i < rep.rows.size(); ++i)
                    dev = std::max(dev,
                                   std::abs(column(rep.rows[i], q) - ref));
                const double scale = std::max(std::abs(ref), 1e-8);
                c.margin = opt.plateau_tol - dev / scale;
                c.witness_value = dev / scale;
                c.witness_t = rep.rows[ref_i].t;
                c.pass = c.margin >= 0.0;
            }
            rep.certificates.push_back(c);
        }
    }

    return rep;
}

}  // namespace krf
