#include "krf/oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

namespace krf {

namespace {

double interpolant(double a, double b, double t) {
    return b + std::exp(-t) * (a - b);
}

void check_domain(double a, double b, double t_hi) {
    if (a <= 0.0) throw OracleError("homogeneous oracle needs a > 0");
    if (interpolant(a, b, 0.0) <= 0.0 || interpolant(a, b, t_hi) <= 0.0)
        throw OracleError("interpolant b + e^{-t}(a-b) degenerates on range");
}

double ode_rhs(double a, double b, double c0, int n, double t, double u) {
    return n * std::log(interpolant(a, b, t)) + c0 - u;
}

}  // namespace

HomogeneousTrajectory solve_homogeneous(double a, double b, double c0, int n,
                                        const std::vector<double>& t_samples) {
    double t_hi = 0.0;
    for (double t : t_samples) t_hi = std::max(t_hi, t);
    check_domain(a, b, t_hi);

    HomogeneousTrajectory tr;
    tr.a = a;
    tr.b = b;
    tr.c0 = c0;
    tr.n = n;
    tr.t = t_samples;

    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [&](double s) {
        return std::exp(s) * (n * std::log(interpolant(a, b, s)) + c0);
    };
    for (double t : t_samples) {
        double err = 0.0;
        const double integral =
            (t == 0.0) ? 0.0
                       : gauss_kronrod<double, 15>::integrate(
                             integrand, 0.0, t, 15, 1e-14, &err);
        const double u = std::exp(-t) * integral;
        const double w = interpolant(a, b, t);
        const double udot = n * std::log(w) + c0 - u;
        // u'' = n w'/w - u' with w' = -e^{-t}(a-b)
        const double wp = -std::exp(-t) * (a - b);
        tr.u.push_back(u);
        tr.udot.push_back(udot);
        tr.uddot.push_back(n * wp / w - udot);
    }
    return tr;
}

double homogeneous_u_rk4(double a, double b, double c0, int n, double t,
                         double dt) {
    check_domain(a, b, t);
    const long steps = std::lround(std::ceil(t / dt));
    const double h = (steps > 0) ? t / double(steps) : 0.0;
    double u = 0.0, s = 0.0;
    for (long i = 0; i < steps; ++i) {
        const double k1 = ode_rhs(a, b, c0, n, s, u);
        const double k2 = ode_rhs(a, b, c0, n, s + 0.5 * h, u + 0.5 * h * k1);
        const double k3 = ode_rhs(a, b, c0, n, s + 0.5 * h, u + 0.5 * h * k2);
        const double k4 = ode_rhs(a, b, c0, n, s + h, u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
    }
    return u;
}

KeReference ke_fixed_point_reference(const SmallMat& B, int n) {
    KeReference r;
    double lo = B(0, 0).real();
    for (int i = 1; i < n; ++i) lo = std::min(lo, B(i, i).real());
    if (lo <= 0.0) throw OracleError("fixed-point reference needs a metric");
    r.u = 0.0;
    r.R_tw = -double(n);
    r.phi = double(n);
    r.v = 0.0;
    return r;
}

FuzzReport algebra_fuzzer(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto rnd_c = [&]() { return cd(gauss(rng), gauss(rng)); };

    FuzzReport rep;
    rep.pass = true;
    for (int it = 0; it < count; ++it) {
        // random metric g = L L^H + 0.1 I and random Hermitian alpha, H
        SmallMat L(2, 2), A(2, 2), H(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                L(i, j) = rnd_c();
                A(i, j) = rnd_c();
                H(i, j) = rnd_c();
            }
        SmallMat g = L * L.adjoint();
        g(0, 0) += 0.1;
        g(1, 1) += 0.1;
        A = 0.5 * (A + A.adjoint()).eval();
        H = 0.5 * (H + H.adjoint()).eval();

        const double det = g(0, 0).real() * g(1, 1).real() - std::norm(g(0, 1));
        SmallMat ginv(2, 2);
        ginv(0, 0) = g(1, 1).real() / det;
        ginv(1, 1) = g(0, 0).real() / det;
        ginv(0, 1) = -g(0, 1) / det;
        ginv(1, 0) = -g(1, 0) / det;

        const double tracep = (ginv * A).trace().real();
        const double wedge_num = g(0, 0).real() * A(1, 1).real() +
                                 g(1, 1).real() * A(0, 0).real() -
                                 2.0 * (g(0, 1) * A(1, 0)).real();
        const double ratio = wedge_num / (2.0 * det);
        const double dev = std::abs(ratio - 0.5 * tracep);
        rep.worst_wedge = std::max(rep.worst_wedge, dev);
        if (dev > 1e-12) rep.pass = false;

        const SmallMat M = ginv * H;
        const double cs = (M * M).trace().real() -
                          std::pow(M.trace().real(), 2) / 2.0;
        rep.worst_cs = std::min(rep.worst_cs, cs);
        if (cs < -1e-10) rep.pass = false;
    }
    return rep;
}

}  // namespace krf
