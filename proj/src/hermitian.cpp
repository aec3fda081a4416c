#include "krf/hermitian.hpp"

#include <cmath>

namespace krf {

namespace {

// complex arrays viewed as interleaved doubles; keeps lincomb-style kernels
// on the fully vectorized real path
Eigen::Map<Eigen::ArrayXd> real_view(Eigen::ArrayXcd& a) {
    return {reinterpret_cast<double*>(a.data()), 2 * a.size()};
}
Eigen::Map<const Eigen::ArrayXd> real_view(const Eigen::ArrayXcd& a) {
    return {reinterpret_cast<const double*>(a.data()), 2 * a.size()};
}

// z-derivative of a real field along complex direction j: (d_x - i d_y)/2
Eigen::ArrayXcd z_deriv(const ScalarField& f, int j) {
    const ScalarField fx = fourier_derivative(f, 2 * j);
    const ScalarField fy = fourier_derivative(f, 2 * j + 1);
    return 0.5 * (fx.values.cast<cd>() - cd(0, 1) * fy.values.cast<cd>());
}

// z-derivative of a complex field stored as two real fields
Eigen::ArrayXcd z_deriv_complex(const GridSpec& spec, const Eigen::ArrayXcd& f,
                                int j) {
    ScalarField re{spec, f.real()}, im{spec, f.imag()};
    return z_deriv(re, j) + cd(0, 1) * z_deriv(im, j);
}

}  // namespace

HermitianField make_hermitian_zero(const GridSpec& spec) {
    HermitianField h{spec, {}};
    h.comps.assign(spec.n * spec.n,
                   Eigen::ArrayXcd::Zero(spec.points()));
    return h;
}

HermitianField make_hermitian_constant(const GridSpec& spec, const SmallMat& m) {
    HermitianField h{spec, {}};
    h.comps.reserve(spec.n * spec.n);
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            h.comps.push_back(Eigen::ArrayXcd::Constant(spec.points(), m(j, k)));
    hermitize(h);
    return h;
}

void hermitize(HermitianField& a) {
    const int n = a.spec.n;
    for (int j = 0; j < n; ++j) {
        a.comps[j * n + j].imag().setZero();
        for (int k = j + 1; k < n; ++k) {
            Eigen::ArrayXcd& up = a.comps[j * n + k];
            Eigen::ArrayXcd& lo = a.comps[k * n + j];
            up.real() = 0.5 * (up.real() + lo.real());
            up.imag() = 0.5 * (up.imag() - lo.imag());
            lo.real() = up.real();
            lo.imag() = -up.imag();
        }
    }
}

HermitianField lincomb(double ca, const HermitianField& a, double cb,
                       const HermitianField& b) {
    HermitianField r{a.spec, {}};
    r.comps.reserve(a.comps.size());
    for (size_t i = 0; i < a.comps.size(); ++i) {
        Eigen::ArrayXcd c(a.comps[i].size());
        real_view(c) = ca * real_view(a.comps[i]) + cb * real_view(b.comps[i]);
        r.comps.push_back(std::move(c));
    }
    return r;
}

HermitianField add_constant(const HermitianField& a, const SmallMat& m) {
    HermitianField r = a;
    const int n = a.spec.n;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) r.comps[j * n + k] += m(j, k);
    return r;
}

void add_scaled(HermitianField& dst, double c, const HermitianField& src) {
    for (size_t i = 0; i < dst.comps.size(); ++i)
        real_view(dst.comps[i]) += c * real_view(src.comps[i]);
}

ScalarField trace_field(const HermitianField& a) {
    const int n = a.spec.n;
    Eigen::ArrayXd t = a.comps[0].real();
    for (int j = 1; j < n; ++j) t += a.comps[j * n + j].real();
    return ScalarField{a.spec, t};
}

ScalarField det_field(const HermitianField& a) {
    if (a.spec.n == 1) return ScalarField{a.spec, a.comps[0].real()};
    Eigen::ArrayXd d = a.comps[0].real() * a.comps[3].real() -
                       a.comps[1].abs2();
    return ScalarField{a.spec, d};
}

ScalarField min_eigenvalue_field(const HermitianField& a) {
    if (a.spec.n == 1) return ScalarField{a.spec, a.comps[0].real()};
    Eigen::ArrayXd tr = a.comps[0].real() + a.comps[3].real();
    Eigen::ArrayXd gap = a.comps[0].real() - a.comps[3].real();
    Eigen::ArrayXd rad = (0.25 * gap.square() + a.comps[1].abs2()).sqrt();
    return ScalarField{a.spec, 0.5 * tr - rad};
}

double require_metric(const HermitianField& a, const char* who) {
    const ScalarField me = min_eigenvalue_field(a);
    std::int64_t worst = 0;
    const double lo = me.values.minCoeff(&worst);
    const double scale = reduce(trace_field(a), Reduce::Mean);
    if (!std::isfinite(lo) || lo <= kMetricEigFloor * std::abs(scale)) {
        throw PositivityError(std::string(who) +
                                  ": field is not positive definite (min "
                                  "eigenvalue " +
                                  std::to_string(lo) + " at point " +
                                  std::to_string(worst) + ")",
                              worst, lo);
    }
    return lo;
}

HermitianField inverse_metric(const HermitianField& g) {
    HermitianField r = make_hermitian_zero(g.spec);
    if (g.spec.n == 1) {
        r.comps[0] = g.comps[0].real().inverse().cast<cd>();
        return r;
    }
    Eigen::ArrayXd det = g.comps[0].real() * g.comps[3].real() -
                         g.comps[1].abs2();
    r.comps[0] = (g.comps[3].real() / det).cast<cd>();
    r.comps[3] = (g.comps[0].real() / det).cast<cd>();
    r.comps[1] = -g.comps[1] / det.cast<cd>();
    r.comps[2] = r.comps[1].conjugate();
    return r;
}

ScalarField trace_pair(const HermitianField& g, const HermitianField& alpha) {
    require_metric(g, "trace_pair");
    if (g.spec.n == 1)
        return ScalarField{g.spec,
                           alpha.comps[0].real() / g.comps[0].real()};
    Eigen::ArrayXd det = g.comps[0].real() * g.comps[3].real() -
                         g.comps[1].abs2();
    // tr(g^-1 a) = (g22 a11 + g11 a22 - 2 Re(g12~ a12)) / det g
    Eigen::ArrayXd num = g.comps[3].real() * alpha.comps[0].real() +
                         g.comps[0].real() * alpha.comps[3].real() -
                         2.0 * (g.comps[1].conjugate() * alpha.comps[1]).real();
    return ScalarField{g.spec, num / det};
}

ScalarField log_det(const HermitianField& g) {
    require_metric(g, "log_det");
    return ScalarField{g.spec, det_field(g).values.log()};
}

ScalarField wedge_density(const HermitianField& omega, const HermitianField& alpha) {
    if (omega.spec.n != 2)
        throw DimensionError("wedge densities need complex dimension 2");
    Eigen::ArrayXd d = omega.comps[0].real() * alpha.comps[3].real() +
                       omega.comps[3].real() * alpha.comps[0].real() -
                       2.0 * (omega.comps[1] * alpha.comps[2]).real();
    return ScalarField{omega.spec, d};
}

ScalarField wedge_ratio(const HermitianField& omega, const HermitianField& alpha) {
    if (omega.spec.n != 2)
        throw DimensionError("wedge_ratio needs complex dimension 2");
    require_metric(omega, "wedge_ratio");
    const ScalarField num = wedge_density(omega, alpha);
    const Eigen::ArrayXd den = 2.0 * det_field(omega).values;
    return ScalarField{omega.spec, num.values / den};
}

HermitianField complex_hessian(const ScalarField& f) {
    const GridSpec& spec = f.spec;
    HermitianField h{spec, {}};
    h.comps.resize(spec.n * spec.n);
    // diagonal: d_zj d_z~j = (d_xx + d_yy)/4
    for (int j = 0; j < spec.n; ++j) {
        const ScalarField fxx = second_derivative(f, 2 * j);
        const ScalarField fyy = second_derivative(f, 2 * j + 1);
        Eigen::ArrayXcd& d = h.comps[j * spec.n + j];
        d.resize(spec.points());
        d.real() = 0.25 * (fxx.values + fyy.values);
        d.imag().setZero();
    }
    if (spec.n == 2) {
        // off-diagonal via first derivatives along z1
        const ScalarField fx1 = fourier_derivative(f, 0);
        const ScalarField fy1 = fourier_derivative(f, 1);
        const ScalarField x1x2 = fourier_derivative(fx1, 2);
        const ScalarField x1y2 = fourier_derivative(fx1, 3);
        const ScalarField y1x2 = fourier_derivative(fy1, 2);
        const ScalarField y1y2 = fourier_derivative(fy1, 3);
        // d_z1 d_z~2 = ((x1x2 + y1y2) + i (x1y2 - y1x2)) / 4
        h.comps[1].resize(spec.points());
        h.comps[1].real() = 0.25 * (x1x2.values + y1y2.values);
        h.comps[1].imag() = 0.25 * (x1y2.values - y1x2.values);
        h.comps[2].resize(spec.points());
        h.comps[2].real() = h.comps[1].real();
        h.comps[2].imag() = -h.comps[1].imag();
    }
    return h;
}

std::vector<Eigen::ArrayXcd> z_gradient(const ScalarField& f) {
    std::vector<Eigen::ArrayXcd> g;
    g.reserve(f.spec.n);
    for (int j = 0; j < f.spec.n; ++j) g.push_back(z_deriv(f, j));
    return g;
}

ConnectionField christoffel(const HermitianField& g) {
    require_metric(g, "christoffel");
    const GridSpec& spec = g.spec;
    const int n = spec.n;
    const HermitianField ginv = inverse_metric(g);

    // dg[i][j*n+l] = d_{z_i} g_{j lbar}
    std::vector<std::vector<Eigen::ArrayXcd>> dg(n);
    for (int i = 0; i < n; ++i) {
        dg[i].resize(n * n);
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                dg[i][j * n + l] = z_deriv_complex(spec, g.comps[j * n + l], i);
    }

    ConnectionField c{spec, {}};
    c.comps.assign(n * n * n, Eigen::ArrayXcd::Zero(spec.points()));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Eigen::ArrayXcd s = Eigen::ArrayXcd::Zero(spec.points());
                // Gamma^k_{ij} = g^{k lbar} d_i g_{j lbar};
                // g^{k lbar} = (g^-1)_{l k}
                for (int l = 0; l < n; ++l)
                    s += ginv.comps[l * n + k] * dg[i][j * n + l];
                c.comps[(k * n + i) * n + j] = s;
                c.comps[(k * n + j) * n + i] = s;  // exact (i,j) symmetry
            }
    return c;
}

CovariantHessians covariant_hessians(const HermitianField& g, const ScalarField& v) {
    require_metric(g, "covariant_hessians");
    const GridSpec& spec = g.spec;
    const int n = spec.n;

    CovariantHessians out{{}, complex_hessian(v), ScalarField{}, ScalarField{},
                          ScalarField{}};
    const ConnectionField gamma = christoffel(g);
    const std::vector<Eigen::ArrayXcd> grad = z_gradient(v);

    // plain second z-derivatives d_{z_i} d_{z_j} v
    std::vector<Eigen::ArrayXcd> d2(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            d2[i * n + j] = z_deriv_complex(spec, grad[i], j);
            d2[j * n + i] = d2[i * n + j];
        }

    out.h20.assign(n * n, Eigen::ArrayXcd::Zero(spec.points()));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Eigen::ArrayXcd s = d2[i * n + j];
            for (int k = 0; k < n; ++k) s -= gamma.gamma(k, i, j) * grad[k];
            out.h20[i * n + j] = s;
            out.h20[j * n + i] = s;
        }

    const HermitianField ginv = inverse_metric(g);
    const std::int64_t P = spec.points();
    Eigen::ArrayXd n20(P), n11(P), ngrad(P);
    for (std::int64_t p = 0; p < P; ++p) {
        SmallMat Pm = ginv.at(p);
        SmallMat H(n, n), S(n, n);
        SmallVec q(n);
        for (int i = 0; i < n; ++i) {
            q(i) = grad[i](p);
            for (int j = 0; j < n; ++j) {
                H(i, j) = out.h11.comps[i * n + j](p);
                S(i, j) = out.h20[i * n + j](p);
            }
        }
        // |grad gradbar v|^2 = tr((g^-1 H)^2)
        n11(p) = ((Pm * H) * (Pm * H)).trace().real();
        // |grad grad v|^2 = <S, g^-1 S g^-T>_F
        SmallMat PSPt = Pm * S * Pm.transpose();
        n20(p) = (S.array().conjugate() * PSPt.array()).sum().real();
        // |grad v|^2 = q^H g^-1 q  (with q the z-gradient)
        ngrad(p) = (q.adjoint() * Pm * q)(0, 0).real();
    }
    out.norm2_h20 = ScalarField{spec, n20};
    out.norm2_h11 = ScalarField{spec, n11};
    out.norm2_grad = ScalarField{spec, ngrad};
    return out;
}

RicciScalar ricci_and_scalar(const HermitianField& g, const SmallMat& twist) {
    const ScalarField ld = log_det(g);
    HermitianField ric = complex_hessian(ld);
    for (auto& comp : ric.comps) comp = -comp;
    HermitianField ric_tw = add_constant(ric, SmallMat(-twist));
    hermitize(ric_tw);
    ScalarField R = trace_pair(g, ric_tw);
    return RicciScalar{std::move(ric_tw), std::move(R)};
}

ScalarField metric_pairing(const HermitianField& ginv, const HermitianField& alpha,
                           const HermitianField& beta) {
    const GridSpec& spec = ginv.spec;
    const int n = spec.n;
    const std::int64_t P = spec.points();
    Eigen::ArrayXd out(P);
    for (std::int64_t p = 0; p < P; ++p) {
        SmallMat Pm = ginv.at(p);
        SmallMat A(n, n), B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                A(i, j) = alpha.comps[i * n + j](p);
                B(i, j) = beta.comps[i * n + j](p);
            }
        out(p) = (Pm * A * Pm * B).trace().real();
    }
    return ScalarField{spec, out};
}

}  // namespace krf
