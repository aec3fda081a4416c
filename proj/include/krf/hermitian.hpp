#ifndef KRF_HERMITIAN_HPP
#define KRF_HERMITIAN_HPP

#include "krf/grid.hpp"

#include <complex>
#include <vector>

// Pointwise Hermitian-form algebra and Kahler-geometry kernels. Component
// convention: alpha_{j kbar}, so the (1,1)-form is i alpha_{j kbar} dz^j dz~^k
// and a metric is a pointwise positive definite Hermitian matrix field.

namespace krf {

using cd = std::complex<double>;
// small per-point matrices, stack-allocated up to 2x2
using SmallMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using SmallVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 2, 1>;

struct PositivityError : std::runtime_error {
    PositivityError(const std::string& what, std::int64_t point, double eig)
        : std::runtime_error(what), point(point), min_eig(eig) {}
    std::int64_t point;
    double min_eig;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HermitianField {
    GridSpec spec;
    // comps[j*n + k] holds alpha_{j kbar}; kept exactly Hermitian
    std::vector<Eigen::ArrayXcd> comps;

    int n() const { return spec.n; }
    SmallMat at(std::int64_t i) const {
        SmallMat m(spec.n, spec.n);
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) m(j, k) = comps[j * spec.n + k](i);
        return m;
    }
    void set(std::int64_t i, const SmallMat& m) {
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) comps[j * spec.n + k](i) = m(j, k);
    }
};

// Christoffel coefficients Gamma^k_{ij} of a Kahler metric, symmetric in (i,j).
struct ConnectionField {
    GridSpec spec;
    // comps[(k*n + i)*n + j] = Gamma^k_{ij}
    std::vector<Eigen::ArrayXcd> comps;
    const Eigen::ArrayXcd& gamma(int k, int i, int j) const {
        return comps[(k * spec.n + i) * spec.n + j];
    }
};

HermitianField make_hermitian_zero(const GridSpec& spec);
HermitianField make_hermitian_constant(const GridSpec& spec, const SmallMat& m);

// Enforces alpha = alpha^* exactly (average with the conjugate transpose).
void hermitize(HermitianField& a);

HermitianField lincomb(double ca, const HermitianField& a, double cb,
                       const HermitianField& b);
HermitianField add_constant(const HermitianField& a, const SmallMat& m);
// dst += c * src, on the vectorized real path
void add_scaled(HermitianField& dst, double c, const HermitianField& src);

ScalarField trace_field(const HermitianField& a);
ScalarField min_eigenvalue_field(const HermitianField& a);
ScalarField det_field(const HermitianField& a);

// Relative eigenvalue floor for the `metric` flag; distinguishes genuine
// degeneration from roundoff.
inline constexpr double kMetricEigFloor = 1e-10;

// Throws PositivityError (worst point and eigenvalue) unless a is pointwise
// positive definite above the relative floor. Returns the global minimum
// eigenvalue.
double require_metric(const HermitianField& a, const char* who);

// Pointwise inverse of a metric field (Hermitian again).
HermitianField inverse_metric(const HermitianField& g);

// tr(g^{-1} alpha); returns n when alpha = g.
ScalarField trace_pair(const HermitianField& g, const HermitianField& alpha);

// Pointwise log det of a metric field.
ScalarField log_det(const HermitianField& g);

// (omega ^ alpha) / (omega^2) as top-degree densities, n = 2 only.
// Contract: equals trace_pair(omega, alpha) / 2.
ScalarField wedge_ratio(const HermitianField& omega, const HermitianField& alpha);

// Top-degree density of omega ^ alpha for n = 2 (the 2x2 mixed-determinant
// expansion); omega^2 density is 2 det(omega).
ScalarField wedge_density(const HermitianField& omega, const HermitianField& alpha);

// d^2 f / dz^j dz~^k with dz^j = (d/dx^j - i d/dy^j)/2; exactly Hermitian.
HermitianField complex_hessian(const ScalarField& f);

// df/dz^j for j = 1..n.
std::vector<Eigen::ArrayXcd> z_gradient(const ScalarField& f);

// Gamma^k_{ij} = g^{k lbar} d_i g_{j lbar}; exactly symmetric in (i,j).
ConnectionField christoffel(const HermitianField& g);

struct CovariantHessians {
    std::vector<Eigen::ArrayXcd> h20;  // v_{;ij} = d_i d_j v - Gamma^k_{ij} v_k
    HermitianField h11;                // d_j d_kbar v
    ScalarField norm2_h20;             // |grad grad v|^2_g
    ScalarField norm2_h11;             // |grad gradbar v|^2_g = tr((g^-1 h11)^2)
    ScalarField norm2_grad;            // |grad v|^2_g
};

CovariantHessians covariant_hessians(const HermitianField& g, const ScalarField& v);

// Twisted Ricci and scalar curvature: ric_tw = -dd~ log det g - twist,
// R_tw = tr(g^{-1} ric_tw).
struct RicciScalar {
    HermitianField ric_tw;
    ScalarField R_tw;
};
RicciScalar ricci_and_scalar(const HermitianField& g, const SmallMat& twist);

// Pairing (alpha, beta)_g = g^{j bbar} g^{a kbar} alpha_{j kbar} beta_{a bbar}
// = tr(g^{-1} alpha g^{-1} beta) pointwise, given g^{-1}.
ScalarField metric_pairing(const HermitianField& ginv, const HermitianField& alpha,
                           const HermitianField& beta);

}  // namespace krf

#endif
