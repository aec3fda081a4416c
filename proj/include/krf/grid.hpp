#ifndef KRF_GRID_HPP
#define KRF_GRID_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

// Periodic spectral field engine on the torus (R^{2n})/(2*pi*Z)^{2n}.
// Real axes are ordered (x1, y1, ..., xn, yn) with z^j = x^j + i y^j;
// fields are stored row-major over that ordering (x1 slowest, yn fastest).

namespace krf {

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    int n = 1;  // complex dimension, 1 or 2
    int N = 8;  // points per real axis, even, >= 8

    int axes() const { return 2 * n; }
    std::int64_t points() const {
        std::int64_t p = 1;
        for (int a = 0; a < axes(); ++a) p *= N;
        return p;
    }
    double h() const { return 2.0 * EIGEN_PI / N; }
    bool operator==(const GridSpec&) const = default;
};

// Throws GridError unless n in {1,2} and N is even and >= 8.
GridSpec make_grid(int n, int N);

struct ScalarField {
    GridSpec spec;
    Eigen::ArrayXd values;  // size spec.points()
};

ScalarField make_constant(const GridSpec& spec, double value);

// Samples f at the grid nodes; f receives (x1, y1, x2, y2), unused slots 0.
ScalarField sample(const GridSpec& spec,
                   const std::function<double(const std::array<double, 4>&)>& f);

// Node coordinates of a flat index, in axis order.
std::array<double, 4> node_coords(const GridSpec& spec, std::int64_t idx);

// Spectral derivative along one real axis (0-based, ordered x1,y1,...).
// Forward transform, multiply by i*k, inverse transform; the Nyquist mode of
// this odd-order operator is zeroed. Rejects non-finite input.
ScalarField fourier_derivative(const ScalarField& f, int axis);

// Spectral second derivative along one axis (Nyquist mode kept at -K^2).
ScalarField second_derivative(const ScalarField& f, int axis);

// d^2/(d axis_a d axis_b); uses the single-pass operator when a == b.
ScalarField mixed_derivative(const ScalarField& f, int axis_a, int axis_b);

enum class Reduce { Max, Min, SupNorm, Mean };

double reduce(const ScalarField& f, Reduce kind);

// Fraction of spectral energy carried by modes whose wavenumber along some
// axis lies in the top third (|k| > 2K/3). Resolution-adequacy diagnostic.
double spectral_tail_fraction(const ScalarField& f);

// Full unnormalized forward DFT over all axes, and its inverse.
Eigen::ArrayXcd forward_dft(const GridSpec& spec, const Eigen::ArrayXcd& f);
Eigen::ArrayXcd inverse_dft(const GridSpec& spec, const Eigen::ArrayXcd& f);

// Signed wavenumber along `axis` of a flat spectral index (in -K..K-1).
int wavenumber(const GridSpec& spec, std::int64_t idx, int axis);

bool all_finite(const ScalarField& f);

}  // namespace krf

#endif
