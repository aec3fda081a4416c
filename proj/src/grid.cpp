#include "krf/grid.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace krf {

namespace {

// Circulant spectral differentiation stencils for period 2*pi and even N.
// d1 is the first-derivative kernel with the Nyquist mode zeroed; d2 keeps
// the Nyquist mode at -K^2. Both act as out = Op * line via GEMM.
struct DerivTable {
    Eigen::MatrixXd d1t;   // transpose of first-derivative matrix
    Eigen::MatrixXd d2t;   // transpose of second-derivative matrix
    Eigen::MatrixXcd dft;  // forward DFT matrix (unnormalized)
};

const DerivTable& table_for(int N) {
    static std::map<int, std::unique_ptr<DerivTable>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(N);
    if (it != cache.end()) return *it->second;

    auto tab = std::make_unique<DerivTable>();
    const int K = N / 2;
    const double h = 2.0 * EIGEN_PI / N;

    Eigen::VectorXd k1(N), k2(N);
    // first-derivative kernel: k1(m) = -(2/N) sum_{k=1}^{K-1} k sin(k m h),
    // built for m = 0..K and mirrored with exact negation so that rows of the
    // first-derivative matrix sum to zero to machine precision
    for (int m = 0; m <= K; ++m) {
        double s = 0.0;
        for (int k = 1; k < K; ++k) s += k * std::sin(k * m * h);
        k1(m) = -2.0 * s / N;
    }
    for (int m = K + 1; m < N; ++m) k1(m) = -k1(N - m);
    k1(0) = 0.0;
    k1(K) = 0.0;  // sin(k*m*h) vanishes there anyway

    // second-derivative kernel, Nyquist included with weight -K^2
    for (int m = 0; m < N; ++m) {
        double s = -double(K) * K * ((m % 2 == 0) ? 1.0 : -1.0);
        for (int k = 1; k < K; ++k) s += -2.0 * k * k * std::cos(k * m * h);
        k2(m) = s / N;
    }
    // symmetrize exactly and pin the zero-sum constraint on the diagonal
    for (int m = 1; m < K; ++m) {
        const double avg = 0.5 * (k2(m) + k2(N - m));
        k2(m) = avg;
        k2(N - m) = avg;
    }
    double off = 0.0;
    for (int m = 1; m < N; ++m) off += k2(m);
    k2(0) = -off;

    Eigen::MatrixXd D1(N, N), D2(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const int m = (i - j + N) % N;
            D1(i, j) = k1(m);
            D2(i, j) = k2(m);
        }
    tab->d1t = D1.transpose();
    tab->d2t = D2.transpose();

    tab->dft.resize(N, N);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) {
            const double ang = -2.0 * EIGEN_PI * k * j / N;
            tab->dft(k, j) = std::complex<double>(std::cos(ang), std::sin(ang));
        }

    auto& ref = *tab;
    cache.emplace(N, std::move(tab));
    return ref;
}

// Applies the N x N operator (given transposed) along `axis` of the field.
template <typename Scalar>
void apply_axis(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& in,
                Eigen::Array<Scalar, Eigen::Dynamic, 1>& out,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& opT,
                const GridSpec& spec, int axis) {
    const int N = spec.N;
    std::int64_t inner = 1;
    for (int a = axis + 1; a < spec.axes(); ++a) inner *= N;
    const std::int64_t outer = spec.points() / (inner * N);
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (inner == 1) {
        // lines are contiguous: one GEMM over all of them at once
        Eigen::Map<const Mat> src(in.data(), N, outer);
        Eigen::Map<Mat> dst(out.data(), N, outer);
        dst.noalias() = opT.transpose() * src;
        return;
    }
    for (std::int64_t o = 0; o < outer; ++o) {
        Eigen::Map<const Mat> src(in.data() + o * N * inner, inner, N);
        Eigen::Map<Mat> dst(out.data() + o * N * inner, inner, N);
        dst.noalias() = src * opT;
    }
}

ScalarField derivative_impl(const ScalarField& f, int axis, bool second) {
    if (axis < 0 || axis >= f.spec.axes())
        throw GridError("derivative axis out of range");
    if (!all_finite(f))
        throw GridError("non-finite values in field (data corruption)");
    const auto& tab = table_for(f.spec.N);
    ScalarField out{f.spec, Eigen::ArrayXd(f.values.size())};
    apply_axis<double>(f.values, out.values, second ? tab.d2t : tab.d1t,
                       f.spec, axis);
    return out;
}

}  // namespace

GridSpec make_grid(int n, int N) {
    if (n != 1 && n != 2) throw GridError("complex dimension must be 1 or 2");
    if (N < 8 || (N % 2) != 0)
        throw GridError("grid size must be even and at least 8");
    return GridSpec{n, N};
}

ScalarField make_constant(const GridSpec& spec, double value) {
    return ScalarField{spec, Eigen::ArrayXd::Constant(spec.points(), value)};
}

std::array<double, 4> node_coords(const GridSpec& spec, std::int64_t idx) {
    std::array<double, 4> x{0.0, 0.0, 0.0, 0.0};
    const double h = spec.h();
    for (int a = spec.axes() - 1; a >= 0; --a) {
        x[a] = (idx % spec.N) * h;
        idx /= spec.N;
    }
    return x;
}

ScalarField sample(const GridSpec& spec,
                   const std::function<double(const std::array<double, 4>&)>& f) {
    ScalarField out{spec, Eigen::ArrayXd(spec.points())};
    for (std::int64_t i = 0; i < spec.points(); ++i)
        out.values(i) = f(node_coords(spec, i));
    return out;
}

ScalarField fourier_derivative(const ScalarField& f, int axis) {
    return derivative_impl(f, axis, false);
}

ScalarField second_derivative(const ScalarField& f, int axis) {
    return derivative_impl(f, axis, true);
}

ScalarField mixed_derivative(const ScalarField& f, int axis_a, int axis_b) {
    if (axis_a == axis_b) return second_derivative(f, axis_a);
    return fourier_derivative(fourier_derivative(f, axis_a), axis_b);
}

double reduce(const ScalarField& f, Reduce kind) {
    switch (kind) {
        case Reduce::Max: return f.values.maxCoeff();
        case Reduce::Min: return f.values.minCoeff();
        case Reduce::SupNorm: return f.values.abs().maxCoeff();
        case Reduce::Mean: return f.values.mean();
    }
    throw GridError("unknown reduction");
}

bool all_finite(const ScalarField& f) {
    // a poisoned sum detects NaN/Inf in one vectorized pass
    return std::isfinite(f.values.sum());
}

Eigen::ArrayXcd forward_dft(const GridSpec& spec, const Eigen::ArrayXcd& f) {
    const auto& tab = table_for(spec.N);
    Eigen::ArrayXcd cur = f, tmp(f.size());
    const Eigen::MatrixXcd dftT = tab.dft.transpose();
    for (int a = 0; a < spec.axes(); ++a) {
        apply_axis<std::complex<double>>(cur, tmp, dftT, spec, a);
        cur.swap(tmp);
    }
    return cur;
}

Eigen::ArrayXcd inverse_dft(const GridSpec& spec, const Eigen::ArrayXcd& f) {
    const auto& tab = table_for(spec.N);
    Eigen::ArrayXcd cur = f, tmp(f.size());
    const Eigen::MatrixXcd idftT = tab.dft.adjoint().transpose() / double(spec.N);
    for (int a = 0; a < spec.axes(); ++a) {
        apply_axis<std::complex<double>>(cur, tmp, idftT, spec, a);
        cur.swap(tmp);
    }
    return cur;
}

int wavenumber(const GridSpec& spec, std::int64_t idx, int axis) {
    const int N = spec.N;
    std::int64_t rest = idx;
    int k = 0;
    for (int a = spec.axes() - 1; a >= axis; --a) {
        k = int(rest % N);
        rest /= N;
    }
    return (k <= N / 2) ? k : k - N;
}

double spectral_tail_fraction(const ScalarField& f) {
    const int K = f.spec.N / 2;
    const Eigen::ArrayXcd spec =
        forward_dft(f.spec, f.values.cast<std::complex<double>>());
    const int cut = (2 * K) / 3;  // |k| > cut is "top third"
    double total = 0.0, tail = 0.0;
    for (std::int64_t i = 0; i < spec.size(); ++i) {
        const double e = std::norm(spec(i));
        total += e;
        bool high = false;
        for (int a = 0; a < f.spec.axes(); ++a)
            if (std::abs(wavenumber(f.spec, i, a)) > cut) high = true;
        if (high) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
}

}  // namespace krf
