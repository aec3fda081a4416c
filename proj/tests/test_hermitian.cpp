#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "krf/hermitian.hpp"

#include <cmath>
#include <random>

using namespace krf;

namespace {

SmallMat diag2(double a, double b) {
    SmallMat m = SmallMat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

// random Hermitian field: independent draw at every grid point
HermitianField random_hermitian(const GridSpec& spec, std::uint64_t seed,
                                bool positive) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    HermitianField h = make_hermitian_zero(spec);
    const int n = spec.n;
    for (std::int64_t p = 0; p < spec.points(); ++p) {
        SmallMat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = cd(g(rng), g(rng));
        SmallMat m = positive ? SmallMat(A * A.adjoint()) : SmallMat(0.5 * (A + A.adjoint()));
        if (positive)
            for (int i = 0; i < n; ++i) m(i, i) += 0.2;
        h.set(p, m);
    }
    hermitize(h);
    return h;
}

}  // namespace

TEST_CASE("trace_pair basics") {
    const GridSpec spec = make_grid(2, 8);
    const HermitianField g = make_hermitian_constant(spec, diag2(2.0, 1.0));
    SmallMat ones(2, 2);
    ones.setConstant(1.0);
    const HermitianField a = make_hermitian_constant(spec, ones);
    CHECK(reduce(trace_pair(g, a), Reduce::Max) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(reduce(trace_pair(g, g), Reduce::Max) == doctest::Approx(2.0).epsilon(1e-14));
    const HermitianField zero = make_hermitian_zero(spec);
    CHECK(reduce(trace_pair(g, zero), Reduce::SupNorm) <= 1e-15);
}

TEST_CASE("trace_pair rejects indefinite metrics with a witness") {
    const GridSpec spec = make_grid(2, 8);
    HermitianField g = make_hermitian_constant(spec, diag2(1.0, 1.0));
    g.comps[3](5) = -0.5;
    try {
        trace_pair(g, g);
        FAIL("expected PositivityError");
    } catch (const PositivityError& e) {
        CHECK(e.point == 5);
        CHECK(e.min_eig == doctest::Approx(-0.5));
    }
}

TEST_CASE("log_det") {
    const GridSpec spec = make_grid(2, 8);
    CHECK(reduce(log_det(make_hermitian_constant(spec, diag2(2, 1))), Reduce::Max) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(reduce(log_det(make_hermitian_constant(spec, diag2(1, 1))), Reduce::SupNorm) <=
          1e-15);
    const double e = std::exp(1.0);
    CHECK(reduce(log_det(make_hermitian_constant(spec, diag2(e, e))), Reduce::Max) ==
          doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("wedge_ratio closed forms and the factor-1/2 chain") {
    const GridSpec spec = make_grid(2, 8);
    const HermitianField I = make_hermitian_constant(spec, diag2(1, 1));
    CHECK(reduce(wedge_ratio(I, I), Reduce::Max) == doctest::Approx(1.0));
    CHECK(reduce(trace_pair(I, I), Reduce::Max) == doctest::Approx(2.0));
    CHECK(reduce(wedge_ratio(I, make_hermitian_zero(spec)), Reduce::SupNorm) <= 1e-15);

    // direct 2x2 wedge expansion oracle: omega = diag(2,1), alpha = diag(4,0)
    const HermitianField omega = make_hermitian_constant(spec, diag2(2, 1));
    const HermitianField alpha = make_hermitian_constant(spec, diag2(4, 0));
    // density(omega ^ alpha) = 2*0 + 1*4 = 4; density(omega^2) = 2 det = 4
    CHECK(reduce(wedge_ratio(omega, alpha), Reduce::Max) == doctest::Approx(1.0));

    // random fields: wedge_ratio = trace_pair / 2 pointwise
    const HermitianField g = random_hermitian(spec, 42, true);
    const HermitianField a = random_hermitian(spec, 43, false);
    const ScalarField w = wedge_ratio(g, a);
    const ScalarField t = trace_pair(g, a);
    CHECK(((w.values - 0.5 * t.values).abs().maxCoeff()) <= 1e-12);
}

TEST_CASE("wedge_ratio requires n = 2") {
    const GridSpec spec = make_grid(1, 8);
    HermitianField g = make_hermitian_zero(spec);
    g.comps[0] = Eigen::ArrayXcd::Constant(spec.points(), 1.0);
    CHECK_THROWS_AS(wedge_ratio(g, g), DimensionError);
}

TEST_CASE("trace_pair positivity on positive semidefinite arguments") {
    const GridSpec spec = make_grid(2, 8);
    const HermitianField g = random_hermitian(spec, 7, true);
    const HermitianField a = random_hermitian(spec, 8, true);
    CHECK(reduce(trace_pair(g, a), Reduce::Min) >= 0.0);
}

TEST_CASE("trace_pair is linear in its second argument") {
    const GridSpec spec = make_grid(2, 8);
    const HermitianField g = random_hermitian(spec, 17, true);
    const HermitianField a = random_hermitian(spec, 18, false);
    const HermitianField b = random_hermitian(spec, 19, false);
    const HermitianField combo = lincomb(1.3, a, -0.7, b);
    const Eigen::ArrayXd lhs = trace_pair(g, combo).values;
    const Eigen::ArrayXd rhs = 1.3 * trace_pair(g, a).values -
                               0.7 * trace_pair(g, b).values;
    CHECK((lhs - rhs).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("log det concavity along matrix interpolation") {
    const GridSpec spec = make_grid(2, 8);
    const HermitianField A = random_hermitian(spec, 100, true);
    const HermitianField B = random_hermitian(spec, 101, true);
    for (double t : {0.25, 0.5, 0.75}) {
        const HermitianField M = lincomb(t, A, 1.0 - t, B);
        const Eigen::ArrayXd lhs = log_det(M).values;
        const Eigen::ArrayXd rhs =
            t * log_det(A).values + (1.0 - t) * log_det(B).values;
        CHECK((lhs - rhs).minCoeff() >= -1e-12);
    }
}

TEST_CASE("complex hessian closed forms") {
    const GridSpec s1 = make_grid(1, 16);
    const ScalarField f1 =
        sample(s1, [](const std::array<double, 4>& x) { return std::cos(x[0]); });
    const HermitianField h1 = complex_hessian(f1);
    // entry (1,1) = -cos(x1)/4; value at the origin -0.25
    CHECK(h1.comps[0](0).real() == doctest::Approx(-0.25).epsilon(1e-12));
    const ScalarField expect1 = sample(
        s1, [](const std::array<double, 4>& x) { return -0.25 * std::cos(x[0]); });
    CHECK(((h1.comps[0].real() - expect1.values).abs().maxCoeff()) <= 1e-12);

    const GridSpec s2 = make_grid(2, 8);
    CHECK(reduce(trace_field(complex_hessian(make_constant(s2, 5.0))),
                 Reduce::SupNorm) <= 1e-12);

    const ScalarField f2 = sample(s2, [](const std::array<double, 4>& x) {
        return std::cos(x[0]) + std::cos(x[2]);
    });
    const HermitianField h2 = complex_hessian(f2);
    const ScalarField d1 = sample(
        s2, [](const std::array<double, 4>& x) { return -0.25 * std::cos(x[0]); });
    const ScalarField d2 = sample(
        s2, [](const std::array<double, 4>& x) { return -0.25 * std::cos(x[2]); });
    CHECK(((h2.comps[0].real() - d1.values).abs().maxCoeff()) <= 1e-12);
    CHECK(((h2.comps[3].real() - d2.values).abs().maxCoeff()) <= 1e-12);
    CHECK(h2.comps[1].abs().maxCoeff() <= 1e-12);
}

TEST_CASE("complex hessian is exactly Hermitian and matches the x/y formula") {
    const GridSpec spec = make_grid(2, 16);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> amp(-1, 1);
    const ScalarField f = sample(spec, [&](const std::array<double, 4>& x) {
        return std::cos(x[0] + 2 * x[1] - x[2]) + 0.3 * std::sin(x[3] + x[0]);
    });
    const HermitianField h = complex_hessian(f);
    // exact Hermitian symmetry
    CHECK(((h.comps[1] - h.comps[2].conjugate()).abs().maxCoeff()) == 0.0);
    CHECK(h.comps[0].imag().abs().maxCoeff() == 0.0);

    // entry (1,2) from real second partials
    const ScalarField x1x2 = mixed_derivative(f, 0, 2);
    const ScalarField y1y2 = mixed_derivative(f, 1, 3);
    const ScalarField x1y2 = mixed_derivative(f, 0, 3);
    const ScalarField y1x2 = mixed_derivative(f, 1, 2);
    const Eigen::ArrayXcd expect =
        0.25 * ((x1x2.values + y1y2.values).cast<cd>() +
                cd(0, 1) * (x1y2.values - y1x2.values).cast<cd>());
    CHECK(((h.comps[1] - expect).abs().maxCoeff()) <= 1e-12);
}

TEST_CASE("christoffel symbols") {
    const GridSpec spec = make_grid(1, 32);
    // constant metric: Gamma = 0
    HermitianField gc = make_hermitian_zero(spec);
    gc.comps[0] = Eigen::ArrayXcd::Constant(spec.points(), 2.5);
    CHECK(christoffel(gc).gamma(0, 0, 0).abs().maxCoeff() <= 1e-14);

    // g = e^{cos x1}: Gamma^1_{11} = d_z cos(x1) = -sin(x1)/2
    HermitianField g = make_hermitian_zero(spec);
    const ScalarField c = sample(
        spec, [](const std::array<double, 4>& x) { return std::exp(std::cos(x[0])); });
    g.comps[0] = c.values.cast<cd>();
    const ConnectionField gamma = christoffel(g);
    const ScalarField expect = sample(
        spec, [](const std::array<double, 4>& x) { return -0.5 * std::sin(x[0]); });
    CHECK(((gamma.gamma(0, 0, 0) - expect.values.cast<cd>()).abs().maxCoeff()) <=
          1e-10);
}

TEST_CASE("christoffel is exactly symmetric in the lower indices") {
    const GridSpec spec = make_grid(2, 8);
    const ScalarField psi = sample(spec, [](const std::array<double, 4>& x) {
        return 0.2 * std::cos(x[0] + x[2]) + 0.1 * std::sin(x[1] - x[3]);
    });
    const HermitianField g =
        add_constant(complex_hessian(psi), SmallMat(diag2(2, 2)));
    const ConnectionField gamma = christoffel(g);
    for (int k = 0; k < 2; ++k)
        CHECK(((gamma.gamma(k, 0, 1) - gamma.gamma(k, 1, 0)).abs().maxCoeff()) ==
              0.0);
}

TEST_CASE("covariant hessians on flat metrics") {
    const GridSpec spec = make_grid(1, 16);
    HermitianField g = make_hermitian_zero(spec);
    g.comps[0] = Eigen::ArrayXcd::Constant(spec.points(), 1.0);

    // constant potential: everything vanishes
    const CovariantHessians zero = covariant_hessians(g, make_constant(spec, 4.0));
    CHECK(reduce(zero.norm2_grad, Reduce::SupNorm) <= 1e-20);
    CHECK(reduce(zero.norm2_h20, Reduce::SupNorm) <= 1e-20);
    CHECK(reduce(zero.norm2_h11, Reduce::SupNorm) <= 1e-20);

    // v = cos x1 against the closed forms
    const ScalarField v =
        sample(spec, [](const std::array<double, 4>& x) { return std::cos(x[0]); });
    const CovariantHessians ch = covariant_hessians(g, v);
    // |grad gradbar v|^2 = (cos(x1)/4)^2, at the origin 0.0625
    CHECK(ch.norm2_h11.values(0) == doctest::Approx(0.0625).epsilon(1e-10));
    // |grad v|^2 = sin^2(x1)/4
    const ScalarField expect = sample(
        spec, [](const std::array<double, 4>& x) {
            return 0.25 * std::sin(x[0]) * std::sin(x[0]);
        });
    CHECK(((ch.norm2_grad.values - expect.values).abs().maxCoeff()) <= 1e-12);
}

TEST_CASE("cauchy-schwarz floor |grad gradbar v|^2 >= (Lap v)^2 / n") {
    const GridSpec spec = make_grid(2, 8);
    std::mt19937_64 rng(55);
    const ScalarField psi = sample(spec, [&](const std::array<double, 4>& x) {
        return 0.3 * std::cos(x[0] + x[3]) + 0.2 * std::sin(x[1] + x[2]);
    });
    const HermitianField g =
        add_constant(complex_hessian(psi), SmallMat(diag2(2, 2)));
    const ScalarField v = sample(spec, [](const std::array<double, 4>& x) {
        return std::cos(x[0]) * std::sin(x[2] + x[1]);
    });
    const CovariantHessians ch = covariant_hessians(g, v);
    const ScalarField lap = trace_pair(g, complex_hessian(v));
    const Eigen::ArrayXd margin =
        ch.norm2_h11.values - lap.values.square() / 2.0;
    CHECK(margin.minCoeff() >= -1e-10);
}

TEST_CASE("ricci and scalar curvature") {
    const GridSpec s2 = make_grid(2, 8);
    // flat constant metric, no twist
    const HermitianField flat = make_hermitian_constant(s2, diag2(1.5, 1.5));
    const RicciScalar flat_rs = ricci_and_scalar(flat, SmallMat::Zero(2, 2));
    CHECK(reduce(flat_rs.R_tw, Reduce::SupNorm) <= 1e-11);

    // constant metric = I with twist I: ric_tw = -I, R_tw = -2
    SmallMat I2 = diag2(1, 1);
    const RicciScalar tw = ricci_and_scalar(make_hermitian_constant(s2, I2), I2);
    CHECK(reduce(tw.R_tw, Reduce::Max) == doctest::Approx(-2.0).epsilon(1e-11));

    // n = 1, g = e^{cos x1}: R = e^{-cos x1} cos(x1)/4; at origin e^{-1}/4
    const GridSpec s1 = make_grid(1, 32);
    HermitianField g = make_hermitian_zero(s1);
    g.comps[0] = sample(s1, [](const std::array<double, 4>& x) {
                     return std::exp(std::cos(x[0]));
                 }).values.cast<cd>();
    const RicciScalar rs = ricci_and_scalar(g, SmallMat::Zero(1, 1));
    const ScalarField expect = sample(s1, [](const std::array<double, 4>& x) {
        return 0.25 * std::cos(x[0]) * std::exp(-std::cos(x[0]));
    });
    CHECK(rs.R_tw.values(0) ==
          doctest::Approx(0.25 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(((rs.R_tw.values - expect.values).abs().maxCoeff()) <= 1e-9);
}
