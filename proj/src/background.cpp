#include "krf/background.hpp"

#include <cmath>
#include <random>

namespace krf {

namespace {

SmallMat identity(int n, double scale) {
    SmallMat m = SmallMat::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = scale;
    return m;
}

double min_eig_const(const SmallMat& m) {
    if (m.rows() == 1) return m(0, 0).real();
    const double a = m(0, 0).real(), d = m(1, 1).real();
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(m(0, 1)));
    return mid - rad;
}

// Random low-frequency potential: sum over integer wavevectors 0 < |k| <= 3
// (one representative per +-k pair) of a_k cos(<k,x> + theta_k), amplitudes
// decaying with |k|^2, then rescaled so the Hessian operator norm stays
// below `hessian_cap` everywhere.
ScalarField random_potential(const GridSpec& spec, std::uint64_t seed,
                             double hessian_cap) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * EIGEN_PI);
    std::uniform_real_distribution<double> ampl(0.5, 1.0);

    struct Mode {
        std::array<int, 4> k;
        double a, theta;
    };
    std::vector<Mode> modes;
    const int d = spec.axes();
    std::array<int, 4> k{0, 0, 0, 0};
    auto push = [&](std::array<int, 4> kk) {
        int norm2 = 0;
        for (int a = 0; a < d; ++a) norm2 += kk[a] * kk[a];
        if (norm2 == 0 || norm2 > 9) return;
        // keep one representative of each +-k pair
        for (int a = 0; a < d; ++a) {
            if (kk[a] > 0) break;
            if (kk[a] < 0) return;
        }
        modes.push_back(Mode{kk, ampl(rng) * std::pow(0.55, norm2 - 1),
                             phase(rng)});
    };
    if (d == 2) {
        for (k[0] = -3; k[0] <= 3; ++k[0])
            for (k[1] = -3; k[1] <= 3; ++k[1]) push(k);
    } else {
        for (k[0] = -3; k[0] <= 3; ++k[0])
            for (k[1] = -3; k[1] <= 3; ++k[1])
                for (k[2] = -3; k[2] <= 3; ++k[2])
                    for (k[3] = -3; k[3] <= 3; ++k[3]) push(k);
    }

    ScalarField psi = sample(spec, [&](const std::array<double, 4>& x) {
        double s = 0.0;
        for (const auto& m : modes) {
            double arg = m.theta;
            for (int a = 0; a < d; ++a) arg += m.k[a] * x[a];
            s += m.a * std::cos(arg);
        }
        return s;
    });

    // rescale: sup of the Hessian operator norm -> hessian_cap
    const HermitianField hess = complex_hessian(psi);
    Eigen::ArrayXd opnorm;
    if (spec.n == 1) {
        opnorm = hess.comps[0].real().abs();
    } else {
        Eigen::ArrayXd tr = hess.comps[0].real() + hess.comps[3].real();
        Eigen::ArrayXd gap = hess.comps[0].real() - hess.comps[3].real();
        Eigen::ArrayXd rad = (0.25 * gap.square() + hess.comps[1].abs2()).sqrt();
        opnorm = (0.5 * tr).abs() + rad;
    }
    const double sup = opnorm.maxCoeff();
    if (sup > 0.0) psi.values *= hessian_cap / sup;
    return psi;
}

Scenario finish(Scenario s) {
    s.twist = s.Binf;
    s.omega0 = add_constant(complex_hessian(s.psi0), s.B0);
    hermitize(s.omega0);
    s.omega_inf = add_constant(complex_hessian(s.psi_inf), s.Binf);
    hermitize(s.omega_inf);
    s.log_omega = ScalarField{s.spec, s.psi_inf.values + s.c0};
    s.omega_diff = lincomb(1.0, s.omega0, -1.0, s.omega_inf);
    if (s.finite_horizon()) {
        const double w = std::exp(-s.T_horizon);
        s.omega_T = lincomb(1.0 - w, s.omega_inf, w, s.omega0);
        hermitize(s.omega_T);
    } else {
        s.omega_T = s.omega_inf;
    }
    return s;
}

}  // namespace

HermitianField interpolate_background(const Scenario& s, double t) {
    if (t < 0.0 || (s.finite_horizon() && t >= s.T_horizon))
        throw HorizonError("background requested at t = " + std::to_string(t) +
                           " beyond the horizon");
    if (t == 0.0) return s.omega0;
    const double w = std::exp(-t);
    HermitianField r = lincomb(1.0 - w, s.omega_inf, w, s.omega0);
    hermitize(r);
    return r;
}

double compute_C_u(const Scenario& s, double t_end) {
    double tmax = t_end;
    if (s.finite_horizon()) tmax = std::min(tmax, s.T_horizon - 1e-3);
    const int samples = 64;
    double sup = 0.0;
    for (int i = 0; i <= samples + 1; ++i) {
        const double t = tmax * double(i) / double(samples + 1);
        HermitianField omega_t = (i == 0) ? s.omega0 : interpolate_background(s, t);
        try {
            require_metric(omega_t, "compute_C_u");
        } catch (const PositivityError& e) {
            throw ScenarioError(
                std::string("background form lost positivity before the "
                            "horizon: ") + e.what());
        }
        const ScalarField ratio{
            s.spec, log_det(omega_t).values - s.log_omega.values};
        sup = std::max(sup, reduce(ratio, Reduce::Max));
    }
    return sup > 0.0 ? sup + 0.01 : 0.0;
}

Scenario make_ke_fixed_point(int n, int N) {
    Scenario s;
    s.name = "ke_fixed_point";
    s.spec = make_grid(n, N);
    s.B0 = identity(n, 1.0);
    s.Binf = identity(n, 1.0);
    s.psi0 = make_constant(s.spec, 0.0);
    s.psi_inf = make_constant(s.spec, 0.0);
    s.c0 = 0.0;  // log det I
    s.t_end_default = 5.0;
    return finish(std::move(s));
}

Scenario make_homogeneous(double a, double b, int n, int N) {
    if (a <= 0.0 || b <= 0.0)
        throw ScenarioError("homogeneous scenario needs a, b > 0");
    Scenario s;
    s.name = "homogeneous";
    s.spec = make_grid(n, N);
    s.param_a = a;
    s.param_b = b;
    s.B0 = identity(n, a);
    s.Binf = identity(n, b);
    s.psi0 = make_constant(s.spec, 0.0);
    s.psi_inf = make_constant(s.spec, 0.0);
    s.c0 = 0.0;
    s.t_end_default = 5.0;
    return finish(std::move(s));
}

Scenario make_generic_ample(int n, int N, std::uint64_t seed) {
    Scenario s;
    s.name = "generic_ample";
    s.spec = make_grid(n, N);
    s.seed = seed;
    s.B0 = identity(n, 2.0);
    s.Binf = identity(n, 1.0);
    s.psi0 = random_potential(s.spec, seed, 0.60);
    s.psi_inf = random_potential(s.spec, seed + 1, 0.35);
    s.c0 = 0.0;
    s.t_end_default = 10.0;
    return finish(std::move(s));
}

Scenario make_fibration(int N, std::uint64_t seed) {
    Scenario s;
    s.name = "fibration";
    s.spec = make_grid(2, N);
    s.seed = seed;
    s.B0 = identity(2, 2.0);
    s.Binf = SmallMat::Zero(2, 2);
    s.Binf(0, 0) = 1.0;
    // omega_inf is the pull-back of the flat base form, so the Schwarz target
    // has zero curvature
    s.psi0 = random_potential(s.spec, seed, 0.55);
    s.psi_inf = make_constant(s.spec, 0.0);
    s.c0 = 0.0;
    s.fibration = true;
    s.base_metric = 1.0;
    s.t_end_default = 10.0;
    return finish(std::move(s));
}

Scenario make_finite_time(double T, int n, int N) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw ScenarioError("finite_time needs 0 < T < infinity");
    Scenario s;
    s.name = "finite_time";
    s.spec = make_grid(n, N);
    s.param_T = T;
    s.T_horizon = T;
    // constant backgrounds only: any spatial potential would break
    // positivity of omega_t as the constant part degenerates at T
    s.B0 = identity(n, 2.0);
    s.Binf = identity(n, -2.0 / (std::exp(T) - 1.0));
    s.psi0 = make_constant(s.spec, 0.0);
    s.psi_inf = make_constant(s.spec, 0.0);
    s.c0 = 0.0;
    s.t_end_default = T - 1e-3;
    return finish(std::move(s));
}

std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> cat;
    cat.push_back(make_ke_fixed_point(2, 16));
    cat.push_back(make_homogeneous(2.0, 1.0, 1, 16));
    cat.push_back(make_generic_ample(2, 16));
    cat.push_back(make_fibration(16));
    cat.push_back(make_finite_time(1.0, 1, 16));
    return cat;
}

Scenario make_scenario(const std::string& name, int n, int N, double a,
                       double b, double T, std::uint64_t seed) {
    if (name == "ke_fixed_point") return make_ke_fixed_point(n, N);
    if (name == "homogeneous") return make_homogeneous(a, b, n, N);
    if (name == "generic_ample") return make_generic_ample(n, N, seed);
    if (name == "fibration") {
        if (n != 2)
            throw ScenarioError("fibration scenario needs complex dimension 2");
        return make_fibration(N, seed);
    }
    if (name == "finite_time") return make_finite_time(T, n, N);
    throw ScenarioError("unknown scenario '" + name + "'");
}

void validate_scenario(const Scenario& s) {
    require_metric(s.omega0, "scenario omega_0");

    // twist consistency: i dd~ log Omega = omega_inf - Binf
    const HermitianField hlo = complex_hessian(s.log_omega);
    double worst = 0.0;
    const int n = s.spec.n;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            Eigen::ArrayXcd diff = hlo.comps[j * n + k] -
                                   (s.omega_inf.comps[j * n + k] - s.Binf(j, k));
            worst = std::max(worst, diff.abs().maxCoeff());
        }
    if (worst > 1e-10)
        throw ScenarioError("twist consistency violated: |i dd~ log Omega - "
                            "(omega_inf - B_inf)| = " + std::to_string(worst));

    if (!s.finite_horizon()) {
        const double lo = reduce(min_eigenvalue_field(s.omega_inf), Reduce::Min);
        if (lo < -1e-10)
            throw ScenarioError("omega_inf is not positive semidefinite");
    } else {
        const double w = std::exp(-s.T_horizon);
        SmallMat BT = s.Binf + w * (s.B0 - s.Binf);
        const double lo = min_eig_const(BT);
        if (std::abs(lo) > 1e-8)
            throw ScenarioError("constant part of omega_T must be singular "
                                "positive semidefinite at the horizon");
        // omega_t stays a metric strictly before T
        for (int i = 1; i <= 32; ++i) {
            const double t = (s.T_horizon - 1e-3) * i / 32.0;
            require_metric(interpolate_background(s, t), "scenario omega_t");
        }
    }
}

}  // namespace krf
