#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "krf/flow.hpp"
#include "krf/oracles.hpp"

#include <cmath>
#include <cstdio>

using namespace krf;

TEST_CASE("rhs closed forms") {
    const Scenario ke = make_ke_fixed_point(2, 8);
    const RhsResult r0 = rhs(ke, make_constant(ke.spec, 0.0), 1.3);
    CHECK(reduce(r0.udot, Reduce::SupNorm) == 0.0);  // exact stationary point

    const Scenario h = make_homogeneous(2.0, 1.0, 1, 8);
    const RhsResult r1 = rhs(h, make_constant(h.spec, 0.0), 0.0);
    CHECK(reduce(r1.udot, Reduce::Max) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(reduce(r1.udot, Reduce::Min) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("rhs raises KahlerLost on a degenerate potential") {
    const Scenario h = make_homogeneous(1.0, 1.0, 1, 8);
    // u = 2 cos(x1) has hessian entry -cos(x1)/2... scaled to break positivity
    const ScalarField bad = sample(h.spec, [](const std::array<double, 4>& x) {
        return 8.0 * std::cos(x[0]);
    });
    CHECK_THROWS_AS(rhs(h, bad, 0.0), KahlerLostError);
}

TEST_CASE("fixed point is preserved exactly") {
    const Scenario ke = make_ke_fixed_point(2, 8);
    const RunResult rr = run(ke, {0.0, 1.0, 2.0}, StepControl{});
    REQUIRE(rr.snapshots.size() == 3);
    for (const auto& st : rr.snapshots)
        CHECK(reduce(st.u, Reduce::SupNorm) <= 1e-10);
}

TEST_CASE("single-snapshot schedule returns the initial state") {
    const Scenario ke = make_ke_fixed_point(1, 8);
    const RunResult rr = run(ke, {0.0}, StepControl{});
    REQUIRE(rr.snapshots.size() == 1);
    CHECK(rr.snapshots[0].t == 0.0);
    CHECK(reduce(rr.snapshots[0].u, Reduce::SupNorm) == 0.0);
}

TEST_CASE("homogeneous run matches the quadrature oracle") {
    const Scenario h = make_homogeneous(2.0, 1.0, 1, 16);
    const std::vector<double> sched = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0};
    const RunResult rr = run(h, sched, StepControl{});
    const auto oracle = solve_homogeneous(2.0, 1.0, 0.0, 1, sched);
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const double diff =
            (rr.snapshots[i].u.values - oracle.u[i]).abs().maxCoeff();
        CHECK(diff <= 1e-6);
    }
}

TEST_CASE("spatial variance stays at roundoff on homogeneous data") {
    const Scenario h = make_homogeneous(2.0, 1.0, 1, 16);
    const RunResult rr = run(h, {0.0, 2.5, 5.0}, StepControl{});
    for (const auto& st : rr.snapshots) {
        const double mean = reduce(st.u, Reduce::Mean);
        const double var = (st.u.values - mean).square().mean();
        CHECK(var <= 1e-24);
    }
}

TEST_CASE("udot cache is coherent at snapshots") {
    const Scenario s = make_generic_ample(2, 8);
    const RunResult rr = run(s, {0.0, 0.3, 0.6}, StepControl{});
    for (const auto& st : rr.snapshots) {
        const RhsResult fresh = rhs(s, st.u, st.t);
        CHECK(((fresh.udot.values - st.udot.values).abs().maxCoeff()) <= 1e-13);
    }
}

TEST_CASE("second time derivative matches the ODE oracle") {
    const Scenario h = make_homogeneous(2.0, 1.0, 1, 8);
    const std::vector<double> sched = {0.0, 0.7, 1.9};
    const RunResult rr = run(h, sched, StepControl{});
    const auto oracle = solve_homogeneous(2.0, 1.0, 0.0, 1, sched);
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const ScalarField uddot = second_time_derivative(h, rr.snapshots[i]);
        CHECK(std::abs(reduce(uddot, Reduce::Max) - oracle.uddot[i]) <= 1e-6);
        // spatially constant
        CHECK(std::abs(reduce(uddot, Reduce::Max) -
                       reduce(uddot, Reduce::Min)) <= 1e-10);
    }
}

TEST_CASE("RK4 step-halving ratio sits near 16") {
    const Scenario h = make_homogeneous(2.0, 1.0, 1, 8);
    auto final_u = [&](double dt) {
        StepControl ctl;
        ctl.dt_fixed = dt;
        const RunResult rr = run(h, {1.0}, ctl);
        return reduce(rr.snapshots.back().u, Reduce::Max);
    };
    const double u1 = final_u(0.02), u2 = final_u(0.01), u4 = final_u(0.005);
    const double ratio = std::abs(u1 - u2) / std::abs(u2 - u4);
    CHECK(ratio >= 14.0);
    CHECK(ratio <= 18.0);
}

TEST_CASE("finite horizon stops with HorizonReached and no retries early") {
    const Scenario s = make_finite_time(1.0, 1, 16);
    const std::vector<double> sched = {0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 2.0};
    const RunResult rr = run(s, sched, StepControl{});
    CHECK(rr.termination == RunTermination::HorizonReached);
    CHECK(rr.snapshots.back().t == doctest::Approx(1.0 - 1e-3).epsilon(1e-12));
    for (const auto& st : rr.snapshots)
        if (st.t <= 0.9) CHECK(st.retry_count == 0);
}

TEST_CASE("determinism: identical scenario and schedule give identical bits") {
    const Scenario s = make_generic_ample(2, 8);
    const std::vector<double> sched = {0.0, 0.4, 0.8};
    const RunResult r1 = run(s, sched, StepControl{});
    const RunResult r2 = run(s, sched, StepControl{});
    for (std::size_t i = 0; i < sched.size(); ++i)
        CHECK(((r1.snapshots[i].u.values - r2.snapshots[i].u.values)
                   .abs()
                   .maxCoeff()) == 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const Scenario s = make_generic_ample(2, 8);
    const RunResult rr = run(s, {0.0, 0.5}, StepControl{});
    const std::string path = "test_checkpoint.krfl";
    write_checkpoint(path, rr.snapshots.back());
    const CheckpointData data = read_checkpoint(path);
    CHECK(data.n == 2);
    CHECK(data.N == 8);
    CHECK(data.t == rr.snapshots.back().t);
    CHECK(((data.u - rr.snapshots.back().u.values).abs().maxCoeff()) == 0.0);
    const FlowState st = state_from_checkpoint(s, data);
    CHECK(((st.udot.values - rr.snapshots.back().udot.values).abs().maxCoeff()) ==
          0.0);
    std::remove(path.c_str());
}

TEST_CASE("corrupted checkpoints are rejected") {
    const std::string path = "test_bad_checkpoint.krfl";
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOTાKRFL-data", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);
    std::remove(path.c_str());
}

TEST_CASE("ros2 integrates the homogeneous scenario to second order") {
    const Scenario h = make_homogeneous(2.0, 1.0, 1, 8);
    StepControl ctl;
    ctl.integrator = Integrator::ROS2;
    ctl.dt_imex = 0.01;
    const RunResult rr = run(h, {1.0}, ctl);
    const auto oracle = solve_homogeneous(2.0, 1.0, 0.0, 1, {1.0});
    CHECK((rr.snapshots.back().u.values - oracle.u[0]).abs().maxCoeff() <=
          5e-5);
}

TEST_CASE("ros2 agrees with rk4 on a genuinely 2-D scenario") {
    const Scenario s = make_generic_ample(2, 8);
    StepControl explicit_ctl;
    const RunResult ref = run(s, {0.5}, explicit_ctl);
    StepControl imex;
    imex.integrator = Integrator::ROS2;
    imex.dt_imex = 0.005;
    const RunResult got = run(s, {0.5}, imex);
    const double diff = (ref.snapshots.back().u.values -
                         got.snapshots.back().u.values)
                            .abs()
                            .maxCoeff();
    CHECK(diff <= 2e-5);
}

TEST_CASE("schedules must increase") {
    const Scenario ke = make_ke_fixed_point(1, 8);
    CHECK_THROWS_AS(run(ke, {0.5, 0.5}, StepControl{}), std::invalid_argument);
}

TEST_CASE("step fails hard after exhausting the dt halvings") {
    const Scenario ke = make_ke_fixed_point(1, 8);
    FlowState st = make_initial_state(ke);
    st.udot.values(0) = std::nan("");  // poisoned cache: every stage rejects
    StepControl ctl;
    ctl.max_halvings = 3;
    CHECK_THROWS_AS(step(ke, st, ctl, 1.0), StepFailureError);
}
