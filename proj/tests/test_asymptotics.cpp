#include <cmath>
#include <vector>

#include "doctest.h"
#include "nlac/asymptotics.hpp"

using namespace nlac;

namespace {

// nondimensional quadratic-coupling setup used by both sweeps
SimulationSetup nonlinear_base(Equation eq, double delta, double tau, double amp) {
    SimulationSetup s;
    s.model.equation = eq;
    s.medium = Medium::make(1.0, 1.0, delta, 1.0, tau, Formulation::Potential);
    s.grid = Grid1D(1.0, 101);
    s.time = TimeAxis(0.3, 300);
    s.init.u0.assign(s.grid.n_nodes, 0.0);
    s.init.u1 = gaussian_pulse(s.grid, amp, 0.5, 0.1);
    if (eq == Equation::JmgtWestervelt || eq == Equation::JmgtKuznetsov)
        s.init.u2 = std::vector<double>(s.grid.n_nodes, 0.0);
    return s;
}

}  // namespace

TEST_CASE("vanishing relaxation: errors shrink linearly toward the tau=0 member") {
    SweepConfig cfg;
    cfg.parameter = SweepParameter::Tau;
    cfg.base = nonlinear_base(Equation::JmgtWestervelt, 0.01, 0.0, 0.2);
    cfg.values = {4e-3, 2e-3, 1e-3};

    const SweepResult res = run_sweep(cfg);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.achieved_horizon == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(res.limit.n_frames() == 301);
    REQUIRE(res.members.size() == 3);

    CHECK(res.monotone_c_h1);
    for (const SweepRow& r : res.rows) {
        CHECK(r.rel_c_h1 > 0.0);
        CHECK(r.rel_c_h1 < 0.2);
        CHECK(r.rel_xbar_w > 0.0);
    }
    // first-order rate in the relaxation time: halving the value halves the gap
    const double r01 = res.rows[0].rel_c_h1 / res.rows[1].rel_c_h1;
    const double r12 = res.rows[1].rel_c_h1 / res.rows[2].rel_c_h1;
    CHECK(r01 > 1.4);
    CHECK(r01 < 2.6);
    CHECK(r12 > 1.4);
    CHECK(r12 < 2.6);
    // the alternate norm shrinks as well
    CHECK(res.rows[2].rel_xbar_w < res.rows[0].rel_xbar_w);
}

TEST_CASE("vanishing diffusivity: errors shrink linearly toward the inviscid member") {
    SweepConfig cfg;
    cfg.parameter = SweepParameter::Delta;
    cfg.base = nonlinear_base(Equation::Kuznetsov, 0.0, 0.0, 0.05);
    cfg.base.medium = Medium::make(1.0, 1.0, 0.0, 5.0, 0.0, Formulation::Potential);
    cfg.values = {4e-3, 2e-3, 1e-3};

    const SweepResult res = run_sweep(cfg);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.monotone_c_h1);
    const double r01 = res.rows[0].rel_c_h1 / res.rows[1].rel_c_h1;
    const double r12 = res.rows[1].rel_c_h1 / res.rows[2].rel_c_h1;
    CHECK(r01 > 1.4);
    CHECK(r01 < 2.6);
    CHECK(r12 > 1.4);
    CHECK(r12 < 2.6);
}

TEST_CASE("sweep validation") {
    SweepConfig cfg;
    cfg.parameter = SweepParameter::Tau;
    cfg.base = nonlinear_base(Equation::JmgtWestervelt, 0.01, 0.0, 0.1);

    SUBCASE("no values") {
        cfg.values = {};
        CHECK_THROWS_AS(run_sweep(cfg), InvalidParameter);
    }
    SUBCASE("negative values") {
        cfg.values = {1e-3, -1e-3};
        CHECK_THROWS_AS(run_sweep(cfg), InvalidParameter);
    }
    SUBCASE("relaxation sweep needs a third-order member") {
        cfg.values = {1e-3};
        cfg.base = nonlinear_base(Equation::Kuznetsov, 0.01, 0.0, 0.1);
        CHECK_THROWS_AS(run_sweep(cfg), InvalidParameter);
    }
    SUBCASE("backoff factor must contract") {
        cfg.values = {1e-3};
        cfg.horizon_backoff = 1.0;
        CHECK_THROWS_AS(run_sweep(cfg), InvalidParameter);
    }
    SUBCASE("identically zero limit is reported") {
        cfg.values = {1e-3};
        cfg.base.init.u1.assign(cfg.base.grid.n_nodes, 0.0);
        CHECK_THROWS_AS(run_sweep(cfg), NumericalError);
    }
    SUBCASE("unresolvable divergence propagates") {
        cfg.values = {1e-3};
        cfg.base.stepper.picard_max_iter = 1;  // nonlinear steps cannot settle
        CHECK_THROWS_AS(run_sweep(cfg), PicardDivergence);
    }
}
