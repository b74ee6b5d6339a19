#include <fbp/solvers.hpp>

#include <gtest/gtest.h>

#include <cmath>

#include "surrogate.hpp"

namespace {

using fbp::BoxDomain;
using fbp::Grid;
using fbp::HorizontalOperators;
using fbp::NonlinearitySpec;
using fbp::Point;
using fbp::ScalarField;
using fbp::SmoothedEnergy;
using fbp::SolveConfig;

Grid cube(int n) { return Grid(BoxDomain::cube(3, -1.0, 1.0), n); }

double interior_max_diff(const Grid& g, const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (size_t k = 0; k < g.size(); ++k) {
        if (!g.is_boundary(k)) m = std::max(m, std::abs(a[k] - b[k]));
    }
    return m;
}

TEST(Solvers, LinearSolveZeroRhs) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const ScalarField u = fbp::solve_linear(ScalarField(g.size()), ops, SolveConfig{});
    EXPECT_EQ(u.max_abs(), 0.0);
}

TEST(Solvers, LinearSolveManufactured) {
    const Grid g = cube(17);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const ScalarField w = fbp::sample(g, [](const Point& x) {
        const double b = (1 - x[0] * x[0]) * (1 - x[1] * x[1]) * (1 - x[2] * x[2]);
        return x[2] * b * b;
    });
    const ScalarField rhs = -1.0 * ops.sub_laplacian(w);
    fbp::LinearSolveInfo info;
    SolveConfig cfg;
    cfg.cg_tol = 1e-12;
    const ScalarField u = fbp::solve_linear(rhs, ops, cfg, &info);
    EXPECT_LE(info.relative_residual, 1e-12);
    EXPECT_LT(interior_max_diff(g, u, w), 1e-9);
    EXPECT_THROW(fbp::solve_linear(ScalarField(3), ops, cfg), std::invalid_argument);
}

// Boundary data x3, rhs 0: L x3 = 0, so the interior should approach x3.
TEST(Solvers, LinearSolveDirichletApproachesHarmonicData) {
    std::vector<double> errors;
    for (int n : {9, 17, 33}) {
        const Grid g = cube(n);
        const HorizontalOperators ops(fbp::heisenberg1(), g);
        const ScalarField data = fbp::sample(g, [](const Point& x) { return x[2]; });
        const ScalarField u = fbp::solve_linear_dirichlet(ScalarField(g.size()), data, ops, SolveConfig{});
        for (size_t k = 0; k < g.size(); ++k) {
            if (g.is_boundary(k)) {
                EXPECT_EQ(u[k], data[k]);
            }
        }
        errors.push_back(interior_max_diff(g, u, data));
    }
    EXPECT_LT(errors[1], errors[0]);
    EXPECT_LT(errors[2], errors[1]);
}

TEST(Solvers, Barrier) {
    const Grid g = cube(17);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    SolveConfig cfg;
    cfg.cg_tol = 1e-12;
    EXPECT_EQ(fbp::barrier_phi0(0.0, 5.0, ops, cfg).max_abs(), 0.0);
    EXPECT_EQ(fbp::barrier_phi0(3.0, 0.0, ops, cfg).max_abs(), 0.0);
    const ScalarField p1 = fbp::barrier_phi0(1.0, 1.0, ops, cfg);
    EXPECT_GE(p1.min(), 0.0);
    EXPECT_GT(p1.max(), 0.0);
    const ScalarField p2 = fbp::barrier_phi0(2.0, 1.0, ops, cfg);
    for (size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(p2[k], 2.0 * p1[k], 1e-10);
    EXPECT_THROW(fbp::barrier_phi0(-1.0, 1.0, ops, cfg), std::invalid_argument);
}

TEST(Solvers, MinimizeFromZeroIsImmediate) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const SmoothedEnergy e(ops, NonlinearitySpec::constant(1, 1), 50.0, 0.1);
    const auto res = fbp::minimize_energy(ScalarField(g.size()), e, SolveConfig{});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 0);
    EXPECT_EQ(res.u.max_abs(), 0.0);
}

TEST(Solvers, MinimizeBelowThresholdDecaysToZero) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const SmoothedEnergy e(ops, NonlinearitySpec::constant(1, 1), 0.5, 0.1);
    const auto res = fbp::minimize_energy(0.5 * fbp::trial_bump(g), e, SolveConfig{});
    EXPECT_TRUE(res.converged);
    EXPECT_LT(res.u.max_abs(), 1e-6);
    for (size_t j = 1; j < res.energies.size(); ++j) EXPECT_LE(res.energies[j], res.energies[j - 1]);
    EXPECT_LE(e.residual(res.u).max_abs(), 1e-8);
}

TEST(Solvers, MinimizeEnergyIsMonotone) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const SmoothedEnergy e(ops, NonlinearitySpec::constant(1, 1), 40.0, 0.2);
    SolveConfig cfg;
    cfg.max_outer_iter = 40;
    const auto res = fbp::minimize_energy(3.0 * fbp::trial_bump(g), e, cfg);
    ASSERT_GE(res.energies.size(), 2u);
    for (size_t j = 1; j < res.energies.size(); ++j) EXPECT_LE(res.energies[j], res.energies[j - 1]);
}

TEST(Solvers, NegativeEndpoint) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const SmoothedEnergy big(ops, NonlinearitySpec::constant(1, 1), 200.0, 0.1);
    const ScalarField u = fbp::find_negative_endpoint(big);
    EXPECT_LT(big.energy(u).total, 0.0);
    EXPECT_LE(u.max(), 4.0 + 1e-12);
    const SmoothedEnergy none(ops, NonlinearitySpec::constant(1, 1), 0.0, 0.1);
    EXPECT_THROW(fbp::find_negative_endpoint(none), fbp::InoperableLambda);
    const ScalarField b = fbp::trial_bump(g);
    EXPECT_TRUE(fbp::has_zero_trace(g, b));
    EXPECT_NEAR(b.max(), 1.0, 1e-12);
}

TEST(Solvers, MountainPassOnSurrogate) {
    const fbp::testing::Surrogate s;
    SolveConfig cfg;
    cfg.descent_tol = 1e-8;
    // Bent initial path over (0, 1.5): the peak has to come down to the saddle.
    const auto res = fbp::mountain_pass(s.landscape(), {s.at(-1, 0), s.at(0, 1.5) + 0.3 * s.phi1, s.at(1, 0)}, cfg);
    const double oracle = fbp::testing::lattice_minimax(fbp::testing::Surrogate::e, 401, -2, 2, -1, 0, 1, 0);
    EXPECT_NEAR(oracle, 1.0, 1e-12);
    EXPECT_TRUE(res.converged) << res.status;
    EXPECT_NEAR(res.c_eps, oracle, 0.02 * oracle);
    EXPECT_GE(res.c_eps, 0.0);
    for (size_t j = 1; j < res.peak_history.size(); ++j) EXPECT_LE(res.peak_history[j], res.peak_history[j - 1]);
    EXPECT_LE(res.peak_history.front(), fbp::testing::Surrogate::e(0, 1.5) + 0.1);
}

TEST(Solvers, MountainPassWithoutBarrier) {
    const fbp::testing::Surrogate s;
    // From the minimum at a = 1 straight down in b: no separating ridge.
    const auto res = fbp::mountain_pass(s.landscape(), s.at(0, 3), s.at(1, 0), SolveConfig{});
    EXPECT_FALSE(res.converged);
    EXPECT_FALSE(res.status.empty());
}

TEST(Solvers, MountainPassPde) {
    const Grid g = cube(17);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const SmoothedEnergy e(ops, NonlinearitySpec::constant(1, 1), 50.0, 0.4);
    SolveConfig cfg;
    cfg.lambda = 50.0;
    cfg.eps = 0.4;
    const ScalarField u_end = fbp::find_negative_endpoint(e);
    const auto res = fbp::mountain_pass(u_end, e, cfg);
    EXPECT_TRUE(res.converged) << res.status;
    EXPECT_LE(res.residual_norm, cfg.descent_tol);
    EXPECT_GT(res.c_eps, 0.0);
    EXPECT_GT(res.c_eps, e.energy(u_end).total);
    EXPECT_GT(res.u_mp.max(), 1.0);
    EXPECT_THROW(fbp::mountain_pass(ScalarField(g.size()), e, cfg), std::invalid_argument);
}

TEST(Solvers, Continuation) {
    const Grid g = cube(17);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    SolveConfig cfg;
    cfg.lambda = 50.0;
    const auto res = fbp::eps_continuation({0.4, 0.2, 0.1, 0.05}, ops, NonlinearitySpec::constant(1, 1), cfg);
    ASSERT_TRUE(res.completed) << res.failure;
    ASSERT_EQ(res.steps.size(), 4u);
    for (const auto& s : res.steps) {
        EXPECT_TRUE(s.converged);
        EXPECT_LE(s.residual_norm, cfg.descent_tol);
        EXPECT_GT(s.energy_eps.total, 0.0);
    }
    const double d2 = interior_max_diff(g, res.steps[2].u, res.steps[1].u);
    const double d3 = interior_max_diff(g, res.steps[3].u, res.steps[2].u);
    EXPECT_LE(d3, d2);
}

TEST(Solvers, SingleStepContinuationIsOneMountainPass) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    SolveConfig cfg;
    cfg.lambda = 60.0;
    const auto res = fbp::eps_continuation({0.4}, ops, NonlinearitySpec::constant(1, 1), cfg);
    ASSERT_EQ(res.steps.size(), 1u);
    EXPECT_TRUE(res.steps[0].method == "mountain_pass" || res.steps[0].method == "eps_homotopy");
    EXPECT_THROW(fbp::eps_continuation({0.1, 0.2}, ops, NonlinearitySpec::constant(1, 1), cfg), std::invalid_argument);
    EXPECT_THROW(fbp::eps_continuation({}, ops, NonlinearitySpec::constant(1, 1), cfg), std::invalid_argument);
}

TEST(Solvers, ContinuationReportsInoperableLambda) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    SolveConfig cfg;
    cfg.lambda = 0.0;
    const auto res = fbp::eps_continuation({0.4, 0.2}, ops, NonlinearitySpec::constant(1, 1), cfg);
    EXPECT_FALSE(res.completed);
    EXPECT_TRUE(res.steps.empty());
    EXPECT_NE(res.failure.find("lambda"), std::string::npos);
}

TEST(Solvers, ConfigValidation) {
    SolveConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.path_nodes = 2;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = SolveConfig{};
    cfg.eps = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
