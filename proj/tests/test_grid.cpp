#include <fbp/grid.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace {

using fbp::BoxDomain;
using fbp::Grid;
using fbp::HorizontalOperators;
using fbp::Point;
using fbp::ScalarField;

Grid cube(int n, double lo = -1.0, double hi = 1.0) { return Grid(BoxDomain::cube(3, lo, hi), n); }

ScalarField random_compact(const Grid& g, std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField u(g.size());
    for (size_t k = 0; k < g.size(); ++k) {
        if (!g.is_boundary(k)) u[k] = U(rng);
    }
    return u;
}

TEST(Grid, Layout) {
    const Grid g(BoxDomain({0, 0}, {1, 2}), std::vector<int>{3, 5});
    EXPECT_EQ(g.size(), 15u);
    EXPECT_EQ(g.interior_count(), 3u);
    EXPECT_DOUBLE_EQ(g.spacing(0), 0.5);
    EXPECT_DOUBLE_EQ(g.spacing(1), 0.5);
    EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25);
    // last axis fastest
    EXPECT_EQ(g.node_at({1, 2}), 7u);
    EXPECT_EQ(g.axis_index(7, 0), 1);
    EXPECT_EQ(g.axis_index(7, 1), 2);
    EXPECT_EQ(g.point(7), (Point{0.5, 1.0}));
    EXPECT_TRUE(g.is_boundary(0));
    EXPECT_FALSE(g.is_boundary(7));
    EXPECT_EQ(g.depth(7), 1);
    EXPECT_THROW(Grid(BoxDomain::cube(2, 0, 1), 2), std::invalid_argument);
    EXPECT_THROW(BoxDomain({0}, {0}), std::invalid_argument);
}

TEST(Grid, ZOnLinearFields) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    const ScalarField x1 = fbp::sample(g, [](const Point& x) { return x[0]; });
    const ScalarField x3 = fbp::sample(g, [](const Point& x) { return x[2]; });
    const ScalarField z1x3 = ops.apply_z(0, x3);
    const ScalarField z1x1 = ops.apply_z(0, x1);
    const ScalarField z2x1 = ops.apply_z(1, x1);
    const ScalarField z1c = ops.apply_z(0, ScalarField(g.size(), 3.5));
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        const Point x = g.point(k);
        EXPECT_NEAR(z1x3[k], 2.0 * x[1], 1e-13);
        EXPECT_NEAR(z1x1[k], 1.0, 1e-13);
        EXPECT_NEAR(z2x1[k], 0.0, 1e-13);
        EXPECT_NEAR(z1c[k], 0.0, 1e-13);
    }
}

TEST(Grid, HorizontalGradient) {
    const Grid g = cube(9);
    const ScalarField x3 = fbp::sample(g, [](const Point& x) { return x[2]; });
    const auto grad = fbp::horizontal_gradient(fbp::heisenberg1(), g, x3);
    ASSERT_EQ(grad.dim(), 2u);
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        const Point x = g.point(k);
        EXPECT_NEAR(grad.components[0][k], 2.0 * x[1], 1e-13);
        EXPECT_NEAR(grad.components[1][k], -2.0 * x[0], 1e-13);
    }
    const auto zero = fbp::horizontal_gradient(fbp::heisenberg1(), g, ScalarField(g.size()));
    EXPECT_EQ(zero.components[0].max_abs(), 0.0);
    EXPECT_EQ(zero.components[1].max_abs(), 0.0);

    const Grid g2(BoxDomain::cube(2, 0, 1), 7);
    const ScalarField s = fbp::sample(g2, [](const Point& x) { return x[0] + x[1]; });
    const auto e = fbp::horizontal_gradient(fbp::euclidean(2), g2, s);
    for (size_t k = 0; k < g2.size(); ++k) {
        if (g2.is_boundary(k)) continue;
        EXPECT_NEAR(e.components[0][k], 1.0, 1e-13);
        EXPECT_NEAR(e.components[1][k], 1.0, 1e-13);
        EXPECT_NEAR(e.magnitude(k), std::sqrt(2.0), 1e-13);
    }
}

TEST(Grid, SubLaplacianExactOnQuadratics) {
    for (int n : {9, 17}) {
        const Grid g = cube(n);
        const HorizontalOperators ops(fbp::heisenberg1(), g);
        const ScalarField q = fbp::sample(g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; });
        const ScalarField x3 = fbp::sample(g, [](const Point& x) { return x[2]; });
        const ScalarField lq = ops.sub_laplacian(q);
        const ScalarField lx3 = ops.sub_laplacian(x3);
        const ScalarField lc = ops.sub_laplacian(ScalarField(g.size(), 2.0));
        for (size_t k = 0; k < g.size(); ++k) {
            if (g.depth(k) < 2) continue;
            EXPECT_NEAR(lq[k], 4.0, 1e-10);
            EXPECT_NEAR(lx3[k], 0.0, 1e-10);
            EXPECT_NEAR(lc[k], 0.0, 1e-10);
        }
        for (size_t k = 0; k < g.size(); ++k) {
            if (g.is_boundary(k)) {
                EXPECT_EQ(lq[k], 0.0);
            }
        }
    }
}

// L sin(x1 + x3) = -sin(x1 + x3) ((1 + 2 x2)^2 + 4 x1^2).
TEST(Grid, SubLaplacianConsistencyOrder) {
    double err[2] = {0.0, 0.0};
    int idx = 0;
    for (int n : {33, 65}) {
        const Grid g = cube(n);
        const ScalarField u = fbp::sample(g, [](const Point& x) { return std::sin(x[0] + x[2]); });
        const ScalarField lu = fbp::sub_laplacian(fbp::heisenberg1(), g, u);
        for (size_t k = 0; k < g.size(); ++k) {
            if (g.depth(k) < 2) continue;
            const Point x = g.point(k);
            const double exact = -std::sin(x[0] + x[2]) * ((1 + 2 * x[1]) * (1 + 2 * x[1]) + 4 * x[0] * x[0]);
            err[idx] = std::max(err[idx], std::abs(lu[k] - exact));
        }
        ++idx;
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
}

TEST(Grid, NegativeSubLaplacianIsPositiveDefinite) {
    const Grid g = cube(9);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    std::mt19937 rng(3);
    for (int t = 0; t < 100; ++t) {
        const ScalarField u = random_compact(g, rng);
        EXPECT_GT(-fbp::inner_product(g, ops.sub_laplacian(u), u), 0.0);
    }
}

TEST(Grid, SummationByParts) {
    const Grid g = cube(17);
    const HorizontalOperators ops(fbp::heisenberg1(), g);
    std::mt19937 rng(5);
    for (int t = 0; t < 20; ++t) {
        const ScalarField u = random_compact(g, rng);
        const ScalarField v = random_compact(g, rng);
        const double lhs = fbp::inner_product(g, ops.sub_laplacian(u), v);
        const double rhs = ops.dirichlet_pairing(u, v);
        const double scale = std::sqrt(fbp::inner_product(g, u, u) * fbp::inner_product(g, v, v));
        EXPECT_LE(std::abs(lhs + rhs), 1e-12 * scale);
        EXPECT_NEAR(fbp::gradient_pairing(g, ops.gradient(u), ops.gradient(v)), rhs, 1e-10 * std::abs(rhs) + 1e-14);
    }
}

TEST(Grid, Integration) {
    const Grid unit = cube(33, 0.0, 1.0);
    EXPECT_NEAR(fbp::integrate(unit, ScalarField(unit.size(), 1.0)), 1.0, 3.0 / 32.0);
    EXPECT_EQ(fbp::integrate(unit, ScalarField(unit.size())), 0.0);
    const Grid fine = cube(65, 0.0, 1.0);
    const ScalarField x1 = fbp::sample(fine, [](const Point& x) { return x[0]; });
    // boundary weight 0: (63 / 128) (63 / 64)^2, within O(h) of 1/2
    EXPECT_NEAR(fbp::integrate(fine, x1), 63.0 / 128.0 * (63.0 / 64.0) * (63.0 / 64.0), 1e-12);
    EXPECT_NEAR(fbp::integrate(fine, x1), 0.5, 2.0 / 64.0);
}

TEST(Grid, InnerProduct) {
    const Grid g = cube(11);
    std::mt19937 rng(9);
    for (int t = 0; t < 10; ++t) {
        const ScalarField f = random_compact(g, rng);
        EXPECT_GE(fbp::inner_product(g, f, f), 0.0);
    }
    const ScalarField one(g.size(), 1.0);
    EXPECT_NEAR(fbp::inner_product(g, one, one), g.interior_volume(), 1e-12);
    const ScalarField x1 = fbp::sample(g, [](const Point& x) { return x[0]; });
    const ScalarField x2 = fbp::sample(g, [](const Point& x) { return x[1]; });
    EXPECT_NEAR(fbp::inner_product(g, x1, x2), 0.0, 1e-10);
}

TEST(Grid, CompensatedSum) {
    fbp::CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-16);
    s.add(-1.0);
    EXPECT_NEAR(s.value(), 1e-13, 1e-18);
}

TEST(Grid, FieldArithmetic) {
    ScalarField a(std::vector<double>{1, -2, 3});
    const ScalarField b(std::vector<double>{0.5, 0.5, 0.5});
    EXPECT_EQ(a.max(), 3.0);
    EXPECT_EQ(a.min(), -2.0);
    EXPECT_EQ(a.max_abs(), 3.0);
    EXPECT_EQ((a + b)[1], -1.5);
    EXPECT_EQ((a - b)[0], 0.5);
    EXPECT_EQ((2.0 * a)[2], 6.0);
    a.axpy(-2.0, b);
    EXPECT_EQ(a[0], 0.0);
}

TEST(Grid, ZeroTrace) {
    const Grid g = cube(5);
    const ScalarField u = fbp::with_zero_trace(g, ScalarField(g.size(), 1.0));
    EXPECT_TRUE(fbp::has_zero_trace(g, u));
    EXPECT_FALSE(fbp::has_zero_trace(g, ScalarField(g.size(), 1.0)));
    EXPECT_EQ(fbp::integrate(g, u), g.interior_volume());
}

TEST(Grid, InterpolationIsExactOnMultilinearFields) {
    const Grid coarse = cube(9);
    const Grid fine = cube(17);
    auto f = [](const Point& x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2] - x[0] * x[1] * x[2]; };
    const ScalarField u = fbp::interpolate(coarse, fbp::sample(coarse, f), fine);
    for (size_t k = 0; k < fine.size(); ++k) EXPECT_NEAR(u[k], f(fine.point(k)), 1e-13);
    EXPECT_THROW(fbp::interpolate(coarse, ScalarField(3), fine), std::invalid_argument);
}

TEST(Grid, CsvRoundTrip) {
    const Grid g(BoxDomain({-1, 0, 2}, {1, 0.5, 3}), std::vector<int>{5, 3, 4});
    std::mt19937 rng(1);
    const ScalarField u = random_compact(g, rng);
    std::stringstream ss;
    fbp::write_field_csv(ss, g, u);
    const auto back = fbp::read_field_csv(ss);
    EXPECT_TRUE(back.grid == g);
    EXPECT_EQ(back.values, u);

    std::istringstream bad("x1,value\n0,1\n1,abc\n");
    EXPECT_THROW(fbp::read_field_csv(bad), std::runtime_error);
}

TEST(Grid, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        EXPECT_EQ(std::stod(fbp::format_double(v)), v);
    }
}

}  // namespace
