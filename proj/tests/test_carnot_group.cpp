#include <fbp/carnot_group.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using fbp::GroupSpec;
using fbp::Point;

TEST(CarnotGroup, HeisenbergStructure) {
    const GroupSpec h = fbp::heisenberg1();
    EXPECT_EQ(h.ambient_dim(), 3);
    EXPECT_EQ(h.horizontal_dim(), 2);
    EXPECT_EQ(h.homogeneous_dim(), 4);
    EXPECT_EQ(h.strata_sizes(), (std::vector<int>{2, 1}));
    EXPECT_EQ(h.dilation_exponents(), (std::vector<int>{1, 1, 2}));
    const Point x{0.3, -1.7, 2.5};
    EXPECT_DOUBLE_EQ(h.coefficient(0, 2, x), 2.0 * -1.7);
    EXPECT_DOUBLE_EQ(h.coefficient(1, 2, x), -2.0 * 0.3);
    EXPECT_DOUBLE_EQ(h.coefficient(0, 0, x), 1.0);
    EXPECT_DOUBLE_EQ(h.coefficient(1, 1, x), 1.0);
    EXPECT_DOUBLE_EQ(h.coefficient(0, 1, x), 0.0);
}

TEST(CarnotGroup, EuclideanStructure) {
    EXPECT_EQ(fbp::euclidean(2).homogeneous_dim(), 2);
    const GroupSpec e = fbp::euclidean(3);
    const Point x{4.0, -2.0, 9.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(e.coefficient(i, j, x), i == j ? 1.0 : 0.0);
    }
    EXPECT_THROW(fbp::euclidean(0), std::invalid_argument);
    EXPECT_DOUBLE_EQ(fbp::dilate(fbp::euclidean(1), 3.0, {2.0})[0], 6.0);
}

TEST(CarnotGroup, GroupLookup) {
    EXPECT_EQ(fbp::group_by_name("heisenberg1").homogeneous_dim(), 4);
    EXPECT_EQ(fbp::group_by_name("euclidean3").ambient_dim(), 3);
    EXPECT_THROW(fbp::group_by_name("heisenberg7"), std::invalid_argument);
}

TEST(CarnotGroup, Dilations) {
    const GroupSpec h = fbp::heisenberg1();
    EXPECT_EQ(fbp::dilate(h, 2.0, {1, 1, 1}), (Point{2, 2, 4}));
    EXPECT_EQ(fbp::dilate(h, 0.5, {2, 0, 4}), (Point{1, 0, 1}));
    const Point x{0.7, -0.2, 1.9};
    EXPECT_EQ(fbp::dilate(h, 1.0, x), x);
    EXPECT_THROW(fbp::dilate(h, 0.0, x), std::invalid_argument);
    EXPECT_THROW(fbp::dilate(h, -1.0, x), std::invalid_argument);

    const Point a = fbp::dilate(h, 3.0, fbp::dilate(h, 0.25, x));
    const Point b = fbp::dilate(h, 0.75, x);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-15 * (1 + std::abs(b[k])));
}

// Volume of the image of a box: the dilation is diagonal, so the image is a box.
TEST(CarnotGroup, HaarScaling) {
    const GroupSpec h = fbp::heisenberg1();
    const Point lo{-0.3, 0.1, -1.2};
    const Point hi{0.9, 0.5, 0.4};
    auto volume = [](const Point& a, const Point& b) {
        double v = 1.0;
        for (size_t k = 0; k < a.size(); ++k) v *= b[k] - a[k];
        return v;
    };
    for (double d : {0.5, 2.0, 3.0}) {
        const double scaled = volume(fbp::dilate(h, d, lo), fbp::dilate(h, d, hi));
        EXPECT_NEAR(scaled / (std::pow(d, h.homogeneous_dim()) * volume(lo, hi)), 1.0, 1e-12);
    }
}

TEST(CarnotGroup, Brackets) {
    const GroupSpec h = fbp::heisenberg1();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int t = 0; t < 10; ++t) {
        const Point x{U(rng), U(rng), U(rng)};
        EXPECT_EQ(fbp::lie_bracket(h, 0, 1, x), (std::vector<double>{0, 0, -4}));
        EXPECT_EQ(fbp::lie_bracket(h, 1, 0, x), (std::vector<double>{0, 0, 4}));
        EXPECT_EQ(fbp::lie_bracket(h, 0, 0, x), (std::vector<double>{0, 0, 0}));
    }
    EXPECT_EQ(fbp::lie_bracket(fbp::euclidean(3), 0, 1, {1, 2, 3}), (std::vector<double>{0, 0, 0}));
    EXPECT_THROW(fbp::lie_bracket(h, 0, 2, {0, 0, 0}), std::out_of_range);
}

// [Z1, Z2] f = Z1 Z2 f - Z2 Z1 f on f = x1 x3 + x2^2 x3, expanded by hand:
// Z1 f = x3 + 2 x2 (x1 + x2^2), Z2 f = 2 x2 x3 - 2 x1 (x1 + x2^2),
// Z1 Z2 f = 4 x2^2 - 4 x1 - 2 x2^2 = 2 x2^2 - 4 x1, Z2 Z1 f = -2 x1 + 2 x1 + 6 x2^2 = 6 x2^2
// so [Z1, Z2] f = -4 x2^2 - 4 x1 = -4 d3 f.
TEST(CarnotGroup, BracketMatchesHandExpansion) {
    const Point x{0.4, -1.1, 2.0};
    const double d3f = x[0] + x[1] * x[1];
    const auto c = fbp::lie_bracket(fbp::heisenberg1(), 0, 1, x);
    EXPECT_DOUBLE_EQ(c[2] * d3f, -4.0 * x[1] * x[1] - 4.0 * x[0]);
}

TEST(CarnotGroup, Hormander) {
    std::vector<Point> lattice;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 5; ++k) lattice.push_back({-1.0 + 0.5 * i, -1.0 + 0.5 * j, -1.0 + 0.5 * k});
    EXPECT_TRUE(fbp::validate_hormander(fbp::heisenberg1(), lattice).ok);
    EXPECT_TRUE(fbp::validate_hormander(fbp::heisenberg1(), {{0, 0, 0}}).ok);
    EXPECT_TRUE(fbp::validate_hormander(fbp::euclidean(3), {{5, -2, 1}}).ok);

    // Z2 = Z1 on R^2: rank 1.
    GroupSpec::Data d;
    d.name = "degenerate";
    d.strata_sizes = {2};
    d.dilation_exponents = {1, 1};
    fbp::VectorField z{fbp::Polynomial::constant(2, 1.0), fbp::Polynomial::constant(2, 0.0)};
    d.horizontal_fields = {z, z};
    const GroupSpec bad(d, GroupSpec::Check::none);
    const auto rep = fbp::validate_hormander(bad, {{0.2, 0.3}});
    EXPECT_FALSE(rep.ok);
    EXPECT_EQ(rep.min_rank, 1);
    ASSERT_TRUE(rep.offending_point.has_value());
}

TEST(CarnotGroup, RejectsCoefficientDependingOnOwnAxis) {
    GroupSpec::Data d;
    d.name = "bad";
    d.strata_sizes = {1};
    d.dilation_exponents = {1};
    fbp::Polynomial a = fbp::Polynomial::constant(1, 1.0);
    a.add_term(1.0, {1});
    d.horizontal_fields = {{a}};
    EXPECT_THROW(GroupSpec{d}, std::invalid_argument);
}

TEST(CarnotGroup, KoranyiGauge) {
    const GroupSpec h = fbp::heisenberg1();
    EXPECT_DOUBLE_EQ(fbp::koranyi_gauge(h, {1, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(fbp::koranyi_gauge(h, {0, 0, 1}), 1.0);
    const Point x{1, 1, 1};
    EXPECT_NEAR(fbp::koranyi_gauge(h, fbp::dilate(h, 3.0, x)), 3.0 * fbp::koranyi_gauge(h, x), 1e-12);
    EXPECT_THROW(fbp::koranyi_gauge(fbp::euclidean(3), x), std::invalid_argument);
}

TEST(CarnotGroup, GaugeDistanceIsLeftInvariant) {
    const GroupSpec h = fbp::heisenberg1();
    const Point p{0.5, -0.25, 0.75};
    EXPECT_DOUBLE_EQ(fbp::gauge_distance(h, p, p), 0.0);
    EXPECT_DOUBLE_EQ(fbp::gauge_distance(h, {0, 0, 0}, {0, 0, 1}), 1.0);
    // p^{-1} q with q = p * (1, 0, 0): the group law adds 2 (x' y - x y') to t.
    const Point q{p[0] + 1.0, p[1], p[2] + 2.0 * (1.0 * p[1] - p[0] * 0.0)};
    EXPECT_NEAR(fbp::gauge_distance(h, p, q), 1.0, 1e-14);
    EXPECT_NEAR(fbp::gauge_distance(fbp::euclidean(2), {0, 0}, {3, 4}), 5.0, 1e-14);
}

}  // namespace
