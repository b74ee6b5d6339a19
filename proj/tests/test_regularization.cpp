#include <fbp/regularization.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using fbp::NonlinearitySpec;

// Independent oracle: composite Simpson on a fine uniform mesh.
template <class F>
double simpson(F&& f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

TEST(Regularization, SmoothStep) {
    EXPECT_NEAR(fbp::B_val(0.5), 0.5, 1e-12);
    EXPECT_EQ(fbp::B_val(0.0), 0.0);
    EXPECT_EQ(fbp::B_val(-3.0), 0.0);
    EXPECT_EQ(fbp::B_val(1.0), 1.0);
    EXPECT_EQ(fbp::B_val(7.0), 1.0);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double b = fbp::B_val(-0.5 + 2.0 * i / 1000.0);
        EXPECT_GE(b, prev);
        prev = b;
    }
    // symmetry B(s) + B(1 - s) = 1
    for (double s : {0.1, 0.27, 0.8}) EXPECT_NEAR(fbp::B_val(s) + fbp::B_val(1.0 - s), 1.0, 1e-15);
}

TEST(Regularization, Mollifier) {
    EXPECT_EQ(fbp::beta_val(-0.3), 0.0);
    EXPECT_EQ(fbp::beta_val(1.3), 0.0);
    EXPECT_NEAR(fbp::beta_val(0.5), 2.0, 1e-12);
    EXPECT_NEAR(simpson(fbp::beta_val, 0.0, 1.0), 1.0, 1e-10);
    for (int i = 1; i < 100; ++i) {
        const double s = i / 100.0;
        EXPECT_GE(fbp::beta_val(s), 0.0);
        EXPECT_LE(fbp::beta_val(s), 2.0 + 1e-12);
        const double h = 1e-6;
        EXPECT_NEAR(fbp::beta_val(s), (fbp::B_val(s + h) - fbp::B_val(s - h)) / (2 * h), 1e-6);
        EXPECT_NEAR(fbp::beta_prime(s), (fbp::beta_val(s + h) - fbp::beta_val(s - h)) / (2 * h), 1e-5);
    }
}

TEST(Regularization, SmoothStepPrimitive) {
    EXPECT_EQ(fbp::B_primitive(-1.0), 0.0);
    EXPECT_NEAR(fbp::B_primitive(1.0), 0.5, 1e-12);
    EXPECT_NEAR(fbp::B_primitive(3.0), 2.5, 1e-12);
    EXPECT_NEAR(fbp::B_primitive(0.3), simpson(fbp::B_val, 0.0, 0.3), 1e-10);
}

TEST(Regularization, MollifierSpec) {
    const fbp::MollifierSpec m(0.25);
    EXPECT_NEAR(m.indicator(1.125), 0.5, 1e-12);
    EXPECT_NEAR(m.penalty_derivative(1.125), 8.0, 1e-10);
    EXPECT_EQ(m.indicator(0.9), 0.0);
    EXPECT_THROW(fbp::MollifierSpec(0.0), std::invalid_argument);
}

TEST(Regularization, SourceTerms) {
    const fbp::Point x{0.3, -0.4, 0.9};
    const auto c1 = NonlinearitySpec::constant(1.0, 1.0);
    EXPECT_EQ(fbp::g_val(c1, x, 0.0), 1.0);
    EXPECT_EQ(fbp::g_val(c1, x, 17.0), 1.0);
    const auto p = NonlinearitySpec::power(1.5);
    EXPECT_NEAR(fbp::g_val(p, x, 4.0), 2.0, 1e-15);
    EXPECT_EQ(fbp::g_val(p, x, 0.0), 0.0);
    EXPECT_THROW(NonlinearitySpec::power(2.5), std::invalid_argument);

    const auto t = NonlinearitySpec::table({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0}, 3.0, 0.0);
    EXPECT_DOUBLE_EQ(t.g(0.5), 2.0);
    EXPECT_DOUBLE_EQ(t.g(5.0), 2.0);
    EXPECT_DOUBLE_EQ(t.G(2.0), 2.0 + 2.5);
    EXPECT_THROW(NonlinearitySpec::table({0.0, 1.0}, {1.0}, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(NonlinearitySpec::table({0.5, 1.0}, {1.0, 1.0}, 1.0, 0.0), std::invalid_argument);
}

TEST(Regularization, SmoothedSource) {
    const fbp::Point x{0.0, 0.0, 0.0};
    const double eps = 0.2;
    const auto c1 = NonlinearitySpec::constant(1.0, 1.0);
    const auto c2 = NonlinearitySpec::constant(2.0, 2.0);
    const auto p = NonlinearitySpec::power(1.5);
    EXPECT_EQ(fbp::g_eps_val(c1, x, 0.0, eps), 0.0);
    EXPECT_EQ(fbp::g_eps_val(p, x, 0.3, eps), fbp::g_val(p, x, 0.3));
    EXPECT_EQ(fbp::g_eps_val(c1, x, eps, eps), 1.0);
    EXPECT_NEAR(fbp::g_eps_val(c2, x, eps / 2, eps), 1.0, 1e-12);
    const double h = 1e-7;
    for (double s : {0.03, 0.1, 0.17, 0.5}) {
        EXPECT_NEAR(fbp::g_eps_prime(p, x, s, eps),
                    (fbp::g_eps_val(p, x, s + h, eps) - fbp::g_eps_val(p, x, s - h, eps)) / (2 * h), 1e-5);
    }
}

TEST(Regularization, SmoothedPrimitive) {
    const fbp::Point x{0.0, 0.0, 0.0};
    const double eps = 0.2;
    const auto c1 = NonlinearitySpec::constant(1.0, 1.0);
    EXPECT_EQ(fbp::G_eps_val(c1, x, 0.0, eps), 0.0);
    // kappa = int_0^1 (1 - B) by quadrature, compared with 1/2
    const double kappa = simpson([](double s) { return 1.0 - fbp::B_val(s); }, 0.0, 1.0);
    EXPECT_NEAR(kappa, 0.5, 1e-10);
    EXPECT_NEAR(fbp::G_eps_val(c1, x, 3.0, eps), 3.0 - eps * kappa, 1e-10);
    EXPECT_NEAR(fbp::G_val(c1, x, 3.0) - fbp::G_eps_val(c1, x, 3.0, eps), eps / 2, 1e-10);

    for (const auto& nl : {c1, NonlinearitySpec::power(1.5),
                           NonlinearitySpec::table({0.0, 0.05, 1.0}, {0.5, 2.0, 1.0}, 2.0, 0.0)}) {
        for (double s : {0.07, 0.15, 0.6, 2.0}) {
            const double q = simpson([&](double t) { return fbp::g_eps_val(nl, x, t, eps); }, 0.0, s);
            EXPECT_NEAR(fbp::G_eps_val(nl, x, s, eps), q, 1e-9);
            EXPECT_NEAR(fbp::G_val(nl, x, s), simpson([&](double t) { return fbp::g_val(nl, x, t); }, 0.0, s), 1e-7);
        }
    }

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        double a = U(rng);
        double b = U(rng);
        if (a > b) std::swap(a, b);
        EXPECT_GE(fbp::G_eps_val(c1, x, b, eps), fbp::G_eps_val(c1, x, a, eps));
    }
}

TEST(Regularization, GrowthCertificate) {
    EXPECT_TRUE(fbp::validate_growth(NonlinearitySpec::constant(3.0, 3.0)));
    EXPECT_FALSE(fbp::validate_growth(NonlinearitySpec::constant(3.0, 2.0)));
    EXPECT_TRUE(fbp::validate_growth(NonlinearitySpec::power(1.5, 0.0, 1.0)));
    EXPECT_FALSE(fbp::validate_growth(NonlinearitySpec::power(1.5, 0.0, 0.5)));
}

TEST(Regularization, GaussLegendre) {
    EXPECT_NEAR(fbp::gauss_legendre([](double s) { return s * s * s * s * s; }, 0.0, 2.0), 64.0 / 6.0, 1e-12);
    EXPECT_NEAR(fbp::gauss_legendre([](double s) { return std::exp(s); }, -1.0, 1.0), std::exp(1.0) - std::exp(-1.0),
                1e-13);
}

}  // namespace
