#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace fbp {

namespace detail {

inline constexpr int kGaussPoints = 20;

struct GaussRule {
    std::array<double, kGaussPoints> nodes{};
    std::array<double, kGaussPoints> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        GaussRule r;
        const int n = kGaussPoints;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            r.nodes[static_cast<size_t>(i)] = x;
            r.weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

}  // namespace detail

template <class F>
double gauss_legendre(F&& f, double a, double b, int panels) {
    const auto& rule = detail::gauss_rule();
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        double s = 0.0;
        for (int i = 0; i < detail::kGaussPoints; ++i) {
            s += rule.weights[static_cast<size_t>(i)] * f(mid + 0.5 * width * rule.nodes[static_cast<size_t>(i)]);
        }
        total += 0.5 * width * s;
    }
    return total;
}

}  // namespace fbp
