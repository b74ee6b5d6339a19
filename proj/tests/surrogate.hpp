#pragma once

#include <fbp/linear_algebra.hpp>
#include <fbp/solvers.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

namespace fbp::testing {

// e(a, b) = (a^2 - 1)^2 + b^2 on the span of two orthonormal fields, plus
// half the squared norm of the component orthogonal to them.
struct Surrogate {
    static double e(double a, double b) { return (a * a - 1) * (a * a - 1) + b * b; }

    explicit Surrogate(size_t n = 64) : phi1(n), phi2(n) {
        for (size_t k = 0; k < n; ++k) {
            phi1[k] = std::sin(0.7 * static_cast<double>(k) + 0.3);
            phi2[k] = std::cos(1.9 * static_cast<double>(k) - 0.5);
        }
        normalize(phi1);
        phi2.axpy(-fbp::dot(phi1.span(), phi2.span()), phi1);
        normalize(phi2);
    }

    ScalarField at(double a, double b) const { return a * phi1 + b * phi2; }

    Landscape landscape() const {
        Landscape L;
        L.energy = [this](const ScalarField& u) {
            const double a = fbp::dot(u.span(), phi1.span());
            const double b = fbp::dot(u.span(), phi2.span());
            const ScalarField perp = u - at(a, b);
            return e(a, b) + 0.5 * fbp::dot(perp.span(), perp.span());
        };
        L.residual = [this](const ScalarField& u) {
            const double a = fbp::dot(u.span(), phi1.span());
            const double b = fbp::dot(u.span(), phi2.span());
            ScalarField g = u - at(a, b);
            g.axpy(4 * a * (a * a - 1), phi1);
            g.axpy(2 * b, phi2);
            return g;
        };
        L.precondition = [](const ScalarField& r) { return r; };
        L.inner = [](const ScalarField& x, const ScalarField& y) { return fbp::dot(x.span(), y.span()); };
        return L;
    }

    ScalarField phi1;
    ScalarField phi2;

private:
    static void normalize(ScalarField& f) { f *= 1.0 / std::sqrt(fbp::dot(f.span(), f.span())); }
};

// Smallest possible maximum of f along a 4-connected lattice path between two
// nodes of an m x m grid on [lo, hi]^2 (bottleneck Dijkstra).
inline double lattice_minimax(const std::function<double(double, double)>& f, int m, double lo, double hi,
                              double a0, double b0, double a1, double b1) {
    const double h = (hi - lo) / (m - 1);
    auto index = [&](double a, double b) {
        const int i = static_cast<int>(std::lround((a - lo) / h));
        const int j = static_cast<int>(std::lround((b - lo) / h));
        return i * m + j;
    };
    std::vector<double> value(static_cast<size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) value[static_cast<size_t>(i * m + j)] = f(lo + i * h, lo + j * h);
    std::vector<double> best(value.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    const int src = index(a0, b0);
    const int dst = index(a1, b1);
    best[static_cast<size_t>(src)] = value[static_cast<size_t>(src)];
    queue.push({best[static_cast<size_t>(src)], src});
    while (!queue.empty()) {
        const auto [c, node] = queue.top();
        queue.pop();
        if (c > best[static_cast<size_t>(node)]) continue;
        if (node == dst) return c;
        const int i = node / m;
        const int j = node % m;
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int ii = i + di[d];
            const int jj = j + dj[d];
            if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
            const int nb = ii * m + jj;
            const double nc = std::max(c, value[static_cast<size_t>(nb)]);
            if (nc < best[static_cast<size_t>(nb)]) {
                best[static_cast<size_t>(nb)] = nc;
                queue.push({nc, nb});
            }
        }
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace fbp::testing
