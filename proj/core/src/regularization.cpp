#include "fbp/regularization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace fbp {

double B_val(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double t = 1.0 / s - 1.0 / (1.0 - s);
    if (t > 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

namespace {

// B (1 - B) written with exp(-|t|) so it never overflows.
double logistic_weight(double t) {
    const double e = std::exp(-std::abs(t));
    return e / ((1.0 + e) * (1.0 + e));
}

}  // namespace

double beta_val(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double r = 1.0 - s;
    const double t = 1.0 / s - 1.0 / r;
    return (1.0 / (s * s) + 1.0 / (r * r)) * logistic_weight(t);
}

double beta_prime(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double r = 1.0 - s;
    const double t = 1.0 / s - 1.0 / r;
    const double w = logistic_weight(t);
    if (w == 0.0) return 0.0;
    const double q = 1.0 / (s * s) + 1.0 / (r * r);
    const double dq = -2.0 / (s * s * s) + 2.0 / (r * r * r);
    return dq * w + q * q * w * (1.0 - 2.0 * B_val(s));
}

namespace {

// Quintic Hermite table of the primitive of B on [0, 1] using B and beta as
// first and second derivatives.
class PrimitiveTable {
public:
    static constexpr int kIntervals = 4096;

    PrimitiveTable() {
        const double w = 1.0 / kIntervals;
        value_[0] = 0.0;
        for (int k = 0; k < kIntervals; ++k) {
            value_[static_cast<size_t>(k) + 1] =
                value_[static_cast<size_t>(k)] + gauss_legendre([](double s) { return B_val(s); }, k * w, (k + 1) * w, 1);
        }
        // The exact total is 1/2 by the symmetry B(s) + B(1 - s) = 1.
        const double drift = value_[kIntervals] - 0.5;
        for (int k = 0; k <= kIntervals; ++k) value_[static_cast<size_t>(k)] -= drift * k / kIntervals;
    }

    double operator()(double sigma) const {
        const double w = 1.0 / kIntervals;
        const int k = std::min(static_cast<int>(sigma * kIntervals), kIntervals - 1);
        const double s0 = k * w;
        const double s1 = (k + 1) * w;
        const double t = (sigma - s0) / w;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double t4 = t3 * t;
        const double t5 = t4 * t;
        const double h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        const double h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        const double h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        const double h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        const double h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        const double h5 = 0.5 * (t3 - 2.0 * t4 + t5);
        return value_[static_cast<size_t>(k)] * h0 + w * B_val(s0) * h1 + w * w * beta_val(s0) * h2 +
               value_[static_cast<size_t>(k) + 1] * h3 + w * B_val(s1) * h4 + w * w * beta_val(s1) * h5;
    }

private:
    std::array<double, kIntervals + 1> value_{};
};

const PrimitiveTable& primitive_table() {
    static const PrimitiveTable table;
    return table;
}

// Integral of f over [0, b] for integrands with an integrable power-type
// singularity at 0: dyadic panels towards the origin.
template <class F>
double dyadic_integral(F&& f, double b) {
    double total = 0.0;
    double hi = b;
    for (int level = 0; level < 60; ++level) {
        const double lo = 0.5 * hi;
        total += gauss_legendre(f, lo, hi, 1);
        hi = lo;
    }
    return total;
}

void require_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
}

void require_s(double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("g: s must be finite and nonnegative");
}

}  // namespace

double B_primitive(double sigma) {
    if (sigma <= 0.0) return 0.0;
    if (sigma >= 1.0) return sigma - 0.5;
    return primitive_table()(sigma);
}

MollifierSpec::MollifierSpec(double eps_) : eps(eps_) { require_eps(eps_); }

// ---------------------------------------------------------------------------
// NonlinearitySpec

namespace {

void check_certificate(double alpha_g, double beta_g, double m) {
    if (!(alpha_g >= 0.0) || !(beta_g >= 0.0) || !std::isfinite(alpha_g) || !std::isfinite(beta_g)) {
        throw std::invalid_argument("growth certificate: alpha and beta must be finite and nonnegative");
    }
    if (!(m > 1.0 && m < 2.0)) throw std::invalid_argument("growth exponent m must lie in (1, 2)");
}

}  // namespace

NonlinearitySpec NonlinearitySpec::constant(double a, double alpha_g, double beta_g, double m) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("constant nonlinearity: a must be positive");
    check_certificate(alpha_g, beta_g, m);
    NonlinearitySpec nl;
    nl.family_ = Family::constant;
    nl.a_ = a;
    nl.m_ = m;
    nl.alpha_g_ = alpha_g;
    nl.beta_g_ = beta_g;
    return nl;
}

NonlinearitySpec NonlinearitySpec::power(double m, double alpha_g, double beta_g) {
    check_certificate(alpha_g, beta_g, m);
    NonlinearitySpec nl;
    nl.family_ = Family::power;
    nl.m_ = m;
    nl.alpha_g_ = alpha_g;
    nl.beta_g_ = beta_g;
    nl.power_deficit_ = dyadic_integral([m](double t) { return (1.0 - B_val(t)) * std::pow(t, m - 1.0); }, 1.0);
    return nl;
}

NonlinearitySpec NonlinearitySpec::table(std::vector<double> knots, std::vector<double> values, double alpha_g,
                                         double beta_g, double m) {
    check_certificate(alpha_g, beta_g, m);
    if (knots.size() < 2 || knots.size() != values.size()) {
        throw std::invalid_argument("table nonlinearity: need at least two knots and one value per knot");
    }
    if (knots.front() != 0.0) throw std::invalid_argument("table nonlinearity: first knot must be 0");
    for (size_t k = 0; k < knots.size(); ++k) {
        if (!std::isfinite(knots[k]) || !std::isfinite(values[k])) throw std::invalid_argument("table nonlinearity: non-finite entry");
        if (k > 0 && !(knots[k] > knots[k - 1])) throw std::invalid_argument("table nonlinearity: knots must increase");
        if (values[k] < 0.0 || (k > 0 && values[k] <= 0.0)) {
            throw std::invalid_argument("table nonlinearity: g must be positive for s > 0");
        }
    }
    NonlinearitySpec nl;
    nl.family_ = Family::table;
    nl.m_ = m;
    nl.alpha_g_ = alpha_g;
    nl.beta_g_ = beta_g;
    nl.knots_ = std::move(knots);
    nl.values_ = std::move(values);
    return nl;
}

double NonlinearitySpec::g(double s) const {
    require_s(s);
    switch (family_) {
        case Family::constant:
            return a_;
        case Family::power:
            return s == 0.0 ? 0.0 : std::pow(s, m_ - 1.0);
        case Family::table: {
            if (s >= knots_.back()) return values_.back();
            const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
            const size_t k = static_cast<size_t>(it - knots_.begin()) - 1;
            const double t = (s - knots_[k]) / (knots_[k + 1] - knots_[k]);
            return values_[k] + t * (values_[k + 1] - values_[k]);
        }
    }
    return 0.0;
}

double NonlinearitySpec::g_prime(double s) const {
    require_s(s);
    switch (family_) {
        case Family::constant:
            return 0.0;
        case Family::power:
            return s == 0.0 ? 0.0 : (m_ - 1.0) * std::pow(s, m_ - 2.0);
        case Family::table: {
            if (s >= knots_.back()) return 0.0;
            const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
            const size_t k = static_cast<size_t>(it - knots_.begin()) - 1;
            return (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
        }
    }
    return 0.0;
}

double NonlinearitySpec::G(double s) const {
    require_s(s);
    switch (family_) {
        case Family::constant:
            return a_ * s;
        case Family::power:
            return std::pow(s, m_) / m_;
        case Family::table: {
            double total = 0.0;
            for (size_t k = 0; k + 1 < knots_.size() && knots_[k] < s; ++k) {
                const double hi = std::min(s, knots_[k + 1]);
                total += 0.5 * (hi - knots_[k]) * (values_[k] + g(hi));
            }
            if (s > knots_.back()) total += (s - knots_.back()) * values_.back();
            return total;
        }
    }
    return 0.0;
}

namespace {

// Integral of w(t) g(t) over [0, s] for the piecewise linear table, split at knots.
template <class W>
double table_weighted_integral(const NonlinearitySpec& nl, W&& weight, double s) {
    const auto& knots = nl.knots();
    double total = 0.0;
    double lo = 0.0;
    for (size_t k = 1; k <= knots.size() && lo < s; ++k) {
        const double hi = k < knots.size() ? std::min(s, knots[k]) : s;
        if (hi > lo) total += gauss_legendre([&](double t) { return weight(t) * nl.g(t); }, lo, hi, 4);
        lo = hi;
    }
    return total;
}

}  // namespace

double NonlinearitySpec::penalty_deficit(double eps) const {
    require_eps(eps);
    switch (family_) {
        case Family::constant:
            return a_ * eps * 0.5;
        case Family::power:
            return std::pow(eps, m_) * power_deficit_;
        case Family::table:
            return table_weighted_integral(*this, [eps](double t) { return 1.0 - B_val(t / eps); }, eps);
    }
    return 0.0;
}

double g_val(const NonlinearitySpec& nl, const Point&, double s) { return nl.g(s); }

double g_eps_val(const NonlinearitySpec& nl, const Point&, double s, double eps) {
    require_eps(eps);
    require_s(s);
    const double b = B_val(s / eps);
    return b == 0.0 ? 0.0 : b * nl.g(s);
}

double g_eps_prime(const NonlinearitySpec& nl, const Point&, double s, double eps) {
    require_eps(eps);
    require_s(s);
    const double b = B_val(s / eps);
    if (b == 0.0) return 0.0;
    return beta_val(s / eps) / eps * nl.g(s) + b * nl.g_prime(s);
}

double G_eps_val(const NonlinearitySpec& nl, const Point&, double s, double eps) {
    require_eps(eps);
    require_s(s);
    if (s == 0.0) return 0.0;
    if (s >= eps) return nl.G(s) - nl.penalty_deficit(eps);
    switch (nl.family()) {
        case NonlinearitySpec::Family::constant:
            return nl.a() * eps * B_primitive(s / eps);
        case NonlinearitySpec::Family::power: {
            const double m = nl.m();
            const double sigma = s / eps;
            return std::pow(eps, m) *
                   gauss_legendre([m](double t) { return B_val(t) * std::pow(t, m - 1.0); }, 0.0, sigma, 8);
        }
        case NonlinearitySpec::Family::table:
            return table_weighted_integral(nl, [eps](double t) { return B_val(t / eps); }, s);
    }
    return 0.0;
}

double G_val(const NonlinearitySpec& nl, const Point&, double s) { return nl.G(s); }

bool validate_growth(const NonlinearitySpec& nl, const std::vector<Point>& samples) {
    if (samples.empty()) return false;
    std::vector<double> lattice{0.0};
    for (int k = -60; k <= 30; ++k) lattice.push_back(std::pow(10.0, k / 10.0));
    for (const Point& x : samples) {
        for (double s : lattice) {
            const double g = g_val(nl, x, s);
            const double bound = nl.alpha_g() + nl.beta_g() * std::pow(s, nl.m() - 1.0);
            if (g > bound * (1.0 + 1e-12) + 1e-300) return false;
            if (s > 0.0 && !(g > 0.0)) return false;
        }
    }
    return true;
}

}  // namespace fbp
