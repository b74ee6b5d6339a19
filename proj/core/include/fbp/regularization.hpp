#pragma once

#include <vector>

#include "fbp/carnot_group.hpp"

namespace fbp {

/// Smooth step B(s) = phi(s) / (phi(s) + phi(1 - s)) with phi(t) = exp(-1/t) for
/// t > 0 and 0 otherwise. B = 0 for s <= 0, B = 1 for s >= 1.
double B_val(double s);
/// beta = B', supported in [0, 1] with maximum 2 at s = 1/2.
double beta_val(double s);
/// beta'.
double beta_prime(double s);
/// Integral of B over [0, sigma]; equals sigma - 1/2 for sigma >= 1, 0 for sigma <= 0.
double B_primitive(double sigma);

/// Penalized mollifier evaluations at scale eps.
struct MollifierSpec {
    double eps = 1.0;

    explicit MollifierSpec(double eps_);
    /// B((u - 1) / eps)
    double indicator(double u) const { return B_val((u - 1.0) / eps); }
    /// beta((u - 1) / eps) / eps
    double penalty_derivative(double u) const { return beta_val((u - 1.0) / eps) / eps; }
};

/// The source term g(x, s) together with its growth certificate
/// g(x, s) <= alpha_g + beta_g * s^(m - 1).
class NonlinearitySpec {
public:
    enum class Family { constant, power, table };

    /// g = a.
    static NonlinearitySpec constant(double a, double alpha_g, double beta_g = 0.0, double m = 1.5);
    /// g = s^(m - 1), 1 < m < 2.
    static NonlinearitySpec power(double m, double alpha_g = 0.0, double beta_g = 1.0);
    /// x-independent g given at increasing knots s_k (s_0 = 0), piecewise linear,
    /// constant beyond the last knot.
    static NonlinearitySpec table(std::vector<double> knots, std::vector<double> values, double alpha_g,
                                  double beta_g, double m = 1.5);

    Family family() const { return family_; }
    double a() const { return a_; }
    double m() const { return m_; }
    double alpha_g() const { return alpha_g_; }
    double beta_g() const { return beta_g_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

    /// g(x, s) for s >= 0.
    double g(double s) const;
    /// dg/ds; zero at s = 0 for the power family by convention.
    double g_prime(double s) const;
    /// G(s) = integral of g over [0, s].
    double G(double s) const;
    /// Integral of (1 - B(t / eps)) g(t) over [0, eps].
    double penalty_deficit(double eps) const;

private:
    NonlinearitySpec() = default;

    Family family_ = Family::constant;
    double a_ = 1.0;
    double m_ = 1.5;
    double alpha_g_ = 0.0;
    double beta_g_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> values_;
    double power_deficit_ = 0.0;  // integral of (1 - B) t^(m-1) over [0, 1]
};

double g_val(const NonlinearitySpec& nl, const Point& x, double s);
/// B(s / eps) g(x, s)
double g_eps_val(const NonlinearitySpec& nl, const Point& x, double s, double eps);
/// d/ds of g_eps_val.
double g_eps_prime(const NonlinearitySpec& nl, const Point& x, double s, double eps);
/// Integral of g_eps over [0, s].
double G_eps_val(const NonlinearitySpec& nl, const Point& x, double s, double eps);
/// Integral of g over [0, s].
double G_val(const NonlinearitySpec& nl, const Point& x, double s);

/// Checks the growth certificate on a log-spaced s-lattice in [0, 1e3] at each sample point.
bool validate_growth(const NonlinearitySpec& nl, const std::vector<Point>& samples = {Point{}});

/// Composite Gauss-Legendre quadrature of f over [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b, int panels = 16);

}  // namespace fbp

#include "fbp/detail/gauss_legendre.hpp"
