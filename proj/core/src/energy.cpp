#include "fbp/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace fbp {

namespace {

const Point kNoPoint{};

void check_field(const Grid& grid, const ScalarField& u) {
    if (u.size() != grid.size()) throw std::invalid_argument("field does not match the grid");
    if (!has_zero_trace(grid, u)) throw std::invalid_argument("field must vanish on the boundary");
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
}

double dirichlet_half(const HorizontalOperators& ops, const ScalarField& u) {
    const HorizontalField g = ops.gradient(u);
    return 0.5 * gradient_pairing(ops.grid(), g, g);
}

}  // namespace

SmoothedEnergy::SmoothedEnergy(const HorizontalOperators& ops, NonlinearitySpec nl, double lambda, double eps)
    : ops_(&ops), nl_(std::move(nl)), lambda_(lambda), eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
    check_lambda(lambda);
}

void SmoothedEnergy::check(const ScalarField& u) const { check_field(grid(), u); }

EnergyBreakdown SmoothedEnergy::energy(const ScalarField& u) const {
    check(u);
    const Grid& g = grid();
    CompensatedSum indicator;
    CompensatedSum potential;
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        indicator.add(B_val((u[k] - 1.0) / eps_));
        if (u[k] > 1.0) potential.add(G_eps_val(nl_, kNoPoint, u[k] - 1.0, eps_));
    }
    EnergyBreakdown e;
    e.lambda = lambda_;
    e.dirichlet = dirichlet_half(*ops_, u);
    e.indicator = indicator.value() * g.cell_volume();
    e.potential = lambda_ * potential.value() * g.cell_volume();
    e.total = e.dirichlet + e.indicator - e.potential;
    return e;
}

ScalarField SmoothedEnergy::residual(const ScalarField& u) const {
    check(u);
    const Grid& g = grid();
    ScalarField r = ops_->sub_laplacian(u);
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        double v = -r[k];
        const double w = (u[k] - 1.0) / eps_;
        if (w > 0.0) {
            v += beta_val(w) / eps_;
            v -= lambda_ * g_eps_val(nl_, kNoPoint, u[k] - 1.0, eps_);
        }
        r[k] = v;
    }
    return r;
}

double SmoothedEnergy::first_variation(const ScalarField& u, const ScalarField& v) const {
    check(u);
    check(v);
    const Grid& g = grid();
    const double grad = gradient_pairing(g, ops_->gradient(u), ops_->gradient(v));
    CompensatedSum s;
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k) || !(u[k] > 1.0)) continue;
        const double w = (u[k] - 1.0) / eps_;
        s.add((beta_val(w) / eps_ - lambda_ * g_eps_val(nl_, kNoPoint, u[k] - 1.0, eps_)) * v[k]);
    }
    return grad + s.value() * g.cell_volume();
}

ScalarField SmoothedEnergy::curvature(const ScalarField& u) const {
    const Grid& g = grid();
    ScalarField c(g.size());
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k) || !(u[k] > 1.0)) continue;
        const double w = (u[k] - 1.0) / eps_;
        c[k] = beta_prime(w) / (eps_ * eps_) - lambda_ * g_eps_prime(nl_, kNoPoint, u[k] - 1.0, eps_);
    }
    return c;
}

void SmoothedEnergy::hessian_apply(const ScalarField& curvature, std::span<const double> v, std::span<double> out) const {
    ops_->sub_laplacian(v, out);
    const Grid& g = grid();
    for (size_t k = 0; k < g.size(); ++k) out[k] = g.is_boundary(k) ? 0.0 : -out[k] + curvature[k] * v[k];
}

EnergyBreakdown energy_limit(const ScalarField& u, double lambda, const NonlinearitySpec& nl,
                             const HorizontalOperators& ops) {
    check_lambda(lambda);
    const Grid& g = ops.grid();
    check_field(g, u);
    CompensatedSum potential;
    size_t above = 0;
    for (size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k) || !(u[k] > 1.0)) continue;
        ++above;
        potential.add(G_val(nl, kNoPoint, u[k] - 1.0));
    }
    EnergyBreakdown e;
    e.lambda = lambda;
    e.dirichlet = dirichlet_half(ops, u);
    e.indicator = static_cast<double>(above) * g.cell_volume();
    e.potential = lambda * potential.value() * g.cell_volume();
    e.total = e.dirichlet + e.indicator - e.potential;
    return e;
}

EnergyBreakdown energy_eps(const ScalarField& u, double eps, double lambda, const NonlinearitySpec& nl,
                           const Grid& grid, const GroupSpec& spec) {
    const HorizontalOperators ops(spec, grid);
    return SmoothedEnergy(ops, nl, lambda, eps).energy(u);
}

EnergyBreakdown energy_limit(const ScalarField& u, double lambda, const NonlinearitySpec& nl, const Grid& grid,
                             const GroupSpec& spec) {
    const HorizontalOperators ops(spec, grid);
    return energy_limit(u, lambda, nl, ops);
}

ScalarField residual_eps(const ScalarField& u, double eps, double lambda, const NonlinearitySpec& nl,
                         const Grid& grid, const GroupSpec& spec) {
    const HorizontalOperators ops(spec, grid);
    return SmoothedEnergy(ops, nl, lambda, eps).residual(u);
}

double first_variation(const ScalarField& u, const ScalarField& v, double eps, double lambda,
                       const NonlinearitySpec& nl, const Grid& grid, const GroupSpec& spec) {
    const HorizontalOperators ops(spec, grid);
    return SmoothedEnergy(ops, nl, lambda, eps).first_variation(u, v);
}

}  // namespace fbp
