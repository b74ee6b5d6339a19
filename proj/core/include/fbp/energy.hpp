#pragma once

#include "fbp/grid.hpp"
#include "fbp/regularization.hpp"

namespace fbp {

/// total = dirichlet + indicator - potential. The potential term already
/// carries the factor lambda.
struct EnergyBreakdown {
    double dirichlet = 0.0;
    double indicator = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double lambda = 0.0;
};

/// The smoothed functional
///   E_eps(u) = int |grad_G u|^2 / 2 + B((u - 1) / eps) - lambda G_eps(x, (u - 1)_+)
/// on a fixed grid, with its gradient (the residual of the approximate problem)
/// and the action of its second variation. Fields must vanish on the boundary.
class SmoothedEnergy {
public:
    SmoothedEnergy(const HorizontalOperators& ops, NonlinearitySpec nl, double lambda, double eps);

    const HorizontalOperators& operators() const { return *ops_; }
    const Grid& grid() const { return ops_->grid(); }
    const NonlinearitySpec& nonlinearity() const { return nl_; }
    double lambda() const { return lambda_; }
    double eps() const { return eps_; }

    EnergyBreakdown energy(const ScalarField& u) const;
    /// R(u) = -L u + beta((u - 1) / eps) / eps - lambda g_eps(x, (u - 1)_+) on
    /// interior nodes, 0 on the boundary. dE/du(node) = cell_volume * R(node).
    ScalarField residual(const ScalarField& u) const;
    double first_variation(const ScalarField& u, const ScalarField& v) const;
    /// Diagonal of the nonlinear part of the second variation at u.
    ScalarField curvature(const ScalarField& u) const;
    /// out = -L v + curvature * v (interior), 0 on the boundary.
    void hessian_apply(const ScalarField& curvature, std::span<const double> v, std::span<double> out) const;

private:
    void check(const ScalarField& u) const;

    const HorizontalOperators* ops_;
    NonlinearitySpec nl_;
    double lambda_;
    double eps_;
};

/// Limit functional E(u) = int |grad_G u|^2 / 2 + chi_{u > 1} - lambda G(x, (u - 1)_+).
EnergyBreakdown energy_limit(const ScalarField& u, double lambda, const NonlinearitySpec& nl,
                             const HorizontalOperators& ops);

EnergyBreakdown energy_eps(const ScalarField& u, double eps, double lambda, const NonlinearitySpec& nl,
                           const Grid& grid, const GroupSpec& spec);
EnergyBreakdown energy_limit(const ScalarField& u, double lambda, const NonlinearitySpec& nl, const Grid& grid,
                             const GroupSpec& spec);
ScalarField residual_eps(const ScalarField& u, double eps, double lambda, const NonlinearitySpec& nl,
                         const Grid& grid, const GroupSpec& spec);
double first_variation(const ScalarField& u, const ScalarField& v, double eps, double lambda,
                       const NonlinearitySpec& nl, const Grid& grid, const GroupSpec& spec);

}  // namespace fbp
