#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/energy.hpp"

namespace fbp {

struct SolveConfig {
    double lambda = 1.0;
    double eps = 0.1;
    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
    /// Convergence threshold on max |R|.
    double descent_tol = 1e-8;
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
    int max_outer_iter = 500;
    /// Total number of path nodes, endpoints included.
    int path_nodes = 17;
    int mp_max_iter = 400;
    int newton_max_iter = 60;
    /// Called after each path iteration with (iteration, peak energy, peak residual).
    std::function<void(int, double, double)> progress;

    void validate() const;
};

/// Thrown when an iterative solver exhausts its budget.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No amplitude of the trial bump reaches negative energy.
class InoperableLambda : public SolverError {
public:
    using SolverError::SolverError;
};

struct LinearSolveInfo {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Solves -L u = rhs on interior nodes with u = 0 on the boundary by
/// IC(0)-preconditioned conjugate gradients. Throws SolverError if the
/// relative residual does not reach cfg.cg_tol within cfg.cg_max_iter.
ScalarField solve_linear(const ScalarField& rhs, const HorizontalOperators& ops, const SolveConfig& cfg,
                         LinearSolveInfo* info = nullptr, const ScalarField* initial = nullptr);
ScalarField solve_linear(const ScalarField& rhs, const Grid& grid, const GroupSpec& spec, const SolveConfig& cfg);
/// Same problem with the boundary values of `boundary` imposed as Dirichlet data.
ScalarField solve_linear_dirichlet(const ScalarField& rhs, const ScalarField& boundary, const HorizontalOperators& ops,
                                   const SolveConfig& cfg);

/// Solution of -L phi0 = lambda * A0 with zero boundary values.
ScalarField barrier_phi0(double A0, double lambda, const HorizontalOperators& ops, const SolveConfig& cfg);
ScalarField barrier_phi0(double A0, double lambda, const Grid& grid, const GroupSpec& spec, const SolveConfig& cfg);
/// 1.1 * max over interior nodes of g_eps(x, (u - 1)_+), raised to the value at
/// the top of the barrier's own range when that is larger.
double barrier_constant(const SmoothedEnergy& energy, const ScalarField& u, const SolveConfig& cfg);

struct DescentResult {
    ScalarField u;
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
    std::vector<double> energies;
};

/// Sobolev-preconditioned steepest descent with Armijo backtracking on E_eps.
DescentResult minimize_energy(const ScalarField& u0, const SmoothedEnergy& energy, const SolveConfig& cfg);

/// Smooth bump equal to 1 on the middle third of the box and 0 on its faces.
ScalarField trial_bump(const Grid& grid);
/// First t * bump with t = 2, 4, ..., 2^16 and E_eps < 0. Throws InoperableLambda
/// when none is found.
ScalarField find_negative_endpoint(const SmoothedEnergy& energy);

/// An energy landscape for the path search: value, gradient in the working
/// metric, and the metric itself.
struct Landscape {
    std::function<double(const ScalarField&)> energy;
    /// Residual whose zero set are the critical points (max norm is the stopping test).
    std::function<ScalarField(const ScalarField&)> residual;
    /// Maps a residual to a descent direction's negative (the metric gradient).
    std::function<ScalarField(const ScalarField&)> precondition;
    /// Inner product of the working metric.
    std::function<double(const ScalarField&, const ScalarField&)> inner;
    /// Optional Newton step: returns the correction for the residual at u, or
    /// an empty field when unavailable.
    std::function<ScalarField(const ScalarField&, const ScalarField&)> newton_step;
};

struct PathState {
    std::vector<ScalarField> nodes;
    std::vector<double> energies;
};

struct SaddleResult {
    ScalarField u_mp;
    double c_eps = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    PathState path;
    /// Peak energy after every path iteration.
    std::vector<double> peak_history;
    std::string status;
};

/// Path search between two states of the landscape. The path starts as the
/// segment from `start` to `end`; each iteration moves every interior node
/// along the metric gradient projected off the path tangent, halving the step
/// until the peak energy does not rise, then redistributes the nodes by
/// arclength; nodes past the peak whose energy falls below E(start) are cut
/// off first. When the peak stalls it is refined by a min-mode climb (Newton
/// along the softest Hessian mode from Lanczos, descent across it) and then
/// by the Newton step if provided. Refinements that land at or below the
/// endpoint energies are discarded.
SaddleResult mountain_pass(const Landscape& landscape, const ScalarField& start, const ScalarField& end,
                           const SolveConfig& cfg);
/// Same search starting from a polyline, respread to cfg.path_nodes nodes.
SaddleResult mountain_pass(const Landscape& landscape, const std::vector<ScalarField>& polyline,
                           const SolveConfig& cfg);
/// Mountain pass for E_eps from 0 to u_end (E_eps(u_end) < 0 required).
/// -L^h decouples the interior nodes into classes (parity of the index sum on
/// H^1); the search runs on each class and the results are added.
SaddleResult mountain_pass(const ScalarField& u_end, const SmoothedEnergy& energy, const SolveConfig& cfg);
/// Newton polish of a nearby critical point, class by class; no path search.
SaddleResult refine_saddle(const ScalarField& u0, const SmoothedEnergy& energy, const SolveConfig& cfg);

struct ContinuationStep {
    double eps = 0.0;
    ScalarField u;
    SaddleResult saddle;
    EnergyBreakdown energy_eps;
    EnergyBreakdown energy_limit;
    double residual_norm = 0.0;
    bool converged = false;
    std::string method;
};

struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    bool completed = false;
    std::string failure;
};

/// Strictly decreasing schedule; step 1 runs the mountain pass from scratch,
/// later steps warm-start from the previous critical point. Both follow the
/// critical point through intermediate eps values (geometric bisection) when
/// Newton fails on the full step; if the step-1 search does not converge it is
/// repeated at 2 eps and 4 eps and followed down.
ContinuationResult eps_continuation(const std::vector<double>& schedule, const HorizontalOperators& ops,
                                    const NonlinearitySpec& nl, const SolveConfig& cfg);

}  // namespace fbp
