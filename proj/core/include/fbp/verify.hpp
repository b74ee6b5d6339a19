#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbp/solvers.hpp"

namespace fbp {

/// A grid cell whose vertices straddle the level u = 1.
struct CellCrossing {
    /// Lower corner node of the cell.
    size_t corner = 0;
    /// Mean of the linear edge crossings.
    Point location;
    /// Unit horizontal gradient direction in R^N at the crossing; empty when
    /// extracted without operators or when the gradient vanishes.
    std::vector<double> normal;
};

struct FreeBoundaryCells {
    std::vector<CellCrossing> cells;
};

/// Cells with min <= 1 <= max over their vertices and min < max. Nodes with
/// u = 1 exactly count on both sides.
FreeBoundaryCells extract_free_boundary(const ScalarField& u, const Grid& grid);
/// Same cells with normals from the horizontal gradient.
FreeBoundaryCells extract_free_boundary(const ScalarField& u, const HorizontalOperators& ops);

/// Thrown when no free-boundary cell has usable nodes on both sides.
class UnresolvedFreeBoundary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OneSidedSample {
    size_t cell = 0;
    size_t plus_node = 0;
    size_t minus_node = 0;
    double plus = 0.0;
    double minus = 0.0;
    double jump() const { return plus * plus - minus * minus; }
};

struct OneSidedGradients {
    std::vector<OneSidedSample> samples;
    size_t dropped = 0;
};

/// |grad_G^h u| at the nearest node along +normal with u > 1 + band and along
/// -normal with u < 1 - band, band = 2 h max|grad_G^h u| over the cell vertices.
/// Nodes further than 3 layers from the cell, and boundary nodes, are not used.
OneSidedGradients one_sided_gradients(const ScalarField& u, const FreeBoundaryCells& cells,
                                      const HorizontalOperators& ops);

struct JumpStats {
    std::vector<double> values;
    std::vector<Point> locations;
    size_t count = 0;
    size_t dropped = 0;
    double median = 0.0;
    double mean = 0.0;
    double iqr = 0.0;
    /// No free boundary at all.
    bool empty = true;
};

JumpStats jump_statistics(const ScalarField& u, const HorizontalOperators& ops);

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> data, double q);

struct SetMeasures {
    double super_level = 0.0;
    double band = 0.0;
};

/// Interior node counts times the cell volume of {u > 1} and {|u - 1| <= band}.
SetMeasures set_measures(const ScalarField& u, const Grid& grid, double band);

struct SubharmonicityReport {
    size_t positivity_nodes = 0;
    double min_Lu = 0.0;
    double tol = 0.0;
    bool positivity_pass = true;
    size_t harmonic_nodes = 0;
    double max_abs_Lu = 0.0;
    double harmonic_bound = 0.0;
    bool harmonic_pass = true;
};

/// L^h u >= -tol where u < 1 - band, and |L^h u| against the reported bound
/// where u < 1 - 3 band. Nodes within two layers of the boundary are skipped.
/// tol = 1e-6 max|u| / h_min^2; harmonic_bound = max|u| h_max^2 / h_min^2.
SubharmonicityReport subharmonicity_check(const ScalarField& u, const HorizontalOperators& ops, double band);

struct BracketEntry {
    double eps = 0.0;
    double energy_eps = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
    std::string violation;
};

struct EnergyBracketReport {
    double energy_limit = 0.0;
    double band = 0.0;
    double band_measure = 0.0;
    double delta = 0.0;
    std::vector<BracketEntry> entries;
    /// E_eps(u_h) <= E(u_h) at the finest eps.
    double smoothed_final = 0.0;
    bool smoothed_below_limit = false;
    bool pass = false;
};

/// E(u_h) - delta <= E_eps_j(u_j) <= E(u_h) + |{|u_h - 1| <= band}| + delta for
/// the last three (eps_j, u_j), u_h the last iterate, band the finest eps,
/// delta = 0.05 (1 + |E(u_h)|).
EnergyBracketReport energy_bracket_check(const std::vector<std::pair<double, ScalarField>>& steps, double lambda,
                                         const NonlinearitySpec& nl, const HorizontalOperators& ops);

struct MaxPrincipleReport {
    double A0 = 0.0;
    double min_u = 0.0;
    /// max over nodes of u - phi0.
    double max_excess = 0.0;
    bool pass = false;
};

/// -1e-8 <= u <= phi0 + 1e-8 with A0 from barrier_constant(u).
MaxPrincipleReport max_principle_check(const ScalarField& u, const SmoothedEnergy& energy, const SolveConfig& cfg);

struct LipschitzProfile {
    Point center;
    double radius = 0.0;
    std::vector<double> sups;
    /// max / min of sups.
    double ratio = 1.0;
    bool pass = false;
};

/// sup |grad_G^h u| over interior nodes in the gauge ball around `center`.
double lipschitz_sup(const ScalarField& u, const HorizontalOperators& ops, const Point& center, double radius);
/// Ball at the box center with radius a quarter of the smallest box width;
/// passes when the sups vary by less than a factor 2.
LipschitzProfile lipschitz_profile(const std::vector<ScalarField>& fields, const HorizontalOperators& ops);

}  // namespace fbp
