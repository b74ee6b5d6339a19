#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fbp/carnot_group.hpp"

namespace fbp {

/// Open box prod_k (lower_k, upper_k) in R^N.
struct BoxDomain {
    std::vector<double> lower;
    std::vector<double> upper;

    BoxDomain(std::vector<double> lo, std::vector<double> hi);
    static BoxDomain cube(int dim, double lo, double hi);

    int dim() const { return static_cast<int>(lower.size()); }
    double volume() const;
};

/// Uniform tensor grid on a closed box, nodes ordered lexicographically with the
/// last axis fastest. Nodes on a face of the box are boundary nodes.
class Grid {
public:
    Grid(BoxDomain domain, std::vector<int> nodes_per_axis);
    /// Same node count on every axis.
    Grid(BoxDomain domain, int nodes);

    const BoxDomain& domain() const { return domain_; }
    int dim() const { return domain_.dim(); }
    size_t size() const { return size_; }
    int nodes(int axis) const { return nodes_[static_cast<size_t>(axis)]; }
    const std::vector<int>& nodes() const { return nodes_; }
    double spacing(int axis) const { return spacing_[static_cast<size_t>(axis)]; }
    size_t stride(int axis) const { return stride_[static_cast<size_t>(axis)]; }
    double cell_volume() const { return cell_volume_; }

    int axis_index(size_t node, int axis) const {
        return static_cast<int>((node / stride_[static_cast<size_t>(axis)]) % static_cast<size_t>(nodes_[static_cast<size_t>(axis)]));
    }
    double coord(size_t node, int axis) const;
    Point point(size_t node) const;
    size_t node_at(const std::vector<int>& multi_index) const;

    bool is_boundary(size_t node) const { return boundary_[node] != 0; }
    /// Bit 2a set when the node lies on the lower face of axis a, bit 2a + 1 on the upper face.
    unsigned face_bits(size_t node) const { return face_bits_[node]; }
    /// Number of grid layers between the node and the nearest face (0 on the boundary).
    int depth(size_t node) const;
    size_t interior_count() const { return interior_count_; }
    double interior_volume() const { return static_cast<double>(interior_count_) * cell_volume_; }

    bool operator==(const Grid& other) const;

private:
    BoxDomain domain_;
    std::vector<int> nodes_;
    std::vector<double> spacing_;
    std::vector<size_t> stride_;
    std::vector<unsigned char> boundary_;
    std::vector<unsigned> face_bits_;
    size_t size_ = 0;
    size_t interior_count_ = 0;
    double cell_volume_ = 1.0;
};

/// One real value per grid node.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(size_t n, double value = 0.0) : values_(n, value) {}
    explicit ScalarField(std::vector<double> values) : values_(std::move(values)) {}

    size_t size() const { return values_.size(); }
    double& operator[](size_t k) { return values_[k]; }
    double operator[](size_t k) const { return values_[k]; }
    std::span<double> span() { return values_; }
    std::span<const double> span() const { return values_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double max() const;
    double min() const;
    double max_abs() const;

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double s);
    /// this += a * x
    void axpy(double a, const ScalarField& x);

    bool operator==(const ScalarField&) const = default;

private:
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// N1 components per node: samples of the horizontal gradient.
struct HorizontalField {
    std::vector<ScalarField> components;

    size_t dim() const { return components.size(); }
    /// Euclidean length of the horizontal vector at a node.
    double magnitude(size_t node) const;
};

/// f(x) sampled at every node.
template <class F>
ScalarField sample(const Grid& grid, F&& f) {
    ScalarField u(grid.size());
    for (size_t k = 0; k < grid.size(); ++k) u[k] = f(grid.point(k));
    return u;
}

/// Multilinear interpolation of a field on `from` at the nodes of `to`; both
/// grids must cover the same box.
ScalarField interpolate(const Grid& from, const ScalarField& u, const Grid& to);

/// Copy of u with boundary nodes set to zero.
ScalarField with_zero_trace(const Grid& grid, ScalarField u);
bool has_zero_trace(const Grid& grid, const ScalarField& u);

/// Centered-difference horizontal operators on a grid. Fields are extended by
/// zero outside the closed box; the values stored on boundary nodes are used as
/// given. Coefficient tables are evaluated once at construction.
class HorizontalOperators {
public:
    HorizontalOperators(const GroupSpec& spec, const Grid& grid);

    const GroupSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    int horizontal_dim() const { return spec_.horizontal_dim(); }

    /// (Z_i u)(x) = sum_j a_ij(x) (u(x + h_j e_j) - u(x - h_j e_j)) / (2 h_j), at every node.
    void apply_z(int i, std::span<const double> u, std::span<double> out) const;
    ScalarField apply_z(int i, const ScalarField& u) const;
    HorizontalField gradient(const ScalarField& u) const;
    /// L u = -sum_i Z_i^T Z_i u on interior nodes, zero on the boundary.
    void sub_laplacian(std::span<const double> u, std::span<double> out) const;
    ScalarField sub_laplacian(const ScalarField& u) const;

    /// sum_i <Z_i u, Z_i v> over all nodes times the cell volume (the gradient
    /// of a trace-zero field does not vanish on the boundary layer).
    double dirichlet_pairing(const ScalarField& u, const ScalarField& v) const;

    /// Nonzero coefficients a_ij at a node: Z_i = sum over (axis, a) of a d/dx_axis.
    struct StencilEntry {
        int axis;
        double coefficient;
    };
    std::vector<StencilEntry> stencil(int i, size_t node) const;

private:
    struct Term {
        int axis = 0;
        double constant = 0.0;         // used when coeffs is empty
        std::vector<double> coeffs;    // per-node a_ij(x)
    };

    GroupSpec spec_;
    Grid grid_;
    std::vector<std::vector<Term>> terms_;
    mutable std::vector<double> scratch_;
};

ScalarField apply_Z(const GroupSpec& spec, const Grid& grid, int i, const ScalarField& u);
HorizontalField horizontal_gradient(const GroupSpec& spec, const Grid& grid, const ScalarField& u);
ScalarField sub_laplacian(const GroupSpec& spec, const Grid& grid, const ScalarField& u);

/// Riemann sum over interior nodes in lexicographic order (boundary weight 0).
double integrate(const Grid& grid, const ScalarField& f);
double inner_product(const Grid& grid, const ScalarField& f, const ScalarField& g);
/// Sum over all nodes of sum_i f_i g_i times the cell volume.
double gradient_pairing(const Grid& grid, const HorizontalField& f, const HorizontalField& g);

/// Neumaier-compensated running sum; accumulation order is the call order.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// CSV with header `x1,...,xN,value`, one row per node in lexicographic order.
void write_field_csv(std::ostream& os, const Grid& grid, const ScalarField& u);
void write_field_csv(const std::string& path, const Grid& grid, const ScalarField& u);

struct CsvField {
    Grid grid;
    ScalarField values;
};
/// Reconstructs the grid from the coordinate columns. Throws std::runtime_error
/// with a row/column diagnostic on malformed input.
CsvField read_field_csv(std::istream& is, const std::string& source = "<stream>");
CsvField read_field_csv(const std::string& path);

/// Shortest representation that round-trips through strtod.
std::string format_double(double v);

}  // namespace fbp
