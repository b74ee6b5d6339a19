#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fbp {

/// A point of the group, in exponential coordinates on R^N.
using Point = std::vector<double>;

/// Polynomial in N real variables, stored as a list of monomials.
class Polynomial {
public:
    struct Term {
        double coeff = 0.0;
        std::vector<int> exponents;
    };

    Polynomial() = default;
    explicit Polynomial(int dim) : dim_(dim) {}

    static Polynomial constant(int dim, double c);
    /// c * x_var
    static Polynomial linear(int dim, int var, double c);

    int dim() const { return dim_; }
    const std::vector<Term>& terms() const { return terms_; }

    void add_term(double coeff, std::vector<int> exponents);

    double evaluate(const Point& x) const;
    Polynomial derivative(int var) const;
    bool depends_on(int var) const;
    bool is_zero() const { return terms_.empty(); }
    /// True when the polynomial has no variable dependence.
    bool is_constant() const;
    int degree() const;

    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;

private:
    void normalize();

    int dim_ = 0;
    std::vector<Term> terms_;
};

/// A vector field sum_j a_j(x) d/dx_j with polynomial coefficients.
using VectorField = std::vector<Polynomial>;

/// Coefficient vector of the commutator [X, Y] = X(Y) - Y(X).
VectorField bracket(const VectorField& x, const VectorField& y);

/// A homogeneous Carnot group on R^N given by its dilation exponents and the
/// polynomial coefficient tables of the first-stratum generators.
///
/// Construction validates the structural invariants: strata sizes sum to N,
/// exponents are positive and constant on each stratum (1 on stratum 1, k on
/// stratum k), the generators are the coordinate fields at the origin, and each
/// coefficient a_ij does not depend on x_j. The last condition is what makes
/// the centered-difference generators exactly skew-adjoint on a grid.
class GroupSpec {
public:
    struct Data {
        std::string name;
        std::vector<int> strata_sizes;
        std::vector<int> dilation_exponents;
        std::vector<VectorField> horizontal_fields;
    };

    enum class Check { full, none };

    explicit GroupSpec(Data data, Check check = Check::full);

    const std::string& name() const { return data_.name; }
    int ambient_dim() const { return static_cast<int>(data_.dilation_exponents.size()); }
    int horizontal_dim() const { return static_cast<int>(data_.horizontal_fields.size()); }
    int step() const { return static_cast<int>(data_.strata_sizes.size()); }
    int homogeneous_dim() const { return homogeneous_dim_; }
    const std::vector<int>& strata_sizes() const { return data_.strata_sizes; }
    const std::vector<int>& dilation_exponents() const { return data_.dilation_exponents; }
    const std::vector<VectorField>& horizontal_fields() const { return data_.horizontal_fields; }
    const VectorField& field(int i) const;

    /// a_ij(x): coefficient of d/dx_j in Z_i at x.
    double coefficient(int i, int j, const Point& x) const;
    bool is_heisenberg() const { return data_.name == "heisenberg1"; }

private:
    Data data_;
    int homogeneous_dim_ = 0;
};

/// First Heisenberg group on R^3: Z1 = d1 + 2 x2 d3, Z2 = d2 - 2 x1 d3.
GroupSpec heisenberg1();
/// R^N with the coordinate fields; one stratum.
GroupSpec euclidean(int n);
/// Lookup by config id: heisenberg1 | euclidean1 | euclidean2 | euclidean3 ...
GroupSpec group_by_name(const std::string& id);

/// T_delta(x) = (delta^r_1 x_1, ..., delta^r_N x_N).
Point dilate(const GroupSpec& spec, double delta, const Point& x);

/// [Z_i, Z_j] evaluated at x (computed symbolically).
std::vector<double> lie_bracket(const GroupSpec& spec, int i, int j, const Point& x);

struct HormanderReport {
    bool ok = false;
    int min_rank = 0;
    std::optional<Point> offending_point;
};

/// Rank of the Lie algebra generated by the horizontal fields, using brackets
/// up to the group step, at each sample point.
HormanderReport validate_hormander(const GroupSpec& spec, const std::vector<Point>& samples);

/// ((x1^2 + x2^2)^2 + x3^2)^(1/4). Heisenberg only.
double koranyi_gauge(const GroupSpec& spec, const Point& x);

/// Gauge of p^{-1} q: Korányi with the group law on heisenberg1, the Euclidean
/// norm on one-step groups. Other groups are rejected.
double gauge_distance(const GroupSpec& spec, const Point& p, const Point& q);

/// Numerical rank of the rows, with a relative pivot tolerance.
int matrix_rank(std::vector<std::vector<double>> rows, double rel_tol = 1e-10);

}  // namespace fbp
