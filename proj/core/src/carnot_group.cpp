#include "fbp/carnot_group.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fbp {

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(int dim, double c) {
    Polynomial p(dim);
    p.add_term(c, std::vector<int>(static_cast<size_t>(dim), 0));
    return p;
}

Polynomial Polynomial::linear(int dim, int var, double c) {
    Polynomial p(dim);
    std::vector<int> e(static_cast<size_t>(dim), 0);
    e.at(static_cast<size_t>(var)) = 1;
    p.add_term(c, std::move(e));
    return p;
}

void Polynomial::add_term(double coeff, std::vector<int> exponents) {
    if (static_cast<int>(exponents.size()) != dim_) {
        throw std::invalid_argument("Polynomial::add_term: exponent vector has wrong length");
    }
    terms_.push_back({coeff, std::move(exponents)});
    normalize();
}

void Polynomial::normalize() {
    std::map<std::vector<int>, double> merged;
    for (const auto& t : terms_) merged[t.exponents] += t.coeff;
    terms_.clear();
    for (auto& [e, c] : merged) {
        if (c != 0.0) terms_.push_back({c, e});
    }
}

double Polynomial::evaluate(const Point& x) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        double v = t.coeff;
        for (int k = 0; k < dim_; ++k) {
            for (int p = 0; p < t.exponents[static_cast<size_t>(k)]; ++p) v *= x[static_cast<size_t>(k)];
        }
        sum += v;
    }
    return sum;
}

Polynomial Polynomial::derivative(int var) const {
    Polynomial d(dim_);
    for (const auto& t : terms_) {
        const int e = t.exponents[static_cast<size_t>(var)];
        if (e == 0) continue;
        auto ex = t.exponents;
        ex[static_cast<size_t>(var)] = e - 1;
        d.terms_.push_back({t.coeff * e, std::move(ex)});
    }
    d.normalize();
    return d;
}

bool Polynomial::depends_on(int var) const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [&](const Term& t) { return t.exponents[static_cast<size_t>(var)] > 0; });
}

bool Polynomial::is_constant() const { return degree() <= 0; }

int Polynomial::degree() const {
    int deg = terms_.empty() ? -1 : 0;
    for (const auto& t : terms_) {
        int d = 0;
        for (int e : t.exponents) d += e;
        deg = std::max(deg, d);
    }
    return deg;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    const int dim = std::max(dim_, other.dim_);
    Polynomial r(dim);
    r.terms_ = terms_;
    r.terms_.insert(r.terms_.end(), other.terms_.begin(), other.terms_.end());
    r.normalize();
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
    Polynomial neg = other;
    for (auto& t : neg.terms_) t.coeff = -t.coeff;
    return *this + neg;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
    const int dim = std::max(dim_, other.dim_);
    Polynomial r(dim);
    for (const auto& a : terms_) {
        for (const auto& b : other.terms_) {
            std::vector<int> e(static_cast<size_t>(dim), 0);
            for (int k = 0; k < dim; ++k) {
                e[static_cast<size_t>(k)] = a.exponents[static_cast<size_t>(k)] + b.exponents[static_cast<size_t>(k)];
            }
            r.terms_.push_back({a.coeff * b.coeff, std::move(e)});
        }
    }
    r.normalize();
    return r;
}

VectorField bracket(const VectorField& x, const VectorField& y) {
    if (x.size() != y.size()) throw std::invalid_argument("bracket: fields of different dimension");
    const int n = static_cast<int>(x.size());
    VectorField out(x.size(), Polynomial(n));
    for (int k = 0; k < n; ++k) {
        Polynomial acc(n);
        for (int l = 0; l < n; ++l) {
            acc = acc + x[static_cast<size_t>(l)] * y[static_cast<size_t>(k)].derivative(l);
            acc = acc - y[static_cast<size_t>(l)] * x[static_cast<size_t>(k)].derivative(l);
        }
        out[static_cast<size_t>(k)] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// GroupSpec

GroupSpec::GroupSpec(Data data, Check check) : data_(std::move(data)) {
    const int n = ambient_dim();
    if (n < 1) throw std::invalid_argument("GroupSpec: ambient dimension must be >= 1");
    int total = 0;
    for (int s : data_.strata_sizes) {
        if (s < 1) throw std::invalid_argument("GroupSpec: strata sizes must be positive");
        total += s;
    }
    if (total != n) throw std::invalid_argument("GroupSpec: strata sizes do not sum to N");
    for (int r : data_.dilation_exponents) {
        if (r < 1) throw std::invalid_argument("GroupSpec: dilation exponents must be positive");
        homogeneous_dim_ += r;
    }
    if (data_.horizontal_fields.empty()) throw std::invalid_argument("GroupSpec: no horizontal fields");
    for (const auto& f : data_.horizontal_fields) {
        if (static_cast<int>(f.size()) != n) throw std::invalid_argument("GroupSpec: field has wrong length");
        for (const auto& a : f) {
            if (a.dim() != n) throw std::invalid_argument("GroupSpec: coefficient polynomial has wrong arity");
        }
    }
    if (check == Check::none) return;

    if (horizontal_dim() != data_.strata_sizes.front()) {
        throw std::invalid_argument("GroupSpec: number of generators must equal the first stratum size");
    }
    size_t k = 0;
    for (size_t s = 0; s < data_.strata_sizes.size(); ++s) {
        for (int c = 0; c < data_.strata_sizes[s]; ++c, ++k) {
            if (data_.dilation_exponents[k] != static_cast<int>(s) + 1) {
                throw std::invalid_argument("GroupSpec: dilation exponent must equal the stratum index");
            }
        }
    }
    const Point origin(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < horizontal_dim(); ++i) {
        for (int j = 0; j < n; ++j) {
            const double expect = (i == j) ? 1.0 : 0.0;
            if (coefficient(i, j, origin) != expect) {
                throw std::invalid_argument("GroupSpec: generators must equal the coordinate fields at the origin");
            }
            if (field(i)[static_cast<size_t>(j)].depends_on(j)) {
                throw std::invalid_argument("GroupSpec: coefficient a_ij depends on x_j (not skew-adjoint on a grid)");
            }
        }
    }
}

const VectorField& GroupSpec::field(int i) const {
    if (i < 0 || i >= horizontal_dim()) throw std::out_of_range("GroupSpec: horizontal index out of range");
    return data_.horizontal_fields[static_cast<size_t>(i)];
}

double GroupSpec::coefficient(int i, int j, const Point& x) const {
    return field(i).at(static_cast<size_t>(j)).evaluate(x);
}

GroupSpec heisenberg1() {
    constexpr int n = 3;
    VectorField z1(n, Polynomial(n)), z2(n, Polynomial(n));
    z1[0] = Polynomial::constant(n, 1.0);
    z1[2] = Polynomial::linear(n, 1, 2.0);
    z2[1] = Polynomial::constant(n, 1.0);
    z2[2] = Polynomial::linear(n, 0, -2.0);
    return GroupSpec({"heisenberg1", {2, 1}, {1, 1, 2}, {z1, z2}});
}

GroupSpec euclidean(int n) {
    if (n < 1) throw std::invalid_argument("euclidean: dimension must be >= 1");
    std::vector<VectorField> fields;
    for (int i = 0; i < n; ++i) {
        VectorField z(static_cast<size_t>(n), Polynomial(n));
        z[static_cast<size_t>(i)] = Polynomial::constant(n, 1.0);
        fields.push_back(std::move(z));
    }
    return GroupSpec({"euclidean" + std::to_string(n), {n}, std::vector<int>(static_cast<size_t>(n), 1), fields});
}

GroupSpec group_by_name(const std::string& id) {
    if (id == "heisenberg1") return heisenberg1();
    const std::string prefix = "euclidean";
    if (id.rfind(prefix, 0) == 0 && id.size() > prefix.size()) {
        const std::string digits = id.substr(prefix.size());
        if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            return euclidean(std::stoi(digits));
        }
    }
    throw std::invalid_argument("unknown group id '" + id + "'");
}

Point dilate(const GroupSpec& spec, double delta, const Point& x) {
    if (!(delta > 0.0)) throw std::invalid_argument("dilate: delta must be positive");
    if (static_cast<int>(x.size()) != spec.ambient_dim()) throw std::invalid_argument("dilate: point has wrong dimension");
    Point y(x.size());
    for (size_t k = 0; k < x.size(); ++k) {
        y[k] = std::pow(delta, spec.dilation_exponents()[k]) * x[k];
    }
    return y;
}

std::vector<double> lie_bracket(const GroupSpec& spec, int i, int j, const Point& x) {
    const VectorField b = bracket(spec.field(i), spec.field(j));
    std::vector<double> out(b.size());
    for (size_t k = 0; k < b.size(); ++k) out[k] = b[k].evaluate(x);
    return out;
}

int matrix_rank(std::vector<std::vector<double>> rows, double rel_tol) {
    if (rows.empty()) return 0;
    const size_t cols = rows.front().size();
    double scale = 0.0;
    for (const auto& r : rows) {
        for (double v : r) scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) return 0;
    int rank = 0;
    size_t pivot_row = 0;
    for (size_t c = 0; c < cols && pivot_row < rows.size(); ++c) {
        size_t best = pivot_row;
        for (size_t r = pivot_row; r < rows.size(); ++r) {
            if (std::abs(rows[r][c]) > std::abs(rows[best][c])) best = r;
        }
        if (std::abs(rows[best][c]) <= rel_tol * scale) continue;
        std::swap(rows[best], rows[pivot_row]);
        for (size_t r = pivot_row + 1; r < rows.size(); ++r) {
            const double f = rows[r][c] / rows[pivot_row][c];
            for (size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[pivot_row][k];
        }
        ++pivot_row;
        ++rank;
    }
    return rank;
}

HormanderReport validate_hormander(const GroupSpec& spec, const std::vector<Point>& samples) {
    if (samples.empty()) throw std::invalid_argument("validate_hormander: empty sample set");

    // Symbolic generating set: generators plus iterated brackets up to the step.
    std::vector<VectorField> layer(spec.horizontal_fields().begin(), spec.horizontal_fields().end());
    std::vector<VectorField> all = layer;
    const int depth = std::max(spec.step(), 2);
    for (int d = 2; d <= depth; ++d) {
        std::vector<VectorField> next;
        for (const auto& z : spec.horizontal_fields()) {
            for (const auto& w : layer) next.push_back(bracket(z, w));
        }
        all.insert(all.end(), next.begin(), next.end());
        layer = std::move(next);
    }

    HormanderReport report;
    report.ok = true;
    report.min_rank = spec.ambient_dim();
    for (const auto& x : samples) {
        std::vector<std::vector<double>> rows;
        for (const auto& f : all) {
            std::vector<double> row(f.size());
            for (size_t k = 0; k < f.size(); ++k) row[k] = f[k].evaluate(x);
            rows.push_back(std::move(row));
        }
        const int r = matrix_rank(rows);
        if (r < report.min_rank) report.min_rank = r;
        if (r < spec.ambient_dim() && report.ok) {
            report.ok = false;
            report.offending_point = x;
        }
    }
    return report;
}

double koranyi_gauge(const GroupSpec& spec, const Point& x) {
    if (!spec.is_heisenberg()) throw std::invalid_argument("koranyi_gauge: defined for heisenberg1 only");
    if (x.size() != 3) throw std::invalid_argument("koranyi_gauge: point must have 3 coordinates");
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return std::pow(r2 * r2 + x[2] * x[2], 0.25);
}

double gauge_distance(const GroupSpec& spec, const Point& p, const Point& q) {
    if (p.size() != q.size() || static_cast<int>(p.size()) != spec.ambient_dim()) {
        throw std::invalid_argument("gauge_distance: point dimension mismatch");
    }
    if (spec.is_heisenberg()) {
        // (x, y, t) . (x', y', t') = (x + x', y + y', t + t' + 2 (x' y - x y'))
        const Point d{q[0] - p[0], q[1] - p[1], q[2] - p[2] + 2.0 * (p[0] * q[1] - q[0] * p[1])};
        return koranyi_gauge(spec, d);
    }
    if (spec.step() == 1) {
        double s = 0.0;
        for (size_t j = 0; j < p.size(); ++j) s += (q[j] - p[j]) * (q[j] - p[j]);
        return std::sqrt(s);
    }
    throw std::invalid_argument("gauge_distance: no group law for " + spec.name());
}

}  // namespace fbp
