#include "fbp/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fbp {

// ---------------------------------------------------------------------------
// BoxDomain / Grid

BoxDomain::BoxDomain(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.empty() || lower.size() != upper.size()) {
        throw std::invalid_argument("BoxDomain: bounds must be nonempty and of equal length");
    }
    for (size_t k = 0; k < lower.size(); ++k) {
        if (!(lower[k] < upper[k]) || !std::isfinite(lower[k]) || !std::isfinite(upper[k])) {
            throw std::invalid_argument("BoxDomain: need finite lower < upper on every axis");
        }
    }
}

BoxDomain BoxDomain::cube(int dim, double lo, double hi) {
    return BoxDomain(std::vector<double>(static_cast<size_t>(dim), lo), std::vector<double>(static_cast<size_t>(dim), hi));
}

double BoxDomain::volume() const {
    double v = 1.0;
    for (size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
    return v;
}

Grid::Grid(BoxDomain domain, int nodes) : Grid(domain, std::vector<int>(static_cast<size_t>(domain.dim()), nodes)) {}

Grid::Grid(BoxDomain domain, std::vector<int> nodes_per_axis) : domain_(std::move(domain)), nodes_(std::move(nodes_per_axis)) {
    const auto d = static_cast<size_t>(domain_.dim());
    if (nodes_.size() != d) throw std::invalid_argument("Grid: node counts do not match the domain dimension");
    for (int n : nodes_) {
        if (n < 3) throw std::invalid_argument("Grid: need at least 3 nodes per axis");
    }
    spacing_.resize(d);
    stride_.resize(d);
    size_ = 1;
    for (size_t k = d; k-- > 0;) {
        stride_[k] = size_;
        size_ *= static_cast<size_t>(nodes_[k]);
    }
    for (size_t k = 0; k < d; ++k) {
        spacing_[k] = (domain_.upper[k] - domain_.lower[k]) / (nodes_[k] - 1);
        cell_volume_ *= spacing_[k];
    }
    if (d > 16) throw std::invalid_argument("Grid: at most 16 axes are supported");
    boundary_.assign(size_, 0);
    face_bits_.assign(size_, 0u);
    for (size_t node = 0; node < size_; ++node) {
        for (int a = 0; a < dim(); ++a) {
            const int i = axis_index(node, a);
            if (i == 0) face_bits_[node] |= 1u << (2 * a);
            if (i == nodes_[static_cast<size_t>(a)] - 1) face_bits_[node] |= 1u << (2 * a + 1);
        }
        boundary_[node] = face_bits_[node] != 0u;
        if (!boundary_[node]) ++interior_count_;
    }
}

double Grid::coord(size_t node, int axis) const {
    const auto a = static_cast<size_t>(axis);
    const int i = axis_index(node, axis);
    if (i == nodes_[a] - 1) return domain_.upper[a];
    return domain_.lower[a] + i * spacing_[a];
}

Point Grid::point(size_t node) const {
    Point p(static_cast<size_t>(dim()));
    for (int a = 0; a < dim(); ++a) p[static_cast<size_t>(a)] = coord(node, a);
    return p;
}

size_t Grid::node_at(const std::vector<int>& multi_index) const {
    if (multi_index.size() != nodes_.size()) throw std::invalid_argument("Grid::node_at: wrong index length");
    size_t node = 0;
    for (size_t k = 0; k < nodes_.size(); ++k) {
        if (multi_index[k] < 0 || multi_index[k] >= nodes_[k]) throw std::out_of_range("Grid::node_at: index out of range");
        node += static_cast<size_t>(multi_index[k]) * stride_[k];
    }
    return node;
}

int Grid::depth(size_t node) const {
    int d = nodes_[0];
    for (int a = 0; a < dim(); ++a) {
        const int i = axis_index(node, a);
        d = std::min({d, i, nodes_[static_cast<size_t>(a)] - 1 - i});
    }
    return d;
}

bool Grid::operator==(const Grid& other) const {
    return nodes_ == other.nodes_ && domain_.lower == other.domain_.lower && domain_.upper == other.domain_.upper;
}

// ---------------------------------------------------------------------------
// ScalarField

double ScalarField::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    if (other.size() != size()) throw std::invalid_argument("ScalarField: size mismatch");
    for (size_t k = 0; k < size(); ++k) values_[k] += other.values_[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    if (other.size() != size()) throw std::invalid_argument("ScalarField: size mismatch");
    for (size_t k = 0; k < size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

void ScalarField::axpy(double a, const ScalarField& x) {
    if (x.size() != size()) throw std::invalid_argument("ScalarField: size mismatch");
    for (size_t k = 0; k < size(); ++k) values_[k] += a * x.values_[k];
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

double HorizontalField::magnitude(size_t node) const {
    double s = 0.0;
    for (const auto& c : components) s += c[node] * c[node];
    return std::sqrt(s);
}

ScalarField with_zero_trace(const Grid& grid, ScalarField u) {
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) u[k] = 0.0;
    }
    return u;
}

bool has_zero_trace(const Grid& grid, const ScalarField& u) {
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k) && u[k] != 0.0) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// HorizontalOperators

HorizontalOperators::HorizontalOperators(const GroupSpec& spec, const Grid& grid) : spec_(spec), grid_(grid) {
    if (spec.ambient_dim() != grid.dim()) throw std::invalid_argument("HorizontalOperators: group and grid dimensions differ");
    for (int i = 0; i < spec.horizontal_dim(); ++i) {
        for (int j = 0; j < spec.ambient_dim(); ++j) {
            if (spec.field(i)[static_cast<size_t>(j)].depends_on(j)) {
                throw std::invalid_argument("HorizontalOperators: coefficient a_ij depends on x_j");
            }
        }
    }
    terms_.resize(static_cast<size_t>(spec.horizontal_dim()));
    for (int i = 0; i < spec.horizontal_dim(); ++i) {
        for (int j = 0; j < spec.ambient_dim(); ++j) {
            const Polynomial& a = spec.field(i)[static_cast<size_t>(j)];
            if (a.is_zero()) continue;
            Term t;
            t.axis = j;
            if (a.is_constant()) {
                t.constant = a.evaluate(Point(static_cast<size_t>(grid.dim()), 0.0));
            } else {
                t.coeffs.resize(grid.size());
                for (size_t k = 0; k < grid.size(); ++k) t.coeffs[k] = a.evaluate(grid.point(k));
            }
            terms_[static_cast<size_t>(i)].push_back(std::move(t));
        }
    }
}

void HorizontalOperators::apply_z(int i, std::span<const double> u, std::span<double> out) const {
    if (i < 0 || i >= horizontal_dim()) throw std::out_of_range("apply_z: horizontal index out of range");
    const size_t n = grid_.size();
    if (u.size() != n || out.size() != n) throw std::invalid_argument("apply_z: field does not match the grid");
    std::fill(out.begin(), out.end(), 0.0);
    for (const Term& t : terms_[static_cast<size_t>(i)]) {
        const size_t s = grid_.stride(t.axis);
        const unsigned lo = 1u << (2 * t.axis);
        const unsigned hi = lo << 1;
        const double inv = 1.0 / (2.0 * grid_.spacing(t.axis));
        const double* uu = u.data();
        if (t.coeffs.empty()) {
            const double a = t.constant * inv;
            for (size_t k = 0; k < n; ++k) {
                const unsigned f = grid_.face_bits(k);
                const double up = (f & hi) ? 0.0 : uu[k + s];
                const double down = (f & lo) ? 0.0 : uu[k - s];
                out[k] += a * (up - down);
            }
        } else {
            const double* c = t.coeffs.data();
            for (size_t k = 0; k < n; ++k) {
                const unsigned f = grid_.face_bits(k);
                const double up = (f & hi) ? 0.0 : uu[k + s];
                const double down = (f & lo) ? 0.0 : uu[k - s];
                out[k] += c[k] * inv * (up - down);
            }
        }
    }
}

ScalarField HorizontalOperators::apply_z(int i, const ScalarField& u) const {
    ScalarField out(grid_.size());
    apply_z(i, u.span(), out.span());
    return out;
}

HorizontalField HorizontalOperators::gradient(const ScalarField& u) const {
    HorizontalField g;
    for (int i = 0; i < horizontal_dim(); ++i) g.components.push_back(apply_z(i, u));
    return g;
}

void HorizontalOperators::sub_laplacian(std::span<const double> u, std::span<double> out) const {
    const size_t n = grid_.size();
    if (u.size() != n || out.size() != n) throw std::invalid_argument("sub_laplacian: field does not match the grid");
    scratch_.resize(2 * n);
    std::span<double> zu(scratch_.data(), n);
    std::span<double> zzu(scratch_.data() + n, n);
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < horizontal_dim(); ++i) {
        apply_z(i, u, zu);
        apply_z(i, zu, zzu);
        for (size_t k = 0; k < n; ++k) out[k] += zzu[k];
    }
    for (size_t k = 0; k < n; ++k) {
        if (grid_.is_boundary(k)) out[k] = 0.0;
    }
}

ScalarField HorizontalOperators::sub_laplacian(const ScalarField& u) const {
    ScalarField out(grid_.size());
    sub_laplacian(u.span(), out.span());
    return out;
}

double HorizontalOperators::dirichlet_pairing(const ScalarField& u, const ScalarField& v) const {
    return gradient_pairing(grid_, gradient(u), gradient(v));
}

std::vector<HorizontalOperators::StencilEntry> HorizontalOperators::stencil(int i, size_t node) const {
    std::vector<StencilEntry> out;
    for (const Term& t : terms_.at(static_cast<size_t>(i))) {
        const double a = t.coeffs.empty() ? t.constant : t.coeffs[node];
        if (a != 0.0) out.push_back({t.axis, a});
    }
    return out;
}

ScalarField apply_Z(const GroupSpec& spec, const Grid& grid, int i, const ScalarField& u) {
    return HorizontalOperators(spec, grid).apply_z(i, u);
}

HorizontalField horizontal_gradient(const GroupSpec& spec, const Grid& grid, const ScalarField& u) {
    return HorizontalOperators(spec, grid).gradient(u);
}

ScalarField sub_laplacian(const GroupSpec& spec, const Grid& grid, const ScalarField& u) {
    return HorizontalOperators(spec, grid).sub_laplacian(u);
}

// ---------------------------------------------------------------------------
// Quadrature

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

double integrate(const Grid& grid, const ScalarField& f) {
    if (f.size() != grid.size()) throw std::invalid_argument("integrate: field does not match the grid");
    CompensatedSum s;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (!grid.is_boundary(k)) s.add(f[k]);
    }
    return s.value() * grid.cell_volume();
}

double inner_product(const Grid& grid, const ScalarField& f, const ScalarField& g) {
    if (f.size() != grid.size() || g.size() != grid.size()) throw std::invalid_argument("inner_product: size mismatch");
    CompensatedSum s;
    for (size_t k = 0; k < grid.size(); ++k) {
        if (!grid.is_boundary(k)) s.add(f[k] * g[k]);
    }
    return s.value() * grid.cell_volume();
}

double gradient_pairing(const Grid& grid, const HorizontalField& f, const HorizontalField& g) {
    if (f.dim() != g.dim()) throw std::invalid_argument("gradient_pairing: component count mismatch");
    CompensatedSum s;
    for (size_t k = 0; k < grid.size(); ++k) {
        for (size_t c = 0; c < f.dim(); ++c) s.add(f.components[c][k] * g.components[c][k]);
    }
    return s.value() * grid.cell_volume();
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_field_csv(std::ostream& os, const Grid& grid, const ScalarField& u) {
    if (u.size() != grid.size()) throw std::invalid_argument("write_field_csv: field does not match the grid");
    for (int a = 0; a < grid.dim(); ++a) os << 'x' << (a + 1) << ',';
    os << "value\n";
    for (size_t k = 0; k < grid.size(); ++k) {
        for (int a = 0; a < grid.dim(); ++a) os << format_double(grid.coord(k, a)) << ',';
        os << format_double(u[k]) << '\n';
    }
}

void write_field_csv(const std::string& path, const Grid& grid, const ScalarField& u) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_field_csv(os, grid, u);
}

namespace {

double parse_cell(const std::string& cell, const std::string& source, size_t row, size_t col) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = cell.data() + cell.size();
    while (b < e && *b == ' ') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
        throw std::runtime_error(source + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                                 ": not a finite number: '" + cell + "'");
    }
    return v;
}

}  // namespace

CsvField read_field_csv(std::istream& is, const std::string& source) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(source + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header.back() != "value") {
        throw std::runtime_error(source + ": row 1: header must be x1,...,xN,value");
    }
    const size_t dim = header.size() - 1;
    for (size_t a = 0; a < dim; ++a) {
        if (header[a] != "x" + std::to_string(a + 1)) {
            throw std::runtime_error(source + ": row 1, column " + std::to_string(a + 1) + ": expected 'x" +
                                     std::to_string(a + 1) + "'");
        }
    }
    std::vector<std::vector<double>> coords(dim);
    std::vector<double> values;
    size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != dim + 1) {
            throw std::runtime_error(source + ": row " + std::to_string(row) + ": expected " + std::to_string(dim + 1) +
                                     " columns, found " + std::to_string(cells.size()));
        }
        for (size_t a = 0; a < dim; ++a) coords[a].push_back(parse_cell(cells[a], source, row, a + 1));
        values.push_back(parse_cell(cells[dim], source, row, dim + 1));
    }
    if (values.empty()) throw std::runtime_error(source + ": no data rows");

    std::vector<double> lo(dim), hi(dim);
    std::vector<int> counts(dim);
    for (size_t a = 0; a < dim; ++a) {
        std::vector<double> uniq = coords[a];
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        lo[a] = uniq.front();
        hi[a] = uniq.back();
        counts[a] = static_cast<int>(uniq.size());
    }
    Grid grid(BoxDomain(lo, hi), counts);
    if (grid.size() != values.size()) {
        throw std::runtime_error(source + ": " + std::to_string(values.size()) + " rows do not form a full tensor grid");
    }
    for (size_t k = 0; k < values.size(); ++k) {
        for (size_t a = 0; a < dim; ++a) {
            const double expect = grid.coord(k, static_cast<int>(a));
            if (std::abs(coords[a][k] - expect) > 1e-9 * (1.0 + std::abs(expect))) {
                throw std::runtime_error(source + ": row " + std::to_string(k + 2) + ", column " + std::to_string(a + 1) +
                                         ": node out of lexicographic order");
            }
        }
    }
    return {grid, ScalarField(std::move(values))};
}

CsvField read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_field_csv(is, path);
}

ScalarField interpolate(const Grid& from, const ScalarField& u, const Grid& to) {
    if (u.size() != from.size()) throw std::invalid_argument("interpolate: field does not match the source grid");
    if (from.dim() != to.dim()) throw std::invalid_argument("interpolate: dimension mismatch");
    const int d = from.dim();
    ScalarField out(to.size());
    std::vector<int> base(static_cast<size_t>(d));
    std::vector<double> frac(static_cast<size_t>(d));
    std::vector<int> idx(static_cast<size_t>(d));
    for (size_t k = 0; k < to.size(); ++k) {
        for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<size_t>(a);
            const double s = (to.coord(k, a) - from.domain().lower[ua]) / from.spacing(a);
            const int i = std::clamp(static_cast<int>(std::floor(s)), 0, from.nodes(a) - 2);
            base[ua] = i;
            frac[ua] = std::clamp(s - i, 0.0, 1.0);
        }
        double v = 0.0;
        for (unsigned corner = 0; corner < (1u << d); ++corner) {
            double w = 1.0;
            for (int a = 0; a < d; ++a) {
                const auto ua = static_cast<size_t>(a);
                const bool up = (corner >> a) & 1u;
                idx[ua] = base[ua] + (up ? 1 : 0);
                w *= up ? frac[ua] : 1.0 - frac[ua];
            }
            if (w != 0.0) v += w * u[from.node_at(idx)];
        }
        out[k] = v;
    }
    return out;
}

}  // namespace fbp
