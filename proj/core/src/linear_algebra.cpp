#include "fbp/linear_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbp {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

namespace {

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double true_relative_residual(const LinearOperator& A, std::span<const double> b, std::span<const double> x,
                              double bnorm) {
    std::vector<double> r(b.size());
    A(x, r);
    for (size_t k = 0; k < r.size(); ++k) r[k] = b[k] - r[k];
    return bnorm > 0.0 ? norm2(r) / bnorm : norm2(r);
}

struct RowEntry {
    size_t node;
    double value;
};

// Accumulates row^T row over the rows of the difference operators,
// keeping interior columns only; boundary rows become identity rows.
SparseMatrix gram_matrix(const Grid& grid, const std::vector<std::vector<RowEntry>>& rows_by_op) {
    std::vector<SparseMatrix::Triplet> t;
    for (const auto& row : rows_by_op) {
        for (const RowEntry& p : row) {
            for (const RowEntry& q : row) t.push_back({p.node, q.node, p.value * q.value});
        }
    }
    for (size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) t.push_back({k, k, 1.0});
    }
    return SparseMatrix(grid.size(), std::move(t));
}

size_t neighbour(const Grid& grid, size_t k, int axis, int side, bool& inside) {
    const unsigned f = grid.face_bits(k);
    const unsigned bit = 1u << (2 * axis + (side > 0 ? 1 : 0));
    inside = (f & bit) == 0;
    if (!inside) return k;
    return side > 0 ? k + grid.stride(axis) : k - grid.stride(axis);
}

void push_interior(const Grid& grid, std::vector<RowEntry>& row, size_t node, double v) {
    if (v == 0.0 || grid.is_boundary(node)) return;
    for (RowEntry& e : row) {
        if (e.node == node) {
            e.value += v;
            return;
        }
    }
    row.push_back({node, v});
}

}  // namespace

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(size_t n, std::vector<Triplet> entries) {
    for (const Triplet& e : entries) {
        if (e.row >= n || e.col >= n) throw std::out_of_range("sparse matrix entry out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(n + 1, 0);
    for (size_t k = 0; k < entries.size();) {
        size_t m = k;
        double v = 0.0;
        while (m < entries.size() && entries[m].row == entries[k].row && entries[m].col == entries[k].col) {
            v += entries[m].value;
            ++m;
        }
        cols_.push_back(entries[k].col);
        vals_.push_back(v);
        ++row_ptr_[entries[k].row + 1];
        k = m;
    }
    for (size_t r = 0; r < n; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    const size_t n = rows();
    for (size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += vals_[p] * x[cols_[p]];
        y[r] = s;
    }
}

double SparseMatrix::at(size_t row, size_t col) const {
    const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(row));
    const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(row + 1));
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) return 0.0;
    return vals_[static_cast<size_t>(it - cols_.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(rows(), 0.0);
    for (size_t r = 0; r < rows(); ++r) d[r] = at(r, r);
    return d;
}

std::vector<int> connected_components(const SparseMatrix& a, int& count) {
    const size_t n = a.rows();
    std::vector<int> label(n, -1);
    std::vector<size_t> stack;
    count = 0;
    for (size_t seed = 0; seed < n; ++seed) {
        if (label[seed] >= 0) continue;
        label[seed] = count;
        stack.push_back(seed);
        while (!stack.empty()) {
            const size_t r = stack.back();
            stack.pop_back();
            for (size_t k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
                const size_t c = a.cols()[k];
                if (c != r && a.values()[k] != 0.0 && label[c] < 0) {
                    label[c] = count;
                    stack.push_back(c);
                }
            }
        }
        ++count;
    }
    return label;
}

SparseMatrix assemble_neg_laplacian(const HorizontalOperators& ops) {
    const Grid& grid = ops.grid();
    std::vector<std::vector<RowEntry>> rows;
    rows.reserve(grid.size() * static_cast<size_t>(ops.horizontal_dim()));
    for (int i = 0; i < ops.horizontal_dim(); ++i) {
        for (size_t k = 0; k < grid.size(); ++k) {
            std::vector<RowEntry> row;
            for (const auto& s : ops.stencil(i, k)) {
                const double a = s.coefficient / (2.0 * grid.spacing(s.axis));
                bool in = false;
                const size_t up = neighbour(grid, k, s.axis, 1, in);
                if (in) push_interior(grid, row, up, a);
                const size_t down = neighbour(grid, k, s.axis, -1, in);
                if (in) push_interior(grid, row, down, -a);
            }
            if (!row.empty()) rows.push_back(std::move(row));
        }
    }
    return gram_matrix(grid, rows);
}

// ---------------------------------------------------------------------------
// IncompleteCholesky

IncompleteCholesky::IncompleteCholesky(const SparseMatrix& a) {
    double shift = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
        if (factor(a, shift)) {
            shift_ = shift;
            return;
        }
        shift = shift == 0.0 ? 1e-3 : 2.0 * shift;
    }
    throw std::runtime_error("incomplete Cholesky: matrix is not positive definite");
}

bool IncompleteCholesky::factor(const SparseMatrix& a, double shift) {
    const size_t n = a.rows();
    const auto& ap = a.row_ptr();
    const auto& ac = a.cols();
    const auto& av = a.values();
    row_ptr_.assign(n + 1, 0);
    cols_.clear();
    vals_.clear();
    diag_.assign(n, 0.0);
    for (size_t r = 0; r < n; ++r) {
        for (size_t p = ap[r]; p < ap[r + 1]; ++p) {
            if (ac[p] < r) {
                cols_.push_back(ac[p]);
                vals_.push_back(av[p]);
            }
        }
        row_ptr_[r + 1] = cols_.size();
    }
    for (size_t r = 0; r < n; ++r) {
        const size_t rb = row_ptr_[r];
        const size_t re = row_ptr_[r + 1];
        for (size_t p = rb; p < re; ++p) {
            const size_t c = cols_[p];
            // sparse dot of the already computed parts of rows r and c
            double s = vals_[p];
            size_t q = rb;
            size_t t = row_ptr_[c];
            const size_t te = row_ptr_[c + 1];
            while (q < p && t < te) {
                if (cols_[q] == cols_[t]) {
                    s -= vals_[q] * vals_[t];
                    ++q;
                    ++t;
                } else if (cols_[q] < cols_[t]) {
                    ++q;
                } else {
                    ++t;
                }
            }
            vals_[p] = s / diag_[c];
        }
        double dr = a.at(r, r) * (1.0 + shift);
        for (size_t p = rb; p < re; ++p) dr -= vals_[p] * vals_[p];
        if (!(dr > 0.0) || !std::isfinite(dr)) return false;
        diag_[r] = std::sqrt(dr);
    }
    return true;
}

void IncompleteCholesky::apply(std::span<const double> r, std::span<double> z) const {
    const size_t n = diag_.size();
    for (size_t i = 0; i < n; ++i) {
        double s = r[i];
        for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s -= vals_[p] * z[cols_[p]];
        z[i] = s / diag_[i];
    }
    for (size_t i = n; i-- > 0;) {
        z[i] /= diag_[i];
        const double zi = z[i];
        for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) z[cols_[p]] -= vals_[p] * zi;
    }
}

// ---------------------------------------------------------------------------
// Krylov methods

KrylovResult conjugate_gradient(const LinearOperator& A, const Preconditioner& M, std::span<const double> b,
                                std::span<double> x, double rel_tol, int max_iter) {
    const size_t n = b.size();
    KrylovResult res;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    std::vector<double> r(n), z(n), p(n), q(n);
    A(x, q);
    for (size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
    M(r, z);
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);
    while (rnorm / bnorm > rel_tol && res.iterations < max_iter) {
        A(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        for (size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        M(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
        rnorm = norm2(r);
        ++res.iterations;
    }
    res.relative_residual = true_relative_residual(A, b, x, bnorm);
    res.converged = res.relative_residual <= rel_tol * 10.0 || rnorm / bnorm <= rel_tol;
    return res;
}

KrylovResult minres(const LinearOperator& A, const Preconditioner& M, std::span<const double> b, std::span<double> x,
                    double rel_tol, int max_iter) {
    const size_t n = b.size();
    KrylovResult res;
    const double bnorm = norm2(b);
    std::vector<double> r1(n), r2(n), y(n), v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0);
    A(x, y);
    for (size_t k = 0; k < n; ++k) r1[k] = b[k] - y[k];
    M(r1, y);
    const double beta1 = std::sqrt(std::max(dot(r1, y), 0.0));
    if (beta1 == 0.0) {
        res.converged = true;
        return res;
    }
    r2 = r1;
    double oldb = 0.0;
    double beta = beta1;
    double dbar = 0.0;
    double epsln = 0.0;
    double phibar = beta1;
    double cs = -1.0;
    double sn = 0.0;
    while (res.iterations < max_iter) {
        ++res.iterations;
        const double s = 1.0 / beta;
        for (size_t k = 0; k < n; ++k) v[k] = s * y[k];
        A(v, y);
        if (res.iterations >= 2) {
            const double f = beta / oldb;
            for (size_t k = 0; k < n; ++k) y[k] -= f * r1[k];
        }
        const double alfa = dot(v, y);
        const double f = alfa / beta;
        for (size_t k = 0; k < n; ++k) y[k] -= f * r2[k];
        std::swap(r1, r2);
        r2 = y;
        M(r2, y);
        oldb = beta;
        beta = std::sqrt(std::max(dot(r2, y), 0.0));
        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;
        const double denom = 1.0 / gamma;
        std::swap(w1, w2);
        std::swap(w2, w);
        for (size_t k = 0; k < n; ++k) {
            w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) * denom;
            x[k] += phi * w[k];
        }
        if (phibar / beta1 <= rel_tol || beta == 0.0) break;
    }
    res.relative_residual = true_relative_residual(A, b, x, bnorm);
    res.converged = res.relative_residual <= rel_tol * 10.0;
    return res;
}

// ---------------------------------------------------------------------------
// SpdSystem

SpdSystem::SpdSystem(SparseMatrix a) : a_(std::move(a)), ic_(a_) {}

LinearOperator SpdSystem::op() const {
    return [this](std::span<const double> x, std::span<double> y) { a_.multiply(x, y); };
}

Preconditioner SpdSystem::preconditioner() const {
    return [this](std::span<const double> r, std::span<double> z) { ic_.apply(r, z); };
}

KrylovResult SpdSystem::solve(std::span<const double> b, std::span<double> x, double rel_tol, int max_iter) const {
    return conjugate_gradient(op(), preconditioner(), b, x, rel_tol, max_iter);
}

}  // namespace fbp
