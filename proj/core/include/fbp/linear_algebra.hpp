#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fbp/grid.hpp"

namespace fbp {

/// y = A x on node vectors.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;
/// z = M^{-1} r for a symmetric positive definite M.
using Preconditioner = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Sequential dot product (fixed order).
double dot(std::span<const double> a, std::span<const double> b);

/// Compressed sparse row matrix.
class SparseMatrix {
public:
    struct Triplet {
        size_t row;
        size_t col;
        double value;
    };

    SparseMatrix() = default;
    /// Duplicate entries are summed.
    SparseMatrix(size_t n, std::vector<Triplet> entries);

    size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    size_t nonzeros() const { return cols_.size(); }
    void multiply(std::span<const double> x, std::span<double> y) const;
    double at(size_t row, size_t col) const;
    std::vector<double> diagonal() const;

    const std::vector<size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<size_t>& cols() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

private:
    std::vector<size_t> row_ptr_;
    std::vector<size_t> cols_;
    std::vector<double> vals_;
};

/// -L^h as a matrix over all nodes: interior rows couple interior nodes only,
/// boundary rows are identity rows.
SparseMatrix assemble_neg_laplacian(const HorizontalOperators& ops);

/// Connected components of the off-diagonal nonzero pattern (A symmetric).
/// Labels run from 0 in order of each component's first row.
std::vector<int> connected_components(const SparseMatrix& a, int& count);

/// Zero fill-in incomplete Cholesky factor of an SPD matrix, with a diagonal
/// shift retried on pivot breakdown.
class IncompleteCholesky {
public:
    explicit IncompleteCholesky(const SparseMatrix& a);
    void apply(std::span<const double> r, std::span<double> z) const;
    double shift() const { return shift_; }

private:
    bool factor(const SparseMatrix& a, double shift);

    // Strictly lower part of the factor by rows, and its diagonal.
    std::vector<size_t> row_ptr_;
    std::vector<size_t> cols_;
    std::vector<double> vals_;
    std::vector<double> diag_;
    double shift_ = 0.0;
};

/// Preconditioned conjugate gradients for SPD A. x holds the initial guess.
KrylovResult conjugate_gradient(const LinearOperator& A, const Preconditioner& M, std::span<const double> b,
                                std::span<double> x, double rel_tol, int max_iter);

/// Preconditioned MINRES for symmetric, possibly indefinite A with SPD M.
/// x holds the initial guess.
KrylovResult minres(const LinearOperator& A, const Preconditioner& M, std::span<const double> b, std::span<double> x,
                    double rel_tol, int max_iter);

/// A symmetric positive definite operator with its incomplete Cholesky
/// preconditioner, solved by conjugate gradients.
class SpdSystem {
public:
    explicit SpdSystem(SparseMatrix a);

    const SparseMatrix& matrix() const { return a_; }
    void apply(std::span<const double> x, std::span<double> y) const { a_.multiply(x, y); }
    void precondition(std::span<const double> r, std::span<double> z) const { ic_.apply(r, z); }
    LinearOperator op() const;
    Preconditioner preconditioner() const;
    /// Warm start from x.
    KrylovResult solve(std::span<const double> b, std::span<double> x, double rel_tol, int max_iter) const;

private:
    SparseMatrix a_;
    IncompleteCholesky ic_;
};

}  // namespace fbp
