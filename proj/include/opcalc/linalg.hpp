#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "opcalc/field.hpp"

namespace opcalc {

using Index = std::uint32_t;

/// Sparse vector: (index, value) pairs sorted by index, no stored zeros.
using SparseVec = std::vector<std::pair<Index, Scalar>>;

/// y += a * x
void axpy(const Field& F, SparseVec& y, const Scalar& a, const SparseVec& x);
SparseVec scaled(const Field& F, const SparseVec& x, const Scalar& a);
SparseVec add(const Field& F, const SparseVec& x, const SparseVec& y);
SparseVec sub(const Field& F, const SparseVec& x, const SparseVec& y);
/// Builds a sorted vector from unsorted (possibly repeated) entries.
SparseVec collect(const Field& F, std::vector<std::pair<Index, Scalar>> entries);
SparseVec unit_vec(const Field& F, Index i);

/// Sparse matrix with row-major storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(Field F, std::size_t rows, std::size_t cols);

    static Matrix identity(Field F, std::size_t n);
    static Matrix zero(Field F, std::size_t rows, std::size_t cols) { return Matrix(F, rows, cols); }
    /// Each column given as a sparse vector of row entries.
    static Matrix from_columns(Field F, std::size_t rows, const std::vector<SparseVec>& cols);
    static Matrix from_dense(Field F, const std::vector<std::vector<std::int64_t>>& rows);

    const Field& field() const { return field_; }
    std::size_t rows() const { return row_data_.size(); }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const;

    const SparseVec& row(std::size_t i) const { return row_data_[i]; }
    void set_row(std::size_t i, SparseVec r);
    Scalar get(std::size_t i, std::size_t j) const;
    void set(std::size_t i, std::size_t j, const Scalar& v);
    void add_to(std::size_t i, std::size_t j, const Scalar& v);

    Matrix transpose() const;
    std::vector<SparseVec> columns() const;
    /// A * x for a sparse column vector x (length cols()).
    SparseVec apply(const SparseVec& x) const;
    bool is_zero() const;

    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator+(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    Matrix scaled(const Scalar& s) const;
    friend bool operator==(const Matrix& a, const Matrix& b);

private:
    Field field_;
    std::size_t cols_ = 0;
    std::vector<SparseVec> row_data_;
};

/// Incremental row echelon form. Pivot of a row is its smallest column
/// index; pivot rows are normalized to leading coefficient 1. Insertion
/// order and lexicographic pivots make results deterministic.
class Echelon {
public:
    explicit Echelon(Field F, std::size_t width = 0) : field_(F), width_(width) {}

    /// Reduces r against the pivot rows (leading terms only) and stores it
    /// if independent. Returns true iff the rank grew.
    bool insert(SparseVec r);
    /// Fully reduces v: afterwards no entry of v sits in a pivot column.
    void reduce_full(SparseVec& v) const;
    bool in_span(SparseVec v) const;

    std::size_t rank() const { return rows_.size(); }
    bool is_pivot(Index col) const { return pivot_of_.count(col) != 0; }
    const std::vector<SparseVec>& rows() const { return rows_; }
    /// Pivot columns in increasing order.
    std::vector<Index> pivots() const;
    /// Back-substitutes so that each pivot column has a single nonzero.
    void make_reduced();

private:
    void reduce_leading(SparseVec& r) const;

    Field field_;
    std::size_t width_;
    std::vector<SparseVec> rows_;
    std::unordered_map<Index, std::size_t> pivot_of_;
};

std::size_t rank(const Matrix& A);
/// Columns form a basis of ker(A); one column per non-pivot column of
/// the reduced row echelon form of A.
Matrix kernel_basis(const Matrix& A);
/// Some x with A x = b, or nullopt when b is outside the column space.
std::optional<SparseVec> solve(const Matrix& A, const SparseVec& b);

/// A subspace quotient: Q = ambient / span(relations). The complement basis
/// consists of the non-pivot standard basis vectors of the ambient space.
class Quotient {
public:
    Quotient(Field F, std::size_t ambient_dim, const std::vector<SparseVec>& relations);

    std::size_t dim() const { return kept_.size(); }
    std::size_t ambient_dim() const { return ambient_; }
    /// Ambient index of the i-th quotient basis vector.
    Index representative(std::size_t i) const { return kept_[i]; }
    /// Coordinates of the class of v in the quotient basis.
    SparseVec project(SparseVec v) const;
    /// Coordinates of the class of ambient basis vector j.
    SparseVec project_basis(Index j) const;
    const Echelon& relations() const { return ech_; }

private:
    Field field_;
    std::size_t ambient_;
    Echelon ech_;
    std::vector<Index> kept_;
    std::vector<std::int64_t> position_;  // ambient index -> quotient index or -1
};

}  // namespace opcalc
