#include "opcalc/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace opcalc {

void axpy(const Field& F, SparseVec& y, const Scalar& a, const SparseVec& x) {
    if (a.is_zero() || x.empty()) return;
    SparseVec out;
    out.reserve(y.size() + x.size());
    std::size_t i = 0, j = 0;
    while (i < y.size() || j < x.size()) {
        if (j == x.size() || (i < y.size() && y[i].first < x[j].first)) {
            out.push_back(std::move(y[i++]));
        } else if (i == y.size() || x[j].first < y[i].first) {
            out.emplace_back(x[j].first, F.mul(a, x[j].second));
            ++j;
        } else {
            Scalar s = F.add(y[i].second, F.mul(a, x[j].second));
            if (!s.is_zero()) out.emplace_back(y[i].first, std::move(s));
            ++i;
            ++j;
        }
    }
    y.swap(out);
}

SparseVec scaled(const Field& F, const SparseVec& x, const Scalar& a) {
    SparseVec out;
    if (a.is_zero()) return out;
    out.reserve(x.size());
    for (const auto& [i, v] : x) out.emplace_back(i, F.mul(a, v));
    return out;
}

SparseVec add(const Field& F, const SparseVec& x, const SparseVec& y) {
    SparseVec out = x;
    axpy(F, out, F.from_int(1), y);
    return out;
}

SparseVec sub(const Field& F, const SparseVec& x, const SparseVec& y) {
    SparseVec out = x;
    axpy(F, out, F.from_int(-1), y);
    return out;
}

SparseVec collect(const Field& F, std::vector<std::pair<Index, Scalar>> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseVec out;
    out.reserve(entries.size());
    for (auto& e : entries) {
        if (!out.empty() && out.back().first == e.first) {
            out.back().second = F.add(out.back().second, e.second);
            if (out.back().second.is_zero()) out.pop_back();
        } else if (!e.second.is_zero()) {
            out.push_back(std::move(e));
        }
    }
    return out;
}

SparseVec unit_vec(const Field& F, Index i) { return SparseVec{{i, F.from_int(1)}}; }

// ---------------------------------------------------------------------------

Matrix::Matrix(Field F, std::size_t rows, std::size_t cols) : field_(F), cols_(cols), row_data_(rows) {}

Matrix Matrix::identity(Field F, std::size_t n) {
    Matrix m(F, n, n);
    for (std::size_t i = 0; i < n; ++i) m.row_data_[i] = unit_vec(F, static_cast<Index>(i));
    return m;
}

Matrix Matrix::from_columns(Field F, std::size_t rows, const std::vector<SparseVec>& cols) {
    Matrix m(F, rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (const auto& [i, v] : cols[j]) {
            if (i >= rows) throw std::out_of_range("Matrix::from_columns: row index out of range");
            m.row_data_[i].emplace_back(static_cast<Index>(j), v);
        }
    return m;
}

Matrix Matrix::from_dense(Field F, const std::vector<std::vector<std::int64_t>>& rows) {
    std::size_t c = rows.empty() ? 0 : rows.front().size();
    Matrix m(F, rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != c) throw std::invalid_argument("Matrix::from_dense: ragged rows");
        for (std::size_t j = 0; j < c; ++j) {
            Scalar v = F.from_int(rows[i][j]);
            if (!v.is_zero()) m.row_data_[i].emplace_back(static_cast<Index>(j), v);
        }
    }
    return m;
}

std::size_t Matrix::nnz() const {
    std::size_t n = 0;
    for (const auto& r : row_data_) n += r.size();
    return n;
}

void Matrix::set_row(std::size_t i, SparseVec r) {
    if (!r.empty() && r.back().first >= cols_) throw std::out_of_range("Matrix::set_row: column out of range");
    row_data_.at(i) = std::move(r);
}

Scalar Matrix::get(std::size_t i, std::size_t j) const {
    const auto& r = row_data_.at(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const auto& e, std::size_t c) { return e.first < c; });
    if (it != r.end() && it->first == j) return it->second;
    return Scalar();
}

void Matrix::set(std::size_t i, std::size_t j, const Scalar& v) {
    if (j >= cols_) throw std::out_of_range("Matrix::set: column out of range");
    auto& r = row_data_.at(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const auto& e, std::size_t c) { return e.first < c; });
    if (it != r.end() && it->first == j) {
        if (v.is_zero())
            r.erase(it);
        else
            it->second = v;
    } else if (!v.is_zero()) {
        r.insert(it, {static_cast<Index>(j), v});
    }
}

void Matrix::add_to(std::size_t i, std::size_t j, const Scalar& v) { set(i, j, field_.add(get(i, j), v)); }

Matrix Matrix::transpose() const {
    Matrix t(field_, cols_, rows());
    for (std::size_t i = 0; i < rows(); ++i)
        for (const auto& [j, v] : row_data_[i]) t.row_data_[j].emplace_back(static_cast<Index>(i), v);
    return t;
}

std::vector<SparseVec> Matrix::columns() const {
    std::vector<SparseVec> cols(cols_);
    for (std::size_t i = 0; i < rows(); ++i)
        for (const auto& [j, v] : row_data_[i]) cols[j].emplace_back(static_cast<Index>(i), v);
    return cols;
}

SparseVec Matrix::apply(const SparseVec& x) const {
    if (!x.empty() && x.back().first >= cols_) throw std::out_of_range("Matrix::apply: vector too long");
    SparseVec out;
    for (std::size_t i = 0; i < rows(); ++i) {
        const auto& r = row_data_[i];
        Scalar acc;
        std::size_t a = 0, b = 0;
        while (a < r.size() && b < x.size()) {
            if (r[a].first < x[b].first)
                ++a;
            else if (x[b].first < r[a].first)
                ++b;
            else {
                acc = field_.add(acc, field_.mul(r[a].second, x[b].second));
                ++a;
                ++b;
            }
        }
        if (!acc.is_zero()) out.emplace_back(static_cast<Index>(i), acc);
    }
    return out;
}

bool Matrix::is_zero() const {
    for (const auto& r : row_data_)
        if (!r.empty()) return false;
    return true;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("Matrix*: dimension mismatch");
    require_same_field(a.field_, b.field_, "Matrix*");
    Matrix c(a.field_, a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        SparseVec acc;
        for (const auto& [k, v] : a.row_data_[i]) axpy(a.field_, acc, v, b.row_data_[k]);
        c.row_data_[i] = std::move(acc);
    }
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("Matrix+: dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(a.field_, c.row_data_[i], a.field_.from_int(1), b.row_data_[i]);
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("Matrix-: dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(a.field_, c.row_data_[i], a.field_.from_int(-1), b.row_data_[i]);
    return c;
}

Matrix Matrix::scaled(const Scalar& s) const {
    Matrix c(field_, rows(), cols_);
    for (std::size_t i = 0; i < rows(); ++i) c.row_data_[i] = opcalc::scaled(field_, row_data_[i], s);
    return c;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.field_ == b.field_ && a.cols_ == b.cols_ && a.row_data_ == b.row_data_;
}

// ---------------------------------------------------------------------------

void Echelon::reduce_leading(SparseVec& r) const {
    while (!r.empty()) {
        auto it = pivot_of_.find(r.front().first);
        if (it == pivot_of_.end()) break;
        Scalar c = field_.neg(r.front().second);
        axpy(field_, r, c, rows_[it->second]);
    }
}

bool Echelon::insert(SparseVec r) {
    reduce_leading(r);
    if (r.empty()) return false;
    Scalar lead_inv = field_.inv(r.front().second);
    if (!lead_inv.is_one()) r = opcalc::scaled(field_, r, lead_inv);
    pivot_of_.emplace(r.front().first, rows_.size());
    rows_.push_back(std::move(r));
    return true;
}

void Echelon::reduce_full(SparseVec& v) const {
    std::size_t i = 0;
    while (i < v.size()) {
        auto it = pivot_of_.find(v[i].first);
        if (it == pivot_of_.end()) {
            ++i;
            continue;
        }
        Scalar c = field_.neg(v[i].second);
        axpy(field_, v, c, rows_[it->second]);
    }
}

bool Echelon::in_span(SparseVec v) const {
    reduce_full(v);
    return v.empty();
}

std::vector<Index> Echelon::pivots() const {
    std::vector<Index> p;
    p.reserve(rows_.size());
    for (const auto& r : rows_) p.push_back(r.front().first);
    std::sort(p.begin(), p.end());
    return p;
}

void Echelon::make_reduced() {
    std::vector<std::size_t> order(rows_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rows_[a].front().first > rows_[b].front().first; });
    for (std::size_t idx : order) {
        SparseVec& r = rows_[idx];
        SparseVec tail(r.begin() + 1, r.end());
        reduce_full(tail);
        SparseVec out;
        out.reserve(tail.size() + 1);
        out.push_back(r.front());
        out.insert(out.end(), std::make_move_iterator(tail.begin()), std::make_move_iterator(tail.end()));
        r.swap(out);
    }
}

std::size_t rank(const Matrix& A) {
    // Sparser rows first keeps fill-in down; ties broken by row index.
    std::vector<std::size_t> order(A.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return A.row(a).size() < A.row(b).size(); });
    Echelon e(A.field(), A.cols());
    for (std::size_t i : order) e.insert(A.row(i));
    return e.rank();
}

Matrix kernel_basis(const Matrix& A) {
    const Field& F = A.field();
    Echelon e(F, A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) e.insert(A.row(i));
    e.make_reduced();
    std::vector<std::int64_t> kernel_col(A.cols(), -1);
    std::size_t k = 0;
    for (std::size_t j = 0; j < A.cols(); ++j)
        if (!e.is_pivot(static_cast<Index>(j))) kernel_col[j] = static_cast<std::int64_t>(k++);
    std::vector<std::vector<std::pair<Index, Scalar>>> cols(k);
    for (std::size_t j = 0; j < A.cols(); ++j)
        if (kernel_col[j] >= 0) cols[kernel_col[j]].emplace_back(static_cast<Index>(j), F.from_int(1));
    for (const auto& r : e.rows()) {
        Index p = r.front().first;
        for (std::size_t t = 1; t < r.size(); ++t) {
            std::int64_t kc = kernel_col[r[t].first];
            if (kc >= 0) cols[kc].emplace_back(p, F.neg(r[t].second));
        }
    }
    std::vector<SparseVec> basis;
    basis.reserve(k);
    for (auto& c : cols) basis.push_back(collect(F, std::move(c)));
    return Matrix::from_columns(F, A.cols(), basis);
}

std::optional<SparseVec> solve(const Matrix& A, const SparseVec& b) {
    const Field& F = A.field();
    if (!b.empty() && b.back().first >= A.rows()) throw std::invalid_argument("solve: dim(b) != rows(A)");
    const Index n = static_cast<Index>(A.cols());
    Echelon e(F, A.cols() + 1);
    std::size_t bi = 0;
    for (std::size_t i = 0; i < A.rows(); ++i) {
        SparseVec r = A.row(i);
        while (bi < b.size() && b[bi].first < i) ++bi;
        if (bi < b.size() && b[bi].first == i) r.emplace_back(n, b[bi].second);
        e.insert(std::move(r));
    }
    if (e.is_pivot(n)) return std::nullopt;
    e.make_reduced();
    std::vector<std::pair<Index, Scalar>> x;
    for (const auto& r : e.rows())
        if (r.back().first == n) x.emplace_back(r.front().first, r.back().second);
    return collect(F, std::move(x));
}

// ---------------------------------------------------------------------------

Quotient::Quotient(Field F, std::size_t ambient_dim, const std::vector<SparseVec>& relations)
    : field_(F), ambient_(ambient_dim), ech_(F, ambient_dim), position_(ambient_dim, -1) {
    for (const auto& r : relations) ech_.insert(r);
    ech_.make_reduced();
    for (std::size_t j = 0; j < ambient_dim; ++j)
        if (!ech_.is_pivot(static_cast<Index>(j))) {
            position_[j] = static_cast<std::int64_t>(kept_.size());
            kept_.push_back(static_cast<Index>(j));
        }
}

SparseVec Quotient::project(SparseVec v) const {
    ech_.reduce_full(v);
    for (auto& e : v) e.first = static_cast<Index>(position_[e.first]);
    return v;
}

SparseVec Quotient::project_basis(Index j) const { return project(unit_vec(field_, j)); }

}  // namespace opcalc
