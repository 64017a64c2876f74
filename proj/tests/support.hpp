#pragma once

#include <random>
#include <vector>

#include "opcalc/chain.hpp"
#include "opcalc/linalg.hpp"

namespace testsupport {

using namespace opcalc;

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240611);
    return g;
}

inline std::int64_t rand_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng());
}

/// Random sparse matrix with small integer entries.
inline Matrix random_matrix(const Field& F, std::size_t rows, std::size_t cols, double density = 0.4) {
    std::bernoulli_distribution keep(density);
    Matrix m(F, rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (keep(rng())) m.set(i, j, F.from_int(rand_int(-3, 3)));
    return m;
}

/// Dense Bareiss elimination over mpq, column-major pivot search from the
/// last column. Shares no code with the sparse engine.
inline std::size_t dense_rank(const Matrix& A) {
    std::size_t r = A.rows(), c = A.cols();
    std::uint32_t p = A.field().characteristic();
    std::vector<std::vector<mpz_class>> a(r, std::vector<mpz_class>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (const auto& [j, v] : A.row(i)) {
            mpq_class q = v.to_mpq();
            a[i][j] = q.get_num();  // test matrices are integral
        }
    auto is_zero = [&](const mpz_class& z) { return p == 0 ? z == 0 : z % p == 0; };
    std::size_t rank = 0;
    for (std::size_t jj = c; jj-- > 0 && rank < r;) {
        std::size_t piv = r;
        for (std::size_t i = rank; i < r; ++i)
            if (!is_zero(a[i][jj])) { piv = i; break; }
        if (piv == r) continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t i = rank + 1; i < r; ++i) {
            mpz_class f = a[i][jj], g = a[rank][jj];
            for (std::size_t k = 0; k < c; ++k) {
                a[i][k] = a[i][k] * g - a[rank][k] * f;
                if (p) a[i][k] %= p;
            }
        }
        ++rank;
    }
    return rank;
}


/// Inverse of an invertible square matrix, column by column.
inline Matrix inverse(const Matrix& P) {
    std::vector<SparseVec> cols;
    for (Index j = 0; j < P.rows(); ++j) cols.push_back(*solve(P, unit_vec(P.field(), j)));
    return Matrix::from_columns(P.field(), P.cols(), cols);
}

/// Random invertible matrix: unit lower times unit upper triangular.
inline Matrix random_invertible(const Field& F, std::size_t n) {
    Matrix L = Matrix::identity(F, n), U = Matrix::identity(F, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (rand_int(0, 2) == 0) L.set(i, j, F.from_int(rand_int(-2, 2)));
            if (rand_int(0, 2) == 0) U.set(j, i, F.from_int(rand_int(-2, 2)));
        }
    return L * U;
}

struct RandomComplex {
    ChainComplex complex;
    Betti betti;
};

/// Sum of lines and contractible pairs in degrees [lo, hi], conjugated by
/// random changes of basis. The Betti numbers are known by construction.
inline RandomComplex random_complex(const Field& F, int lo, int hi, int max_pieces = 3) {
    std::vector<std::size_t> dims(hi - lo + 1, 0);
    std::vector<std::vector<std::pair<Index, Index>>> pairs(hi - lo + 1);  // (source idx in d, target idx in d-1)
    Betti b;
    for (int d = lo; d <= hi; ++d) b[d] = 0;
    for (int d = lo; d <= hi; ++d) {
        int lines = static_cast<int>(rand_int(0, max_pieces));
        dims[d - lo] += lines;
        b[d] += lines;
        if (d > lo) {
            int cps = static_cast<int>(rand_int(0, max_pieces - 1));
            for (int c = 0; c < cps; ++c)
                pairs[d - lo].push_back({static_cast<Index>(dims[d - lo]++), static_cast<Index>(dims[d - lo - 1]++)});
        }
    }
    std::vector<Matrix> P, Pinv;
    for (int d = lo; d <= hi; ++d) {
        P.push_back(random_invertible(F, dims[d - lo]));
        Pinv.push_back(inverse(P.back()));
    }
    std::vector<Matrix> diffs;
    for (int d = lo; d <= hi; ++d) {
        std::size_t below = d > lo ? dims[d - lo - 1] : 0;
        Matrix m(F, below, dims[d - lo]);
        for (auto [s, t] : pairs[d - lo]) m.set(t, s, F.from_int(1));
        if (d > lo) m = P[d - lo - 1] * m * Pinv[d - lo];
        diffs.push_back(m);
    }
    RandomComplex out{ChainComplex(F, lo, dims, diffs), {}};
    for (auto [d, v] : b)
        if (d >= out.complex.dmin() && d <= out.complex.dmax()) out.betti[d] = v;
    return out;
}

/// Random element of the space of chain maps S -> T, found as a kernel.
inline ChainMap random_chain_map(const ChainComplex& S, const ChainComplex& T) {
    const Field F = S.field();
    if (S.empty()) return ChainMap::zero(S, T);
    std::vector<std::size_t> off(S.dmax() - S.dmin() + 2, 0);
    for (int d = S.dmin(); d <= S.dmax(); ++d) off[d - S.dmin() + 1] = off[d - S.dmin()] + T.dim(d) * S.dim(d);
    auto var = [&](int d, std::size_t a, std::size_t b) { return static_cast<Index>(off[d - S.dmin()] + a * S.dim(d) + b); };
    std::vector<SparseVec> rows;
    for (int d = S.dmin(); d <= S.dmax() + 1; ++d) {
        Matrix dT = T.d(d), dS = S.d(d);
        for (std::size_t i = 0; i < T.dim(d - 1); ++i)
            for (std::size_t j = 0; j < S.dim(d); ++j) {
                std::vector<std::pair<Index, Scalar>> eq;
                if (d <= S.dmax())
                    for (const auto& [a, c] : dT.row(i)) eq.emplace_back(var(d, a, j), c);
                if (d - 1 >= S.dmin())
                    for (const auto& [bb, c] : S.d_col(d, static_cast<Index>(j))) eq.emplace_back(var(d - 1, i, bb), F.neg(c));
                if (!eq.empty()) rows.push_back(collect(F, eq));
            }
    }
    Matrix A(F, rows.size(), off.back());
    for (std::size_t r = 0; r < rows.size(); ++r) A.set_row(r, rows[r]);
    Matrix K = kernel_basis(A);
    SparseVec x;
    std::vector<SparseVec> cols = K.columns();
    for (const auto& c : cols) axpy(F, x, F.from_int(rand_int(-2, 2)), c);
    std::vector<Matrix> comps;
    for (int d = S.dmin(); d <= S.dmax(); ++d) comps.emplace_back(F, T.dim(d), S.dim(d));
    for (const auto& [v, c] : x) {
        std::size_t blk = 0;
        while (off[blk + 1] <= v) ++blk;
        int d = S.dmin() + static_cast<int>(blk);
        std::size_t local = v - off[blk];
        comps[blk].set(local / S.dim(d), local % S.dim(d), c);
    }
    return ChainMap(S, T, comps);
}

}  // namespace testsupport
