#include "opcalc/random_fixtures.hpp"

namespace opcalc {

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

ChainComplex build(const Field& F, std::mt19937_64& rng, int lo, int hi, int max_pieces, bool lines) {
    std::vector<std::size_t> dims(hi - lo + 1, 0);
    std::vector<std::vector<std::pair<Index, Index>>> pairs(hi - lo + 1);
    for (int d = lo; d <= hi; ++d) {
        if (lines) dims[d - lo] += uniform(rng, 0, max_pieces);
        if (d > lo)
            for (int c = uniform(rng, 0, max_pieces); c > 0; --c)
                pairs[d - lo].push_back({static_cast<Index>(dims[d - lo]++), static_cast<Index>(dims[d - lo - 1]++)});
    }
    std::vector<Matrix> diffs;
    for (int d = lo; d <= hi; ++d) {
        Matrix m(F, d > lo ? dims[d - lo - 1] : 0, dims[d - lo]);
        for (auto [s, t] : pairs[d - lo]) m.set(t, s, F.from_int(1));
        diffs.push_back(std::move(m));
    }
    return ChainComplex(F, lo, dims, diffs);
}

}  // namespace

ChainComplex random_complex(const Field& F, std::mt19937_64& rng, int lo, int hi, int max_pieces) {
    return build(F, rng, lo, hi, max_pieces, true);
}

ChainComplex random_acyclic(const Field& F, std::mt19937_64& rng, int lo, int hi, int max_pieces) {
    return build(F, rng, lo, hi, max_pieces, false);
}

ChainMap random_chain_map(const ChainComplex& S, const ChainComplex& T, std::mt19937_64& rng) {
    const Field F = S.field();
    if (S.empty() || T.empty()) return ChainMap::zero(S, T);
    // Unknown (d, a, b) is entry (a, b) of the degree-d component.
    std::vector<std::size_t> off(S.dmax() - S.dmin() + 2, 0);
    for (int d = S.dmin(); d <= S.dmax(); ++d) off[d - S.dmin() + 1] = off[d - S.dmin()] + T.dim(d) * S.dim(d);
    auto var = [&](int d, std::size_t a, std::size_t b) { return static_cast<Index>(off[d - S.dmin()] + a * S.dim(d) + b); };
    std::vector<SparseVec> rows;
    for (int d = S.dmin(); d <= S.dmax() + 1; ++d) {
        Matrix dT = T.d(d);
        for (std::size_t i = 0; i < T.dim(d - 1); ++i)
            for (std::size_t j = 0; j < S.dim(d); ++j) {
                std::vector<std::pair<Index, Scalar>> eq;
                if (d <= S.dmax())
                    for (const auto& [a, c] : dT.row(i)) eq.emplace_back(var(d, a, j), c);
                if (d - 1 >= S.dmin())
                    for (const auto& [b, c] : S.d_col(d, static_cast<Index>(j))) eq.emplace_back(var(d - 1, i, b), F.neg(c));
                SparseVec row = collect(F, std::move(eq));
                if (!row.empty()) rows.push_back(std::move(row));
            }
    }
    Matrix A(F, rows.size(), off.back());
    for (std::size_t r = 0; r < rows.size(); ++r) A.set_row(r, rows[r]);
    SparseVec x;
    for (const auto& c : kernel_basis(A).columns()) axpy(F, x, F.from_int(uniform(rng, -2, 2)), c);
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

ChainMap random_injection(const ChainComplex& C, std::mt19937_64& rng, bool quasi_iso) {
    const Field F = C.field();
    int lo = C.empty() ? 0 : C.dmin(), hi = C.empty() ? 2 : C.dmax();
    ChainComplex W = quasi_iso ? random_acyclic(F, rng, lo, hi + 1) : random_complex(F, rng, lo, hi + 1);
    DirectSum ds = direct_sum({C, W});
    // c -> (s c, ψ c) with ψ: C -> W a random chain map.
    ChainMap psi = random_chain_map(C, W, rng);
    Scalar s = F.from_int(uniform(rng, 1, 3));
    return ds.inclusions[0].scaled(s) + compose(ds.inclusions[1], psi);
}

PushoutTrial pushout_corner_trial(const Field& F, std::mt19937_64& rng) {
    PushoutTrial t;
    bool qi = uniform(rng, 0, 1) == 1;
    ChainComplex M = random_complex(F, rng, 0, 2);
    ChainComplex A = random_complex(F, rng, 0, 2);
    ChainMap f1 = random_injection(M, rng, qi);
    ChainMap f2 = random_injection(A, rng, uniform(rng, 0, 1) == 1);
    PushoutCorner pc = pushout_corner_map(tensor_square(f1, f2));
    t.f1_quasi_iso = is_quasi_iso(f1);
    t.corner_injective = is_injective(pc.corner);
    t.corner_quasi_iso = is_quasi_iso(pc.corner);
    return t;
}

}  // namespace opcalc
