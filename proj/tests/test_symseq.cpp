#include <doctest.h>
#include <gmpxx.h>

#include "opcalc/symseq.hpp"
#include "support.hpp"

using namespace opcalc;
using namespace testsupport;

namespace {

Field Q;

SymSeq unit_seq(const Field& F, int cap) {
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n)
        lv.push_back(n == 1 ? trivial_rep(ChainComplex::line(F, 0), 1) : SymRep{ChainComplex::zero(F), {}});
    return SymSeq::symmetric(F, lv);
}

// Trivial-rep field in degree 0 at arities 1..top.
SymSeq com_like(const Field& F, int cap, int top) {
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n)
        lv.push_back(n >= 1 && n <= top ? trivial_rep(ChainComplex::line(F, 0), n) : SymRep{ChainComplex::zero(F), {}});
    return SymSeq::symmetric(F, lv);
}

// A sequence with odd-degree classes and nontrivial signs: level n is V^{⊗n}
// for V = k in degree 1 plus k in degree 0 (no differential).
SymSeq tensor_seq(const Field& F, int cap, bool reduced = true) {
    ChainComplex V(F, 0, {1, 1}, {Matrix(F, 0, 1), Matrix(F, 1, 1)});
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n)
        lv.push_back(n == 0 && reduced ? SymRep{ChainComplex::zero(F), {}} : tensor_power_rep(V, n));
    return SymSeq::symmetric(F, lv);
}

// Planar sequence with P(1) = k (deg 0), P(2) = contractible pair in degrees 1,2.
SymSeq planar_seq(const Field& F, int cap) {
    std::vector<ChainComplex> lv;
    for (int n = 0; n <= cap; ++n) {
        if (n == 1)
            lv.push_back(ChainComplex::line(F, 0));
        else if (n == 2)
            lv.push_back(ChainComplex(F, 1, {1, 1}, {Matrix(F, 0, 1), Matrix::identity(F, 1)}));
        else if (n == 3)
            lv.push_back(ChainComplex::line(F, 1));
        else
            lv.push_back(ChainComplex::zero(F));
    }
    return SymSeq::planar(F, lv);
}

bool same_rep(const SymRep& a, const SymRep& b) {
    const ChainComplex &A = a.complex, &B = b.complex;
    if (A.empty() || B.empty()) return A.total_dim() == 0 && B.total_dim() == 0;
    if (A.dmin() != B.dmin() || A.dmax() != B.dmax() || a.tau.size() != b.tau.size()) return false;
    for (int d = A.dmin(); d <= A.dmax(); ++d) {
        if (!(A.d(d) == B.d(d))) return false;
        for (std::size_t i = 0; i < a.tau.size(); ++i)
            if (!(a.tau[i].at(d) == b.tau[i].at(d))) return false;
    }
    return true;
}

// Exponential generating function oracle: sum over n of dim X(n)_d t^n u^d / n!,
// stored as coef[n][d].
using EGF = std::vector<std::map<int, mpq_class>>;

EGF egf(const SymSeq& X, int cap) {
    EGF f(cap + 1);
    mpz_class fact = 1;
    for (int n = 0; n <= cap; ++n) {
        if (n) fact *= n;
        const ChainComplex& C = X.base(n);
        if (C.empty()) continue;
        for (int d = C.dmin(); d <= C.dmax(); ++d)
            if (X.dim(n, d)) {
                mpq_class q(mpz_class(static_cast<unsigned long>(X.dim(n, d))), fact);
                q.canonicalize();
                f[n][d] = q;
            }
    }
    return f;
}

EGF mul(const EGF& a, const EGF& b, int cap) {
    EGF c(cap + 1);
    for (int i = 0; i <= cap; ++i)
        for (int j = 0; i + j <= cap; ++j)
            for (auto& [d1, x] : a[i])
                for (auto& [d2, y] : b[j]) c[i + j][d1 + d2] += x * y;
    return c;
}

// Substitution f(g(t)), g without constant term.
EGF substitute(const EGF& f, const EGF& g, int cap) {
    EGF out(cap + 1), pw(cap + 1);
    pw[0][0] = 1;
    for (int r = 0; r <= cap; ++r) {
        for (auto& [d, x] : f[r])
            for (int n = 0; n <= cap; ++n)
                for (auto& [e, y] : pw[n]) out[n][d + e] += x * y;
        pw = mul(pw, g, cap);
    }
    return out;
}

void check_dims_against_egf(const SymSeq& X, const SymSeq& Y, int cap) {
    auto [XY, w] = compose(X, Y, cap);
    EGF expect = substitute(egf(X, cap), egf(Y, cap), cap);
    EGF got = egf(XY, cap);
    for (int n = 0; n <= cap; ++n) {
        std::map<int, mpq_class> e, g;
        for (auto& [d, v] : expect[n])
            if (v != 0) e[d] = v;
        for (auto& [d, v] : got[n])
            if (v != 0) g[d] = v;
        CHECK(e == g);
    }
}

}  // namespace

TEST_CASE("coinvariants examples") {
    auto C = random_complex(Q, 0, 2).complex;
    Cokernel triv = coinvariants(trivial_rep(C, 3));
    CHECK(triv.complex.total_dim() == C.total_dim());
    CHECK(triv.projection == ChainMap::identity(C));

    // Regular representation of Σ_2 in degree 0.
    ChainComplex k2(Q, 0, {2}, {Matrix(Q, 0, 2)});
    SymRep reg{k2, {ChainMap::from_images(k2, k2, [](int, Index j) { return unit_vec(Field(), 1 - j); })}};
    reg.validate();
    CHECK(coinvariants(reg).complex.total_dim() == 1);

    // V^{⊗2} with |v| = 1 over Q: v⊗v ~ -v⊗v.
    SymRep sq = tensor_power_rep(ChainComplex::line(Q, 1), 2);
    sq.validate();
    CHECK(coinvariants(sq).complex.total_dim() == 0);
    Field F2 = Field::prime(2);
    CHECK(coinvariants(tensor_power_rep(ChainComplex::line(F2, 1), 2)).complex.total_dim() == 1);
}

TEST_CASE("SymRep validation catches broken relations") {
    ChainComplex k2(Q, 0, {2}, {Matrix(Q, 0, 2)});
    ChainMap twice = ChainMap::identity(k2).scaled(Q.from_int(2));
    CHECK_THROWS_AS((SymRep{k2, {twice}}.validate()), InvariantViolation);
    ChainComplex k3(Q, 0, {3}, {Matrix(Q, 0, 3)});
    // Two generators that each square to one but violate the braid relation.
    ChainMap a = ChainMap::from_images(k3, k3, [](int, Index j) { return unit_vec(Field(), j == 2 ? 2 : 1 - j); });
    ChainMap b = ChainMap::from_images(k3, k3, [](int, Index j) { return unit_vec(Field(), j); });
    CHECK_THROWS_AS((SymRep{k3, {a, b}}.validate()), InvariantViolation);
}

TEST_CASE("compose unit laws") {
    const int cap = 4;
    SymSeq I = unit_seq(Q, cap);
    for (const SymSeq& X : {tensor_seq(Q, cap, false), com_like(Q, cap, 3), planar_seq(Q, cap)}) {
        auto [XI, w1] = compose(X, I, cap);
        for (int n = 0; n <= cap; ++n) CHECK(same_rep(XI.rep(n), X.rep(n)));
        if (!X.reduced()) continue;
        auto [IX, w2] = compose(I, X, cap);
        for (int n = 0; n <= cap; ++n) CHECK(same_rep(IX.rep(n), X.rep(n)));
    }
}

TEST_CASE("compose of trivial-rep fields counts set partitions") {
    SymSeq X = com_like(Q, 3, 3);
    auto [XY, w] = compose(X, X, 3);
    CHECK(XY.dim(1, 0) == 1);
    CHECK(XY.dim(2, 0) == 2);
    CHECK(XY.dim(3, 0) == 5);
    CHECK(set_partitions(3, 3, 3).size() == 5);
    CHECK(set_partitions(4, 4, 4).size() == 15);
    CHECK(set_partitions(4, 2, 3).size() == 4 + 3);
}

TEST_CASE("compose errors") {
    SymSeq X = com_like(Q, 3, 3);
    CHECK_THROWS_AS(compose(X, tensor_seq(Q, 3, false), 3), std::invalid_argument);
    CHECK_THROWS_AS(compose(X, X, 5), std::invalid_argument);
    CHECK_THROWS_AS(compose(X, com_like(Field::prime(3), 3, 3), 3), std::invalid_argument);
}

TEST_CASE("property: composite dimensions match the generating-function oracle") {
    const int cap = 5;
    std::vector<SymSeq> xs{com_like(Q, cap, cap), tensor_seq(Q, cap, false), planar_seq(Q, cap)};
    std::vector<SymSeq> ys{com_like(Q, cap, 3), tensor_seq(Q, cap), planar_seq(Q, cap)};
    for (const auto& X : xs)
        for (const auto& Y : ys) check_dims_against_egf(X, Y, cap);
}

TEST_CASE("property: Σ_s action on composites satisfies the Coxeter relations") {
    const int cap = 4;
    std::vector<SymSeq> seqs{com_like(Q, cap, cap), tensor_seq(Q, cap), planar_seq(Q, cap)};
    for (const auto& X : seqs)
        for (const auto& Y : seqs) {
            auto [XY, w] = compose(X, Y, cap);
            for (int s = 0; s <= cap; ++s) CHECK_NOTHROW(XY.rep(s).validate());
            // Witness: projections after inclusions are identities and the images span.
            for (int s = 0; s <= cap; ++s) {
                std::size_t total = 0;
                for (const auto& sm : w.summands) {
                    if (sm.s != s) continue;
                    CHECK(compose(sm.projection, sm.inclusion) == ChainMap::identity(sm.inclusion.source()));
                    total += sm.inclusion.source().total_dim();
                }
                CHECK(total == XY.base(s).total_dim());
            }
        }
}

TEST_CASE("associativity comparison iso") {
    const int cap = 4;
    std::vector<SymSeq> seqs{tensor_seq(Q, cap), planar_seq(Q, cap), com_like(Q, cap, 2)};
    for (const auto& X : seqs)
        for (const auto& Y : seqs)
            for (const auto& Z : seqs) {
                auto XY = compose(X, Y, cap).first;
                auto L = compose(XY, Z, cap).first;
                auto YZ = compose(Y, Z, cap).first;
                auto R = compose(X, YZ, cap).first;
                for (int s = 1; s <= cap; ++s) {
                    ChainMap a = associativity_iso(X, Y, Z, s);
                    REQUIRE(a.commutes());
                    CHECK(is_injective(a));
                    CHECK(is_surjective(a));
                    SymRep lr = L.rep(s), rr = R.rep(s);
                    for (int i = 0; i + 1 < s; ++i) CHECK(compose(a, lr.tau[i]) == compose(rr.tau[i], a));
                }
            }
}

TEST_CASE("compose_map examples and naturality") {
    const int cap = 4;
    SymSeq X = tensor_seq(Q, cap, false), Y = planar_seq(Q, cap);
    SymSeqMap idX = SymSeqMap::identity(X, cap), idY = SymSeqMap::identity(Y, cap);
    SymSeqMap m = compose_map(idX, idY, cap);
    for (int s = 0; s <= cap; ++s) CHECK(m.levels[s] == ChainMap::identity(m.source.base(s)));

    SymSeqMap z = compose_map(idX, SymSeqMap::zero(Y, Y, cap), cap);
    for (int s = 1; s <= cap; ++s) CHECK(z.levels[s].is_zero());

    // Injective f into a larger sequence: X' = X ⊕ X levelwise.
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n) {
        SymRep r = X.rep(n);
        DirectSum ds = direct_sum({r.complex, r.complex});
        SymRep d{ds.sum, {}};
        for (auto& t : r.tau) {
            ChainMap tt = compose(ds.inclusions[0], compose(t, ds.projections[0])) +
                          compose(ds.inclusions[1], compose(t, ds.projections[1]));
            d.tau.push_back(tt);
        }
        lv.push_back(d);
    }
    SymSeq X2 = SymSeq::symmetric(Q, lv);
    SymSeqMap f{X, X2, {}};
    for (int n = 0; n <= cap; ++n) f.levels.push_back(direct_sum({X.base(n), X.base(n)}).inclusions[0]);
    SymSeqMap fm = compose_map(f, idY, cap);
    fm.validate();
    for (int s = 0; s <= cap; ++s) CHECK(is_injective(fm.levels[s]));

    // Non-equivariant input is rejected.
    SymSeqMap bad = SymSeqMap::identity(X, cap);
    SymRep r2 = X.rep(2);
    // Replace level 2 by a projection onto one basis vector in degree 1.
    bad.levels[2] = ChainMap::from_images(r2.complex, r2.complex, [&](int d, Index j) {
        return d == 1 && j == 0 ? unit_vec(Q, 0) : SparseVec{};
    });
    CHECK_THROWS_AS(compose_map(bad, idY, cap), InvariantViolation);
}

TEST_CASE("level truncation") {
    const int cap = 5;
    SymSeq X = com_like(Q, cap, cap);
    SymSeq full = level_truncate(X, 1, ExtNat::inf());
    for (int n = 0; n <= cap; ++n) CHECK(full.base(n).total_dim() == X.base(n).total_dim());
    SymSeq two = level_truncate(X, 2, 3);
    for (int n = 0; n <= cap; ++n) CHECK(two.base(n).total_dim() == (n == 2 ? 1u : 0u));
    CHECK_THROWS_AS(level_truncate(X, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(level_truncate(X, 3, 3), std::invalid_argument);
    CHECK(two.storage_id() == X.storage_id());

    auto inf = ExtNat::inf();
    SymSeqMap a = truncation_map(X, 3, inf, 2, inf, cap);
    SymSeqMap b = truncation_map(X, 2, inf, 1, inf, cap);
    SymSeqMap c = truncation_map(X, 3, inf, 1, inf, cap);
    SymSeqMap ba = compose(b, a);
    for (int n = 0; n <= cap; ++n) CHECK(ba.levels[n] == c.levels[n]);
    CHECK_THROWS_AS(truncation_map(X, 1, inf, 2, inf, cap), std::invalid_argument);
}

TEST_CASE("property: compose is exact in the left variable") {
    const int cap = 4;
    // X = X' ⊕ X'' levelwise with X' = tensor_seq, X'' = com_like.
    SymSeq A = tensor_seq(Q, cap, false), B = com_like(Q, cap, cap);
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n) {
        SymRep ra = A.rep(n), rb = B.rep(n);
        DirectSum ds = direct_sum({ra.complex, rb.complex});
        SymRep r{ds.sum, {}};
        for (int i = 0; i + 1 < n; ++i)
            r.tau.push_back(compose(ds.inclusions[0], compose(ra.tau[i], ds.projections[0])) +
                            compose(ds.inclusions[1], compose(rb.tau[i], ds.projections[1])));
        lv.push_back(r);
    }
    SymSeq X = SymSeq::symmetric(Q, lv);
    SymSeqMap i{A, X, {}}, p{X, B, {}};
    for (int n = 0; n <= cap; ++n) {
        DirectSum ds = direct_sum({A.base(n), B.base(n)});
        i.levels.push_back(ChainMap::from_images(A.base(n), X.base(n), [&](int d, Index j) { return ds.inclusions[0].image(d, j); }));
        p.levels.push_back(ChainMap::from_images(X.base(n), B.base(n), [&](int d, Index j) { return ds.projections[1].image(d, j); }));
    }
    for (const SymSeq& Y : {tensor_seq(Q, cap), planar_seq(Q, cap), com_like(Q, cap, 2)}) {
        SymSeqMap idY = SymSeqMap::identity(Y, cap);
        SymSeqMap iy = compose_map(i, idY, cap), py = compose_map(p, idY, cap);
        for (int s = 0; s <= cap; ++s) {
            CHECK(is_injective(iy.levels[s]));
            CHECK(is_surjective(py.levels[s]));
            CHECK(compose(py.levels[s], iy.levels[s]).is_zero());
            CHECK(iy.levels[s].target().total_dim() ==
                  iy.levels[s].source().total_dim() + py.levels[s].target().total_dim());
        }
    }
}
