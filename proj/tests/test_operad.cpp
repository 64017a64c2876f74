#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "opcalc/operad.hpp"
#include "support.hpp"

using namespace opcalc;
using namespace testsupport;

namespace {

Field Q;

std::vector<std::vector<int>> perms_of(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

Index index_of(const std::vector<std::vector<int>>& ps, const std::vector<int>& p) {
    return static_cast<Index>(std::find(ps.begin(), ps.end(), p) - ps.begin());
}

// Associative operad in symmetric storage: basis of level n is the words
// (monomials x_{π(0)}...x_{π(n-1)}), τ_i relabels x_i <-> x_{i+1}.
// With `corrupt`, one table entry gets the wrong sign.
OperadPtr ass_sym(const Field& F, int cap, bool corrupt = false) {
    std::vector<SymRep> lv;
    std::vector<std::vector<std::vector<int>>> P(cap + 1);
    for (int n = 0; n <= cap; ++n) {
        if (n == 0) {
            lv.push_back({ChainComplex::zero(F), {}});
            continue;
        }
        P[n] = perms_of(n);
        ChainComplex C = ChainComplex::graded(F, 0, {P[n].size()});
        SymRep r{C, {}};
        for (int i = 0; i + 1 < n; ++i)
            r.tau.push_back(ChainMap::from_images(C, C, [&](int, Index j) {
                std::vector<int> q = P[n][j];
                for (int& v : q) v = v == i ? i + 1 : v == i + 1 ? i : v;
                return unit_vec(F, index_of(P[n], q));
            }));
        lv.push_back(r);
    }
    SymSeq seq = SymSeq::symmetric(F, lv);
    GammaTable T;
    bool broken = false;
    for (int r = 1; r <= cap; ++r) {
        std::function<void(std::vector<int>&, int)> sizes_rec = [&](std::vector<int>& sz, int left) {
            if (static_cast<int>(sz.size()) == r) {
                std::vector<int> off(r, 0);
                for (int k = 1; k < r; ++k) off[k] = off[k - 1] + sz[k - 1];
                // all choices of x and y's
                std::vector<std::size_t> pick(r + 1, 0);
                while (true) {
                    const auto& x = P[r][pick[0]];
                    std::vector<int> word;
                    for (int a = 0; a < r; ++a)
                        for (int t : P[sz[x[a]]][pick[x[a] + 1]]) word.push_back(off[x[a]] + t);
                    Args ys;
                    for (int k = 0; k < r; ++k) ys.emplace_back(0, static_cast<Index>(pick[k + 1]));
                    int s = std::accumulate(sz.begin(), sz.end(), 0);
                    SparseVec v = unit_vec(F, index_of(P[s], word));
                    if (corrupt && !broken && r == 2 && sz[0] == 2 && sz[1] == 1 && pick[0] == 1) {
                        v = scaled(F, v, F.from_int(-1));
                        broken = true;
                    }
                    T[gamma_key(r, 0, static_cast<Index>(pick[0]), sz, ys)] = v;
                    std::size_t k = 0;
                    while (k <= static_cast<std::size_t>(r)) {
                        std::size_t lim = k == 0 ? P[r].size() : P[sz[k - 1]].size();
                        if (++pick[k] < lim) break;
                        pick[k++] = 0;
                    }
                    if (k > static_cast<std::size_t>(r)) break;
                }
                return;
            }
            for (int v = 1; v <= left - (r - static_cast<int>(sz.size()) - 1); ++v) {
                sz.push_back(v);
                sizes_rec(sz, left - v);
                sz.pop_back();
            }
        };
        std::vector<int> sz;
        sizes_rec(sz, cap);
    }
    return explicit_operad("ass_sym", seq, 0, T);
}

bool has_axiom(const std::vector<AxiomViolation>& v, const std::string& a) {
    return std::any_of(v.begin(), v.end(), [&](const AxiomViolation& x) { return x.axiom == a; });
}

std::size_t level_dim(const SymSeq& X, int n) {
    const ChainComplex& C = X.base(n);
    if (C.empty()) return 0;
    std::size_t t = 0;
    for (int d = C.dmin(); d <= C.dmax(); ++d) t += X.dim(n, d);
    return t;
}

std::size_t total(const ChainComplex& C) { return C.empty() ? 0 : C.total_dim(); }

}  // namespace

TEST_CASE("builtin operads: dimensions and names") {
    auto com = builtin_operad(Q, "com", 5);
    auto ass = builtin_operad(Q, "ass", 5);
    auto ct = builtin_operad(Q, "com_truncated", 5, 3);
    auto u = builtin_operad(Q, "unit", 5);
    for (int n = 1; n <= 5; ++n) {
        CHECK(level_dim(com->seq(), n) == 1);
        CHECK(level_dim(ass->seq(), n) == static_cast<std::size_t>(std::tgamma(n + 1) + 0.5));
        CHECK(level_dim(ct->seq(), n) == (n <= 2 ? 1u : 0u));
        CHECK(level_dim(u->seq(), n) == (n == 1 ? 1u : 0u));
    }
    CHECK(level_dim(com->seq(), 0) == 0);
    CHECK(ass->seq().planar());
    CHECK(com->unit_is_arity_one());
    CHECK(ct->name() == "com_truncated(3)");
    CHECK_THROWS_AS(builtin_operad(Q, "lie", 4), std::invalid_argument);
    CHECK_THROWS_AS(builtin_operad(Q, "com_truncated", 4, 1), std::invalid_argument);
}

TEST_CASE("validate_operad accepts the builtins") {
    for (const Field& F : {Field(), Field::prime(2), Field::prime(3)}) {
        CHECK(validate_operad(*builtin_operad(F, "com", 6), 6).empty());
        CHECK(validate_operad(*builtin_operad(F, "ass", 5), 5).empty());
        CHECK(validate_operad(*builtin_operad(F, "unit", 4), 4).empty());
        CHECK(validate_operad(*builtin_operad(F, "com_truncated", 5, 4), 5).empty());
        CHECK(validate_operad(*builtin_operad(F, "ass_truncated", 4, 3), 4).empty());
    }
}

TEST_CASE("explicit symmetric operad: equivariance reduction") {
    auto A = ass_sym(Q, 4);
    auto v = validate_operad(*A, 4);
    for (const auto& x : v) INFO(x.axiom << " " << x.detail);
    CHECK(v.empty());
}

TEST_CASE("validate_operad reports injected faults") {
    auto bad = ass_sym(Q, 4, true);
    auto v = validate_operad(*bad, 4);
    CHECK_FALSE(v.empty());
    CHECK(has_axiom(v, "associativity"));

    // A com-like table whose binary product is scaled by 2.
    auto com = builtin_operad(Q, "com", 3);
    GammaTable T;
    T[gamma_key(1, 0, 0, {1}, {{0, 0}})] = unit_vec(Q, 0);
    T[gamma_key(1, 0, 0, {2}, {{0, 0}})] = unit_vec(Q, 0);
    T[gamma_key(1, 0, 0, {3}, {{0, 0}})] = unit_vec(Q, 0);
    T[gamma_key(2, 0, 0, {1, 1}, {{0, 0}, {0, 0}})] = scaled(Q, unit_vec(Q, 0), Q.from_int(2));
    T[gamma_key(2, 0, 0, {2, 1}, {{0, 0}, {0, 0}})] = unit_vec(Q, 0);
    T[gamma_key(3, 0, 0, {1, 1, 1}, {{0, 0}, {0, 0}, {0, 0}})] = unit_vec(Q, 0);
    auto v2 = validate_operad(*explicit_operad("bad", com->seq(), 0, T), 3);
    CHECK(has_axiom(v2, "right unit"));
    for (const auto& x : v2) CHECK_FALSE(x.tuple.empty());

    // Unit outside O(1) is rejected at construction.
    CHECK_THROWS_AS(explicit_operad("u", com->seq(), 3, {}), std::invalid_argument);
}

TEST_CASE("planar and symmetric storage give the same action maps") {
    auto P = builtin_operad(Q, "ass", 4);
    auto S = ass_sym(Q, 4);
    auto rp = right_action_map(operad_bimodule(P), 4);
    auto rs = right_action_map(operad_bimodule(S), 4);
    auto lp = left_action_map(operad_bimodule(P), 4);
    auto ls = left_action_map(operad_bimodule(S), 4);
    for (int s = 0; s <= 4; ++s) {
        CHECK(rp.levels[s] == rs.levels[s]);
        CHECK(lp.levels[s] == ls.levels[s]);
    }
    rs.validate();
    ls.validate();
}

TEST_CASE("relative composite: unit laws") {
    for (const char* name : {"com", "ass"}) {
        CAPTURE(name);
        auto O = builtin_operad(Q, name, 4);
        Bimodule M = operad_bimodule(O);
        RelativeComposite R = relative_compose(M, M, 4);
        SymSeqMap lam = left_action_map(M, 4);
        for (int s = 1; s <= 4; ++s) {
            CHECK(total(R.levels[s].complex) == level_dim(O->seq(), s));
            // λ descends to an isomorphism O∘_O O -> O.
            ChainMap iso = R.levels[s].descend(lam.levels[s]);
            CHECK(is_quasi_iso(iso));
            CHECK(total(iso.source()) == total(iso.target()));
        }
    }
}

TEST_CASE("relative composite with truncated and single-level modules") {
    auto O = builtin_operad(Q, "com", 5);
    Bimodule M = operad_bimodule(O);
    Bimodule T = level_truncate(M, 2, 4);
    CHECK(T.seq.level_empty(1));
    CHECK(T.seq.level_empty(4));
    CHECK_FALSE(T.seq.level_empty(3));
    CHECK_THROWS_AS(level_truncate(M, 0, 3), std::invalid_argument);

    // O ∘_O T ≅ T and T ∘_O O ≅ T.
    RelativeComposite L = relative_compose(M, T, 5);
    RelativeComposite R = relative_compose(T, M, 5);
    for (int s = 0; s <= 5; ++s) {
        std::size_t want = s >= 2 && s < 4 ? 1 : 0;
        CHECK(total(L.levels[s].complex) == want);
        CHECK(total(R.levels[s].complex) == want);
    }

    // A single level n with trivial action: S ∘_O O ≅ S.
    Bimodule S = single_level(O, 3, trivial_rep(ChainComplex::line(Q, 2), 3));
    RelativeComposite RS = relative_compose(S, M, 5);
    for (int s = 0; s <= 5; ++s) CHECK(total(RS.levels[s].complex) == (s == 3 ? 1u : 0u));

    Bimodule Z = zero_bimodule(O);
    RelativeComposite RZ = relative_compose(M, Z, 4);
    for (int s = 0; s <= 4; ++s) CHECK(total(RZ.levels[s].complex) == 0);

    auto A = builtin_operad(Q, "ass", 3);
    CHECK_THROWS_AS(relative_compose(M, operad_bimodule(A), 3), std::invalid_argument);
}

TEST_CASE("algebras: trivial and explicit") {
    auto com = builtin_operad(Q, "com", 4);
    ChainComplex C = ChainComplex::graded(Q, 2, {1, 0, 1, 0, 1});  // x, x^2, x^3 in degrees 2, 4, 6
    Algebra triv = trivial_algebra(com, C);
    CHECK(validate_algebra(triv, 4).empty());
    CHECK(triv.connectivity() == 2);

    // Truncated polynomial algebra k[x]/(x^4), x in degree 2, non-unital.
    auto table = [&](std::int64_t scale) {
        ActTable T;
        for (int r = 2; r <= 4; ++r) {
            std::vector<int> e(r, 1);
            std::function<void(int)> rec = [&](int k) {
                if (k == r) {
                    int sum = std::accumulate(e.begin(), e.end(), 0);
                    if (sum > 3) return;
                    std::vector<std::int64_t> key{r, 0, 0};
                    for (int v : e) {
                        key.push_back(2 * v);
                        key.push_back(0);
                    }
                    T[key] = scaled(Q, unit_vec(Q, 0), Q.from_int(r == 2 && e[0] == 1 && e[1] == 1 ? scale : 1));
                    return;
                }
                for (int v = 1; v <= 3; ++v) {
                    e[k] = v;
                    rec(k + 1);
                }
            };
            rec(0);
        }
        return T;
    };
    CHECK(validate_algebra(explicit_algebra(com, "poly", C, table(1)), 4).empty());
    auto bad = validate_algebra(explicit_algebra(com, "bad", C, table(2)), 4);
    CHECK(has_axiom(bad, "associativity"));
}
