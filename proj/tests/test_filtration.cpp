#include <doctest.h>

#include "opcalc/filtration.hpp"
#include "support.hpp"

using namespace opcalc;
using namespace testsupport;

namespace {

Field Q;
const ExtNat inf = ExtNat::inf();

}  // namespace

TEST_CASE("filtration: pieces and structure maps") {
    auto O = builtin_operad(Q, "com", 10);
    const int D = 9;
    Algebra A = free_algebra(O, ChainComplex::line(Q, 2), D);
    auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
    FiltrationPiece whole = filtration_piece(ctx, {1, inf});
    for (int d = 0; d < D; ++d) CHECK(betti(whole.complex.total, d) == betti(A.complex, d));
    FiltrationPiece two = filtration_piece(ctx, {2, inf});
    for (int d = 0; d <= D; ++d) CHECK(betti(two.complex.total, d) == (d >= 4 && d % 2 == 0 ? 1u : 0u));

    FiltrationPiece p13 = filtration_piece(ctx, {1, 3});
    ChainMap a = compose(structure_map(whole, p13), structure_map(two, whole));
    CHECK(a == structure_map(two, p13));
    CHECK_THROWS_AS(structure_map(whole, two), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationIndex(3, 3), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationIndex(0, 3), std::invalid_argument);
}

TEST_CASE("filtration: fiber sequences and slices") {
    for (std::string name : {"com", "ass"}) {
        auto O = builtin_operad(Q, name, 10);
        const int D = 8;
        Algebra A = free_algebra(O, ChainComplex::graded(Q, 1, {0, 1}), D);
        auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
        for (int k = 1; k <= 4; ++k)
            for (int l = k + 1; l <= 5; ++l)
                for (int m = l + 1; m <= 6; ++m) {
                    ExtNat mm = m == 6 ? inf : ExtNat(m);
                    auto Plm = filtration_piece(ctx, {l, mm}), Pkm = filtration_piece(ctx, {k, mm}),
                         Pkl = filtration_piece(ctx, {k, l});
                    auto rep = check_fiber_sequence(structure_map(Plm, Pkm), structure_map(Pkm, Pkl), D);
                    INFO(name << " " << k << " " << l << " " << m);
                    for (const auto& f : rep.failures) INFO(f);
                    CHECK(rep.short_exact);
                    CHECK(rep.long_exact);
                }
        for (int k = 1; k <= 4; ++k) {
            auto slice = filtration_piece(ctx, {k, k + 1});
            Bimodule Mk = single_level(O, k, O->seq().rep(k));
            OneTerm ot = one_term_model(ctx, Mk);
            INFO(name << " slice " << k);
            CHECK(is_quasi_iso(ot.comparison, D));
            for (int d = 0; d <= D; ++d) CHECK(betti(slice.complex.total, d) == betti(ot.model, d));
        }
    }
}

TEST_CASE("filtration: goodwillie tower and connectivity") {
    auto O = builtin_operad(Q, "com", 10);
    const int D = 9;
    Algebra A = free_algebra(O, ChainComplex::line(Q, 2), D);
    auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
    Bimodule M = operad_bimodule(O);
    auto P1 = goodwillie_stage(ctx, M, 1), P2 = goodwillie_stage(ctx, M, 2), P3 = goodwillie_stage(ctx, M, 3);
    CHECK(compose(tower_map(P2, P1), tower_map(P3, P2)) == tower_map(P3, P1));
    BarComplex T = tq(ctx);
    for (int d = 0; d <= D; ++d) CHECK(betti(P1.complex.total, d) == betti(T.total, d));
    // The fiber of P_n -> P_{n-1} is the one-term model of O(n).
    for (int n = 2; n <= 3; ++n) {
        auto Pn = goodwillie_stage(ctx, M, n), Pm = goodwillie_stage(ctx, M, n - 1);
        HomotopyFiber fib = homotopy_fiber(tower_map(Pn, Pm));
        OneTerm ot = one_term_model(ctx, single_level(O, n, O->seq().rep(n)));
        for (int d = 0; d < D; ++d) CHECK(betti(fib.fiber, d) == betti(ot.model, d));
    }
    ConnectivityReport rep = connectivity_report(ctx, 2, 4);
    CHECK(rep.ok());
    for (const auto& e : rep.entries) CHECK(e.betti.at(2 * e.n) == 1);
    CHECK_THROWS_AS(connectivity_report(ctx, 3, 2), std::invalid_argument);

    auto ass = builtin_operad(Q, "ass", 10);
    Algebra B = free_algebra(ass, ChainComplex::graded(Q, 1, {2}), 5);
    auto rep2 = connectivity_report(make_bar_context(B, {5, BarMode::exact, 0}), 1, 2);
    CHECK(rep2.ok());
    CHECK(rep2.entries[1].betti[2] == 4);
}

TEST_CASE("filtration: pairing index and its oracle") {
    CHECK(pairing_index(2, inf, 2, inf) == std::pair<int, ExtNat>{4, inf});
    CHECK(pairing_index(2, 3, 2, 3) == std::pair<int, ExtNat>{4, 5});
    CHECK(pairing_index(1, 2, 1, 2) == std::pair<int, ExtNat>{1, 2});
    CHECK(pairing_index_oracle(2, 3, 2, 3, 20) == ExtNat(5));
    CHECK(pairing_index_oracle(1, inf, 1, inf, 20).is_inf());
    // i = 1, m = 2: either the single block reaches n or two blocks of size j appear.
    for (int j = 1; j <= 4; ++j)
        for (int n = j + 1; n <= 6; ++n) CHECK(pairing_index_oracle(1, 2, j, n, 20) == ExtNat(std::min(n, 2 * j)));
    // The bound is sharp: the oracle attains it whenever it is within reach.
    for (int i = 1; i <= 6; ++i)
        for (int m = i + 1; m <= 7; ++m)
            for (int j = 1; j <= 6; ++j)
                for (int n = j + 1; n <= 7; ++n) {
                    ExtNat mm = m == 7 ? inf : ExtNat(m), nn = n == 7 ? inf : ExtNat(n);
                    ExtNat o = pairing_index_oracle(i, mm, j, nn, 36);
                    ExtNat N = pairing_index(i, mm, j, nn).second;
                    CHECK(o >= N);
                    if (N <= ExtNat(36)) CHECK(o == N);
                }
}

TEST_CASE("filtration: pairing maps and power maps") {
    auto O = builtin_operad(Q, "com", 10);
    const int D = 8;
    FreeAlgebra F = free_algebra_with_engine(O, ChainComplex::line(Q, 2), D);
    const Algebra& A = F.algebra;
    BarOptions opt{D, BarMode::exact, 0};

    FilteredAlgebra J1 = filtered_algebra(A, {1, inf}, opt);
    PairingMap unit = pairing_map(J1, {1, inf});
    CHECK(unit.map.commutes());
    CHECK(is_quasi_iso(unit.map, D - 1));

    FilteredAlgebra J2 = filtered_algebra(A, {2, inf}, opt);
    PairingMap p22 = pairing_map(J2, {2, inf});
    CHECK(p22.index.i == 4);
    CHECK(p22.map.commutes());
    for (int d = 0; d < 8; ++d) CHECK(betti(p22.target.total, d) == 0);
    CHECK(induced_rank(p22.map, 8) == 1);

    // f: A -> J^1 sending the generator to its bar-degree-0 copy.
    const Level& lv = F.engine->level({F.layer});
    Index g = *lv.find(1, 0, O->unit(), {F.engine->level({}).offset(2)}) - lv.offset(2);
    (void)g;
    ChainMap gen = ChainMap::from_images(ChainComplex::line(Q, 2), J1.algebra.complex, [&](int, Index) {
        // the unique basis vector of the bar-degree-0 cell in degree 2
        for (Index j = 0; j < J1.bar.total.dim(2); ++j)
            if (J1.bar.bar_degree(2, j) == 0) return unit_vec(Q, j);
        return SparseVec{};
    });
    ChainMap f = extend_from_generators(F, J1.algebra, gen);
    CHECK(f.commutes());
    CHECK(is_quasi_iso(f, D - 1));
    CHECK(power_map(A, J1, f, 1) == f);
    ChainMap f2 = power_map(A, J1, f, 2);
    CHECK(f2.commutes());
    CHECK(is_quasi_iso(f2, D - 1));
}

TEST_CASE("filtration: AQ lifting") {
    auto O = builtin_operad(Q, "com", 10);
    const int D = 8;
    BarOptions opt{D, BarMode::exact, 0};
    // V = <a (2), b (4)>, f(a) = 0, f(b) = a·a.
    ChainComplex V = ChainComplex::graded(Q, 2, {1, 0, 1});
    FreeAlgebra F = free_algebra_with_engine(O, V, D);
    const Algebra& A = F.algebra;
    const Level& lv = F.engine->level({F.layer});
    const Level& leaves = F.engine->level({});
    Index a = *lv.find(1, 0, O->unit(), {leaves.offset(2)}) - lv.offset(2);
    SparseVec aa = A.act(2, 0, 0, {{2, a}, {2, a}});
    REQUIRE(aa.size() == 1);
    ChainMap gv = ChainMap::from_images(V, A.complex, [&](int d, Index) { return d == 4 ? aa : SparseVec{}; });
    ChainMap f = extend_from_generators(F, A, gv);
    CHECK(validate_algebra(A, 3).empty());

    AQFactorization fact = aq_factorization({A, A}, {f}, opt);
    AQLift L = aq_lift(fact);
    CHECK(L.report.nullhomotopies_verified);
    CHECK(L.report.triangle_verified);
    CHECK(L.triangle.verify());
    CHECK(L.report.target_connected);
    CHECK(L.report.vanishing);
    CHECK(L.report.ranks.at(4) == 1);  // the vanishing line is sharp here

    AQLift L0 = aq_lift(aq_factorization({A}, {}, opt));
    CHECK(L0.report.triangle_verified);

    // The identity is not TQ-null.
    CHECK_THROWS_AS(aq_factorization({A, A}, {ChainMap::identity(A.complex)}, opt), std::invalid_argument);
    // A tampered homotopy is rejected.
    AQFactorization bad = fact;
    bad.tq_null[0].g = bad.tq_null[0].f;
    CHECK_THROWS_AS(aq_lift(bad), InvariantViolation);
    AQFactorization bad2 = fact;
    auto& comps = bad2.tq_null[0].components;
    bool tampered = false;
    for (std::size_t k = 0; k < comps.size() && !tampered; ++k)
        if (comps[k].rows() && comps[k].cols()) {
            comps[k].add_to(0, 0, Q.from_int(1));
            tampered = !bad2.tq_null[0].verify();
            if (!tampered) comps[k].add_to(0, 0, Q.from_int(-1));
        }
    REQUIRE(tampered);
    CHECK_THROWS_AS(aq_lift(bad2), InvariantViolation);
}
