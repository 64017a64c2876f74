#include <doctest.h>

#include "opcalc/schur.hpp"
#include "support.hpp"

using namespace opcalc;
using namespace testsupport;

namespace {

Field Q;

std::vector<std::size_t> dims_upto(const ChainComplex& C, int hi) {
    std::vector<std::size_t> out(hi + 1, 0);
    if (C.empty()) return out;
    for (int d = std::max(0, C.dmin()); d <= std::min(hi, C.dmax()); ++d) out[d] = C.dim(d);
    return out;
}

}  // namespace

TEST_CASE("free algebras: dimensions") {
    auto com = builtin_operad(Q, "com", 10);
    auto ass = builtin_operad(Q, "ass", 10);
    auto unit = builtin_operad(Q, "unit", 10);

    Algebra a = free_algebra(com, ChainComplex::line(Q, 2), 10);
    CHECK(dims_upto(a.complex, 10) == std::vector<std::size_t>{0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    Algebra b = free_algebra(com, ChainComplex::line(Q, 1), 10);
    CHECK(dims_upto(b.complex, 10) == std::vector<std::size_t>{0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    // Over F_2 the square of an odd class survives.
    auto com2 = builtin_operad(Field::prime(2), "com", 10);
    Algebra b2 = free_algebra(com2, ChainComplex::line(Field::prime(2), 1), 6);
    CHECK(dims_upto(b2.complex, 6) == std::vector<std::size_t>{0, 1, 1, 1, 1, 1, 1});
    Algebra c = free_algebra(ass, ChainComplex::graded(Q, 1, {2}), 5);
    CHECK(dims_upto(c.complex, 5) == std::vector<std::size_t>{0, 2, 4, 8, 16, 32});
    Algebra u = free_algebra(unit, ChainComplex::graded(Q, 1, {1, 2}), 6);
    CHECK(dims_upto(u.complex, 6) == std::vector<std::size_t>{0, 1, 2, 0, 0, 0, 0});
    // Two even generators: monomials in two variables.
    Algebra e = free_algebra(com, ChainComplex::graded(Q, 2, {2}), 8);
    CHECK(dims_upto(e.complex, 8) == std::vector<std::size_t>{0, 0, 2, 0, 3, 0, 4, 0, 5});

    CHECK_THROWS_AS(free_algebra(com, ChainComplex::line(Q, 0), 4), std::invalid_argument);
    CHECK_THROWS_AS(free_algebra(builtin_operad(Q, "com", 3), ChainComplex::line(Q, 1), 8), std::invalid_argument);
}

TEST_CASE("free algebras satisfy the algebra axioms") {
    auto com = builtin_operad(Q, "com", 8);
    auto ass = builtin_operad(Q, "ass", 8);
    // V = <b (deg 1), a (deg 2), c (deg 3)> with da = b.
    ChainComplex V(Q, 1, {1, 1, 1}, {Matrix(Q, 0, 1), Matrix::identity(Q, 1), Matrix(Q, 1, 1)});
    for (const auto& O : {com, ass}) {
        Algebra A = free_algebra(O, V, 6);
        auto v = validate_algebra(A, 3);
        for (const auto& x : v) INFO(x.axiom << " " << x.detail);
        CHECK(v.empty());
    }
    // Free algebra on an acyclic complex is acyclic over Q.
    ChainComplex W(Q, 1, {1, 1}, {Matrix(Q, 0, 1), Matrix::identity(Q, 1)});
    for (const auto& O : {com, ass}) {
        Algebra A = free_algebra(O, W, 8);
        for (int d = 0; d <= 7; ++d) CHECK(betti(A.complex, d) == 0);
    }
}

TEST_CASE("free algebras: extending maps from generators") {
    auto com = builtin_operad(Q, "com", 8);
    auto ass = builtin_operad(Q, "ass", 8);
    ChainComplex V(Q, 1, {1, 1, 1}, {Matrix(Q, 0, 1), Matrix::identity(Q, 1), Matrix(Q, 1, 1)});
    for (const auto& O : {com, ass}) {
        FreeAlgebra F = free_algebra_with_engine(O, V, 6);
        const Level& lv = F.engine->level({F.layer});
        const Level& leaves = F.engine->level({});
        auto gen = [&](int deg, Index j) {
            auto id = lv.find(1, 0, O->unit(), {leaves.offset(deg) + j});
            REQUIRE(id);
            return *id - lv.offset(deg);
        };
        ChainMap incl = ChainMap::from_images(V, F.algebra.complex, [&](int d, Index j) { return unit_vec(Q, gen(d, j)); });
        ChainMap ext = extend_from_generators(F, F.algebra, incl);
        CHECK(ext == ChainMap::identity(F.algebra.complex));
        // Doubling the generators scales words of length k by 2^k.
        ChainMap twice = extend_from_generators(F, F.algebra, incl.scaled(Q.from_int(2)));
        CHECK(twice.commutes());
        CHECK(induced_rank(twice, 3) == betti(F.algebra.complex, 3));
    }
}
