// Runs the acceptance criteria and prints one PASS/FAIL line each.
#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "opcalc/cli.hpp"
#include "opcalc/random_fixtures.hpp"

using namespace opcalc;

namespace {

Field Q;
const ExtNat inf = ExtNat::inf();
const int D = 10;

struct Fixture {
    std::string name;
    ChainComplex V;
};

// Generators in degrees 1..3, at most two per degree.
std::vector<Fixture> fixtures() {
    // b (1), a (2), c (3) with da = b
    ChainComplex bac(Q, 1, {1, 1, 1}, {Matrix(Q, 0, 1), Matrix::identity(Q, 1), Matrix(Q, 1, 1)});
    return {{"x1", ChainComplex::line(Q, 1)},
            {"x2", ChainComplex::line(Q, 2)},
            {"x2,y3", ChainComplex::graded(Q, 2, {1, 1})},
            {"x3,y3", ChainComplex::graded(Q, 3, {2})},
            {"b1,a2,c3 da=b", bac}};
}

struct Op {
    std::string name;
    OperadPtr O;
    bool planar;
    int top;  // highest nonzero arity
};

std::vector<Op> operads() {
    return {{"com", builtin_operad(Q, "com", D + 1), false, D + 1},
            {"ass", builtin_operad(Q, "ass", D + 1), true, D + 1},
            {"com_truncated(4)", builtin_operad(Q, "com_truncated", D + 1, 4), false, 3}};
}

// Graded dimensions of (⊕_{r ∈ arities} O(r) ⊗ H^{⊗r})_{Σr} for com-like
// (graded symmetric powers) or ass-like (tensor powers) operads, by a
// generating function in arity and degree.
std::vector<std::size_t> composite_oracle(const Betti& h, bool planar, const std::function<bool(int)>& arity_ok) {
    const int R = D + 1;
    // poly[r][d]
    std::vector<std::vector<long long>> poly(R + 1, std::vector<long long>(D + 1, 0));
    poly[0][0] = 1;
    if (planar) {
        std::vector<std::vector<long long>> power = poly;
        std::vector<std::vector<long long>> acc(R + 1, std::vector<long long>(D + 1, 0));
        for (int r = 1; r <= R; ++r) {
            std::vector<std::vector<long long>> next(R + 1, std::vector<long long>(D + 1, 0));
            for (int d = 0; d <= D; ++d)
                if (power[r - 1][d])
                    for (auto [e, n] : h)
                        if (d + e <= D) next[r][d + e] += power[r - 1][d] * static_cast<long long>(n);
            power = next;
            for (int d = 0; d <= D; ++d) acc[r][d] = power[r][d];
        }
        poly = acc;
    } else {
        for (auto [e, n] : h)
            for (std::size_t copy = 0; copy < n; ++copy) {
                auto next = poly;
                if (e % 2 == 0) {
                    // multiply by 1/(1 - t x^e)
                    for (int r = 1; r <= R; ++r)
                        for (int d = e; d <= D; ++d) next[r][d] += next[r - 1][d - e];
                } else {
                    for (int r = 1; r <= R; ++r)
                        for (int d = e; d <= D; ++d) next[r][d] += poly[r - 1][d - e];
                }
                poly = next;
            }
    }
    std::vector<std::size_t> out(D + 1, 0);
    for (int r = 1; r <= R; ++r)
        if (arity_ok(r))
            for (int d = 0; d <= D; ++d) out[d] += static_cast<std::size_t>(poly[r][d]);
    return out;
}

std::vector<std::size_t> betti_upto(const ChainComplex& C, int hi) {
    std::vector<std::size_t> out(hi + 1, 0);
    for (int d = 0; d <= hi; ++d) out[d] = betti(C, d);
    return out;
}

std::string show(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

Outcome pairing_lemma() {
    Outcome o;
    int checked = 0;
    for (int i = 1; i <= 6; ++i)
        for (int m = i + 1; m <= 7; ++m)
            for (int j = 1; j <= 6; ++j)
                for (int n = j + 1; n <= 7; ++n) {
                    ExtNat mm = m == 7 ? inf : ExtNat(m), nn = n == 7 ? inf : ExtNat(n);
                    ExtNat N = pairing_index(i, mm, j, nn).second;
                    ExtNat s = pairing_index_oracle(i, mm, j, nn, 36);
                    ++checked;
                    if (!(s >= N))
                        o.fail("(" + std::to_string(i) + "," + mm.str() + "," + std::to_string(j) + "," + nn.str() +
                               "): killed summand at s=" + s.str() + " < " + N.str());
                }
    if (o.pass) o.detail = std::to_string(checked) + " index tuples";
    return o;
}

Outcome bar_vs_composite() {
    Outcome o;
    int cases = 0;
    for (const auto& op : operads())
        for (const auto& fx : fixtures()) {
            Algebra A = free_algebra(op.O, fx.V, D);
            auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
            Betti h = homology(fx.V);
            struct Mod {
                std::string name;
                Bimodule M;
                std::function<bool(int)> arities;
            };
            int top = op.top;
            std::vector<Mod> mods = {
                {"O", operad_bimodule(op.O), [&](int r) { return r <= top; }},
                {"O_2^inf", filtration_module(op.O, {2, inf}), [&](int r) { return r >= 2 && r <= top; }},
                {"O(2)", single_level(op.O, 2, op.O->seq().rep(2)), [](int r) { return r == 2; }}};
            for (const auto& m : mods) {
                BarComplex B = bar(ctx, m.M);
                auto got = betti_upto(B.total, D);
                auto want = composite_oracle(h, op.planar, m.arities);
                ++cases;
                if (B.valid_through < D) o.fail(op.name + " " + fx.name + " " + m.name + ": valid only through " + std::to_string(B.valid_through));
                if (got != want) o.fail(op.name + " " + fx.name + " " + m.name + ": bar " + show(got) + " vs composite " + show(want));
            }
        }
    if (o.pass) o.detail = std::to_string(cases) + " (operad, V, M) cases through degree " + std::to_string(D);
    return o;
}

Outcome tq_free() {
    Outcome o;
    int cases = 0;
    for (const auto& op : operads())
        for (const auto& fx : fixtures()) {
            Algebra A = free_algebra(op.O, fx.V, D);
            BarComplex T = tq(A, {D, BarMode::exact, 0});
            ++cases;
            if (betti_upto(T.total, D) != betti_upto(fx.V, D)) o.fail(op.name + " " + fx.name + ": TQ " + show(betti_upto(T.total, D)));
        }
    if (o.pass) o.detail = std::to_string(cases) + " free algebras";
    return o;
}

Outcome slices(int cap) {
    Outcome o;
    int cases = 0;
    for (const auto& op : operads())
        for (const auto& fx : fixtures()) {
            Algebra A = free_algebra(op.O, fx.V, cap);
            auto ctx = make_bar_context(A, {cap, BarMode::exact, 0});
            for (int k = 1; k <= 4; ++k) {
                auto slice = filtration_piece(ctx, {k, k + 1});
                OneTerm ot = one_term_model(ctx, single_level(op.O, k, op.O->seq().rep(k)));
                ++cases;
                if (betti_upto(slice.complex.total, cap) != betti_upto(ot.model, cap))
                    o.fail(op.name + " " + fx.name + " k=" + std::to_string(k));
            }
        }
    if (o.pass) o.detail = std::to_string(cases) + " slices through degree " + std::to_string(cap);
    return o;
}

Outcome fibers(int cap) {
    Outcome o;
    int cases = 0;
    for (const auto& op : operads())
        for (const auto& fx : fixtures()) {
            Algebra A = free_algebra(op.O, fx.V, cap);
            auto ctx = make_bar_context(A, {cap, BarMode::exact, 0});
            std::map<std::pair<int, int>, FiltrationPiece> pieces;
            auto piece = [&](int i, int m) -> const FiltrationPiece& {
                auto it = pieces.find({i, m});
                if (it == pieces.end()) it = pieces.emplace(std::pair{i, m}, filtration_piece(ctx, {i, m})).first;
                return it->second;
            };
            for (int k = 1; k <= 3; ++k)
                for (int l = k + 1; l <= 4; ++l)
                    for (int m = l + 1; m <= 5; ++m) {
                        const auto &Plm = piece(l, m), &Pkm = piece(k, m), &Pkl = piece(k, l);
                        auto rep = check_fiber_sequence(structure_map(Plm, Pkm), structure_map(Pkm, Pkl), cap);
                        ++cases;
                        if (!rep.short_exact || !rep.long_exact)
                            o.fail(op.name + " " + fx.name + " (" + std::to_string(k) + "," + std::to_string(l) + "," +
                                   std::to_string(m) + ")" + (rep.failures.empty() ? "" : ": " + rep.failures.front()));
                    }
        }
    if (o.pass) o.detail = std::to_string(cases) + " sequences through degree " + std::to_string(cap);
    return o;
}

Outcome connectivity() {
    Outcome o;
    auto O = builtin_operad(Q, "com", D + 1);
    Algebra A = free_algebra(O, ChainComplex::line(Q, 2), D);
    auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
    for (int n = 1; n <= 4; ++n) {
        auto piece = filtration_piece(ctx, {n, inf});
        auto b = betti_upto(piece.complex.total, D);
        for (int d = 0; d < 2 * n; ++d)
            if (b[d] != 0) o.fail("I^" + std::to_string(n) + " has homology in degree " + std::to_string(d));
        if (b[2 * n] != 1) o.fail("Betti(I^" + std::to_string(n) + ")(" + std::to_string(2 * n) + ") = " + std::to_string(b[2 * n]));
    }
    ConnectivityReport rep = connectivity_report(ctx, 2, 4);
    if (!rep.ok()) o.fail("connectivity_report not ok");
    if (o.pass) o.detail = "n <= 4, c = 2";
    return o;
}

Outcome aq_lifting() {
    Outcome o;
    const int cap = 8;
    auto O = builtin_operad(Q, "com", cap + 1);
    // V = <a (2), b (4)>, f(a) = 0, f(b) = a·a
    ChainComplex V = ChainComplex::graded(Q, 2, {1, 0, 1});
    FreeAlgebra F = free_algebra_with_engine(O, V, cap);
    const Algebra& A = F.algebra;
    const Level& lv = F.engine->level({F.layer});
    Index a = *lv.find(1, 0, O->unit(), {F.engine->level({}).offset(2)}) - lv.offset(2);
    SparseVec aa = A.act(2, 0, 0, {{2, a}, {2, a}});
    ChainMap gv = ChainMap::from_images(V, A.complex, [&](int d, Index) { return d == 4 ? aa : SparseVec{}; });
    ChainMap f = extend_from_generators(F, A, gv);
    AQLift L = aq_lift(aq_factorization({A, A}, {f}, {cap, BarMode::exact, 0}));
    const auto& r = L.report;
    if (r.s != 1) o.fail("s != 1");
    if (!r.nullhomotopies_verified) o.fail("TQ nullhomotopy not verified");
    if (!r.triangle_verified || !L.triangle.verify()) o.fail("triangle homotopy not verified");
    if (!r.vanishing) o.fail("H_d(f) nonzero below 2c");
    if (o.pass) o.detail = "c = " + std::to_string(r.c) + ", H_d(f) = 0 for d < " + std::to_string(2 * r.c);
    return o;
}

Outcome pushouts() {
    Outcome o;
    std::mt19937_64 rng(424242);
    int qi = 0;
    for (int t = 0; t < 50; ++t) {
        PushoutTrial r = pushout_corner_trial(Q, rng);
        if (!r.corner_injective) o.fail("trial " + std::to_string(t) + ": corner map not injective");
        if (r.f1_quasi_iso) {
            ++qi;
            if (!r.corner_quasi_iso) o.fail("trial " + std::to_string(t) + ": corner map not a quasi-iso");
        }
    }
    if (o.pass) o.detail = "50 trials, " + std::to_string(qi) + " with f1 a quasi-iso";
    return o;
}

Outcome assoc_iso() {
    Outcome o;
    auto O = builtin_operad(Q, "com", D + 1);
    Algebra A = free_algebra(O, ChainComplex::line(Q, 2), D);
    auto ctx = make_bar_context(A, {D, BarMode::exact, 0});
    Bimodule M = filtration_module(O, {2, inf});
    Bisimplicial L = bisimplicial_bar(ctx, M, M, true), R = bisimplicial_bar(ctx, M, M, false);
    ChainMap iso = bar_assoc_iso(L, R);
    if (!iso.commutes()) o.fail("does not commute with the differentials");
    for (int d = 0; d <= D; ++d) {
        std::size_t n = L.complex.total.dim(d);
        if (R.complex.total.dim(d) != n || rank(iso.at(d)) != n) o.fail("not bijective in degree " + std::to_string(d));
    }
    if (o.pass) o.detail = "degrees 0.." + std::to_string(D);
    return o;
}

Outcome determinism() {
    Outcome o;
    using namespace opcalc::cli;
    cli::RunOptions opt;
    opt.degree_cap = 8;
    SpecFile spec = parse_spec(std::string(OPCALC_FIXTURES) + "/com_free.spec", opt);
    std::string a = run_all(spec, opt, 4).json.dump(2), b = run_all(spec, opt, 1).json.dump(2);
    if (a != b) o.fail("reports differ");
    if (o.pass) o.detail = std::to_string(spec.jobs.size()) + " jobs, " + std::to_string(a.size()) + " bytes";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> cs = {
        {1, "pairing index lemma", pairing_lemma},
        {2, "bar vs composite", bar_vs_composite},
        {3, "TQ of free algebras", tq_free},
        {4, "slices vs one-term models", [] { return slices(D); }},
        {5, "fiber sequences", [] { return fibers(D); }},
        {6, "connectivity", connectivity},
        {7, "AQ lifting", aq_lifting},
        {8, "pushout corner maps", pushouts},
        {9, "associativity iso", assoc_iso},
        {10, "determinism", determinism},
    };
    bool all = true;
    for (const auto& c : cs) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.name << ": " << o.detail << " [" << std::fixed
                  << std::setprecision(1) << secs << "s]" << std::endl;
    }
    return all ? 0 : 1;
}
