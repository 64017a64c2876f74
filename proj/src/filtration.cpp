#include <map>
#include "opcalc/filtration.hpp"

#include <functional>
#include <stdexcept>

namespace opcalc {

FiltrationIndex::FiltrationIndex(int i_, ExtNat m_) : i(i_), m(m_) {
    if (i < 1 || !(ExtNat(i) < m))
        throw std::invalid_argument("filtration index needs 1 <= i < m, got (" + std::to_string(i) + ", " + m.str() + ")");
}

std::string FiltrationIndex::str() const { return std::to_string(i) + "," + m.str(); }

Bimodule filtration_module(const OperadPtr& O, const FiltrationIndex& idx) {
    return level_truncate(operad_bimodule(O), idx.i, idx.m);
}

FiltrationPiece filtration_piece(const BarContextPtr& ctx, const FiltrationIndex& idx) {
    Bimodule M = filtration_module(ctx->op(), idx);
    BarComplex B = bar(ctx, M);
    return {idx, M, B};
}

ChainMap structure_map(const FiltrationPiece& from, const FiltrationPiece& to) {
    if (to.index.i > from.index.i || to.index.m > from.index.m)
        throw std::invalid_argument("structure_map: I^" + from.index.str() + " has no map to I^" + to.index.str());
    return truncation_bar_map(from.complex, to.complex);
}

GoodwillieStage goodwillie_stage(const BarContextPtr& ctx, const Bimodule& M, int n) {
    if (n < 1) throw std::invalid_argument("goodwillie_stage: n must be >= 1");
    Bimodule Mn = level_truncate(M, 1, ExtNat(n + 1));
    return {n, Mn, bar(ctx, Mn)};
}

ChainMap tower_map(const GoodwillieStage& from, const GoodwillieStage& to) {
    if (to.n > from.n) throw std::invalid_argument("tower_map: maps go down the tower");
    return truncation_bar_map(from.complex, to.complex);
}

bool ConnectivityReport::ok() const {
    for (const auto& e : entries)
        if (!e.piece_ok || !e.cone_ok) return false;
    return true;
}

ConnectivityReport connectivity_report(const BarContextPtr& ctx, int c, int n_max) {
    if (c < 1) throw std::invalid_argument("connectivity_report: c must be >= 1");
    if (ctx->algebra().connectivity() < c)
        throw std::invalid_argument("connectivity_report: algebra has classes below degree " + std::to_string(c));
    ConnectivityReport rep;
    rep.c = c;
    FiltrationPiece whole = filtration_piece(ctx, {1, ExtNat::inf()});
    for (int n = 1; n <= n_max; ++n) {
        ConnectivityEntry e;
        e.n = n;
        FiltrationPiece P = filtration_piece(ctx, {n, ExtNat::inf()});
        e.valid_through = P.complex.valid_through;
        e.piece_ok = true;
        for (int d = 0; d <= e.valid_through; ++d) {
            e.betti.push_back(betti(P.complex.total, d));
            if (d < n * c && e.betti.back()) e.piece_ok = false;
        }
        GoodwillieStage S = goodwillie_stage(ctx, operad_bimodule(ctx->op()), n);
        ChainComplex C = cone(truncation_bar_map(whole.complex, S.complex));
        e.cone_ok = true;
        for (int d = 0; d <= std::min((n + 1) * c - 1, e.valid_through); ++d)
            if (betti(C, d)) e.cone_ok = false;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

ExactnessReport check_fiber_sequence(const ChainMap& i, const ChainMap& p, int through) {
    ExactnessReport r;
    const ChainComplex& L = i.source();
    const ChainComplex& M = i.target();
    const ChainComplex& N = p.target();
    auto fail = [&](bool& flag, const std::string& what, int d) {
        flag = false;
        r.failures.push_back(what + " in degree " + std::to_string(d));
    };
    if (!compose(p, i).is_zero()) fail(r.short_exact, "p∘i != 0", 0);
    int lo = INT_MAX, hi = INT_MIN;
    for (const ChainComplex* C : {&L, &M, &N})
        if (!C->empty()) {
            lo = std::min(lo, C->dmin());
            hi = std::max(hi, C->dmax());
        }
    for (int d = lo; d <= hi; ++d) {
        if (rank(i.at(d)) != L.dim(d)) fail(r.short_exact, "i not injective", d);
        if (rank(p.at(d)) != N.dim(d)) fail(r.short_exact, "p not surjective", d);
        if (M.dim(d) != L.dim(d) + N.dim(d)) fail(r.short_exact, "dimensions do not add up", d);
    }
    auto rank_d = [](const ChainComplex& C, int d) { return C.rank_d(d); };
    auto betti_c = [](const ChainComplex& C, int d) { return betti(C, d); };
    std::map<int, std::size_t> ri;
    auto rank_i = [&](int d) {
        auto [it, fresh] = ri.try_emplace(d, 0);
        if (fresh) it->second = induced_rank(i, d, rank_d(M, d + 1));
        return it->second;
    };
    for (int d = lo; d <= std::min(hi, through); ++d) {
        std::size_t a = rank_i(d), b = induced_rank(p, d, rank_d(N, d + 1));
        if (a + b != betti_c(M, d)) fail(r.long_exact, "not exact at H(M)", d);
        // rank of the connecting map H_d(N) -> H_{d-1}(L), seen from both ends
        std::size_t from_n = betti_c(N, d) - b;
        std::size_t from_l = betti_c(L, d - 1) - rank_i(d - 1);
        if (from_n != from_l) fail(r.long_exact, "not exact at H(N) or H(L)", d);
    }
    return r;
}

std::pair<int, ExtNat> pairing_index(int i, ExtNat m, int j, ExtNat n) {
    int ij = i * j;
    return {ij, min(ExtNat(ij) + (n - j), m * ExtNat(j))};
}

ExtNat pairing_index_oracle(int i, ExtNat m, int j, ExtNat n, int s_max) {
    ExtNat best = ExtNat::inf();
    std::vector<int> parts;
    // partitions s_1 >= s_2 >= ... >= j with sum <= s_max
    std::function<void(int, int)> rec = [&](int sum, int largest) {
        int r = static_cast<int>(parts.size());
        if (r >= i && (ExtNat(r) >= m || ExtNat(parts.front()) >= n) && ExtNat(sum) < best) best = ExtNat(sum);
        for (int s = j; s <= largest && sum + s <= s_max; ++s) {
            parts.push_back(s);
            rec(sum + s, s);
            parts.pop_back();
        }
    };
    rec(0, s_max);
    return best;
}

FilteredAlgebra filtered_algebra(const Algebra& J, const FiltrationIndex& idx, BarOptions opt) {
    auto ctx = make_bar_context(J, opt);
    FiltrationPiece P = filtration_piece(ctx, idx);
    Algebra A = bar_algebra(P.complex, P.module);
    A.name = J.name + "^" + idx.str();
    return {ctx, idx, P.module, P.complex, A};
}

PairingMap pairing_map(const FilteredAlgebra& inner, const FiltrationIndex& outer) {
    const BarContextPtr& ctx = inner.ctx;
    OperadPtr O = ctx->op();
    auto [lo, hi] = pairing_index(outer.i, outer.m, inner.index.i, inner.index.m);
    FiltrationIndex target_idx(lo, hi);
    Bimodule M = filtration_module(O, outer);
    Bimodule L = filtration_module(O, target_idx);

    BarComplex source = bar(M, inner.algebra, ctx->options());
    Bisimplicial left = bisimplicial_bar(ctx, M, inner.module, true);
    Bisimplicial right = bisimplicial_bar(ctx, M, inner.module, false);
    ChainMap ez = nested_to_bisimplicial(source, inner.bar, left);
    ChainMap iso = bar_assoc_iso(left, right);

    BarComplex target = bar(ctx, L);
    ctx->register_merge(left.left, left.mid, [O](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
        return O->gamma(r, xdeg, x, sizes, ys);
    }, target.top);
    Engine& eng = *ctx->engine();
    const auto& rt = *right.complex.tot;
    // μ on the p = 0 cells M∘N∘O^q; cells with p > 0 map to zero.
    ChainMap mu = ChainMap::from_images(right.complex.total, target.total, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = rt.element(deg, j);
        const Cell& cell = rt.cells()[c];
        if (cell.grading[0] != 0) return {};
        auto tc = target.tot->cell_of(eng.face_stack(cell.stack, 0));
        if (!tc) return {};
        return target.tot->embed(*tc, eng.face(cell.stack, 0, id));
    });
    return {compose(mu, compose(iso, ez)), source, target, target_idx};
}

ChainMap power_map(const Algebra& I, const FilteredAlgebra& Jd, const ChainMap& f, int n) {
    if (n < 1) throw std::invalid_argument("power_map: n must be >= 1");
    if (n == 1) return f;
    if (!Jd.index.m.is_inf()) throw std::invalid_argument("power_map: expects J^d_∞");
    PairingMap pm = pairing_map(Jd, {n, ExtNat::inf()});
    auto ctx = make_bar_context(I, Jd.ctx->options());
    BarComplex src = filtration_piece(ctx, {n, ExtNat::inf()}).complex;
    return compose(pm.map, induced_bar_map(src, pm.source, f));
}

namespace {

ChainMap tq_map(const BarContextPtr& a, const BarContextPtr& b, const ChainMap& f) {
    return induced_bar_map(tq(a), tq(b), f);
}

}  // namespace

AQFactorization aq_factorization(std::vector<Algebra> algebras, std::vector<ChainMap> maps, BarOptions opt) {
    if (algebras.size() != maps.size() + 1) throw std::invalid_argument("aq_factorization: need one more algebra than maps");
    AQFactorization out{std::move(algebras), std::move(maps), {}, opt};
    std::vector<BarContextPtr> ctx;
    for (const auto& A : out.algebras) ctx.push_back(make_bar_context(A, opt));
    for (std::size_t k = 0; k < out.maps.size(); ++k) {
        ChainMap t = tq_map(ctx[k], ctx[k + 1], out.maps[k]);
        auto h = find_null_homotopy(t);
        if (!h) throw std::invalid_argument("aq_factorization: TQ(f(" + std::to_string(k + 1) + ")) is not null");
        out.tq_null.push_back(std::move(*h));
    }
    return out;
}

AQLift aq_lift(const AQFactorization& fact) {
    const std::size_t s = fact.maps.size();
    if (fact.algebras.size() != s + 1 || fact.tq_null.size() != s)
        throw std::invalid_argument("aq_lift: malformed factorization");
    if (s > 1) throw std::invalid_argument("aq_lift: only factorizations of length <= 1 are supported");
    const BarOptions& opt = fact.options;
    const Algebra& I = fact.algebras.front();
    const Algebra& J = fact.algebras.back();
    auto ci = make_bar_context(I, opt);
    auto cj = s ? make_bar_context(J, opt) : ci;
    OperadPtr O = ci->op();
    const Field& F = O->field();

    AQLift out;
    out.domain = filtration_piece(ci, {1, ExtNat::inf()}).complex;
    out.base = filtration_piece(cj, {1, ExtNat::inf()}).complex;
    out.report.s = static_cast<int>(s);
    out.report.c = std::min(I.connectivity(), J.connectivity());
    out.report.valid_through = std::min(out.domain.valid_through, out.base.valid_through);

    if (s == 0) {
        out.target = out.base;
        out.lift = ChainMap::identity(out.domain.total);
        out.f_bar = out.lift;
        out.triangle = ChainHomotopy{out.lift, out.lift, {}, INT_MAX};
        out.report.nullhomotopies_verified = true;
        out.report.triangle_verified = out.triangle.verify();
        out.report.target_connected = true;
        out.report.vanishing = true;
        return out;
    }

    const ChainMap& f = fact.maps[0];
    const ChainHomotopy& H = fact.tq_null[0];
    BarComplex tqi = tq(ci), tqj = tq(cj);
    ChainMap t = induced_bar_map(tqi, tqj, f);
    if (!(H.f == t) || !H.g.is_zero() || !H.verify())
        throw InvariantViolation("aq_lift: claimed nullhomotopy of TQ(f) fails verification");
    out.report.nullhomotopies_verified = true;

    out.target = filtration_piece(cj, {2, ExtNat::inf()}).complex;
    out.f_bar = induced_bar_map(out.domain, out.base, f);
    ChainMap trunc = truncation_bar_map(out.domain, tqi);
    ChainMap g = truncation_bar_map(out.base, tqj);
    ChainMap incl = truncation_bar_map(out.target, out.base);
    HomotopyFiber fib = homotopy_fiber(g);

    // f~ = (-H∘trunc, f_bar) into fib_n = T_{n+1} ⊕ S_n.
    const ChainComplex& T = tqj.total;
    ChainMap lifted = ChainMap::from_images(out.domain.total, fib.fiber, [&](int d, Index j) {
        SparseVec res = scaled(F, H.at(d).apply(trunc.image(d, j)), F.from_int(-1));
        std::size_t tb = T.dim(d + 1);
        for (const auto& [i, c] : out.f_bar.image(d, j)) res.emplace_back(tb + i, c);
        return res;
    });
    // c: J^2 -> fib, a -> (0, incl a): a quasi-iso since J^2 -> J^1 -> J^1_2 is short exact.
    ChainMap cmap = ChainMap::from_images(out.target.total, fib.fiber, [&](int d, Index j) {
        SparseVec res;
        std::size_t tb = T.dim(d + 1);
        for (const auto& [i, c] : incl.image(d, j)) res.emplace_back(tb + i, c);
        return res;
    });
    auto inv = homotopy_inverse(cmap);
    if (!inv) throw InvariantViolation("aq_lift: J^2 -> fib is not a quasi-isomorphism");
    out.lift = compose(inv->inverse, lifted);

    // incl∘lift - f_bar = proj∘(c∘inv - id)∘f~ = d(proj K f~) + (proj K f~)d.
    out.triangle = ChainHomotopy{compose(incl, out.lift), out.f_bar, {}, INT_MAX};
    const ChainComplex& D = out.domain.total;
    if (!D.empty())
        for (int d = D.dmin(); d <= D.dmax(); ++d)
            out.triangle.components.push_back(fib.projection.at(d + 1) * inv->homotopy.at(d) * lifted.at(d));
    out.report.triangle_verified = out.triangle.verify();

    int bound = 2 * out.report.c;
    out.report.target_connected = true;
    out.report.vanishing = true;
    for (int d = 0; d <= out.report.valid_through; ++d) {
        std::size_t rk = induced_rank(f, d);
        out.report.ranks.push_back(rk);
        if (d < bound) {
            if (rk) out.report.vanishing = false;
            if (betti(out.target.total, d)) out.report.target_connected = false;
        }
    }
    return out;
}

}  // namespace opcalc
