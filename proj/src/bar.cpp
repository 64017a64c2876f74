#include "opcalc/bar.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace opcalc {

Totalization::Totalization(EnginePtr eng, std::vector<Cell> cells, int max_deg)
    : eng_(std::move(eng)), cells_(std::move(cells)), max_deg_(max_deg) {
    const Field& F = eng_->field();
    pos_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) by_stack_[stack_keys(cells_[c].stack)] = c;
    lo_ = 0;
    basis_.assign(std::max(0, max_deg + 1), {});
    for (int t = 0; t <= max_deg; ++t)
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const Level& lv = eng_->level(cells_[c].stack);
            int internal = t - cells_[c].shift;
            if (internal < 0) continue;
            for (Index id = lv.offset(internal); id < lv.offset(internal + 1); ++id) {
                if (lv.node(id).mask) continue;
                pos_[c][id] = static_cast<Index>(basis_[t].size());
                basis_[t].emplace_back(c, id);
            }
        }
    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    for (int t = 0; t <= max_deg; ++t) {
        dims.push_back(basis_[t].size());
        std::vector<SparseVec> cols;
        for (const auto& [c, id] : basis_[t]) {
            const Cell& cell = cells_[c];
            SparseVec col;
            for (const auto& [depth, e] : cell.faces) {
                auto tc = cell_of(eng_->face_stack(cell.stack, depth));
                if (!tc) throw std::logic_error("Totalization: face lands outside the cells");
                axpy(F, col, F.sign(e), embed(*tc, eng_->face(cell.stack, depth, id)));
            }
            axpy(F, col, F.sign(cell.delta_sign), embed(c, eng_->diff(cell.stack, id)));
            cols.push_back(std::move(col));
        }
        diffs.push_back(Matrix::from_columns(F, t > 0 ? basis_[t - 1].size() : 0, cols));
    }
    complex_ = ChainComplex(F, 0, dims, diffs);
}

std::optional<std::size_t> Totalization::cell_of(const Stack& s) const {
    auto it = by_stack_.find(stack_keys(s));
    if (it == by_stack_.end()) return std::nullopt;
    return it->second;
}

std::optional<Index> Totalization::position(std::size_t c, Index id) const {
    auto it = pos_[c].find(id);
    if (it == pos_[c].end()) return std::nullopt;
    return it->second;
}

SparseVec Totalization::embed(std::size_t c, const SparseVec& ids) const {
    std::vector<std::pair<Index, Scalar>> out;
    for (const auto& [id, v] : ids)
        if (auto p = position(c, id)) out.emplace_back(*p, v);
    return collect(eng_->field(), std::move(out));
}

// ---------------------------------------------------------------------------

std::string layer_key(const Bimodule& M) {
    std::ostringstream os;
    os << M.name << "@" << M.seq.storage_id() << "[" << M.seq.window_lo().str() << "," << M.seq.window_hi().str() << ")";
    return os.str();
}

BarContext::BarContext(const Algebra& I, BarOptions opt) : op_(I.op), alg_(I), opt_(opt) {
    const int D = opt_.degree_cap;
    conn_ = I.connectivity();
    if (opt_.mode == BarMode::exact) {
        if (!op_->unit_is_arity_one())
            throw std::invalid_argument("bar: exact mode requires O(1) = unit (operad " + op_->name() + ")");
        if (conn_ < 1) throw std::invalid_argument("bar: exact mode requires an algebra concentrated in degrees >= 1");
    } else if (opt_.bar_cap < 0) {
        throw std::invalid_argument("bar: negative bar cap");
    }
    if (conn_ < 0) throw std::invalid_argument("bar: algebra has negative degrees");
    if (op_->min_degree() < 0) throw std::invalid_argument("bar: operad has negative degrees");
    if (conn_ >= 1 && conn_ != INT_MAX && op_->arity_cap() < (D + 1) / conn_)
        throw std::invalid_argument("bar: degree cap " + std::to_string(D) + " needs arity bound " +
                                    std::to_string((D + 1) / conn_) + " but the operad stops at " +
                                    std::to_string(op_->arity_cap()));
    eng_ = std::make_shared<Engine>(alg_, D + 1);
    op_layer_ = Layer{"O:" + op_->name(), op_->seq(), true, op_->unit()};
    OperadPtr O = op_;
    eng_->register_merge(op_layer_, op_layer_, [O](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
        return O->gamma(r, xdeg, x, sizes, ys);
    }, op_layer_);
    eng_->register_act(op_layer_, alg_.act);
}

int BarContext::max_bar_degree() const {
    const int D = opt_.degree_cap;
    if (opt_.mode == BarMode::truncated) return opt_.bar_cap;
    if (conn_ == INT_MAX) return 0;
    // A nondegenerate n-simplex has at least n+1 leaves.
    int n = 0;
    while ((n + 2) * conn_ + (n + 1) <= D + 1) ++n;
    return n;
}

int BarContext::valid_through() const {
    const int D = opt_.degree_cap;
    if (opt_.mode == BarMode::exact) return D;
    int c = conn_ == INT_MAX ? D + 1 : std::max(0, conn_);
    return std::min(D, opt_.bar_cap + c - 1);
}

void BarContext::register_merge(const Layer& upper, const Layer& lower, ComposeFn fn, const Layer& result) {
    eng_->register_merge(upper, lower, std::move(fn), result);
}

Layer BarContext::module_layer(const Bimodule& M) {
    if (M.op->name() != op_->name())
        throw std::invalid_argument("bar: module over " + M.op->name() + " used with operad " + op_->name());
    const int D = opt_.degree_cap;
    if (conn_ >= 1 && conn_ != INT_MAX && M.seq.arity_cap() < (D + 1) / conn_ &&
        !(M.seq.window_hi() <= ExtNat(M.seq.arity_cap() + 1)))
        throw std::invalid_argument("bar: module " + M.name + " is only known up to arity " +
                                    std::to_string(M.seq.arity_cap()));
    Layer L{layer_key(M), M.seq, false, 0};
    if (!eng_->has_merge(L.key, op_layer_.key)) eng_->register_merge(L, op_layer_, M.rho, L);
    return L;
}

Layer BarContext::bimodule_layer(const Bimodule& N) {
    Layer L = module_layer(N);
    if (!eng_->has_merge(op_layer_.key, L.key)) eng_->register_merge(op_layer_, L, N.lambda, L);
    return L;
}

BarContextPtr make_bar_context(const Algebra& I, BarOptions opt) { return std::make_shared<BarContext>(I, opt); }

int BarComplex::bar_degree(int deg, Index j) const {
    auto [c, id] = tot->element(deg, j);
    (void)id;
    return tot->cells()[c].shift;
}

namespace {

Stack with_ops(Stack prefix, const Layer& O, int n) {
    for (int i = 0; i < n; ++i) prefix.push_back(O);
    return prefix;
}

BarComplex make_bar(const BarContextPtr& ctx, const Layer& top) {
    std::vector<Cell> cells;
    for (int n = 0; n <= ctx->max_bar_degree(); ++n) {
        Cell c{{n}, with_ops({top}, ctx->op_layer(), n), n, {}, n};
        if (n >= 1)
            for (int i = 0; i <= n; ++i) c.faces.emplace_back(i, i);
        cells.push_back(std::move(c));
    }
    auto tot = std::make_shared<Totalization>(ctx->engine(), std::move(cells), ctx->options().degree_cap + 1);
    return BarComplex{tot->complex(), ctx->options().mode, ctx->valid_through(), ctx, tot, top};
}

}  // namespace

BarComplex bar(const BarContextPtr& ctx, const Bimodule& M) { return make_bar(ctx, ctx->module_layer(M)); }

BarComplex bar(const Bimodule& M, const Algebra& I, BarOptions opt) { return bar(make_bar_context(I, opt), M); }

Bimodule tq_module(const OperadPtr& O) { return level_truncate(operad_bimodule(O), 1, 2); }

BarComplex tq(const BarContextPtr& ctx) { return bar(ctx, tq_module(ctx->op())); }

BarComplex tq(const Algebra& I, BarOptions opt) { return tq(make_bar_context(I, opt)); }

ChainMap truncation_bar_map(const BarComplex& src, const BarComplex& dst) {
    if (src.ctx != dst.ctx) throw std::invalid_argument("truncation_bar_map: complexes over different contexts");
    Engine& eng = *src.ctx->engine();
    const Field& F = eng.field();
    return ChainMap::from_images(src.total, dst.total, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = src.tot->element(deg, j);
        const Stack& s = src.tot->cells()[c].stack;
        Stack t = s;
        t[0] = dst.top;
        auto tc = dst.tot->cell_of(t);
        if (!tc) return {};
        const Node& n = eng.level(s).node(id);
        auto hit = eng.level(t).find(n.r, n.xdeg, n.x, n.word);
        if (!hit) return {};
        return dst.tot->embed(*tc, unit_vec(F, *hit));
    });
}

ChainMap induced_bar_map(const BarComplex& src, const BarComplex& dst, const ChainMap& f) {
    EnginePtr se = src.ctx->engine(), de = dst.ctx->engine();
    const Level& sl = se->level({});
    const Level& dl = de->level({});
    InducedMap im(se, de, [&](Index id) {
        const Node& n = sl.node(id);
        SparseVec out;
        Index base = dl.offset(n.deg);
        for (const auto& [j, c] : f.image(n.deg, n.x)) out.emplace_back(base + j, c);
        return out;
    });
    return ChainMap::from_images(src.total, dst.total, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = src.tot->element(deg, j);
        const Stack& s = src.tot->cells()[c].stack;
        auto tc = dst.tot->cell_of(s);
        if (!tc) return {};
        return dst.tot->embed(*tc, im(s, id));
    });
}

// ---------------------------------------------------------------------------

Bisimplicial bisimplicial_bar(const BarContextPtr& ctx, const Bimodule& M, const Bimodule& N, bool left_convention) {
    Layer Lm = ctx->module_layer(M);
    Layer Ln = ctx->bimodule_layer(N);
    const Layer& O = ctx->op_layer();
    std::vector<Cell> cells;
    int nmax = ctx->max_bar_degree();
    for (int tot = 0; tot <= nmax; ++tot)
        for (int p = tot; p >= 0; --p) {
            int q = tot - p;
            Stack s = with_ops({Lm}, O, p);
            s.push_back(Ln);
            s = with_ops(s, O, q);
            Cell c{{p, q}, s, p + q, {}, p + q};
            int ep = left_convention ? 0 : q, eq = left_convention ? p : 0;
            if (p >= 1)
                for (int i = 0; i <= p; ++i) c.faces.emplace_back(i, ep + i);
            if (q >= 1)
                for (int i = 0; i <= q; ++i) c.faces.emplace_back(p + 1 + i, eq + i);
            cells.push_back(std::move(c));
        }
    auto t = std::make_shared<Totalization>(ctx->engine(), std::move(cells), ctx->options().degree_cap + 1);
    return Bisimplicial{BarComplex{t->complex(), ctx->options().mode, ctx->valid_through(), ctx, t, Lm}, Lm, Ln,
                        left_convention};
}

ChainMap bar_assoc_iso(const Bisimplicial& L, const Bisimplicial& R) {
    if (L.complex.ctx != R.complex.ctx || L.left.key != R.left.key || L.mid.key != R.mid.key)
        throw std::invalid_argument("bar_assoc_iso: the two sides are built from different data");
    if (!L.left_convention || R.left_convention) throw std::invalid_argument("bar_assoc_iso: expects (left, right) conventions");
    const Field& F = L.complex.ctx->engine()->field();
    return ChainMap::from_images(L.complex.total, R.complex.total, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = L.complex.tot->element(deg, j);
        const Cell& cell = L.complex.tot->cells()[c];
        auto tc = R.complex.tot->cell_of(cell.stack);
        if (!tc) return {};
        return R.complex.tot->embed(*tc, SparseVec{{id, F.sign(static_cast<long>(cell.grading[0]) * cell.grading[1])}});
    });
}

ChainMap bar_assoc_iso(const BarContextPtr& ctx, const Bimodule& M, const Bimodule& N) {
    return bar_assoc_iso(bisimplicial_bar(ctx, M, N, true), bisimplicial_bar(ctx, M, N, false));
}

// ---------------------------------------------------------------------------

namespace {

// Multishuffles of {0..Q-1} into blocks of sizes ns: lab[t] is the block of
// position t. Calls f(sign exponent, lab).
void for_shuffles(const std::vector<int>& ns, const std::function<void(long, const std::vector<int>&)>& f) {
    int Q = std::accumulate(ns.begin(), ns.end(), 0);
    std::vector<int> left = ns, lab(Q);
    std::function<void(int, long)> rec = [&](int t, long inv) {
        if (t == Q) {
            f(inv, lab);
            return;
        }
        for (std::size_t k = 0; k < left.size(); ++k) {
            if (!left[k]) continue;
            // positions already placed with a larger label form inversions
            long add = 0;
            for (std::size_t l = k + 1; l < left.size(); ++l) add += ns[l] - left[l];
            lab[t] = static_cast<int>(k);
            --left[k];
            rec(t + 1, inv + add);
            ++left[k];
        }
    };
    rec(0, 0);
}

// Applies the degeneracies of block k of a shuffle to node id of stack
// [root] + O^{n}: s_j for every position j not labelled k, in increasing order.
SparseVec degenerate(Engine& eng, const Layer& root, const Layer& O, int n, Index id, const std::vector<int>& lab, int k) {
    const Field& F = eng.field();
    SparseVec v = unit_vec(F, id);
    int cur = n;
    for (std::size_t j = 0; j < lab.size(); ++j) {
        if (lab[j] == k) continue;
        Stack s = with_ops({root}, O, cur);
        SparseVec w;
        for (const auto& [i, c] : v) axpy(F, w, c, eng.insert_unit(s, j + 1, O, i));
        v = std::move(w);
        ++cur;
        if (v.empty()) break;
    }
    return v;
}

struct LeafInfo {
    Index id;  // node in [root] + O^n
    int n;
    int alpha;
};

// Shuffles leaves to a common simplicial degree Q and calls f(coefficient,
// leaf vectors in [root] + O^Q). The Koszul sign for moving suspensions past
// preceding operations is supplied in pre_sign.
void shuffle_leaves(Engine& eng, const Layer& root, const Layer& O, const std::vector<LeafInfo>& leaves, long pre_sign,
                    const std::function<void(const Scalar&, const std::vector<SparseVec>&)>& f) {
    const Field& F = eng.field();
    std::vector<int> ns;
    for (const auto& l : leaves) ns.push_back(l.n);
    for_shuffles(ns, [&](long inv, const std::vector<int>& lab) {
        std::vector<SparseVec> parts;
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            parts.push_back(degenerate(eng, root, O, leaves[k].n, leaves[k].id, lab, static_cast<int>(k)));
            if (parts.back().empty()) return;
        }
        f(F.sign(inv + pre_sign), parts);
    });
}

}  // namespace

Algebra bar_algebra(const BarComplex& B, const Bimodule& M) {
    BarContextPtr ctx = B.ctx;
    EnginePtr eng = ctx->engine();
    OperadPtr O = ctx->op();
    Layer act_layer{"act:" + O->name(), O->seq(), false, O->unit()};
    ctx->register_merge(act_layer, B.top, M.lambda, B.top);
    auto tot = B.tot;
    Layer top = B.top;
    ActFn act = [ctx, eng, tot, top, act_layer](int r, int xdeg, Index x, const Args& as) -> SparseVec {
        const Field& F = eng->field();
        std::vector<LeafInfo> leaves;
        long pre = 0, alpha_before = 0;
        int Q = 0;
        for (const auto& [deg, j] : as) {
            auto [c, id] = tot->element(deg, j);
            int n = tot->cells()[c].shift;
            int alpha = deg - n;
            pre += static_cast<long>(n) * (xdeg + alpha_before);
            alpha_before += alpha;
            Q += n;
            leaves.push_back({id, n, alpha});
        }
        Stack target = with_ops({top}, ctx->op_layer(), Q);
        auto tc = tot->cell_of(target);
        if (!tc) return {};
        SparseVec out;
        SparseVec ex = unit_vec(F, x);
        shuffle_leaves(*eng, top, ctx->op_layer(), leaves, pre, [&](const Scalar& sg, const std::vector<SparseVec>& parts) {
            for_each_term(F, parts, [&](const Scalar& c, const std::vector<Index>& ids) {
                axpy(F, out, F.mul(sg, c), eng->merge(act_layer, r, xdeg, ex, ids, target));
            });
        });
        return tot->embed(*tc, out);
    };
    return Algebra{O, B.total, act, "B(" + M.name + ")"};
}

RelativeAlgebraComposite augmentation_to_relative(const BarComplex& B) {
    Engine& eng = *B.ctx->engine();
    const int top = B.ctx->options().degree_cap + 1;
    Stack S0{B.top}, S1{B.top, B.ctx->op_layer()};
    ChainComplex C0 = eng.complex(S0, top), C1 = eng.complex(S1, top);
    const Level& l0 = eng.level(S0);
    const Level& l1 = eng.level(S1);
    const Field& F = eng.field();
    auto local = [&](const SparseVec& ids) {
        SparseVec out;
        for (const auto& [id, c] : ids) out.emplace_back(id - l0.offset(l0.degree(id)), c);
        return out;
    };
    ChainMap g = ChainMap::from_images(C1, C0, [&](int deg, Index j) {
        Index id = l1.offset(deg) + j;
        return local(sub(F, eng.face(S1, 0, id), eng.face(S1, 1, id)));
    });
    Cokernel ck = cokernel(g);
    ChainMap aug = ChainMap::from_images(B.total, ck.complex, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = B.tot->element(deg, j);
        if (B.tot->cells()[c].shift != 0) return {};
        return ck.projection.image(deg, id - l0.offset(deg));
    });
    return {ck.complex, aug};
}

namespace {

// Rebuilds an outer tree with the given leaf vectors over the stack suffix,
// returning a vector in level(outer_stack + suffix) of the engine.
SparseVec rebuild(Engine& outer, Engine& inner, const Stack& s, Index id, const Stack& suffix,
                  const std::vector<SparseVec>& leaf_vecs, std::size_t& next) {
    if (s.empty()) return leaf_vecs[next++];
    const Node n = outer.level(s).node(id);
    Stack ts = Engine::tail(s);
    std::vector<SparseVec> parts;
    for (Index c : n.word) parts.push_back(rebuild(outer, inner, ts, c, suffix, leaf_vecs, next));
    Stack full = s;
    full.insert(full.end(), suffix.begin(), suffix.end());
    const Field& F = inner.field();
    SparseVec out;
    SparseVec ex = unit_vec(F, n.x);
    for_each_term(F, parts, [&](const Scalar& c, const std::vector<Index>& w) {
        axpy(F, out, c, inner.canonical(full, n.r, n.xdeg, ex, w));
    });
    return out;
}

// Leaves of an outer tree in order, with the Koszul exponent for moving each
// leaf's suspension to the front.
void collect_leaves(Engine& outer, const Stack& s, Index id, const Totalization& inner_tot, std::vector<LeafInfo>& leaves,
                    long& ops_before, long& alpha_before, long& sign) {
    if (s.empty()) {
        const Node& n = outer.level(s).node(id);
        auto [c, iid] = inner_tot.element(n.deg, n.x);
        int q = inner_tot.cells()[c].shift;
        int alpha = n.deg - q;
        sign += static_cast<long>(q) * (ops_before + alpha_before);
        alpha_before += alpha;
        leaves.push_back({iid, q, alpha});
        return;
    }
    const Node n = outer.level(s).node(id);
    ops_before += n.xdeg;
    Stack ts = Engine::tail(s);
    for (Index c : n.word) collect_leaves(outer, ts, c, inner_tot, leaves, ops_before, alpha_before, sign);
}

// EZ comparison of an outer tree over the leaf inner.total to trees over
// [inner.top] + O^Q in the inner engine. f receives (Q, vector in level(s + suffix)).
void nested_ez(Engine& outer, const BarComplex& inner, const Stack& s, Index id,
               const std::function<void(int, const SparseVec&)>& f) {
    Engine& ie = *inner.ctx->engine();
    const Layer& O = inner.ctx->op_layer();
    std::vector<LeafInfo> leaves;
    long ops = 0, alpha = 0, sign = 0;
    collect_leaves(outer, s, id, *inner.tot, leaves, ops, alpha, sign);
    int Q = 0;
    for (const auto& l : leaves) Q += l.n;
    Stack suffix = with_ops({inner.top}, O, Q);
    SparseVec acc;
    shuffle_leaves(ie, inner.top, O, leaves, sign, [&](const Scalar& sg, const std::vector<SparseVec>& parts) {
        std::size_t next = 0;
        axpy(ie.field(), acc, sg, rebuild(outer, ie, s, id, suffix, parts, next));
    });
    f(Q, acc);
}

}  // namespace

ChainMap nested_to_bisimplicial(const BarComplex& outer, const BarComplex& inner, const Bisimplicial& bis) {
    Engine& oe = *outer.ctx->engine();
    const Layer& O = inner.ctx->op_layer();
    return ChainMap::from_images(outer.total, bis.complex.total, [&](int deg, Index j) -> SparseVec {
        auto [c, id] = outer.tot->element(deg, j);
        const Stack& s = outer.tot->cells()[c].stack;
        SparseVec out;
        nested_ez(oe, inner, s, id, [&](int Q, const SparseVec& v) {
            Stack full = s;
            full.push_back(bis.mid);
            full = with_ops(full, O, Q);
            auto tc = bis.complex.tot->cell_of(full);
            if (tc) out = bis.complex.tot->embed(*tc, v);
        });
        return out;
    });
}

OneTerm one_term_model(const BarContextPtr& ctx, const Bimodule& Mn) {
    if (!ctx->op()->unit_is_arity_one()) throw std::invalid_argument("one_term_model: requires O(1) = unit");
    BarComplex T = tq(ctx);
    BarComplex B = bar(ctx, Mn);
    const int top = ctx->options().degree_cap + 1;
    auto outer = std::make_shared<Engine>(Algebra{ctx->op(), T.total, nullptr, "TQ"}, top);
    Layer Lmn = B.top;
    ChainComplex model = outer->complex({Lmn}, top);
    ctx->register_merge(Lmn, T.top, Mn.rho, Lmn);
    Engine& ie = *ctx->engine();
    const Level& ml = outer->level({Lmn});
    ChainMap cmp = ChainMap::from_images(model, B.total, [&](int deg, Index j) -> SparseVec {
        Index id = ml.offset(deg) + j;
        SparseVec out;
        nested_ez(*outer, T, {Lmn}, id, [&](int Q, const SparseVec& v) {
            Stack full = with_ops({Lmn, T.top}, ctx->op_layer(), Q);
            SparseVec merged;
            for (const auto& [i, c] : v) axpy(ie.field(), merged, c, ie.face(full, 0, i));
            auto tc = B.tot->cell_of(with_ops({Lmn}, ctx->op_layer(), Q));
            if (tc) out = B.tot->embed(*tc, merged);
        });
        return out;
    });
    return OneTerm{model, cmp, B, T};
}

}  // namespace opcalc
