#include "opcalc/schur.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace opcalc {

std::size_t Level::VecHash::operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = v.size();
    for (auto x : v) h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

Index Level::offset(int d) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), d, [](const Node& n, int v) { return n.deg < v; });
    return static_cast<Index>(it - nodes_.begin());
}

namespace {

std::vector<std::int64_t> node_key(int r, int xdeg, Index x, const std::vector<Index>& word) {
    std::vector<std::int64_t> k{r, xdeg, static_cast<std::int64_t>(x)};
    for (Index w : word) k.push_back(static_cast<std::int64_t>(w));
    return k;
}

int bar_count(const Stack& s) {
    int b = 0;
    for (const auto& L : s) b += L.bar;
    return b;
}

}  // namespace

std::optional<Index> Level::find(int r, int xdeg, Index x, const std::vector<Index>& word) const {
    auto it = lookup_.find(node_key(r, xdeg, x, word));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> stack_keys(const Stack& s) {
    std::vector<std::string> k;
    for (const auto& L : s) k.push_back(L.key);
    return k;
}

void for_each_term(const Field& F, const std::vector<SparseVec>& vs,
                   const std::function<void(const Scalar&, const std::vector<Index>&)>& f) {
    std::vector<Index> cur(vs.size());
    std::function<void(std::size_t, const Scalar&)> rec = [&](std::size_t k, const Scalar& c) {
        if (k == vs.size()) {
            f(c, cur);
            return;
        }
        for (const auto& [j, v] : vs[k]) {
            cur[k] = j;
            rec(k + 1, F.mul(c, v));
        }
    };
    rec(0, F.from_int(1));
}

// ---------------------------------------------------------------------------

Engine::Engine(Algebra leaf, int top_bound) : field_(leaf.complex.field()), leaf_(std::move(leaf)), top_bound_(top_bound) {
    const ChainComplex& C = leaf_.complex;
    if (!C.empty() && C.total_dim() && leaf_.connectivity() < 0)
        throw std::invalid_argument("Engine: leaf complex has negative degrees");
}

void Engine::register_merge(const Layer& upper, const Layer& lower, ComposeFn fn, const Layer& result) {
    merges_[{upper.key, lower.key}] = Merge{std::move(fn), result};
}

void Engine::register_act(const Layer& layer, ActFn act) { acts_[layer.key] = std::move(act); }

bool Engine::has_merge(const std::string& upper, const std::string& lower) const {
    return merges_.count({upper, lower}) != 0;
}

Stack Engine::tail(const Stack& s, std::size_t from) { return Stack(s.begin() + static_cast<long>(std::min(from, s.size())), s.end()); }

Stack Engine::face_stack(const Stack& s, std::size_t depth) const {
    Stack out(s.begin(), s.begin() + static_cast<long>(depth));
    if (depth + 1 < s.size()) {
        auto it = merges_.find({s[depth].key, s[depth + 1].key});
        if (it == merges_.end()) throw std::logic_error("Engine: no merge " + s[depth].key + " ∘ " + s[depth + 1].key);
        out.push_back(it->second.result);
        out.insert(out.end(), s.begin() + static_cast<long>(depth) + 2, s.end());
    }
    return out;
}

const Level& Engine::level(const Stack& s) { return build(s); }

SparseVec Engine::tau(const Layer& L, int r, int i, int deg, const SparseVec& v) const {
    SparseVec out;
    for (const auto& [j, c] : v) axpy(field_, out, c, L.seq.tau(r, i, deg, j));
    return out;
}

std::shared_ptr<Quotient> Engine::quotient(Level& lv, int r, int xdeg, const std::vector<Index>& word, const Level& kids) {
    std::vector<int> key{r, xdeg};
    bool any = false;
    for (int i = 0; i + 1 < r; ++i) {
        int flag = 0;
        if (word[i] == word[i + 1]) {
            flag = 1 + (kids.degree(word[i]) & 1);
            any = true;
        }
        key.push_back(flag);
    }
    if (!any) return nullptr;
    auto it = lv.quotients_.find(key);
    if (it != lv.quotients_.end()) return it->second;
    const Layer& T = lv.stack_[0];
    std::size_t n = T.seq.base(r).dim(xdeg);
    std::vector<SparseVec> rel;
    for (int i = 0; i + 1 < r; ++i) {
        if (key[2 + i] == 0) continue;
        Scalar eps = field_.sign(key[2 + i] == 2);
        for (Index j = 0; j < n; ++j) {
            SparseVec v = unit_vec(field_, j);
            axpy(field_, v, field_.neg(eps), T.seq.tau(r, i, xdeg, j));
            rel.push_back(std::move(v));
        }
    }
    auto q = std::make_shared<Quotient>(field_, n, rel);
    lv.quotients_.emplace(key, q);
    return q;
}

Level& Engine::build(const Stack& s) {
    auto keys = stack_keys(s);
    auto it = levels_.find(keys);
    if (it != levels_.end()) return *it->second;

    auto lv = std::make_unique<Level>();
    lv->stack_ = s;
    lv->bound_ = top_bound_ - bar_count(s);
    const int E = lv->bound_;
    std::vector<Node>& nodes = lv->nodes_;

    if (s.empty()) {
        const ChainComplex& C = leaf_.complex;
        if (!C.empty())
            for (int d = C.dmin(); d <= std::min(C.dmax(), E); ++d)
                for (Index j = 0; j < C.dim(d); ++j) nodes.push_back(Node{0, d, j, {}, d, 0});
    } else {
        const Level& kids = build(tail(s));
        const Layer& T = s[0];
        const bool planar = T.seq.planar();
        const int kmin = kids.size() ? kids.degree(0) : 0;
        for (int r = 1; r <= T.seq.arity_cap(); ++r) {
            if (!T.seq.in_window(r) || T.seq.level_empty(r) || kids.size() == 0) continue;
            const ChainComplex& C = T.seq.base(r);
            for (int xdeg = C.dmin(); xdeg <= C.dmax(); ++xdeg) {
                if (!C.dim(xdeg) || xdeg + r * kmin > E) continue;
                std::vector<Index> word;
                std::function<void(Index, int)> rec = [&](Index start, int used) {
                    int left = r - static_cast<int>(word.size());
                    if (left == 0) {
                        int deg = xdeg + used;
                        std::uint32_t m = ~0u;
                        for (Index w : word) m &= kids.node(w).mask;
                        m = kids.stack().empty() ? 0u : (m << 1);
                        auto emit = [&](Index x) {
                            std::uint32_t mask = m;
                            if (T.bar && r == 1 && xdeg == 0 && x == T.unit) mask |= 1u;
                            nodes.push_back(Node{r, xdeg, x, word, deg, mask});
                        };
                        if (planar) {
                            for (Index x = 0; x < C.dim(xdeg); ++x) emit(x);
                        } else {
                            auto q = quotient(*lv, r, xdeg, word, kids);
                            if (!q)
                                for (Index x = 0; x < C.dim(xdeg); ++x) emit(x);
                            else
                                for (std::size_t i = 0; i < q->dim(); ++i) emit(q->representative(i));
                        }
                        return;
                    }
                    for (Index c = start; c < kids.size(); ++c) {
                        int dc = kids.degree(c);
                        if (xdeg + used + dc + (left - 1) * kmin > E) break;
                        word.push_back(c);
                        rec(planar ? 0 : c, used + dc);
                        word.pop_back();
                    }
                };
                rec(0, 0);
            }
        }
        std::stable_sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.deg < b.deg; });
    }
    for (Index i = 0; i < nodes.size(); ++i) lv->lookup_.emplace(node_key(nodes[i].r, nodes[i].xdeg, nodes[i].x, nodes[i].word), i);
    lv->diff_memo_.resize(nodes.size());
    lv->face_memo_.resize(s.size());
    for (auto& fm : lv->face_memo_) fm.resize(nodes.size());
    Level& ref = *lv;
    levels_.emplace(keys, std::move(lv));
    return ref;
}

SparseVec Engine::canonical(const Stack& s, int r, int xdeg, const SparseVec& x0, const std::vector<Index>& word0) {
    if (x0.empty()) return {};
    Level& lv = build(s);
    if (s.empty()) throw std::logic_error("Engine::canonical on the leaf");
    const Layer& T = s[0];
    if (!T.seq.in_window(r) || T.seq.level_empty(r)) return {};
    const Level& kids = build(tail(s));
    int deg = xdeg;
    for (Index w : word0) deg += kids.degree(w);
    if (deg > lv.bound_) return {};

    SparseVec x = x0;
    std::vector<Index> word = word0;
    long sign = 0;
    if (!T.seq.planar()) {
        for (int pass = 0; pass < r; ++pass) {
            bool swapped = false;
            for (int t = 0; t + 1 < r; ++t)
                if (word[t] > word[t + 1]) {
                    sign += static_cast<long>(kids.degree(word[t])) * kids.degree(word[t + 1]);
                    std::swap(word[t], word[t + 1]);
                    x = tau(T, r, t, xdeg, x);
                    swapped = true;
                }
            if (!swapped) break;
        }
        if (auto q = quotient(lv, r, xdeg, word, kids)) {
            SparseVec amb;
            for (const auto& [i, c] : q->project(x)) amb.emplace_back(q->representative(i), c);
            x = collect(field_, std::move(amb));
        }
    }
    SparseVec out;
    Scalar sg = field_.sign(sign);
    for (const auto& [j, c] : x) {
        auto id = lv.find(r, xdeg, j, word);
        if (!id) throw std::logic_error("Engine::canonical: missing basis element in degree " + std::to_string(deg));
        out.emplace_back(*id, field_.mul(sg, c));
    }
    return collect(field_, std::move(out));
}

const SparseVec& Engine::diff(const Stack& s, Index id) {
    Level& lv = build(s);
    auto& slot = lv.diff_memo_[id];
    if (!slot) slot = std::make_unique<SparseVec>(compute_diff(s, id));
    return *slot;
}

SparseVec Engine::compute_diff(const Stack& s, Index id) {
    const Level& lv = build(s);
    const Node n = lv.node(id);
    if (s.empty()) {
        const ChainComplex& C = leaf_.complex;
        SparseVec out;
        if (C.dim(n.deg - 1) == 0) return out;
        Index base = lv.offset(n.deg - 1);
        for (const auto& [j, c] : C.d_col(n.deg, n.x)) out.emplace_back(base + j, c);
        return out;
    }
    const Layer& T = s[0];
    const ChainComplex& C = T.seq.base(n.r);
    SparseVec out;
    if (C.dim(n.xdeg - 1)) axpy(field_, out, field_.from_int(1), canonical(s, n.r, n.xdeg - 1, C.d_col(n.xdeg, n.x), n.word));
    Stack ts = tail(s);
    const Level& kids = build(ts);
    long pre = n.xdeg;
    SparseVec ex = unit_vec(field_, n.x);
    for (int k = 0; k < n.r; ++k) {
        SparseVec dc = diff(ts, n.word[k]);
        Scalar sg = field_.sign(pre);
        for (const auto& [j, c] : dc) {
            std::vector<Index> w = n.word;
            w[k] = j;
            axpy(field_, out, field_.mul(sg, c), canonical(s, n.r, n.xdeg, ex, w));
        }
        pre += kids.degree(n.word[k]);
    }
    return out;
}

const SparseVec& Engine::face(const Stack& s, std::size_t depth, Index id) {
    Level& lv = build(s);
    auto& slot = lv.face_memo_.at(depth)[id];
    if (!slot) slot = std::make_unique<SparseVec>(compute_face(s, depth, id));
    return *slot;
}

SparseVec Engine::compute_face(const Stack& s, std::size_t depth, Index id) {
    const Node n = build(s).node(id);
    if (depth == 0) return merge(s[0], n.r, n.xdeg, unit_vec(field_, n.x), n.word, tail(s));
    Stack ts = tail(s);
    std::vector<SparseVec> parts;
    for (Index c : n.word) parts.push_back(face(ts, depth - 1, c));
    Stack target = face_stack(s, depth);
    SparseVec out;
    SparseVec ex = unit_vec(field_, n.x);
    for_each_term(field_, parts, [&](const Scalar& c, const std::vector<Index>& w) {
        axpy(field_, out, c, canonical(target, n.r, n.xdeg, ex, w));
    });
    return out;
}

SparseVec Engine::merge(const Layer& top, int r, int xdeg, const SparseVec& x, const std::vector<Index>& kids_ids,
                        const Stack& kid_stack) {
    const Level& kids = build(kid_stack);
    SparseVec out;
    if (kid_stack.empty()) {
        auto it = acts_.find(top.key);
        if (it == acts_.end()) throw std::logic_error("Engine: no action of " + top.key + " on the leaf");
        Args as;
        int deg = xdeg;
        for (Index c : kids_ids) {
            as.emplace_back(kids.degree(c), kids.node(c).x);
            deg += kids.degree(c);
        }
        if (deg > kids.bound()) return out;
        Index base = kids.offset(deg);
        for (const auto& [j, c] : x)
            for (const auto& [a, v] : it->second(r, xdeg, j, as)) out.emplace_back(base + a, field_.mul(c, v));
        return collect(field_, std::move(out));
    }
    auto it = merges_.find({top.key, kid_stack[0].key});
    if (it == merges_.end()) throw std::logic_error("Engine: no merge " + top.key + " ∘ " + kid_stack[0].key);
    std::vector<int> sizes;
    Args ys;
    std::vector<Index> grand;
    long sign = 0, before = 0;
    int ydeg_sum = 0;
    for (Index c : kids_ids) {
        const Node& k = kids.node(c);
        sizes.push_back(k.r);
        ys.emplace_back(k.xdeg, k.x);
        sign += static_cast<long>(k.xdeg) * before;
        before += k.deg - k.xdeg;
        ydeg_sum += k.xdeg;
        grand.insert(grand.end(), k.word.begin(), k.word.end());
    }
    SparseVec v;
    for (const auto& [j, c] : x) axpy(field_, v, c, it->second.fn(r, xdeg, j, sizes, ys));
    if (v.empty()) return out;
    Stack merged{it->second.result};
    Stack rest = tail(kid_stack);
    merged.insert(merged.end(), rest.begin(), rest.end());
    int s_total = std::accumulate(sizes.begin(), sizes.end(), 0);
    return scaled(field_, canonical(merged, s_total, xdeg + ydeg_sum, v, grand), field_.sign(sign));
}

SparseVec Engine::insert_unit(const Stack& s, std::size_t pos, const Layer& u, Index id) {
    const Node n = build(s).node(id);
    Stack target(s.begin(), s.begin() + static_cast<long>(pos));
    target.push_back(u);
    target.insert(target.end(), s.begin() + static_cast<long>(pos), s.end());
    Stack ts = tail(s);
    SparseVec ex = unit_vec(field_, n.x);
    if (pos == 1) {
        Stack wrap{u};
        wrap.insert(wrap.end(), ts.begin(), ts.end());
        const Level& W = build(wrap);
        std::vector<Index> w;
        for (Index c : n.word) {
            auto id2 = W.find(1, 0, u.unit, {c});
            if (!id2) return {};
            w.push_back(*id2);
        }
        return canonical(target, n.r, n.xdeg, ex, w);
    }
    std::vector<SparseVec> parts;
    for (Index c : n.word) parts.push_back(insert_unit(ts, pos - 1, u, c));
    SparseVec out;
    for_each_term(field_, parts, [&](const Scalar& c, const std::vector<Index>& w) {
        axpy(field_, out, c, canonical(target, n.r, n.xdeg, ex, w));
    });
    return out;
}

ChainComplex Engine::complex(const Stack& s, int max_deg) {
    const Level& lv = build(s);
    if (lv.size() == 0) return ChainComplex::zero(field_);
    int lo = lv.degree(0), hi = std::min(max_deg, lv.degree(static_cast<Index>(lv.size() - 1)));
    if (hi < lo) return ChainComplex::zero(field_);
    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    for (int d = lo; d <= hi; ++d) {
        dims.push_back(lv.count(d));
        std::vector<SparseVec> cols;
        Index base = lv.offset(d - 1);
        for (Index id = lv.offset(d); id < lv.offset(d + 1); ++id) {
            SparseVec c;
            for (const auto& [j, v] : diff(s, id)) c.emplace_back(j - base, v);
            cols.push_back(std::move(c));
        }
        diffs.push_back(Matrix::from_columns(field_, d > lo ? lv.count(d - 1) : 0, cols));
    }
    return ChainComplex(field_, lo, dims, diffs);
}

// ---------------------------------------------------------------------------

InducedMap::InducedMap(EnginePtr src, EnginePtr dst, std::function<SparseVec(Index)> leaf_map)
    : src_(std::move(src)), dst_(std::move(dst)), leaf_map_(std::move(leaf_map)) {}

const SparseVec& InducedMap::operator()(const Stack& s, Index id) {
    auto& memo = memo_[stack_keys(s)];
    const Level& lv = src_->level(s);
    if (memo.size() < lv.size()) memo.resize(lv.size());
    if (memo[id]) return *memo[id];
    SparseVec out;
    if (s.empty()) {
        out = leaf_map_(id);
    } else {
        const Node n = lv.node(id);
        Stack ts = Engine::tail(s);
        std::vector<SparseVec> parts;
        for (Index c : n.word) parts.push_back((*this)(ts, c));
        const Field& F = dst_->field();
        SparseVec ex = unit_vec(F, n.x);
        for_each_term(F, parts, [&](const Scalar& c, const std::vector<Index>& w) {
            axpy(F, out, c, dst_->canonical(s, n.r, n.xdeg, ex, w));
        });
    }
    auto& memo2 = memo_[stack_keys(s)];
    memo2[id] = std::make_unique<SparseVec>(std::move(out));
    return *memo2[id];
}

// ---------------------------------------------------------------------------

FreeAlgebra free_algebra_with_engine(const OperadPtr& O, const ChainComplex& V, int degree_cap) {
    const Field& F = O->field();
    int c = INT_MAX;
    if (!V.empty())
        for (int d = V.dmin(); d <= V.dmax(); ++d)
            if (V.dim(d)) {
                c = d;
                break;
            }
    if (c <= 0) throw std::invalid_argument("free_algebra: V must be concentrated in positive degrees");
    if (c != INT_MAX && O->arity_cap() < degree_cap / c)
        throw std::invalid_argument("free_algebra: arity cap " + std::to_string(O->arity_cap()) +
                                    " is below the arity bound " + std::to_string(degree_cap / c));
    Layer L{"op:" + O->name(), O->seq(), false, O->unit()};
    auto eng = std::make_shared<Engine>(Algebra{O, V, nullptr, "V"}, degree_cap);
    eng->register_merge(L, L, [O](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
        return O->gamma(r, xdeg, x, sizes, ys);
    }, L);
    ChainComplex C = eng->complex({L}, degree_cap);
    ActFn act = [eng, L, F](int r, int xdeg, Index x, const Args& as) {
        const Level& lv = eng->level({L});
        std::vector<Index> kids;
        for (const auto& [d, i] : as) kids.push_back(lv.offset(d) + i);
        SparseVec v = eng->merge(L, r, xdeg, unit_vec(F, x), kids, {L});
        for (auto& e : v) e.first -= lv.offset(lv.degree(e.first));
        return v;
    };
    FreeAlgebra out{Algebra{O, C, act, "free"}, eng, L};
    return out;
}

ChainMap extend_from_generators(const FreeAlgebra& F, const Algebra& A, const ChainMap& g) {
    const Field& K = F.engine->field();
    const Level& lv = F.engine->level({F.layer});
    const Level& leaves = F.engine->level({});
    return ChainMap::from_images(F.algebra.complex, A.complex, [&](int deg, Index j) {
        const Node& n = lv.node(lv.offset(deg) + j);
        std::vector<SparseVec> parts;
        std::vector<int> degs;
        for (Index w : n.word) {
            const Node& leaf = leaves.node(w);
            degs.push_back(leaf.deg);
            parts.push_back(g.image(leaf.deg, leaf.x));
        }
        SparseVec out;
        for_each_term(K, parts, [&](const Scalar& c, const std::vector<Index>& ids) {
            Args as;
            for (std::size_t k = 0; k < ids.size(); ++k) as.emplace_back(degs[k], ids[k]);
            axpy(K, out, c, A.act(n.r, n.xdeg, n.x, as));
        });
        return out;
    });
}

Algebra free_algebra(const OperadPtr& O, const ChainComplex& V, int degree_cap) {
    return free_algebra_with_engine(O, V, degree_cap).algebra;
}

}  // namespace opcalc
