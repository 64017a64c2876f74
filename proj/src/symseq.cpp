#include "opcalc/symseq.hpp"

#include <algorithm>
#include <climits>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "perm_util.hpp"

namespace opcalc {

using detail::factorial;
using detail::perm_key;

// ---------------------------------------------------------------------------

void SymRep::validate() const {
    const ChainComplex& C = complex;
    ChainMap id = ChainMap::identity(C);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (!tau[i].commutes()) throw InvariantViolation("SymRep: generator does not commute with d");
        if (!(compose(tau[i], tau[i]) == id)) throw InvariantViolation("SymRep: generator is not an involution");
        if (i + 1 < tau.size()) {
            ChainMap a = tau[i], b = tau[i + 1];
            if (!(compose(a, compose(b, a)) == compose(b, compose(a, b))))
                throw InvariantViolation("SymRep: braid relation fails");
        }
        for (std::size_t j = i + 2; j < tau.size(); ++j)
            if (!(compose(tau[i], tau[j]) == compose(tau[j], tau[i])))
                throw InvariantViolation("SymRep: distant generators do not commute");
    }
}

SymRep trivial_rep(const ChainComplex& C, int n) {
    SymRep r{C, {}};
    for (int i = 0; i + 1 < n; ++i) r.tau.push_back(ChainMap::identity(C));
    return r;
}

SymRep tensor_power_rep(const ChainComplex& V, int n) {
    if (n == 0) return SymRep{ChainComplex::line(V.field(), 0), {}};
    MultiTensor T(std::vector<ChainComplex>(n, V));
    SymRep r{T.complex(), {}};
    for (int i = 0; i + 1 < n; ++i) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::swap(perm[i], perm[i + 1]);
        r.tau.push_back(permute_factors(T, T, perm));
    }
    return r;
}

Cokernel coinvariants(const SymRep& rep) {
    const ChainComplex& C = rep.complex;
    if (rep.tau.empty()) return cokernel(ChainMap::zero(ChainComplex::zero(C.field()), C));
    DirectSum src = direct_sum(std::vector<ChainComplex>(rep.tau.size(), C));
    ChainMap id = ChainMap::identity(C);
    ChainMap g = compose(id - rep.tau[0], src.projections[0]);
    for (std::size_t i = 1; i < rep.tau.size(); ++i) g = g + compose(id - rep.tau[i], src.projections[i]);
    return cokernel(g);
}

// ---------------------------------------------------------------------------

SymSeq SymSeq::symmetric(Field F, std::vector<SymRep> levels) {
    auto d = std::make_shared<Data>();
    d->field = F;
    d->planar = false;
    d->cap = static_cast<int>(levels.size()) - 1;
    for (std::size_t n = 0; n < levels.size(); ++n) {
        const SymRep& r = levels[n];
        require_same_field(r.complex.field(), F, "SymSeq");
        if (n >= 2 && r.tau.size() != n - 1 && !r.complex.empty())
            throw std::invalid_argument("SymSeq: level " + std::to_string(n) + " needs " + std::to_string(n - 1) +
                                        " generators");
        d->base.push_back(r.complex);
        std::vector<std::vector<std::vector<SparseVec>>> cols;
        bool triv = true;
        for (const auto& t : r.tau) {
            std::vector<std::vector<SparseVec>> per_deg;
            if (!r.complex.empty())
                for (int deg = r.complex.dmin(); deg <= r.complex.dmax(); ++deg) {
                    per_deg.push_back(t.at(deg).columns());
                    const auto& cs = per_deg.back();
                    for (Index j = 0; j < cs.size(); ++j)
                        if (!(cs[j].size() == 1 && cs[j][0].first == j && cs[j][0].second.is_one())) triv = false;
                }
            cols.push_back(std::move(per_deg));
        }
        d->tau_cols.push_back(std::move(cols));
        d->trivial.push_back(triv);
        d->reps.push_back(r);
    }
    d->planar_reps.resize(levels.size());
    SymSeq s;
    s.data_ = d;
    return s;
}

SymSeq SymSeq::planar(Field F, std::vector<ChainComplex> levels) {
    auto d = std::make_shared<Data>();
    d->field = F;
    d->planar = true;
    d->cap = static_cast<int>(levels.size()) - 1;
    for (auto& c : levels) require_same_field(c.field(), F, "SymSeq");
    d->base = std::move(levels);
    d->trivial.assign(d->base.size(), false);
    d->planar_reps.resize(d->base.size());
    SymSeq s;
    s.data_ = d;
    return s;
}

SymSeq SymSeq::zero(Field F, int cap) {
    std::vector<SymRep> levels;
    for (int n = 0; n <= cap; ++n) levels.push_back(SymRep{ChainComplex::zero(F), {}});
    return symmetric(F, std::move(levels));
}

const ChainComplex& SymSeq::empty_complex(const Field& F) {
    static std::mutex mu;
    static std::map<std::uint32_t, ChainComplex> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(F.characteristic());
    if (it == cache.end()) it = cache.emplace(F.characteristic(), ChainComplex::zero(F)).first;
    return it->second;
}

const ChainComplex& SymSeq::base(int n) const {
    if (n < 0 || n > data_->cap || !in_window(n)) return empty_complex(data_->field);
    return data_->base[n];
}

const SparseVec& SymSeq::tau(int n, int i, int deg, Index j) const {
    return data_->tau_cols.at(n).at(i).at(deg - data_->base[n].dmin()).at(j);
}

bool SymSeq::trivial_action(int n) const {
    if (n < 0 || n > data_->cap) return true;
    return data_->trivial[n];
}

SymRep SymSeq::rep(int n) const {
    const ChainComplex& P = base(n);
    if (P.empty()) {
        SymRep r{P, {}};
        for (int i = 0; i + 1 < n; ++i) r.tau.push_back(ChainMap::identity(P));
        return r;
    }
    if (!data_->planar) return data_->reps[n];
    std::lock_guard<std::mutex> lock(data_->mu);
    auto& slot = data_->planar_reps[n];
    if (slot) return *slot;
    if (n > 8) throw std::invalid_argument("SymSeq::rep: refusing to materialize a free Σ_" + std::to_string(n) + " level");

    const Field& F = data_->field;
    const std::uint64_t f = factorial(n);
    std::vector<std::vector<int>> perms;
    std::unordered_map<std::uint64_t, Index> rank;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        rank.emplace(perm_key(p), static_cast<Index>(perms.size()));
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));

    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    for (int deg = P.dmin(); deg <= P.dmax(); ++deg) {
        dims.push_back(P.dim(deg) * f);
        std::vector<SparseVec> cols;
        for (Index a = 0; a < P.dim(deg); ++a)
            for (Index k = 0; k < f; ++k) {
                SparseVec c;
                if (P.dim(deg - 1) != 0)
                    for (const auto& [b, v] : P.d_col(deg, a)) c.emplace_back(static_cast<Index>(b * f + k), v);
                cols.push_back(std::move(c));
            }
        diffs.push_back(Matrix::from_columns(F, P.dim(deg - 1) * f, cols));
    }
    ChainComplex X(F, P.dmin(), dims, diffs);
    SymRep r{X, {}};
    for (int i = 0; i + 1 < n; ++i) {
        r.tau.push_back(ChainMap::from_images(X, X, [&](int, Index j) {
            std::vector<int> q = perms[j % f];
            for (int& v : q)
                if (v == i)
                    v = i + 1;
                else if (v == i + 1)
                    v = i;
            return unit_vec(F, static_cast<Index>((j / f) * f + rank.at(perm_key(q))));
        }));
    }
    slot = std::make_unique<SymRep>(r);
    return r;
}

std::size_t SymSeq::dim(int n, int d) const {
    std::size_t b = base(n).dim(d);
    return data_->planar ? b * factorial(n) : b;
}

SymSeq SymSeq::window(ExtNat lo, ExtNat hi) const {
    SymSeq s = *this;
    if (lo > s.lo_) s.lo_ = lo;
    if (hi < s.hi_) s.hi_ = hi;
    return s;
}

SymSeq level_truncate(const SymSeq& X, ExtNat lo, ExtNat hi) {
    if (lo < ExtNat(1) || !(lo < hi))
        throw std::invalid_argument("level_truncate: need 1 <= i < m, got (" + lo.str() + ", " + hi.str() + ")");
    return X.window(lo, hi);
}

// ---------------------------------------------------------------------------

void SymSeqMap::validate() const {
    if (source.planar() != target.planar()) throw InvariantViolation("SymSeqMap: mixed planar and symmetric storage");
    for (std::size_t n = 0; n < levels.size(); ++n) {
        const ChainMap& f = levels[n];
        if (!f.commutes()) throw InvariantViolation("SymSeqMap: level " + std::to_string(n) + " is not a chain map");
        if (source.planar()) continue;
        SymRep rs = source.rep(static_cast<int>(n)), rt = target.rep(static_cast<int>(n));
        for (std::size_t i = 0; i < rs.tau.size(); ++i)
            if (!(compose(f, rs.tau[i]) == compose(rt.tau[i], f)))
                throw InvariantViolation("SymSeqMap: level " + std::to_string(n) + " is not equivariant");
    }
}

SymSeqMap SymSeqMap::identity(const SymSeq& X, int cap) {
    SymSeqMap m{X, X, {}};
    for (int n = 0; n <= cap; ++n) m.levels.push_back(ChainMap::identity(X.base(n)));
    return m;
}

SymSeqMap SymSeqMap::zero(const SymSeq& X, const SymSeq& Y, int cap) {
    SymSeqMap m{X, Y, {}};
    for (int n = 0; n <= cap; ++n) m.levels.push_back(ChainMap::zero(X.base(n), Y.base(n)));
    return m;
}

SymSeqMap truncation_map(const SymSeq& X, ExtNat i, ExtNat m, ExtNat j, ExtNat n, int cap) {
    if (j > i || n > m) throw std::invalid_argument("truncation_map: need j <= i and n <= m");
    SymSeq S = level_truncate(X, i, m), T = level_truncate(X, j, n);
    SymSeqMap out{S, T, {}};
    for (int k = 0; k <= cap; ++k) {
        if (!S.level_empty(k) && T.in_window(k))
            out.levels.push_back(ChainMap::identity(S.base(k)));
        else
            out.levels.push_back(ChainMap::zero(S.base(k), T.base(k)));
    }
    return out;
}

SymSeqMap compose(const SymSeqMap& g, const SymSeqMap& f) {
    SymSeqMap out{f.source, g.target, {}};
    for (std::size_t n = 0; n < f.levels.size() && n < g.levels.size(); ++n)
        out.levels.push_back(compose(g.levels[n], f.levels[n]));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::vector<int>>> set_partitions(int s, int max_blocks, int max_block) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<std::vector<int>> cur;
    std::function<void(int)> rec = [&](int e) {
        if (e == s) {
            out.push_back(cur);
            return;
        }
        for (std::size_t b = 0; b < cur.size(); ++b) {
            if (static_cast<int>(cur[b].size()) >= max_block) continue;
            cur[b].push_back(e);
            rec(e + 1);
            cur[b].pop_back();
        }
        if (static_cast<int>(cur.size()) < max_blocks) {
            cur.push_back({e});
            rec(e + 1);
            cur.pop_back();
        }
    };
    rec(0);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
    return out;
}

namespace {

struct ComposeLevel {
    ChainComplex complex;
    std::vector<ComposeWitness::Block> blocks;
    std::map<std::vector<std::vector<int>>, std::size_t> block_of;
};

// Position of element (n, k) of block b inside the composite level.
Index global_index(const ComposeLevel& L, std::size_t b, int n, Index k) {
    return static_cast<Index>(L.blocks[b].offset.at(n) + k);
}

ComposeLevel compose_level(const SymSeq& X, const SymSeq& Y, int s, std::vector<SymRep>& xr, std::vector<SymRep>& yr) {
    const Field& F = X.field();
    ComposeLevel L;
    for (auto& P : set_partitions(s, s, s)) {
        int r = static_cast<int>(P.size());
        if (X.level_empty(r)) continue;
        std::vector<ChainComplex> fs{xr[r].complex};
        bool zero = false;
        for (const auto& B : P) {
            if (Y.level_empty(static_cast<int>(B.size()))) zero = true;
            fs.push_back(yr[B.size()].complex);
        }
        if (zero) continue;
        auto T = std::make_shared<MultiTensor>(fs);
        if (T->complex().empty()) continue;
        L.block_of[P] = L.blocks.size();
        L.blocks.push_back(ComposeWitness::Block{P, T, {}});
    }
    int lo = INT_MAX, hi = INT_MIN;
    for (const auto& b : L.blocks) lo = std::min(lo, b.tensor->complex().dmin()), hi = std::max(hi, b.tensor->complex().dmax());
    if (L.blocks.empty()) {
        L.complex = ChainComplex::zero(F);
        return L;
    }
    std::vector<std::size_t> dims(hi - lo + 1, 0);
    for (int n = lo; n <= hi; ++n)
        for (auto& b : L.blocks) {
            b.offset[n] = dims[n - lo];
            dims[n - lo] += b.tensor->complex().dim(n);
        }
    std::vector<Matrix> diffs;
    for (int n = lo; n <= hi; ++n) {
        std::vector<SparseVec> cols;
        for (std::size_t bi = 0; bi < L.blocks.size(); ++bi) {
            const ChainComplex& T = L.blocks[bi].tensor->complex();
            for (Index k = 0; k < T.dim(n); ++k) {
                SparseVec c;
                if (n > lo)
                    for (const auto& [j, v] : T.d_col(n, k)) c.emplace_back(global_index(L, bi, n - 1, j), v);
                cols.push_back(std::move(c));
            }
        }
        diffs.push_back(Matrix::from_columns(F, n > lo ? dims[n - lo - 1] : 0, cols));
    }
    L.complex = ChainComplex(F, lo, dims, diffs);
    return L;
}

// Image of basis element (n, k) of the composite under τ_i.
SparseVec compose_tau(const ComposeLevel& L, const std::vector<SymRep>& xr, const std::vector<SymRep>& yr, int i, int n,
                      Index k) {
    const Field F = L.complex.field();
    std::size_t bi = 0;
    while (bi + 1 < L.blocks.size() && L.blocks[bi + 1].offset.at(n) <= k) ++bi;
    // Skip blocks with no elements in degree n.
    while (L.blocks[bi].offset.at(n) + L.blocks[bi].tensor->complex().dim(n) <= k) ++bi;
    const auto& blk = L.blocks[bi];
    const auto& e = blk.tensor->elem(n, static_cast<Index>(k - blk.offset.at(n)));
    const auto& P = blk.partition;
    int a = -1, b = -1, pa = -1, pb = -1;
    for (std::size_t q = 0; q < P.size(); ++q)
        for (std::size_t t = 0; t < P[q].size(); ++t) {
            if (P[q][t] == i) a = static_cast<int>(q), pa = static_cast<int>(t);
            if (P[q][t] == i + 1) b = static_cast<int>(q), pb = static_cast<int>(t);
        }
    auto lift = [&](const std::vector<ComposeWitness::Block>::size_type target, const SparseVec& local) {
        SparseVec out;
        for (const auto& [j, v] : local) out.emplace_back(global_index(L, target, n, j), v);
        return out;
    };
    if (a == b) {
        // Both inputs in one block: act on that block's Y-factor.
        std::vector<SparseVec> parts;
        for (std::size_t t = 0; t < e.degs.size(); ++t) parts.push_back(unit_vec(F, e.idx[t]));
        const SymRep& rep = yr[P[a].size()];
        parts[a + 1] = rep.tau[pa].image(e.degs[a + 1], e.idx[a + 1]);
        (void)pb;
        return lift(bi, blk.tensor->product(e.degs, parts));
    }
    auto P2 = P;
    std::replace(P2[a].begin(), P2[a].end(), i, -1);
    std::replace(P2[b].begin(), P2[b].end(), i + 1, i);
    std::replace(P2[a].begin(), P2[a].end(), -1, i + 1);
    bool both_min = P[a].front() == i && P[b].front() == i + 1;
    if (!both_min) {
        std::size_t tb = L.block_of.at(P2);
        return SparseVec{{*L.blocks[tb].tensor->index(e.degs, e.idx) + static_cast<Index>(L.blocks[tb].offset.at(n)),
                          F.from_int(1)}};
    }
    // Blocks a and b = a+1 exchange places: act on X and swap the Y-factors.
    std::swap(P2[a], P2[b]);
    std::size_t tb = L.block_of.at(P2);
    std::vector<int> degs = e.degs;
    std::vector<Index> idx = e.idx;
    std::swap(degs[a + 1], degs[b + 1]);
    std::swap(idx[a + 1], idx[b + 1]);
    std::vector<SparseVec> parts;
    for (std::size_t t = 0; t < degs.size(); ++t) parts.push_back(unit_vec(F, idx[t]));
    parts[0] = xr[P.size()].tau[a].image(degs[0], idx[0]);
    SparseVec v = L.blocks[tb].tensor->product(degs, parts);
    Scalar sg = F.sign(static_cast<long>(e.degs[a + 1]) * e.degs[b + 1]);
    return lift(tb, opcalc::scaled(F, v, sg));
}

struct Composite {
    SymSeq seq;
    ComposeWitness witness;
    std::vector<ComposeLevel> levels;
};

Composite compose_full(const SymSeq& X, const SymSeq& Y, int s_cap) {
    require_same_field(X.field(), Y.field(), "compose");
    if (!Y.reduced()) throw std::invalid_argument("compose: right factor must be reduced");
    if (X.arity_cap() < s_cap && X.window_hi() > ExtNat(X.arity_cap() + 1))
        throw std::invalid_argument("compose: arity cap of the left factor is below " + std::to_string(s_cap));
    if (Y.arity_cap() < s_cap && Y.window_hi() > ExtNat(Y.arity_cap() + 1))
        throw std::invalid_argument("compose: arity cap of the right factor is below " + std::to_string(s_cap));
    std::vector<SymRep> xr, yr;
    for (int n = 0; n <= s_cap; ++n) {
        xr.push_back(X.rep(n));
        yr.push_back(Y.rep(n));
    }
    Composite out;
    std::vector<SymRep> reps;
    for (int s = 0; s <= s_cap; ++s) {
        ComposeLevel L = compose_level(X, Y, s, xr, yr);
        SymRep rep{L.complex, {}};
        for (int i = 0; i + 1 < s; ++i)
            rep.tau.push_back(ChainMap::from_images(L.complex, L.complex, [&](int n, Index k) {
                return compose_tau(L, xr, yr, i, n, k);
            }));
        reps.push_back(rep);

        // Witness summands grouped by (r, block sizes).
        std::map<std::pair<int, std::vector<int>>, std::vector<std::size_t>> groups;
        for (std::size_t b = 0; b < L.blocks.size(); ++b) {
            std::vector<int> sizes;
            for (const auto& B : L.blocks[b].partition) sizes.push_back(static_cast<int>(B.size()));
            std::sort(sizes.rbegin(), sizes.rend());
            groups[{static_cast<int>(sizes.size()), sizes}].push_back(b);
        }
        for (const auto& [key, members] : groups) {
            std::vector<ChainComplex> parts;
            for (auto b : members) parts.push_back(L.blocks[b].tensor->complex());
            DirectSum ds = direct_sum(parts);
            ChainMap incl = ChainMap::zero(ds.sum, L.complex);
            for (std::size_t q = 0; q < members.size(); ++q) {
                std::size_t b = members[q];
                ChainMap emb = ChainMap::from_images(parts[q], L.complex, [&](int n, Index k) {
                    return unit_vec(X.field(), global_index(L, b, n, k));
                });
                incl = incl + compose(emb, ds.projections[q]);
            }
            ChainMap proj = ChainMap::from_images(L.complex, ds.sum, [&](int n, Index k) {
                for (std::size_t q = 0; q < members.size(); ++q) {
                    const auto& blk = L.blocks[members[q]];
                    std::size_t off = blk.offset.at(n), dim = blk.tensor->complex().dim(n);
                    if (k >= off && k < off + dim) return ds.inclusions[q].image(n, static_cast<Index>(k - off));
                }
                return SparseVec{};
            });
            out.witness.summands.push_back(ComposeSummand{s, key.first, key.second, incl, proj});
        }
        out.witness.blocks.push_back(L.blocks);
        out.levels.push_back(std::move(L));
    }
    out.seq = SymSeq::symmetric(X.field(), std::move(reps));
    return out;
}

// Full-representation component of a sequence map at arity n.
ChainMap full_map(const SymSeqMap& f, int n) {
    const ChainMap& m = f.levels.at(n);
    if (!f.source.planar()) return m;
    SymRep rs = f.source.rep(n), rt = f.target.rep(n);
    std::uint64_t fact = factorial(n);
    return ChainMap::from_images(rs.complex, rt.complex, [&](int d, Index j) {
        SparseVec out;
        for (const auto& [a, v] : m.image(d, static_cast<Index>(j / fact)))
            out.emplace_back(static_cast<Index>(a * fact + j % fact), v);
        return out;
    });
}

}  // namespace

std::pair<SymSeq, ComposeWitness> compose(const SymSeq& X, const SymSeq& Y, int s_cap) {
    Composite c = compose_full(X, Y, s_cap);
    return {c.seq, c.witness};
}

SymSeqMap compose_map(const SymSeqMap& f, const SymSeqMap& g, int s_cap) {
    f.validate();
    g.validate();
    Composite src = compose_full(f.source, g.source, s_cap);
    Composite dst = compose_full(f.target, g.target, s_cap);
    std::vector<ChainMap> fm, gm;
    for (int n = 0; n <= s_cap; ++n) {
        fm.push_back(full_map(f, n));
        gm.push_back(full_map(g, n));
    }
    SymSeqMap out{src.seq, dst.seq, {}};
    for (int s = 0; s <= s_cap; ++s) {
        const ComposeLevel& A = src.levels[s];
        const ComposeLevel& B = dst.levels[s];
        out.levels.push_back(ChainMap::from_images(A.complex, B.complex, [&](int n, Index k) {
            std::size_t bi = 0;
            while (!(A.blocks[bi].offset.at(n) <= k && k < A.blocks[bi].offset.at(n) + A.blocks[bi].tensor->complex().dim(n))) ++bi;
            const auto& blk = A.blocks[bi];
            auto it = B.block_of.find(blk.partition);
            if (it == B.block_of.end()) return SparseVec{};
            const auto& e = blk.tensor->elem(n, static_cast<Index>(k - blk.offset.at(n)));
            std::vector<SparseVec> parts{fm[blk.partition.size()].image(e.degs[0], e.idx[0])};
            for (std::size_t q = 0; q < blk.partition.size(); ++q)
                parts.push_back(gm[blk.partition[q].size()].image(e.degs[q + 1], e.idx[q + 1]));
            SparseVec local = B.blocks[it->second].tensor->product(e.degs, parts);
            SparseVec res;
            for (const auto& [j, v] : local) res.emplace_back(global_index(B, it->second, n, j), v);
            return res;
        }));
    }
    return out;
}

ChainMap associativity_iso(const SymSeq& X, const SymSeq& Y, const SymSeq& Z, int s) {
    const Field& F = X.field();
    Composite XY = compose_full(X, Y, s);
    Composite left = compose_full(XY.seq, Z, s);
    Composite YZ = compose_full(Y, Z, s);
    Composite right = compose_full(X, YZ.seq, s);
    const ComposeLevel& A = left.levels[s];
    const ComposeLevel& B = right.levels[s];

    auto locate = [](const ComposeLevel& L, int n, Index k) {
        std::size_t bi = 0;
        while (!(L.blocks[bi].offset.at(n) <= k && k < L.blocks[bi].offset.at(n) + L.blocks[bi].tensor->complex().dim(n))) ++bi;
        return std::make_pair(bi, static_cast<Index>(k - L.blocks[bi].offset.at(n)));
    };

    return ChainMap::from_images(A.complex, B.complex, [&](int n, Index k) {
        auto [bq, kq] = locate(A, n, k);
        const auto& Qb = A.blocks[bq];
        const auto& eq = Qb.tensor->elem(n, kq);  // factors: (X∘Y)(t), Z(|Q_1|), ...
        const auto& Q = Qb.partition;
        int t = static_cast<int>(Q.size());
        auto [bp, kp] = locate(XY.levels[t], eq.degs[0], eq.idx[0]);
        const auto& Pb = XY.levels[t].blocks[bp];
        const auto& ep = Pb.tensor->elem(eq.degs[0], kp);  // factors: X(r), Y(|P_1|), ...
        const auto& P = Pb.partition;

        // Outer partition R_k = union of Q_j over j in P_k; inner partitions relabeled.
        std::vector<std::vector<int>> R;
        std::vector<int> zdeg;
        std::vector<Index> bdegs_idx;
        std::vector<int> out_degs{ep.degs[0]};
        std::vector<Index> out_idx{ep.idx[0]};
        // Koszul sign of (x, y_1..y_r, z_1..z_t) -> (x, y_1, z_{P_1}, y_2, z_{P_2}, ...).
        std::vector<int> order;  // symbol order in the target, as source positions
        std::vector<int> sym_deg;  // degrees of source symbols: y's then z's
        int r = static_cast<int>(P.size());
        for (int q = 0; q < r; ++q) sym_deg.push_back(ep.degs[q + 1]);
        for (int j = 0; j < t; ++j) sym_deg.push_back(eq.degs[j + 1]);
        for (int q = 0; q < r; ++q) {
            std::vector<int> Rk;
            for (int j : P[q]) Rk.insert(Rk.end(), Q[j].begin(), Q[j].end());
            std::sort(Rk.begin(), Rk.end());
            // Inner partition of Rk, relabeled to 0..|Rk|-1.
            std::vector<std::vector<int>> inner;
            for (int j : P[q]) {
                std::vector<int> blk;
                for (int e : Q[j]) blk.push_back(static_cast<int>(std::lower_bound(Rk.begin(), Rk.end(), e) - Rk.begin()));
                inner.push_back(blk);
            }
            int m = static_cast<int>(Rk.size());
            const ComposeLevel& YZm = YZ.levels[m];
            std::size_t ib = YZm.block_of.at(inner);
            std::vector<int> idegs{ep.degs[q + 1]};
            std::vector<Index> iidx{ep.idx[q + 1]};
            order.push_back(q);
            for (int j : P[q]) {
                idegs.push_back(eq.degs[j + 1]);
                iidx.push_back(eq.idx[j + 1]);
                order.push_back(r + j);
            }
            int vdeg = std::accumulate(idegs.begin(), idegs.end(), 0);
            Index local = *YZm.blocks[ib].tensor->index(idegs, iidx);
            out_degs.push_back(vdeg);
            out_idx.push_back(global_index(YZm, ib, vdeg, local));
            R.push_back(Rk);
        }
        long sign = 0;
        for (std::size_t u = 0; u < order.size(); ++u)
            for (std::size_t v = u + 1; v < order.size(); ++v)
                if (order[u] > order[v]) sign += static_cast<long>(sym_deg[order[u]]) * sym_deg[order[v]];
        std::size_t rb = B.block_of.at(R);
        Index local = *B.blocks[rb].tensor->index(out_degs, out_idx);
        return SparseVec{{global_index(B, rb, n, local), F.sign(sign)}};
    });
}

}  // namespace opcalc
