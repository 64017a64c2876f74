#include "opcalc/operad.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "perm_util.hpp"

namespace opcalc {

Operad::Operad(std::string name, SymSeq seq, Index unit, ComposeFn gamma)
    : name_(std::move(name)), seq_(std::move(seq)), unit_(unit), gamma_(std::move(gamma)) {
    if (!seq_.reduced()) throw std::invalid_argument("Operad " + name_ + ": O(0) must be zero");
    if (seq_.level_empty(1) || seq_.base(1).dim(0) <= unit_)
        throw std::invalid_argument("Operad " + name_ + ": unit outside O(1) in degree 0");
}

bool Operad::unit_is_arity_one() const { return seq_.base(1).total_dim() == 1; }

int Operad::min_degree() const {
    int lo = INT_MAX;
    for (int n = 0; n <= seq_.arity_cap(); ++n) {
        const ChainComplex& C = seq_.base(n);
        if (C.empty()) continue;
        for (int d = C.dmin(); d <= C.dmax(); ++d)
            if (C.dim(d)) {
                lo = std::min(lo, d);
                break;
            }
    }
    return lo == INT_MAX ? 0 : lo;
}

SparseVec Operad::gamma(int r, int xdeg, const SparseVec& x, const std::vector<int>& sizes, const Args& ys) const {
    SparseVec out;
    for (const auto& [j, c] : x) axpy(field(), out, c, gamma_(r, xdeg, j, sizes, ys));
    return out;
}

// ---------------------------------------------------------------------------

OperadPtr builtin_operad(const Field& F, const std::string& name, int cap, int m) {
    if (cap < 1) throw std::invalid_argument("builtin_operad: arity cap must be >= 1");
    bool truncated = name == "com_truncated" || name == "ass_truncated";
    if (truncated && m < 2) throw std::invalid_argument("builtin_operad: " + name + " needs m >= 2");
    int top = name == "unit" ? 1 : truncated ? std::min(cap, m - 1) : cap;
    bool planar = name == "ass" || name == "ass_truncated";
    if (name != "unit" && name != "com" && name != "ass" && !truncated)
        throw std::invalid_argument("builtin_operad: unknown operad '" + name + "'");

    SymSeq seq;
    if (planar) {
        std::vector<ChainComplex> lv;
        for (int n = 0; n <= cap; ++n) lv.push_back(n >= 1 && n <= top ? ChainComplex::line(F, 0) : ChainComplex::zero(F));
        seq = SymSeq::planar(F, lv);
    } else {
        std::vector<SymRep> lv;
        for (int n = 0; n <= cap; ++n)
            lv.push_back(n >= 1 && n <= top ? trivial_rep(ChainComplex::line(F, 0), n) : SymRep{ChainComplex::zero(F), {}});
        seq = SymSeq::symmetric(F, lv);
    }
    std::string full = truncated ? name + "(" + std::to_string(m) + ")" : name;
    ComposeFn g = [F, top](int, int, Index, const std::vector<int>& sizes, const Args&) {
        int s = std::accumulate(sizes.begin(), sizes.end(), 0);
        return s <= top ? unit_vec(F, 0) : SparseVec{};
    };
    return std::make_shared<Operad>(full, seq, 0, g);
}

GammaTable::key_type gamma_key(int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
    GammaTable::key_type k{r, xdeg, x};
    for (std::size_t i = 0; i < ys.size(); ++i) {
        k.push_back(sizes[i]);
        k.push_back(ys[i].first);
        k.push_back(ys[i].second);
    }
    return k;
}

namespace {

long arg_degree_sum(const Args& ys) {
    long s = 0;
    for (const auto& a : ys) s += a.first;
    return s;
}

// Right action of τ_i on a vector of the base (symmetric) or full
// representation (planar) of level n.
SparseVec act_tau(const SymSeq& X, int n, int i, int deg, const SparseVec& v) {
    if (X.planar()) return X.rep(n).tau[i].apply(deg, v);
    SparseVec out;
    for (const auto& [j, c] : v) axpy(X.field(), out, c, X.tau(n, i, deg, j));
    return out;
}

SparseVec gamma_symmetric_table(const GammaTable& T, const SymSeq& X, int r, int xdeg, const SparseVec& x,
                                std::vector<int> sizes, Args ys) {
    const Field& F = X.field();
    std::size_t a = 0;
    while (a + 1 < sizes.size() && sizes[a] >= sizes[a + 1]) ++a;
    if (a + 1 >= sizes.size()) {
        SparseVec out;
        for (const auto& [j, c] : x) {
            auto it = T.find(gamma_key(r, xdeg, j, sizes, ys));
            if (it != T.end()) axpy(F, out, c, it->second);
        }
        return out;
    }
    // γ(x; y) = ε γ(x·τ_a; u)·β with u the arguments a, a+1 exchanged.
    SparseVec xt = act_tau(X, r, static_cast<int>(a), xdeg, x);
    long eps = static_cast<long>(ys[a].first) * ys[a + 1].first;
    std::swap(sizes[a], sizes[a + 1]);
    std::swap(ys[a], ys[a + 1]);
    SparseVec res = gamma_symmetric_table(T, X, r, xdeg, xt, sizes, ys);
    int s = std::accumulate(sizes.begin(), sizes.end(), 0);
    int deg = xdeg + static_cast<int>(arg_degree_sum(ys));
    int off = std::accumulate(sizes.begin(), sizes.begin() + a, 0);
    for (int t : detail::block_swaps(off, sizes[a], sizes[a + 1])) res = act_tau(X, s, t, deg, res);
    return scaled(F, res, F.sign(eps));
}

}  // namespace

OperadPtr explicit_operad(std::string name, SymSeq seq, Index unit, GammaTable table) {
    auto T = std::make_shared<GammaTable>(std::move(table));
    ComposeFn g;
    if (seq.planar()) {
        g = [T](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
            auto it = T->find(gamma_key(r, xdeg, x, sizes, ys));
            return it == T->end() ? SparseVec{} : it->second;
        };
    } else {
        g = [T, seq](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
            return gamma_symmetric_table(*T, seq, r, xdeg, unit_vec(seq.field(), x), sizes, ys);
        };
    }
    return std::make_shared<Operad>(std::move(name), std::move(seq), unit, std::move(g));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Arg> basis_of(const ChainComplex& C) {
    std::vector<Arg> out;
    if (C.empty()) return out;
    for (int d = C.dmin(); d <= C.dmax(); ++d)
        for (Index j = 0; j < C.dim(d); ++j) out.emplace_back(d, j);
    return out;
}

// Calls f for every vector of `parts` positive integers with sum <= total
// such that ok(value) holds for each entry.
void for_compositions(int parts, int total, const std::function<bool(int)>& ok,
                      const std::function<void(const std::vector<int>&)>& f) {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int left) {
        if (static_cast<int>(cur.size()) == parts) {
            f(cur);
            return;
        }
        int rest = parts - static_cast<int>(cur.size()) - 1;
        for (int v = 1; v <= left - rest; ++v) {
            if (!ok(v)) continue;
            cur.push_back(v);
            rec(left - v);
            cur.pop_back();
        }
    };
    rec(total);
}

// Calls f for every choice of one element from each list.
void for_product(const std::vector<std::vector<Arg>>& lists, const std::function<void(const Args&)>& f) {
    Args cur;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == lists.size()) {
            f(cur);
            return;
        }
        for (const auto& a : lists[k]) {
            cur.push_back(a);
            rec(k + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

std::string show(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

// Multilinear expansion: vs[k] is a vector of level sizes[k] in degree degs[k].
// Calls f(coefficient, args) for each product of basis terms.
void for_expansion(const Field& F, const std::vector<SparseVec>& vs, const std::vector<int>& degs,
                   const std::function<void(const Scalar&, const Args&)>& f) {
    Args cur;
    std::function<void(std::size_t, Scalar)> rec = [&](std::size_t k, Scalar c) {
        if (k == vs.size()) {
            f(c, cur);
            return;
        }
        for (const auto& [j, v] : vs[k]) {
            cur.emplace_back(degs[k], j);
            rec(k + 1, F.mul(c, v));
            cur.pop_back();
        }
    };
    rec(0, F.from_int(1));
}

}  // namespace

std::vector<AxiomViolation> validate_operad(const Operad& O, int cap) {
    std::vector<AxiomViolation> out;
    const SymSeq& X = O.seq();
    const Field& F = O.field();
    cap = std::min(cap, X.arity_cap());
    auto report = [&](std::string axiom, std::vector<int> tuple, std::string detail) {
        out.push_back({std::move(axiom), std::move(tuple), std::move(detail)});
    };
    if (!X.level_empty(0)) report("reduced", {0}, "O(0) is not zero");
    std::vector<std::vector<Arg>> B(cap + 1);
    for (int n = 0; n <= cap; ++n) B[n] = basis_of(X.base(n));
    auto nonempty = [&](int n) { return n <= cap && !B[n].empty(); };
    const Arg unit{0, O.unit()};

    // Unit laws.
    for (int n = 1; n <= cap; ++n)
        for (const auto& y : B[n]) {
            if (O.gamma(1, 0, O.unit(), {n}, {y}) != unit_vec(F, y.second))
                report("left unit", {1, n}, "γ(1; y) != y for y = (" + std::to_string(y.first) + "," + std::to_string(y.second) + ")");
            Args units(n, unit);
            if (O.gamma(n, y.first, y.second, std::vector<int>(n, 1), units) != unit_vec(F, y.second))
                report("right unit", {n}, "γ(x; 1,...,1) != x for x = (" + std::to_string(y.first) + "," + std::to_string(y.second) + ")");
        }

    for (int r = 1; r <= cap; ++r) {
        if (!nonempty(r)) continue;
        for_compositions(r, cap, nonempty, [&](const std::vector<int>& sizes) {
            std::vector<std::vector<Arg>> lists;
            for (int s : sizes) lists.push_back(B[s]);
            int s_total = std::accumulate(sizes.begin(), sizes.end(), 0);
            std::vector<int> tuple{r};
            tuple.insert(tuple.end(), sizes.begin(), sizes.end());
            for (const auto& x : B[r])
                for_product(lists, [&](const Args& ys) {
                    int deg = x.first + static_cast<int>(arg_degree_sum(ys));
                    SparseVec g = O.gamma(r, x.first, x.second, sizes, ys);

                    // Compatibility with d.
                    SparseVec lhs;
                    if (X.base(s_total).dim(deg - 1))
                        for (const auto& [j, c] : g) axpy(F, lhs, c, X.base(s_total).d_col(deg, j));
                    SparseVec rhs;
                    if (X.base(r).dim(x.first - 1))
                        rhs = O.gamma(r, x.first - 1, X.base(r).d_col(x.first, x.second), sizes, ys);
                    long pre = x.first;
                    for (std::size_t k = 0; k < ys.size(); ++k) {
                        const ChainComplex& C = X.base(sizes[k]);
                        if (C.dim(ys[k].first - 1)) {
                            for (const auto& [j, c] : C.d_col(ys[k].first, ys[k].second)) {
                                Args y2 = ys;
                                y2[k] = {ys[k].first - 1, j};
                                axpy(F, rhs, F.mul(c, F.sign(pre)), O.gamma(r, x.first, x.second, sizes, y2));
                            }
                        }
                        pre += ys[k].first;
                    }
                    if (lhs != rhs) report("differential", tuple, "d∘γ != γ∘d");

                    if (!X.planar()) {
                        // γ(x·τ_a; swapped y) = ε γ(x; y)·β.
                        for (int a = 0; a + 1 < r; ++a) {
                            SparseVec xt = act_tau(X, r, a, x.first, unit_vec(F, x.second));
                            std::vector<int> s2 = sizes;
                            Args y2 = ys;
                            std::swap(s2[a], s2[a + 1]);
                            std::swap(y2[a], y2[a + 1]);
                            SparseVec left = O.gamma(r, x.first, xt, s2, y2);
                            SparseVec right = g;
                            int off = std::accumulate(sizes.begin(), sizes.begin() + a, 0);
                            for (int t : detail::block_swaps(off, sizes[a], sizes[a + 1]))
                                right = act_tau(X, s_total, t, deg, right);
                            right = scaled(F, right, F.sign(static_cast<long>(ys[a].first) * ys[a + 1].first));
                            if (left != right) report("equivariance (outer)", tuple, "block swap at " + std::to_string(a));
                        }
                        // γ(x; .., y_k·τ_j, ..) = γ(x; y)·τ_{off+j}.
                        int off = 0;
                        for (std::size_t k = 0; k < ys.size(); ++k) {
                            for (int j = 0; j + 1 < sizes[k]; ++j) {
                                SparseVec yt = act_tau(X, sizes[k], j, ys[k].first, unit_vec(F, ys[k].second));
                                SparseVec left;
                                for (const auto& [idx, c] : yt) {
                                    Args y2 = ys;
                                    y2[k].second = idx;
                                    axpy(F, left, c, O.gamma(r, x.first, x.second, sizes, y2));
                                }
                                SparseVec right = act_tau(X, s_total, off + j, deg, g);
                                if (left != right) report("equivariance (inner)", tuple, "input " + std::to_string(k));
                            }
                            off += sizes[k];
                        }
                    }

                    // Associativity against every z-tuple.
                    for_compositions(s_total, cap, nonempty, [&](const std::vector<int>& tsz) {
                        std::vector<std::vector<Arg>> zl;
                        for (int t : tsz) zl.push_back(B[t]);
                        for_product(zl, [&](const Args& zs) {
                            SparseVec L = O.gamma(s_total, deg, g, tsz, zs);
                            // Inner composites γ(y_k; z_{B_k}).
                            std::vector<SparseVec> inner;
                            std::vector<int> isz, idg;
                            long sign = 0, zbefore = 0;
                            std::size_t pos = 0;
                            for (std::size_t k = 0; k < ys.size(); ++k) {
                                std::vector<int> sub(tsz.begin() + pos, tsz.begin() + pos + sizes[k]);
                                Args zsub(zs.begin() + pos, zs.begin() + pos + sizes[k]);
                                inner.push_back(O.gamma(sizes[k], ys[k].first, ys[k].second, sub, zsub));
                                isz.push_back(std::accumulate(sub.begin(), sub.end(), 0));
                                idg.push_back(ys[k].first + static_cast<int>(arg_degree_sum(zsub)));
                                sign += ys[k].first * zbefore;
                                zbefore += arg_degree_sum(zsub);
                                pos += sizes[k];
                            }
                            SparseVec R;
                            for_expansion(F, inner, idg, [&](const Scalar& c, const Args& args) {
                                axpy(F, R, c, O.gamma(r, x.first, x.second, isz, args));
                            });
                            R = scaled(F, R, F.sign(sign));
                            if (L != R) {
                                std::vector<int> tt = tuple;
                                tt.push_back(-1);
                                tt.insert(tt.end(), tsz.begin(), tsz.end());
                                report("associativity", tt, "(r; s | t) = (" + show(tt) + ")");
                            }
                        });
                    });
                });
        });
    }
    return out;
}

// ---------------------------------------------------------------------------

Bimodule operad_bimodule(const OperadPtr& O) {
    ComposeFn g = [O](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
        return O->gamma(r, xdeg, x, sizes, ys);
    };
    return Bimodule{O, O->seq(), g, g, O->name()};
}

Bimodule level_truncate(const Bimodule& M, ExtNat lo, ExtNat hi) {
    SymSeq seq = level_truncate(M.seq, lo, hi);
    auto wrap = [seq](ComposeFn f) -> ComposeFn {
        return [seq, f](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
            int s = std::accumulate(sizes.begin(), sizes.end(), 0);
            if (!seq.in_window(s) || !seq.in_window(r)) return SparseVec{};
            return f(r, xdeg, x, sizes, ys);
        };
    };
    auto wrap_left = [seq](ComposeFn f) -> ComposeFn {
        return [seq, f](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
            int s = std::accumulate(sizes.begin(), sizes.end(), 0);
            for (int k : sizes)
                if (!seq.in_window(k)) return SparseVec{};
            if (!seq.in_window(s)) return SparseVec{};
            return f(r, xdeg, x, sizes, ys);
        };
    };
    return Bimodule{M.op, seq, wrap(M.rho), wrap_left(M.lambda),
                    M.name + "_" + lo.str() + "^" + hi.str()};
}

namespace {

// Augmentation O(1) -> k on a basis element.
bool is_unit(const Operad& O, int size, const Arg& y) { return size == 1 && y.first == 0 && y.second == O.unit(); }

}  // namespace

Bimodule single_level(const OperadPtr& O, int n, const SymRep& rep) {
    const Field& F = O->field();
    if (n < 1) throw std::invalid_argument("single_level: arity must be >= 1");
    std::vector<SymRep> lv;
    for (int k = 0; k <= n; ++k) lv.push_back(k == n ? rep : SymRep{ChainComplex::zero(F), {}});
    SymSeq seq = SymSeq::symmetric(F, lv).window(n, n + 1);
    ComposeFn rho = [O, F, n](int r, int, Index x, const std::vector<int>& sizes, const Args& ys) {
        if (r != n) return SparseVec{};
        for (std::size_t k = 0; k < ys.size(); ++k)
            if (!is_unit(*O, sizes[k], ys[k])) return SparseVec{};
        return unit_vec(F, x);
    };
    ComposeFn lambda = [O, F, n](int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) {
        if (r != 1 || sizes[0] != n || !is_unit(*O, 1, {xdeg, x})) return SparseVec{};
        return unit_vec(F, ys[0].second);
    };
    return Bimodule{O, seq, rho, lambda, "single(" + std::to_string(n) + ")"};
}

Bimodule zero_bimodule(const OperadPtr& O) {
    SymSeq seq = SymSeq::zero(O->field(), 0).window(0, 0);
    ComposeFn z = [](int, int, Index, const std::vector<int>&, const Args&) { return SparseVec{}; };
    return Bimodule{O, seq, z, z, "0"};
}

// ---------------------------------------------------------------------------

int Algebra::connectivity() const {
    if (complex.empty()) return INT_MAX;
    for (int d = complex.dmin(); d <= complex.dmax(); ++d)
        if (complex.dim(d)) return d;
    return INT_MAX;
}

Algebra trivial_algebra(const OperadPtr& O, const ChainComplex& C) {
    const Field& F = O->field();
    ActFn act = [O, F](int r, int xdeg, Index x, const Args& as) {
        if (r != 1 || !is_unit(*O, 1, {xdeg, x})) return SparseVec{};
        return unit_vec(F, as[0].second);
    };
    return Algebra{O, C, act, "trivial"};
}

Algebra explicit_algebra(const OperadPtr& O, std::string name, const ChainComplex& C, ActTable table) {
    auto T = std::make_shared<ActTable>(std::move(table));
    const Field& F = O->field();
    ActFn act = [O, F, T](int r, int xdeg, Index x, const Args& as) {
        if (r == 1 && is_unit(*O, 1, {xdeg, x})) return unit_vec(F, as[0].second);
        std::vector<std::int64_t> key{r, xdeg, x};
        for (const auto& a : as) {
            key.push_back(a.first);
            key.push_back(a.second);
        }
        auto it = T->find(key);
        return it == T->end() ? SparseVec{} : it->second;
    };
    return Algebra{O, C, act, std::move(name)};
}

std::vector<AxiomViolation> validate_algebra(const Algebra& A, int max_arity) {
    std::vector<AxiomViolation> out;
    const Operad& O = *A.op;
    const SymSeq& X = O.seq();
    const Field& F = O.field();
    const ChainComplex& C = A.complex;
    max_arity = std::min(max_arity, X.arity_cap());
    std::vector<Arg> BA = basis_of(C);
    auto report = [&](std::string axiom, std::vector<int> tuple, std::string detail) {
        out.push_back({std::move(axiom), std::move(tuple), std::move(detail)});
    };
    auto act_vec = [&](int r, int xdeg, const SparseVec& x, const Args& as) {
        SparseVec o;
        for (const auto& [j, c] : x) axpy(F, o, c, A.act(r, xdeg, j, as));
        return o;
    };
    auto within = [&](int deg) { return !C.empty() && deg >= C.dmin() && deg <= C.dmax(); };

    for (const auto& a : BA)
        if (A.act(1, 0, O.unit(), {a}) != unit_vec(F, a.second)) report("unit", {1}, "1·a != a");

    for (int r = 1; r <= max_arity; ++r) {
        std::vector<Arg> Br = basis_of(X.base(r));
        if (Br.empty()) continue;
        std::vector<std::vector<Arg>> lists(r, BA);
        for (const auto& x : Br)
            for_product(lists, [&](const Args& as) {
                int deg = x.first + static_cast<int>(arg_degree_sum(as));
                if (!within(deg)) return;
                SparseVec g = A.act(r, x.first, x.second, as);
                // d∘act = act∘d.
                SparseVec lhs;
                if (C.dim(deg - 1))
                    for (const auto& [j, c] : g) axpy(F, lhs, c, C.d_col(deg, j));
                SparseVec rhs;
                if (X.base(r).dim(x.first - 1)) rhs = act_vec(r, x.first - 1, X.base(r).d_col(x.first, x.second), as);
                long pre = x.first;
                for (int k = 0; k < r; ++k) {
                    if (C.dim(as[k].first - 1))
                        for (const auto& [j, c] : C.d_col(as[k].first, as[k].second)) {
                            Args a2 = as;
                            a2[k] = {as[k].first - 1, j};
                            axpy(F, rhs, F.mul(c, F.sign(pre)), A.act(r, x.first, x.second, a2));
                        }
                    pre += as[k].first;
                }
                if (lhs != rhs) report("differential", {r}, "d∘act != act∘d");

                if (!X.planar())
                    for (int i = 0; i + 1 < r; ++i) {
                        SparseVec xt = act_tau(X, r, i, x.first, unit_vec(F, x.second));
                        Args a2 = as;
                        std::swap(a2[i], a2[i + 1]);
                        SparseVec left = act_vec(r, x.first, xt, a2);
                        SparseVec right = scaled(F, g, F.sign(static_cast<long>(as[i].first) * as[i + 1].first));
                        if (left != right) report("equivariance", {r}, "transposition " + std::to_string(i));
                    }

            });
    }

    // Associativity on small tuples.
    for (int r = 1; r <= max_arity; ++r) {
        std::vector<Arg> Br = basis_of(X.base(r));
        if (Br.empty()) continue;
        for_compositions(r, max_arity, [&](int v) { return !X.level_empty(v); }, [&](const std::vector<int>& sizes) {
            int s = std::accumulate(sizes.begin(), sizes.end(), 0);
            std::vector<std::vector<Arg>> yl;
            for (int k : sizes) yl.push_back(basis_of(X.base(k)));
            std::vector<std::vector<Arg>> al(s, BA);
            for (const auto& x : Br)
                for_product(yl, [&](const Args& ys) {
                    int gdeg = x.first + static_cast<int>(arg_degree_sum(ys));
                    SparseVec g = O.gamma(r, x.first, x.second, sizes, ys);
                    for_product(al, [&](const Args& as) {
                        int deg = gdeg + static_cast<int>(arg_degree_sum(as));
                        if (!within(deg)) return;
                        SparseVec L = act_vec(s, gdeg, g, as);
                        std::vector<SparseVec> inner;
                        std::vector<int> idg;
                        long sign = 0, before = 0;
                        std::size_t pos = 0;
                        for (std::size_t k = 0; k < ys.size(); ++k) {
                            Args sub(as.begin() + pos, as.begin() + pos + sizes[k]);
                            int d = ys[k].first + static_cast<int>(arg_degree_sum(sub));
                            inner.push_back(within(d) ? A.act(sizes[k], ys[k].first, ys[k].second, sub) : SparseVec{});
                            idg.push_back(d);
                            sign += ys[k].first * before;
                            before += arg_degree_sum(sub);
                            pos += sizes[k];
                        }
                        SparseVec R;
                        for_expansion(F, inner, idg, [&](const Scalar& c, const Args& args) {
                            axpy(F, R, c, A.act(r, x.first, x.second, args));
                        });
                        R = scaled(F, R, F.sign(sign));
                        if (L != R) {
                            std::vector<int> t{r};
                            t.insert(t.end(), sizes.begin(), sizes.end());
                            report("associativity", t, "act∘γ != act∘act");
                        }
                    });
                });
        });
    }
    return out;
}

// ---------------------------------------------------------------------------

SparseVec compose_labeled(const SymSeq& X, const std::vector<SymSeq>& Ys, const SymSeq& target, const ComposeFn& fn,
                          int r, int xdeg, Index x, const Args& ys, const std::vector<std::vector<int>>& labels) {
    const Field& F = target.field();
    std::vector<std::vector<int>> L = labels;
    Args base_ys;
    std::vector<int> sizes;
    for (int k = 0; k < r; ++k) {
        int sk = static_cast<int>(L[k].size());
        sizes.push_back(sk);
        const SymSeq& Y = Ys[k];
        if (Y.planar()) {
            std::uint64_t f = detail::factorial(sk);
            std::vector<int> sigma = detail::unrank_perm(sk, ys[k].second % f);
            std::vector<int> relabeled(sk);
            for (int t = 0; t < sk; ++t) relabeled[t] = L[k][sigma[t]];
            L[k] = relabeled;
            base_ys.emplace_back(ys[k].first, static_cast<Index>(ys[k].second / f));
        } else {
            base_ys.push_back(ys[k]);
        }
    }
    Index p = x;
    std::vector<int> pi(r);
    std::iota(pi.begin(), pi.end(), 0);
    if (X.planar()) {
        std::uint64_t f = detail::factorial(r);
        pi = detail::unrank_perm(r, x % f);
        p = static_cast<Index>(x / f);
    }
    long sign = 0;
    for (int a = 0; a < r; ++a)
        for (int b = a + 1; b < r; ++b)
            if (pi[a] > pi[b]) sign += static_cast<long>(base_ys[pi[a]].first) * base_ys[pi[b]].first;
    std::vector<int> sz_pi;
    Args ys_pi;
    std::vector<int> word;
    for (int a = 0; a < r; ++a) {
        sz_pi.push_back(sizes[pi[a]]);
        ys_pi.push_back(base_ys[pi[a]]);
        word.insert(word.end(), L[pi[a]].begin(), L[pi[a]].end());
    }
    int s = static_cast<int>(word.size());
    int deg = xdeg + static_cast<int>(arg_degree_sum(ys));
    SparseVec v = fn(r, xdeg, p, sz_pi, ys_pi);
    if (target.planar()) {
        std::uint64_t f = detail::factorial(s);
        for (auto& e : v) e.first = static_cast<Index>(e.first * f);
    }
    // Bubble the labels into increasing order, acting on the operation.
    for (int pass = 0; pass < s; ++pass)
        for (int t = 0; t + 1 < s; ++t)
            if (word[t] > word[t + 1]) {
                std::swap(word[t], word[t + 1]);
                v = act_tau(target, s, t, deg, v);
            }
    return scaled(F, v, F.sign(sign));
}

namespace {

// Symmetric storage of the full representations of X up to cap.
SymSeq full_seq(const SymSeq& X, int cap) {
    if (!X.planar()) return X;
    std::vector<SymRep> lv;
    for (int n = 0; n <= cap; ++n) lv.push_back(X.rep(n));
    return SymSeq::symmetric(X.field(), std::move(lv));
}

SymSeqMap action_map(const SymSeq& X, const SymSeq& Y, const SymSeq& target, const ComposeFn& fn, int s_cap) {
    auto [XY, w] = compose(X, Y, s_cap);
    SymSeqMap out{XY, full_seq(target, s_cap), {}};
    for (int s = 0; s <= s_cap; ++s) {
        const auto& blocks = w.blocks[s];
        out.levels.push_back(ChainMap::from_images(XY.base(s), out.target.base(s),
                                                   [&](int n, Index k) {
            std::size_t bi = 0;
            while (!(blocks[bi].offset.at(n) <= k && k < blocks[bi].offset.at(n) + blocks[bi].tensor->complex().dim(n))) ++bi;
            const auto& blk = blocks[bi];
            const auto& e = blk.tensor->elem(n, static_cast<Index>(k - blk.offset.at(n)));
            int r = static_cast<int>(blk.partition.size());
            Args ys;
            for (int q = 0; q < r; ++q) ys.emplace_back(e.degs[q + 1], e.idx[q + 1]);
            if (target.level_empty(s)) return SparseVec{};
            return compose_labeled(X, std::vector<SymSeq>(r, Y), target, fn, r, e.degs[0], e.idx[0], ys, blk.partition);
        }));
    }
    return out;
}

}  // namespace

SymSeqMap right_action_map(const Bimodule& M, int s_cap) { return action_map(M.seq, M.op->seq(), M.seq, M.rho, s_cap); }

SymSeqMap left_action_map(const Bimodule& M, int s_cap) { return action_map(M.op->seq(), M.seq, M.seq, M.lambda, s_cap); }

RelativeComposite relative_compose(const Bimodule& M, const Bimodule& N, int s_cap) {
    if (M.op.get() != N.op.get() && M.op->name() != N.op->name())
        throw std::invalid_argument("relative_compose: modules over different operads (" + M.op->name() + ", " +
                                    N.op->name() + ")");
    SymSeqMap rho = right_action_map(M, s_cap);
    SymSeqMap lam = left_action_map(N, s_cap);
    SymSeqMap A = compose_map(rho, SymSeqMap::identity(full_seq(N.seq, s_cap), s_cap), s_cap);
    SymSeqMap B = compose_map(SymSeqMap::identity(full_seq(M.seq, s_cap), s_cap), lam, s_cap);
    auto [MN, w] = compose(M.seq, N.seq, s_cap);
    RelativeComposite out;
    out.product = MN;
    out.witness = w;
    std::vector<SymRep> reps;
    for (int s = 0; s <= s_cap; ++s) {
        ChainMap assoc = associativity_iso(M.seq, M.op->seq(), N.seq, s);
        ChainMap diff = A.levels[s] - compose(B.levels[s], assoc);
        Cokernel ck = cokernel(diff);
        SymRep rep{ck.complex, {}};
        SymRep full = MN.rep(s);
        for (const auto& t : full.tau) rep.tau.push_back(ck.descend(compose(ck.projection, t)));
        reps.push_back(rep);
        out.levels.push_back(std::move(ck));
    }
    out.seq = SymSeq::symmetric(M.op->field(), std::move(reps));
    return out;
}

}  // namespace opcalc
