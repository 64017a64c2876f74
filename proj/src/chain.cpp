#include "opcalc/chain.hpp"

#include <algorithm>
#include <numeric>

namespace opcalc {

namespace {

// Offset of each part inside a direct sum, per degree.
struct BlockLayout {
    int lo = 0, hi = -1;
    std::vector<std::vector<std::size_t>> offset;  // [degree - lo][part]
    std::vector<std::size_t> total;

    explicit BlockLayout(const std::vector<ChainComplex>& parts, const std::vector<int>& shifts = {}) {
        bool any = false;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (parts[k].empty()) continue;
            int s = shifts.empty() ? 0 : shifts[k];
            if (!any) {
                lo = parts[k].dmin() + s;
                hi = parts[k].dmax() + s;
                any = true;
            } else {
                lo = std::min(lo, parts[k].dmin() + s);
                hi = std::max(hi, parts[k].dmax() + s);
            }
        }
        if (!any) return;
        offset.assign(hi - lo + 1, std::vector<std::size_t>(parts.size() + 1, 0));
        total.assign(hi - lo + 1, 0);
        for (int n = lo; n <= hi; ++n) {
            std::size_t acc = 0;
            for (std::size_t k = 0; k < parts.size(); ++k) {
                offset[n - lo][k] = acc;
                acc += parts[k].dim(n - (shifts.empty() ? 0 : shifts[k]));
            }
            offset[n - lo][parts.size()] = acc;
            total[n - lo] = acc;
        }
    }
    bool empty() const { return hi < lo; }
    std::size_t off(int n, std::size_t part) const { return offset[n - lo][part]; }
};

SparseVec shifted(SparseVec v, std::size_t by) {
    for (auto& e : v) e.first += static_cast<Index>(by);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

ChainComplex::ChainComplex(Field F) {
    auto impl = std::make_shared<Impl>();
    impl->field = F;
    impl_ = impl;
}

ChainComplex::ChainComplex(Field F, int dmin, std::vector<std::size_t> dims, std::vector<Matrix> diffs) {
    if (dims.size() != diffs.size()) throw std::invalid_argument("ChainComplex: dims/differentials length mismatch");
    // Trim zero degrees at both ends so the range is tight.
    std::size_t a = 0, b = dims.size();
    while (a < b && dims[a] == 0) ++a;
    while (b > a && dims[b - 1] == 0) --b;
    auto impl = std::make_shared<Impl>();
    impl->field = F;
    impl->dmin = a < b ? dmin + static_cast<int>(a) : 0;
    impl->dims.assign(dims.begin() + a, dims.begin() + b);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        std::size_t below = k == 0 ? 0 : dims[k - 1];
        if (diffs[k].cols() != dims[k] || diffs[k].rows() != below)
            throw std::invalid_argument("ChainComplex: differential in degree " + std::to_string(dmin + int(k)) +
                                        " has wrong shape");
        require_same_field(diffs[k].field(), F, "ChainComplex");
    }
    for (std::size_t k = a; k < b; ++k) {
        if (k + 1 < dims.size() && !(diffs[k] * diffs[k + 1]).is_zero())
            throw InvariantViolation("ChainComplex: d∘d != 0 at degree " + std::to_string(dmin + int(k) + 1));
        if (k == a)
            impl->diffs.push_back(Matrix(F, 0, dims[k]));
        else
            impl->diffs.push_back(std::move(diffs[k]));
        impl->cols.push_back(impl->diffs.back().columns());
    }
    impl_ = impl;
}

ChainComplex ChainComplex::line(Field F, int d) {
    return ChainComplex(F, d, {1}, {Matrix(F, 0, 1)});
}

ChainComplex ChainComplex::graded(Field F, int dmin, std::vector<std::size_t> dims) {
    std::vector<Matrix> diffs;
    for (std::size_t k = 0; k < dims.size(); ++k) diffs.emplace_back(F, k == 0 ? 0 : dims[k - 1], dims[k]);
    return ChainComplex(F, dmin, std::move(dims), std::move(diffs));
}

std::size_t ChainComplex::dim(int d) const {
    if (empty() || d < dmin() || d > dmax()) return 0;
    return impl_->dims[d - dmin()];
}

std::size_t ChainComplex::total_dim() const { return std::accumulate(impl_->dims.begin(), impl_->dims.end(), std::size_t{0}); }

Matrix ChainComplex::d(int deg) const {
    if (empty() || deg < dmin() || deg > dmax()) return Matrix(field(), dim(deg - 1), 0);
    return impl_->diffs[deg - dmin()];
}

const SparseVec& ChainComplex::d_col(int deg, Index j) const { return impl_->cols.at(deg - dmin()).at(j); }

// ---------------------------------------------------------------------------

ChainMap::ChainMap(ChainComplex source, ChainComplex target, std::vector<Matrix> components, bool check)
    : source_(std::move(source)), target_(std::move(target)), comps_(std::move(components)) {
    require_same_field(source_.field(), target_.field(), "ChainMap");
    std::size_t n = source_.empty() ? 0 : source_.dmax() - source_.dmin() + 1;
    if (comps_.size() != n) throw std::invalid_argument("ChainMap: wrong number of components");
    for (std::size_t k = 0; k < n; ++k) {
        int d = source_.dmin() + static_cast<int>(k);
        if (comps_[k].rows() != target_.dim(d) || comps_[k].cols() != source_.dim(d))
            throw std::invalid_argument("ChainMap: component in degree " + std::to_string(d) + " has wrong shape");
    }
    if (check && !commutes()) throw InvariantViolation("ChainMap: does not commute with differentials");
}

ChainMap ChainMap::from_images(const ChainComplex& S, const ChainComplex& T,
                               const std::function<SparseVec(int, Index)>& image, bool check) {
    std::vector<Matrix> comps;
    if (!S.empty())
        for (int d = S.dmin(); d <= S.dmax(); ++d) {
            std::vector<SparseVec> cols(S.dim(d));
            for (Index j = 0; j < cols.size(); ++j) cols[j] = image(d, j);
            comps.push_back(Matrix::from_columns(S.field(), T.dim(d), cols));
        }
    return ChainMap(S, T, std::move(comps), check);
}

ChainMap ChainMap::zero(const ChainComplex& S, const ChainComplex& T) {
    return from_images(S, T, [](int, Index) { return SparseVec{}; }, false);
}

ChainMap ChainMap::identity(const ChainComplex& C) {
    const Field F = C.field();
    return from_images(C, C, [&](int, Index j) { return unit_vec(F, j); }, false);
}

Matrix ChainMap::at(int d) const {
    if (source_.empty() || d < source_.dmin() || d > source_.dmax())
        return Matrix(source_.field(), target_.dim(d), source_.dim(d));
    return comps_[d - source_.dmin()];
}

SparseVec ChainMap::apply(int d, const SparseVec& v) const {
    if (v.empty()) return {};
    return comps_.at(d - source_.dmin()).apply(v);
}

SparseVec ChainMap::image(int d, Index j) const {
    const Matrix& m = comps_.at(d - source_.dmin());
    std::vector<std::pair<Index, Scalar>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Scalar v = m.get(i, j);
        if (!v.is_zero()) out.emplace_back(static_cast<Index>(i), v);
    }
    return SparseVec(out.begin(), out.end());
}

bool ChainMap::is_zero() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const Matrix& m) { return m.is_zero(); });
}

bool ChainMap::commutes() const {
    if (source_.empty()) return true;
    for (int d = source_.dmin(); d <= source_.dmax() + 1; ++d)
        if (!(target_.d(d) * at(d) == at(d - 1) * source_.d(d))) return false;
    return true;
}

ChainMap compose(const ChainMap& g, const ChainMap& f) {
    const ChainComplex& S = f.source_;
    std::vector<Matrix> comps;
    if (!S.empty())
        for (int d = S.dmin(); d <= S.dmax(); ++d) {
            if (g.source_.dim(d) != f.target_.dim(d)) throw std::invalid_argument("compose: mismatched complexes");
            comps.push_back(g.at(d) * f.at(d));
        }
    return ChainMap(S, g.target_, std::move(comps), false);
}

ChainMap operator+(const ChainMap& a, const ChainMap& b) {
    std::vector<Matrix> comps;
    for (std::size_t k = 0; k < a.comps_.size(); ++k) comps.push_back(a.comps_[k] + b.comps_.at(k));
    return ChainMap(a.source_, a.target_, std::move(comps), false);
}

ChainMap operator-(const ChainMap& a, const ChainMap& b) {
    std::vector<Matrix> comps;
    for (std::size_t k = 0; k < a.comps_.size(); ++k) comps.push_back(a.comps_[k] - b.comps_.at(k));
    return ChainMap(a.source_, a.target_, std::move(comps), false);
}

ChainMap ChainMap::scaled(const Scalar& s) const {
    std::vector<Matrix> comps;
    for (const auto& m : comps_) comps.push_back(m.scaled(s));
    return ChainMap(source_, target_, std::move(comps), false);
}

bool operator==(const ChainMap& a, const ChainMap& b) { return a.comps_ == b.comps_; }

// ---------------------------------------------------------------------------

Matrix ChainHomotopy::at(int d) const {
    const ChainComplex& S = f.source();
    // missing components are zero
    if (S.empty() || d < S.dmin() || d - S.dmin() >= static_cast<int>(components.size()))
        return Matrix(S.field(), f.target().dim(d + 1), S.dim(d));
    return components[d - S.dmin()];
}

bool ChainHomotopy::verify() const {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    if (S.empty()) return true;
    for (int d = S.dmin(); d <= S.dmax() && d <= through; ++d) {
        Matrix lhs = T.d(d + 1) * at(d) + at(d - 1) * S.d(d);
        if (!(lhs == f.at(d) - g.at(d))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

Betti homology(const ChainComplex& C) {
    Betti b;
    if (C.empty()) return b;
    std::vector<std::size_t> rk(C.dmax() - C.dmin() + 2, 0);  // rk[k] = rank of d out of dmin+k
    for (int d = C.dmin(); d <= C.dmax(); ++d) rk[d - C.dmin()] = C.rank_d(d);
    for (int d = C.dmin(); d <= C.dmax(); ++d) b[d] = C.dim(d) - rk[d - C.dmin()] - rk[d - C.dmin() + 1];
    return b;
}

std::size_t betti(const ChainComplex& C, int d) { return C.dim(d) - C.rank_d(d) - C.rank_d(d + 1); }

std::size_t ChainComplex::rank_d(int deg) const {
    if (dim(deg) == 0 || dim(deg - 1) == 0) return 0;
    {
        std::lock_guard<std::mutex> lock(impl_->rank_mutex);
        auto it = impl_->ranks.find(deg);
        if (it != impl_->ranks.end()) return it->second;
    }
    std::size_t r = rank(d(deg));
    std::lock_guard<std::mutex> lock(impl_->rank_mutex);
    impl_->ranks[deg] = r;
    return r;
}

std::size_t induced_rank(const ChainMap& f, int d) {
    const ChainComplex& T = f.target();
    return induced_rank(f, d, T.rank_d(d + 1));
}

std::size_t induced_rank(const ChainMap& f, int d, std::size_t boundary_rank) {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    if (S.dim(d) == 0 || T.dim(d) == 0) return 0;
    Matrix fZ = f.at(d) * kernel_basis(S.d(d));
    // rank [B | f Z] - rank B, eliminated along the (fewer) rows
    std::vector<SparseVec> cols = T.d(d + 1).columns();
    for (auto& c : fZ.columns()) cols.push_back(std::move(c));
    return rank(Matrix::from_columns(T.field(), T.dim(d), cols)) - boundary_rank;
}

namespace {
std::pair<int, int> joint_range(const ChainMap& f) {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    int lo = INT_MAX, hi = INT_MIN;
    if (!S.empty()) lo = S.dmin(), hi = S.dmax();
    if (!T.empty()) lo = std::min(lo, T.dmin()), hi = std::max(hi, T.dmax());
    return {lo, hi};
}
}  // namespace

bool is_quasi_iso(const ChainMap& f, int through) {
    auto [lo, hi] = joint_range(f);
    for (int d = lo; d <= hi && d <= through; ++d) {
        std::size_t bs = betti(f.source(), d), bt = betti(f.target(), d);
        if (bs != bt) return false;
        if (bs != 0 && induced_rank(f, d) != bs) return false;
    }
    return true;
}

bool homology_map_zero(const ChainMap& f, int through) {
    auto [lo, hi] = joint_range(f);
    for (int d = lo; d <= hi && d <= through; ++d)
        if (induced_rank(f, d) != 0) return false;
    return true;
}

bool is_injective(const ChainMap& f) {
    const ChainComplex& S = f.source();
    if (S.empty()) return true;
    for (int d = S.dmin(); d <= S.dmax(); ++d)
        if (rank(f.at(d)) != S.dim(d)) return false;
    return true;
}

bool is_surjective(const ChainMap& f) {
    const ChainComplex& T = f.target();
    if (T.empty()) return true;
    for (int d = T.dmin(); d <= T.dmax(); ++d)
        if (rank(f.at(d)) != T.dim(d)) return false;
    return true;
}

ChainComplex shift(const ChainComplex& C, int k) {
    if (C.empty()) return C;
    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    Scalar s = C.field().sign(k);
    for (int d = C.dmin(); d <= C.dmax(); ++d) {
        dims.push_back(C.dim(d));
        diffs.push_back(C.d(d).scaled(s));
    }
    return ChainComplex(C.field(), C.dmin() + k, std::move(dims), std::move(diffs));
}

ChainMap shift(const ChainMap& f, int k) {
    ChainComplex S = shift(f.source(), k), T = shift(f.target(), k);
    return ChainMap::from_images(S, T, [&](int d, Index j) { return f.image(d - k, j); }, false);
}

DirectSum direct_sum(const std::vector<ChainComplex>& parts) {
    if (parts.empty()) throw std::invalid_argument("direct_sum: no parts");
    const Field F = parts.front().field();
    for (const auto& p : parts) require_same_field(p.field(), F, "direct_sum");
    BlockLayout L(parts);
    DirectSum out;
    if (L.empty()) {
        out.sum = ChainComplex::zero(F);
    } else {
        std::vector<std::size_t> dims;
        std::vector<Matrix> diffs;
        for (int n = L.lo; n <= L.hi; ++n) {
            dims.push_back(L.total[n - L.lo]);
            std::vector<SparseVec> cols;
            for (std::size_t k = 0; k < parts.size(); ++k)
                for (Index j = 0; j < parts[k].dim(n); ++j)
                    cols.push_back(n - 1 >= L.lo ? shifted(parts[k].d_col(n, j), L.off(n - 1, k)) : SparseVec{});
            diffs.push_back(Matrix::from_columns(F, n - 1 >= L.lo ? L.total[n - 1 - L.lo] : 0, cols));
        }
        out.sum = ChainComplex(F, L.lo, std::move(dims), std::move(diffs));
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
        out.inclusions.push_back(ChainMap::from_images(
            parts[k], out.sum, [&](int n, Index j) { return unit_vec(F, static_cast<Index>(L.off(n, k) + j)); }, false));
        out.projections.push_back(ChainMap::from_images(
            out.sum, parts[k],
            [&](int n, Index j) {
                std::size_t a = L.off(n, k), b = L.off(n, k + 1);
                if (j < a || j >= b) return SparseVec{};
                return unit_vec(F, static_cast<Index>(j - a));
            },
            false));
    }
    return out;
}

ChainComplex cone(const ChainMap& f) {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    const Field F = T.field();
    BlockLayout L({T, S}, {0, 1});
    if (L.empty()) return ChainComplex::zero(F);
    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    Scalar minus = F.from_int(-1);
    for (int n = L.lo; n <= L.hi; ++n) {
        dims.push_back(L.total[n - L.lo]);
        std::size_t below = n - 1 >= L.lo ? L.total[n - 1 - L.lo] : 0;
        std::size_t tb = T.dim(n - 1);
        std::vector<SparseVec> cols;
        for (Index j = 0; j < T.dim(n); ++j) cols.push_back(T.d_col(n, j));
        for (Index j = 0; j < S.dim(n - 1); ++j) {
            SparseVec c = f.image(n - 1, j);
            SparseVec ds = opcalc::scaled(F, S.d_col(n - 1, j), minus);
            axpy(F, c, F.from_int(1), shifted(ds, tb));
            cols.push_back(std::move(c));
        }
        diffs.push_back(Matrix::from_columns(F, below, cols));
    }
    return ChainComplex(F, L.lo, std::move(dims), std::move(diffs));
}

// ---------------------------------------------------------------------------

MultiTensor::MultiTensor(std::vector<ChainComplex> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("MultiTensor: no factors");
    const Field F = factors_.front().field();
    for (const auto& c : factors_) require_same_field(c.field(), F, "tensor");
    bool any_empty = std::any_of(factors_.begin(), factors_.end(), [](const ChainComplex& c) { return c.empty(); });
    if (any_empty) {
        complex_ = ChainComplex::zero(F);
        return;
    }
    int lo = 0, hi = 0;
    for (const auto& c : factors_) lo += c.dmin(), hi += c.dmax();
    lo_ = lo;
    basis_.assign(hi - lo + 1, {});
    offsets_.assign(hi - lo + 1, {});

    const std::size_t k = factors_.size();
    // Enumerate degree patterns lexicographically; within a pattern the
    // index tuples are a mixed-radix count.
    std::vector<int> degs(k);
    std::function<void(std::size_t, int)> rec = [&](std::size_t t, int sum) {
        if (t == k) {
            std::size_t count = 1;
            for (std::size_t u = 0; u < k; ++u) count *= factors_[u].dim(degs[u]);
            if (count == 0) return;
            auto& bucket = basis_[sum - lo];
            offsets_[sum - lo].emplace(degs, static_cast<Index>(bucket.size()));
            std::vector<Index> idx(k, 0);
            for (std::size_t c = 0; c < count; ++c) {
                bucket.push_back(Elem{sum, degs, idx});
                for (std::size_t u = k; u-- > 0;) {
                    if (++idx[u] < factors_[u].dim(degs[u])) break;
                    idx[u] = 0;
                }
            }
            return;
        }
        for (int p = factors_[t].dmin(); p <= factors_[t].dmax(); ++p) {
            degs[t] = p;
            rec(t + 1, sum + p);
        }
    };
    rec(0, 0);

    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    for (int n = lo; n <= hi; ++n) {
        const auto& bucket = basis_[n - lo];
        dims.push_back(bucket.size());
        std::vector<SparseVec> cols;
        cols.reserve(bucket.size());
        for (const auto& e : bucket) {
            std::vector<std::pair<Index, Scalar>> acc;
            int sgn = 0;
            for (std::size_t t = 0; t < k; ++t) {
                Scalar s = F.sign(sgn);
                std::vector<int> d2 = e.degs;
                d2[t] -= 1;
                std::vector<Index> i2 = e.idx;
                if (factors_[t].dim(e.degs[t] - 1) != 0)
                    for (const auto& [j, c] : factors_[t].d_col(e.degs[t], e.idx[t])) {
                        i2[t] = j;
                        acc.emplace_back(*index(d2, i2), F.mul(s, c));
                    }
                sgn += e.degs[t];
            }
            cols.push_back(collect(F, std::move(acc)));
        }
        diffs.push_back(Matrix::from_columns(F, n - 1 >= lo ? basis_[n - 1 - lo].size() : 0, cols));
    }
    complex_ = ChainComplex(F, lo, std::move(dims), std::move(diffs));
    // The constructor trims empty end degrees; keep lo_ aligned with basis_.
}

std::optional<Index> MultiTensor::index(const std::vector<int>& degs, const std::vector<Index>& idx) const {
    if (basis_.empty()) return std::nullopt;
    int n = std::accumulate(degs.begin(), degs.end(), 0);
    if (n < lo_ || n - lo_ >= static_cast<int>(basis_.size())) return std::nullopt;
    const auto& offs = offsets_[n - lo_];
    auto it = offs.find(degs);
    if (it == offs.end()) return std::nullopt;
    std::size_t pos = 0;
    for (std::size_t u = 0; u < degs.size(); ++u) {
        std::size_t dim = factors_[u].dim(degs[u]);
        if (idx[u] >= dim) return std::nullopt;
        pos = pos * dim + idx[u];
    }
    return static_cast<Index>(it->second + pos);
}

SparseVec MultiTensor::product(const std::vector<int>& degs, const std::vector<SparseVec>& parts) const {
    const Field& F = complex_.field();
    std::vector<std::pair<Index, Scalar>> acc;
    const std::size_t k = parts.size();
    for (const auto& p : parts)
        if (p.empty()) return {};
    std::vector<std::size_t> pos(k, 0);
    std::vector<Index> idx(k);
    while (true) {
        Scalar c = F.from_int(1);
        for (std::size_t u = 0; u < k; ++u) {
            idx[u] = parts[u][pos[u]].first;
            c = F.mul(c, parts[u][pos[u]].second);
        }
        auto i = index(degs, idx);
        if (!i) throw std::out_of_range("MultiTensor::product: element outside the tensor");
        acc.emplace_back(*i, c);
        std::size_t u = k;
        while (u-- > 0) {
            if (++pos[u] < parts[u].size()) break;
            pos[u] = 0;
        }
        if (u == static_cast<std::size_t>(-1)) break;
    }
    return collect(F, std::move(acc));
}

ChainComplex tensor(const ChainComplex& C, const ChainComplex& D) { return MultiTensor({C, D}).complex(); }

ChainMap tensor_maps(const MultiTensor& src, const MultiTensor& dst, const std::vector<ChainMap>& fs) {
    if (fs.size() != src.arity() || fs.size() != dst.arity()) throw std::invalid_argument("tensor_maps: arity mismatch");
    return ChainMap::from_images(src.complex(), dst.complex(), [&](int n, Index j) {
        const auto& e = src.elem(n, j);
        std::vector<SparseVec> parts;
        for (std::size_t t = 0; t < fs.size(); ++t) parts.push_back(fs[t].image(e.degs[t], e.idx[t]));
        return dst.product(e.degs, parts);
    }, false);
}

ChainMap tensor(const ChainMap& f, const ChainMap& g) {
    MultiTensor src({f.source(), g.source()}), dst({f.target(), g.target()});
    return tensor_maps(src, dst, {f, g});
}

ChainMap permute_factors(const MultiTensor& src, const MultiTensor& dst, const std::vector<int>& perm) {
    const Field& F = src.complex().field();
    return ChainMap::from_images(src.complex(), dst.complex(), [&](int n, Index j) {
        const auto& e = src.elem(n, j);
        std::vector<int> degs(perm.size());
        std::vector<Index> idx(perm.size());
        long sign = 0;
        for (std::size_t a = 0; a < perm.size(); ++a) {
            degs[a] = e.degs[perm[a]];
            idx[a] = e.idx[perm[a]];
            for (std::size_t b = a + 1; b < perm.size(); ++b)
                if (perm[a] > perm[b]) sign += static_cast<long>(e.degs[perm[a]]) * e.degs[perm[b]];
        }
        return SparseVec{{*dst.index(degs, idx), F.sign(sign)}};
    }, false);
}

// ---------------------------------------------------------------------------

std::optional<ChainHomotopy> find_null_homotopy(const ChainMap& f, int through) {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    const Field F = S.field();
    ChainHomotopy H{f, ChainMap::zero(S, T), {}, through};
    if (S.empty()) return H;

    // Unknown (d, a, b) is entry (a, b) of H_d : S_d -> T_{d+1}.
    std::vector<std::size_t> var_off(S.dmax() - S.dmin() + 2, 0);
    for (int d = S.dmin(); d <= S.dmax(); ++d)
        var_off[d - S.dmin() + 1] = var_off[d - S.dmin()] + T.dim(d + 1) * S.dim(d);
    const std::size_t nvars = var_off.back();
    auto var = [&](int d, std::size_t a, std::size_t b) {
        return static_cast<Index>(var_off[d - S.dmin()] + a * S.dim(d) + b);
    };

    std::vector<SparseVec> rows;
    SparseVec rhs;
    for (int n = S.dmin(); n <= S.dmax() && n <= through; ++n) {
        if (T.dim(n) == 0) continue;
        Matrix fn = f.at(n);
        Matrix dT = T.d(n + 1);
        for (std::size_t i = 0; i < T.dim(n); ++i) {
            for (std::size_t j = 0; j < S.dim(n); ++j) {
                std::vector<std::pair<Index, Scalar>> eq;
                for (const auto& [a, c] : dT.row(i)) eq.emplace_back(var(n, a, j), c);
                if (n - 1 >= S.dmin() && T.dim(n) != 0)
                    for (const auto& [b, c] : S.d_col(n, static_cast<Index>(j))) eq.emplace_back(var(n - 1, i, b), c);
                Scalar target = fn.get(i, j);
                if (eq.empty() && target.is_zero()) continue;
                if (!target.is_zero()) rhs.emplace_back(static_cast<Index>(rows.size()), target);
                rows.push_back(collect(F, std::move(eq)));
            }
        }
    }
    Matrix A(F, rows.size(), nvars);
    for (std::size_t r = 0; r < rows.size(); ++r) A.set_row(r, std::move(rows[r]));
    auto x = solve(A, rhs);
    if (!x) return std::nullopt;

    for (int d = S.dmin(); d <= S.dmax(); ++d) {
        Matrix Hd(F, T.dim(d + 1), S.dim(d));
        H.components.push_back(std::move(Hd));
    }
    std::size_t blk = 0;
    for (const auto& [v, c] : *x) {
        while (var_off[blk + 1] <= v) ++blk;
        int d = S.dmin() + static_cast<int>(blk);
        std::size_t local = v - var_off[blk];
        H.components[blk].set(local / S.dim(d), local % S.dim(d), c);
    }
    if (!H.verify()) throw InvariantViolation("find_null_homotopy: solution fails verification");
    return H;
}

std::optional<HomotopyInverse> homotopy_inverse(const ChainMap& f) {
    const ChainComplex& A = f.source();
    const ChainComplex& B = f.target();
    const Field F = B.field();
    ChainComplex C = cone(f);
    auto h = find_null_homotopy(ChainMap::identity(C));
    if (!h) return std::nullopt;
    // On b in B_n the contraction is (K'b, g b) in B_{n+1} ⊕ A_n, and
    // dK' + K'd + f g = id.
    std::map<int, std::vector<SparseVec>> hcols;
    auto column = [&](int n, Index j) -> const SparseVec& {
        auto it = hcols.find(n);
        if (it == hcols.end()) it = hcols.emplace(n, h->at(n).columns()).first;
        return it->second.at(j);
    };
    ChainMap g = ChainMap::from_images(B, A, [&](int n, Index j) {
        SparseVec out;
        std::size_t tb = B.dim(n + 1);
        for (const auto& [i, c] : column(n, j))
            if (i >= tb) out.emplace_back(i - tb, c);
        return out;
    });
    ChainHomotopy K{compose(f, g), ChainMap::identity(B), {}, INT_MAX};
    if (!B.empty())
        for (int n = B.dmin(); n <= B.dmax(); ++n) {
            std::vector<SparseVec> cols;
            for (Index j = 0; j < B.dim(n); ++j) {
                SparseVec c;
                for (const auto& [i, v] : column(n, j))
                    if (i < B.dim(n + 1)) c.emplace_back(i, F.neg(v));
                cols.push_back(std::move(c));
            }
            K.components.push_back(Matrix::from_columns(F, B.dim(n + 1), cols));
        }
    if (!K.verify()) throw InvariantViolation("homotopy_inverse: contraction fails verification");
    return HomotopyInverse{g, K};
}

// ---------------------------------------------------------------------------

Cokernel cokernel(const ChainMap& g) {
    const ChainComplex& D = g.target();
    const Field F = D.field();
    Cokernel out;
    if (D.empty()) {
        out.complex = ChainComplex::zero(F);
        out.projection = ChainMap::zero(D, out.complex);
        return out;
    }
    for (int n = D.dmin(); n <= D.dmax(); ++n) {
        std::vector<SparseVec> rel;
        if (g.source().dim(n) != 0) rel = g.at(n).columns();
        out.quotients.emplace_back(F, D.dim(n), rel);
    }
    std::vector<std::size_t> dims;
    std::vector<Matrix> diffs;
    for (int n = D.dmin(); n <= D.dmax(); ++n) {
        const Quotient& q = out.quotients[n - D.dmin()];
        dims.push_back(q.dim());
        std::vector<SparseVec> cols;
        for (std::size_t j = 0; j < q.dim(); ++j) {
            if (n == D.dmin())
                cols.emplace_back();
            else
                cols.push_back(out.quotients[n - 1 - D.dmin()].project(D.d_col(n, q.representative(j))));
        }
        diffs.push_back(Matrix::from_columns(F, n == D.dmin() ? 0 : out.quotients[n - 1 - D.dmin()].dim(), cols));
    }
    // Keep the range aligned with D so quotient indexing stays valid.
    out.complex = ChainComplex(F, D.dmin(), std::move(dims), std::move(diffs));
    const ChainComplex Q = out.complex;
    const auto& qs = out.quotients;
    out.projection = ChainMap::from_images(D, Q, [&](int n, Index j) { return qs[n - D.dmin()].project_basis(j); }, false);
    return out;
}

ChainMap Cokernel::descend(const ChainMap& h) const {
    const ChainComplex& D = projection.source();
    return ChainMap::from_images(complex, h.target(), [&](int n, Index j) {
        return h.image(n, quotients[n - D.dmin()].representative(j));
    });
}

HomotopyFiber homotopy_fiber(const ChainMap& f) {
    const ChainComplex& S = f.source();
    const ChainComplex& T = f.target();
    const Field F = S.field();
    BlockLayout L({T, S}, {-1, 0});
    HomotopyFiber out;
    Scalar minus = F.from_int(-1);
    if (L.empty()) {
        out.fiber = ChainComplex::zero(F);
    } else {
        std::vector<std::size_t> dims;
        std::vector<Matrix> diffs;
        for (int n = L.lo; n <= L.hi; ++n) {
            dims.push_back(L.total[n - L.lo]);
            std::size_t below = n - 1 >= L.lo ? L.total[n - 1 - L.lo] : 0;
            std::size_t tb = T.dim(n);
            std::vector<SparseVec> cols;
            for (Index j = 0; j < T.dim(n + 1); ++j) cols.push_back(opcalc::scaled(F, T.d_col(n + 1, j), minus));
            for (Index j = 0; j < S.dim(n); ++j) {
                SparseVec c = opcalc::scaled(F, f.image(n, j), minus);
                if (S.dim(n - 1) != 0) axpy(F, c, F.from_int(1), shifted(S.d_col(n, j), tb));
                cols.push_back(std::move(c));
            }
            diffs.push_back(Matrix::from_columns(F, below, cols));
        }
        out.fiber = ChainComplex(F, L.lo, std::move(dims), std::move(diffs));
    }
    const ChainComplex fib = out.fiber;
    out.projection = ChainMap::from_images(fib, S, [&](int n, Index j) {
        std::size_t tb = T.dim(n + 1);
        return j < tb ? SparseVec{} : unit_vec(F, static_cast<Index>(j - tb));
    });
    ChainComplex Tm = shift(T, -1);
    out.boundary = ChainMap::from_images(Tm, fib, [&](int, Index j) { return unit_vec(F, j); });
    ChainHomotopy K{compose(f, out.projection), ChainMap::zero(fib, T), {}, INT_MAX};
    if (!fib.empty())
        for (int n = fib.dmin(); n <= fib.dmax(); ++n) {
            Matrix k(F, T.dim(n + 1), fib.dim(n));
            for (std::size_t j = 0; j < T.dim(n + 1); ++j) k.set(j, j, minus);
            K.components.push_back(std::move(k));
        }
    if (!K.verify()) throw InvariantViolation("homotopy_fiber: canonical nullhomotopy fails");
    out.null_homotopy = std::move(K);
    return out;
}

// ---------------------------------------------------------------------------

bool Square::commutes() const { return compose(v1, h) == compose(h1, v); }

PushoutCorner pushout_corner_map(const Square& sq) {
    if (!sq.commutes()) throw InvariantViolation("pushout_corner_map: square does not commute");
    DirectSum ds = direct_sum({sq.h.target(), sq.v.target()});
    ChainMap g = compose(ds.inclusions[0], sq.h) - compose(ds.inclusions[1], sq.v);
    Cokernel ck = cokernel(g);
    ChainMap out = compose(sq.v1, ds.projections[0]) + compose(sq.h1, ds.projections[1]);
    return PushoutCorner{ck.complex, ck.descend(out)};
}

Square tensor_square(const ChainMap& f1, const ChainMap& f2) {
    ChainMap idA = ChainMap::identity(f2.source()), idB = ChainMap::identity(f2.target());
    ChainMap idM = ChainMap::identity(f1.source()), idN = ChainMap::identity(f1.target());
    return Square{tensor(f1, idA), tensor(idM, f2), tensor(f1, idB), tensor(idN, f2)};
}

PuncturedCube punctured_cube_colimit(const ChainMap& f, int r) {
    if (r < 1) throw std::invalid_argument("punctured_cube_colimit: r must be >= 1");
    const ChainComplex& X = f.source();
    const ChainComplex& Y = f.target();
    const Field F = X.field();
    const unsigned full = (1u << r) - 1;
    auto factors = [&](unsigned mask) {
        std::vector<ChainComplex> fs;
        for (int k = 0; k < r; ++k) fs.push_back(mask >> k & 1 ? Y : X);
        return fs;
    };
    std::vector<MultiTensor> vert;
    for (unsigned m = 0; m < full; ++m) vert.emplace_back(factors(m));
    MultiTensor power(factors(full));
    std::vector<ChainComplex> vparts;
    for (const auto& v : vert) vparts.push_back(v.complex());
    DirectSum V = direct_sum(vparts);

    ChainMap idX = ChainMap::identity(X), idY = ChainMap::identity(Y);
    auto apply_f_at = [&](unsigned from, unsigned to) {
        std::vector<ChainMap> fs;
        for (int k = 0; k < r; ++k) {
            bool a = from >> k & 1, b = to >> k & 1;
            fs.push_back(a ? idY : (b ? f : idX));
        }
        const MultiTensor& dst = to == full ? power : vert[to];
        return tensor_maps(vert[from], dst, fs);
    };

    // Edge relations v - f_k(v) for every edge that avoids the terminal vertex.
    std::vector<ChainComplex> eparts;
    std::vector<ChainMap> emaps;
    for (unsigned m = 0; m < full; ++m)
        for (int k = 0; k < r; ++k) {
            unsigned m2 = m | (1u << k);
            if (m2 == m || m2 == full) continue;
            eparts.push_back(vert[m].complex());
            emaps.push_back(compose(V.inclusions[m], ChainMap::identity(vert[m].complex())) -
                            compose(V.inclusions[m2], apply_f_at(m, m2)));
        }
    Cokernel ck;
    if (eparts.empty()) {
        ck = cokernel(ChainMap::zero(ChainComplex::zero(F), V.sum));
    } else {
        DirectSum E = direct_sum(eparts);
        ChainMap rel = compose(emaps[0], E.projections[0]);
        for (std::size_t e = 1; e < emaps.size(); ++e) rel = rel + compose(emaps[e], E.projections[e]);
        ck = cokernel(rel);
    }

    ChainMap to_power = compose(apply_f_at(0, full), V.projections[0]);
    for (unsigned m = 1; m < full; ++m) to_power = to_power + compose(apply_f_at(m, full), V.projections[m]);

    PuncturedCube out{ck.complex, ck.descend(to_power), {}, {}};
    for (int i = 0; i + 1 < r; ++i) {
        std::vector<int> perm(r);
        std::iota(perm.begin(), perm.end(), 0);
        std::swap(perm[i], perm[i + 1]);
        auto swap_mask = [&](unsigned m) {
            unsigned a = m >> i & 1, b = m >> (i + 1) & 1;
            m &= ~((1u << i) | (1u << (i + 1)));
            return m | (b << i) | (a << (i + 1));
        };
        ChainMap onV = ChainMap::zero(V.sum, V.sum);
        for (unsigned m = 0; m < full; ++m)
            onV = onV + compose(compose(V.inclusions[swap_mask(m)], permute_factors(vert[m], vert[swap_mask(m)], perm)),
                                V.projections[m]);
        out.on_colimit.push_back(ck.descend(compose(ck.projection, onV)));
        out.on_power.push_back(permute_factors(power, power, perm));
    }
    return out;
}

}  // namespace opcalc
