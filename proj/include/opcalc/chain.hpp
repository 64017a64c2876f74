#pragma once

#include <map>
#include <mutex>

#include <climits>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "opcalc/linalg.hpp"

namespace opcalc {

/// Raised when an exact invariant (d∘d = 0, commuting squares, ...) fails.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bounded chain complex over a field. The differential in degree d is a
/// dim(d-1) x dim(d) matrix. Copies share the underlying data.
class ChainComplex {
public:
    ChainComplex() : ChainComplex(Field()) {}
    explicit ChainComplex(Field F);
    /// dims[k] is the dimension in degree dmin+k; diffs[k] is the
    /// differential out of that degree. Asserts d∘d = 0.
    ChainComplex(Field F, int dmin, std::vector<std::size_t> dims, std::vector<Matrix> diffs);

    static ChainComplex zero(Field F) { return ChainComplex(F); }
    /// One-dimensional complex in degree d.
    static ChainComplex line(Field F, int d);
    /// Zero differential, given dimensions from dmin upward.
    static ChainComplex graded(Field F, int dmin, std::vector<std::size_t> dims);

    const Field& field() const { return impl_->field; }
    bool empty() const { return impl_->dims.empty(); }
    int dmin() const { return impl_->dmin; }
    int dmax() const { return impl_->dmin + static_cast<int>(impl_->dims.size()) - 1; }
    std::size_t dim(int d) const;
    std::size_t total_dim() const;
    /// Differential out of degree d (zero matrix outside the range).
    Matrix d(int deg) const;
    /// d applied to basis vector j of degree deg.
    const SparseVec& d_col(int deg, Index j) const;
    /// rank of d(deg), memoized per complex.
    std::size_t rank_d(int deg) const;

private:
    struct Impl {
        Field field;
        int dmin = 0;
        std::vector<std::size_t> dims;
        std::vector<Matrix> diffs;
        std::vector<std::vector<SparseVec>> cols;
        mutable std::mutex rank_mutex;
        mutable std::map<int, std::size_t> ranks;
    };
    std::shared_ptr<const Impl> impl_;
};

/// Degree-0 chain map. Component d is dim_T(d) x dim_S(d).
class ChainMap {
public:
    ChainMap() = default;
    /// components[k] is the matrix in degree source.dmin()+k.
    ChainMap(ChainComplex source, ChainComplex target, std::vector<Matrix> components, bool check = true);
    /// Builds the map from the image of each basis vector.
    static ChainMap from_images(const ChainComplex& S, const ChainComplex& T,
                                const std::function<SparseVec(int, Index)>& image, bool check = true);
    static ChainMap zero(const ChainComplex& S, const ChainComplex& T);
    static ChainMap identity(const ChainComplex& C);

    const ChainComplex& source() const { return source_; }
    const ChainComplex& target() const { return target_; }
    Matrix at(int d) const;
    SparseVec apply(int d, const SparseVec& v) const;
    /// Column j of the degree-d component.
    SparseVec image(int d, Index j) const;
    bool is_zero() const;
    bool commutes() const;

    friend ChainMap compose(const ChainMap& g, const ChainMap& f);  // g∘f
    friend ChainMap operator+(const ChainMap& a, const ChainMap& b);
    friend ChainMap operator-(const ChainMap& a, const ChainMap& b);
    ChainMap scaled(const Scalar& s) const;
    friend bool operator==(const ChainMap& a, const ChainMap& b);

private:
    ChainComplex source_, target_;
    std::vector<Matrix> comps_;
};

/// H with d_T H + H d_S = f - g, required only in degrees <= through.
struct ChainHomotopy {
    ChainMap f, g;
    std::vector<Matrix> components;  // degree source.dmin()+k -> target degree +1
    int through = INT_MAX;

    Matrix at(int d) const;
    /// Exact check of the homotopy identity in every degree <= through.
    bool verify() const;
};

using Betti = std::map<int, std::size_t>;

Betti homology(const ChainComplex& C);
std::size_t betti(const ChainComplex& C, int d);
/// Rank of H_d(f).
std::size_t induced_rank(const ChainMap& f, int d);
/// Same, with rank(d_{d+1}) of the target already known.
std::size_t induced_rank(const ChainMap& f, int d, std::size_t boundary_rank);
/// True when H_d(f) is an isomorphism for all d <= through.
bool is_quasi_iso(const ChainMap& f, int through = INT_MAX);
bool homology_map_zero(const ChainMap& f, int through = INT_MAX);
bool is_injective(const ChainMap& f);
bool is_surjective(const ChainMap& f);

ChainComplex shift(const ChainComplex& C, int k);
ChainMap shift(const ChainMap& f, int k);

struct DirectSum {
    ChainComplex sum;
    std::vector<ChainMap> inclusions, projections;
};
DirectSum direct_sum(const std::vector<ChainComplex>& parts);

/// cone(f)_n = T_n ⊕ S_{n-1}, d(t,s) = (dt + f(s), -ds). Basis: T first.
ChainComplex cone(const ChainMap& f);

/// Iterated tensor product. Basis in total degree n ordered
/// lexicographically by (p_1, i_1, p_2, i_2, ...).
class MultiTensor {
public:
    explicit MultiTensor(std::vector<ChainComplex> factors);

    struct Elem {
        int degree;
        std::vector<int> degs;
        std::vector<Index> idx;
    };

    const ChainComplex& complex() const { return complex_; }
    const std::vector<ChainComplex>& factors() const { return factors_; }
    std::size_t arity() const { return factors_.size(); }
    const Elem& elem(int n, Index k) const { return basis_.at(n - lo_).at(k); }
    /// Index in total degree sum(degs); nullopt if out of range.
    std::optional<Index> index(const std::vector<int>& degs, const std::vector<Index>& idx) const;
    /// Tensor product of factor vectors given per factor (degree fixed per factor).
    SparseVec product(const std::vector<int>& degs, const std::vector<SparseVec>& parts) const;

private:
    std::vector<ChainComplex> factors_;
    ChainComplex complex_;
    int lo_ = 0;
    std::vector<std::vector<Elem>> basis_;
    std::vector<std::map<std::vector<int>, Index>> offsets_;  // per degree: degree pattern -> first index
};

ChainComplex tensor(const ChainComplex& C, const ChainComplex& D);
ChainMap tensor(const ChainMap& f, const ChainMap& g);
/// f_1 ⊗ ... ⊗ f_k between the given tensor layouts.
ChainMap tensor_maps(const MultiTensor& src, const MultiTensor& dst, const std::vector<ChainMap>& fs);
/// Permutation of tensor factors with Koszul sign: result position k holds
/// factor perm[k] of the source. dst must have the permuted factors.
ChainMap permute_factors(const MultiTensor& src, const MultiTensor& dst, const std::vector<int>& perm);

/// Solves d_T H + H d_S = f in degrees <= through as one linear system.
std::optional<ChainHomotopy> find_null_homotopy(const ChainMap& f, int through = INT_MAX);

struct Cokernel {
    ChainComplex complex;
    ChainMap projection;
    std::vector<Quotient> quotients;  // per degree of the target

    /// Map out of the cokernel induced by h: target -> X with h∘g = 0.
    ChainMap descend(const ChainMap& h) const;
};
Cokernel cokernel(const ChainMap& g);

/// fib_n = T_{n+1} ⊕ S_n with d(t,s) = (-dt - f(s), ds).
struct HomotopyFiber {
    ChainComplex fiber;
    ChainMap projection;  // fib -> S, (t,s) -> s
    ChainMap boundary;    // shift(T,-1) -> fib, t -> (t,0)
    /// K(t,s) = -t, a nullhomotopy of f∘projection.
    ChainHomotopy null_homotopy;
};
HomotopyFiber homotopy_fiber(const ChainMap& f);

/// g with f∘g ≃ id, from a contraction of cone(f); homotopy.f = f∘g,
/// homotopy.g = id. nullopt when f is not a quasi-isomorphism.
struct HomotopyInverse {
    ChainMap inverse;
    ChainHomotopy homotopy;
};
std::optional<HomotopyInverse> homotopy_inverse(const ChainMap& f);

/// Commuting square
///   a00 --h--> a10
///    |v         |v1
///   a01 --h1-> a11
struct Square {
    ChainMap h, v, h1, v1;
    bool commutes() const;
};

struct PushoutCorner {
    ChainComplex pushout;
    ChainMap corner;
};
/// Pushout of a10 <- a00 -> a01 as the cokernel of (h, -v), with the
/// induced map to a11. Throws InvariantViolation if the square does not commute.
PushoutCorner pushout_corner_map(const Square& sq);
/// The square M⊗A -> N⊗A, M⊗B -> N⊗B for f1: M -> N, f2: A -> B.
Square tensor_square(const ChainMap& f1, const ChainMap& f2);

struct PuncturedCube {
    ChainComplex colimit;
    ChainMap to_power;                 // colimit -> Y^{⊗r}
    std::vector<ChainMap> on_colimit;  // transposition (i i+1) acting on the colimit
    std::vector<ChainMap> on_power;    // the same transposition on Y^{⊗r}
};
PuncturedCube punctured_cube_colimit(const ChainMap& f, int r);

}  // namespace opcalc
