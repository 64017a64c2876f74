#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "opcalc/chain.hpp"
#include "opcalc/extnat.hpp"

namespace opcalc {

/// A Σ_n-representation on a chain complex, given by the right action of
/// the adjacent transpositions τ_i = (i i+1), i = 0..n-2.
struct SymRep {
    ChainComplex complex;
    std::vector<ChainMap> tau;

    /// Checks that each generator is a chain automorphism, τ_i² = 1 and the
    /// braid relations. Throws InvariantViolation.
    void validate() const;
    int arity() const { return static_cast<int>(tau.size()) + 1; }
};

/// Trivial action of Σ_n on C.
SymRep trivial_rep(const ChainComplex& C, int n);
/// V^{⊗n} with the Koszul-signed permutation action.
SymRep tensor_power_rep(const ChainComplex& V, int n);

/// Quotient by span{x - x·τ_i}, with its projection.
Cokernel coinvariants(const SymRep& rep);

/// Arity-indexed symmetric sequence with levels 0..arity_cap.
///
/// Two storage kinds: symmetric levels hold an explicit Σ_n-representation;
/// planar levels hold a complex P(n) and stand for the free representation
/// P(n) ⊗ k[Σ_n], whose basis element (p, π) is the operation p with its
/// inputs fed the letters w_{π(0)}, ..., w_{π(n-1)}. A window restricts the
/// visible levels to lo <= n < hi without copying.
class SymSeq {
public:
    SymSeq() = default;
    static SymSeq symmetric(Field F, std::vector<SymRep> levels);
    static SymSeq planar(Field F, std::vector<ChainComplex> levels);
    static SymSeq zero(Field F, int cap);

    const Field& field() const { return data_->field; }
    bool planar() const { return data_->planar; }
    int arity_cap() const { return data_->cap; }
    bool reduced() const { return level_empty(0); }
    ExtNat window_lo() const { return lo_; }
    ExtNat window_hi() const { return hi_; }
    bool in_window(int n) const { return ExtNat(n) >= lo_ && ExtNat(n) < hi_; }

    /// X(n) for symmetric storage, P(n) for planar; zero outside the window
    /// and above the cap.
    const ChainComplex& base(int n) const;
    bool level_empty(int n) const { return base(n).empty(); }
    /// Column j (degree deg) of τ_i on X(n). Symmetric storage only.
    const SparseVec& tau(int n, int i, int deg, Index j) const;
    /// True when every τ_i acts as the identity (symmetric storage).
    bool trivial_action(int n) const;
    /// Full Σ_n-representation; planar levels are materialized (n <= 8).
    SymRep rep(int n) const;
    /// Dimension of the full level in degree d.
    std::size_t dim(int n, int d) const;

    /// Levels k with lo <= k < hi kept, all others zero.
    SymSeq window(ExtNat lo, ExtNat hi) const;
    /// Identity of the underlying storage (windows of one sequence share it).
    const void* storage_id() const { return data_.get(); }

private:
    struct Data {
        Field field;
        bool planar = false;
        int cap = 0;
        std::vector<ChainComplex> base;
        std::vector<SymRep> reps;  // symmetric storage
        // tau_cols[n][i][deg - dmin][j]
        std::vector<std::vector<std::vector<std::vector<SparseVec>>>> tau_cols;
        std::vector<bool> trivial;
        mutable std::mutex mu;
        mutable std::vector<std::unique_ptr<SymRep>> planar_reps;
    };
    std::shared_ptr<const Data> data_;
    ExtNat lo_ = 0, hi_ = ExtNat::inf();
    static const ChainComplex& empty_complex(const Field& F);
};

/// Levels lo <= k < hi of X. Requires 1 <= lo < hi.
SymSeq level_truncate(const SymSeq& X, ExtNat lo, ExtNat hi);

/// Equivariant chain maps X(n) -> X'(n), n = 0..cap. For planar storage the
/// components act on the base complexes P(n).
struct SymSeqMap {
    SymSeq source, target;
    std::vector<ChainMap> levels;

    /// Verifies chain-map and equivariance conditions.
    void validate() const;
    static SymSeqMap identity(const SymSeq& X, int cap);
    static SymSeqMap zero(const SymSeq& X, const SymSeq& Y, int cap);
};

/// X_i^m -> X_j^n (j <= i, n <= m): identity on common levels, zero elsewhere.
SymSeqMap truncation_map(const SymSeq& X, ExtNat i, ExtNat m, ExtNat j, ExtNat n, int cap);
SymSeqMap compose(const SymSeqMap& g, const SymSeqMap& f);

/// Summand of (X∘Y)(s) for one number of blocks r and block-size multiset.
struct ComposeSummand {
    int s = 0, r = 0;
    std::vector<int> sizes;  // weakly decreasing
    ChainMap inclusion, projection;
};

struct ComposeWitness {
    std::vector<ComposeSummand> summands;
    /// For level s: each basis block is (set partition, offset per degree).
    struct Block {
        std::vector<std::vector<int>> partition;  // blocks ordered by minimum
        std::shared_ptr<MultiTensor> tensor;       // X(r) ⊗ Y(|B_1|) ⊗ ... ⊗ Y(|B_r|)
        std::map<int, std::size_t> offset;         // degree -> first index in (X∘Y)(s)
    };
    std::vector<std::vector<Block>> blocks;  // indexed by s
};

/// The composition product up to arity s_cap, computed on full (materialized)
/// representations. Basis of (X∘Y)(s): set partitions of {0..s-1} into blocks
/// ordered by their minima, times X(r) ⊗ Y(|B_1|) ⊗ ... ⊗ Y(|B_r|).
std::pair<SymSeq, ComposeWitness> compose(const SymSeq& X, const SymSeq& Y, int s_cap);
/// f∘g on the witness decompositions.
SymSeqMap compose_map(const SymSeqMap& f, const SymSeqMap& g, int s_cap);

/// Set partitions of {0..s-1} into blocks of sizes in [1, max_block], at
/// most max_blocks blocks, each block sorted and blocks ordered by minimum.
std::vector<std::vector<std::vector<int>>> set_partitions(int s, int max_blocks, int max_block);

/// Comparison iso (X∘Y)∘Z -> X∘(Y∘Z) at level s, on full representations.
ChainMap associativity_iso(const SymSeq& X, const SymSeq& Y, const SymSeq& Z, int s);

}  // namespace opcalc
