#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "opcalc/symseq.hpp"

namespace opcalc {

/// (degree, index) of a basis element of some level or complex.
using Arg = std::pair<int, Index>;
using Args = std::vector<Arg>;

/// Structure map on base basis elements in block order: the inputs of the
/// first argument come first, then those of the second, and so on. Returns
/// a vector in the base of the target level of arity sum(s_k), in degree
/// xdeg + sum of argument degrees. For planar storage the base is P(n) and
/// the block-order composite is the planar one.
using ComposeFn = std::function<SparseVec(int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys)>;

/// A reduced operad given by its underlying sequence and block-order γ.
class Operad {
public:
    Operad(std::string name, SymSeq seq, Index unit, ComposeFn gamma);

    const std::string& name() const { return name_; }
    const SymSeq& seq() const { return seq_; }
    const Field& field() const { return seq_.field(); }
    int arity_cap() const { return seq_.arity_cap(); }
    /// Base index of the unit in O(1), degree 0.
    Index unit() const { return unit_; }
    /// True when O(1) is spanned by the unit.
    bool unit_is_arity_one() const;
    /// Lowest degree occurring in any level (0 if all levels are empty).
    int min_degree() const;

    SparseVec gamma(int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys) const {
        return gamma_(r, xdeg, x, sizes, ys);
    }
    /// γ applied to a vector in the base of O(r).
    SparseVec gamma(int r, int xdeg, const SparseVec& x, const std::vector<int>& sizes, const Args& ys) const;

private:
    std::string name_;
    SymSeq seq_;
    Index unit_;
    ComposeFn gamma_;
};
using OperadPtr = std::shared_ptr<const Operad>;

/// unit, com, ass, com_truncated, ass_truncated (the last two need m >= 2).
/// Levels are built up to arity cap. ass uses planar storage.
OperadPtr builtin_operad(const Field& F, const std::string& name, int cap, int m = 0);

/// Structure constants keyed by (r, xdeg, x, s_1, deg_1, y_1, ..., s_r, deg_r, y_r).
using GammaTable = std::map<std::vector<std::int64_t>, SparseVec>;
GammaTable::key_type gamma_key(int r, int xdeg, Index x, const std::vector<int>& sizes, const Args& ys);

/// Operad from explicit data. For symmetric storage only tuples with weakly
/// decreasing sizes are read from the table; the others follow from
/// equivariance. Planar storage reads every tuple. Missing entries are zero.
OperadPtr explicit_operad(std::string name, SymSeq seq, Index unit, GammaTable table);

struct AxiomViolation {
    std::string axiom;
    std::vector<int> tuple;  // r; s_1..s_r (and t's for associativity)
    std::string detail;
};
/// Checks O(0) = 0, unit laws, associativity, equivariance and
/// compatibility with d on every index tuple with total arity <= cap.
std::vector<AxiomViolation> validate_operad(const Operad& O, int cap);

/// Right action ρ: M(r) ⊗ O(s_1) ⊗ ... -> M(s) and left action
/// λ: O(r) ⊗ M(s_1) ⊗ ... -> M(s), both in block order.
struct Bimodule {
    OperadPtr op;
    SymSeq seq;
    ComposeFn rho, lambda;
    std::string name;
};

/// O as a bimodule over itself.
Bimodule operad_bimodule(const OperadPtr& O);
/// Levels lo <= k < hi, actions followed by projection. Requires 1 <= lo < hi.
Bimodule level_truncate(const Bimodule& M, ExtNat lo, ExtNat hi);
/// A single level n acted on only through the augmentation O(1) -> k.
Bimodule single_level(const OperadPtr& O, int n, const SymRep& rep);
Bimodule zero_bimodule(const OperadPtr& O);

/// Action O(r) ⊗ A^{⊗r} -> A; arguments are (degree, index) in the complex.
using ActFn = std::function<SparseVec(int r, int xdeg, Index x, const Args& as)>;

/// An O-algebra: a left module concentrated in level 0.
struct Algebra {
    OperadPtr op;
    ChainComplex complex;
    ActFn act;
    std::string name;

    /// Lowest degree with a nonzero basis vector (INT_MAX when zero).
    int connectivity() const;
};

/// Unit acts as the identity, everything else by zero.
Algebra trivial_algebra(const OperadPtr& O, const ChainComplex& C);
/// Action constants keyed by (r, xdeg, x, deg_1, a_1, ..., deg_r, a_r).
using ActTable = std::map<std::vector<std::int64_t>, SparseVec>;
Algebra explicit_algebra(const OperadPtr& O, std::string name, const ChainComplex& C, ActTable table);
/// Checks unit, associativity, equivariance and compatibility with d for
/// operations of arity <= max_arity.
std::vector<AxiomViolation> validate_algebra(const Algebra& A, int max_arity);

/// Free algebra ⊕_n O(n) ⊗_{Σ_n} V^{⊗n} in degrees <= degree_cap.
/// V must be concentrated in positive degrees.
Algebra free_algebra(const OperadPtr& O, const ChainComplex& V, int degree_cap);

/// Block-order composite converted to the full representation of the target
/// level: x is a full-representation index of X(r) (for planar storage
/// (p, π) with index p·r! + rank(π)), ys are full indices, and labels[k]
/// lists the target inputs of block k. The result is a vector in the full
/// representation of the target level of arity sum |labels[k]|.
SparseVec compose_labeled(const SymSeq& X, const std::vector<SymSeq>& Ys, const SymSeq& target, const ComposeFn& fn,
                          int r, int xdeg, Index x, const Args& ys, const std::vector<std::vector<int>>& labels);

/// The action maps of a bimodule as maps of sequences.
SymSeqMap right_action_map(const Bimodule& M, int s_cap);
SymSeqMap left_action_map(const Bimodule& M, int s_cap);

struct RelativeComposite {
    SymSeq seq;
    std::vector<Cokernel> levels;  // quotient of (M∘N)(s)
    SymSeq product;                // M∘N
    ComposeWitness witness;        // of M∘N
};
/// M ∘_O N: cokernel of ρ∘id - (id∘λ)∘assoc : (M∘O)∘N -> M∘N, levelwise.
RelativeComposite relative_compose(const Bimodule& M, const Bimodule& N, int s_cap);

}  // namespace opcalc
