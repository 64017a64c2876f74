#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opcalc/schur.hpp"

namespace opcalc {

enum class BarMode { exact, truncated };

struct BarOptions {
    int degree_cap = 10;
    BarMode mode = BarMode::exact;
    int bar_cap = 4;  // truncated mode only
};

/// A cell of a multisimplicial totalization: one stack of layers, its
/// simplicial shift, signed faces and the sign of the internal differential.
struct Cell {
    std::vector<int> grading;
    Stack stack;
    int shift = 0;
    std::vector<std::pair<std::size_t, int>> faces;  // (depth, sign exponent)
    int delta_sign = 0;
};

/// Normalized total complex of a family of cells in degrees <= max_deg.
/// Basis in each degree ordered by (cell, id); degenerate nodes are dropped.
class Totalization {
public:
    Totalization(EnginePtr eng, std::vector<Cell> cells, int max_deg);

    const ChainComplex& complex() const { return complex_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const EnginePtr& engine() const { return eng_; }
    int max_deg() const { return max_deg_; }
    /// (cell, node id) of basis vector j in degree deg.
    std::pair<std::size_t, Index> element(int deg, Index j) const { return basis_.at(deg - lo_).at(j); }
    std::optional<std::size_t> cell_of(const Stack& s) const;
    /// Image in the total complex of a vector of nodes of cell c (degree
    /// taken from the nodes; nodes out of range or degenerate are dropped).
    SparseVec embed(std::size_t c, const SparseVec& ids) const;
    std::optional<Index> position(std::size_t c, Index id) const;

private:
    EnginePtr eng_;
    std::vector<Cell> cells_;
    int max_deg_;
    int lo_ = 0;
    std::vector<std::vector<std::pair<std::size_t, Index>>> basis_;
    std::vector<std::unordered_map<Index, Index>> pos_;  // per cell: id -> index within its degree
    std::map<std::vector<std::string>, std::size_t> by_stack_;
    ChainComplex complex_;
};

/// Shared state for bar constructions over one algebra: the engine, the
/// operad layer and the registered module layers.
class BarContext {
public:
    BarContext(const Algebra& I, BarOptions opt);

    const OperadPtr& op() const { return op_; }
    const Algebra& algebra() const { return alg_; }
    const BarOptions& options() const { return opt_; }
    const EnginePtr& engine() const { return eng_; }
    const Layer& op_layer() const { return op_layer_; }
    /// Largest simplicial degree that can contribute in degrees <= cap + 1.
    int max_bar_degree() const;
    int valid_through() const;
    /// Layer of M with the right action M∘O -> M registered.
    Layer module_layer(const Bimodule& M);
    /// Layer of N with both actions registered (for bisimplicial stacks).
    Layer bimodule_layer(const Bimodule& N);
    /// Registers merge upper∘lower -> result through fn.
    void register_merge(const Layer& upper, const Layer& lower, ComposeFn fn, const Layer& result);

private:
    OperadPtr op_;
    Algebra alg_;
    BarOptions opt_;
    EnginePtr eng_;
    Layer op_layer_;
    int conn_ = 0;
};
using BarContextPtr = std::shared_ptr<BarContext>;

BarContextPtr make_bar_context(const Algebra& I, BarOptions opt);
std::string layer_key(const Bimodule& M);

struct BarComplex {
    ChainComplex total;
    BarMode mode = BarMode::exact;
    int valid_through = 0;
    BarContextPtr ctx;
    std::shared_ptr<Totalization> tot;
    Layer top;  // the module layer

    /// Simplicial degree of basis vector j in degree deg.
    int bar_degree(int deg, Index j) const;
};

/// Normalized B(M, O, I) in total degrees <= cap + 1.
BarComplex bar(const BarContextPtr& ctx, const Bimodule& M);
BarComplex bar(const Bimodule& M, const Algebra& I, BarOptions opt);
/// TQ(I) = B(O_1^2, O, I).
BarComplex tq(const BarContextPtr& ctx);
BarComplex tq(const Algebra& I, BarOptions opt);
Bimodule tq_module(const OperadPtr& O);

/// Map of bar complexes over the same context induced by a map of modules
/// that is the identity on common levels and zero elsewhere.
ChainMap truncation_bar_map(const BarComplex& src, const BarComplex& dst);
/// Map induced by an algebra map f: I -> J (as a chain map of underlying
/// complexes); src and dst share the module layer.
ChainMap induced_bar_map(const BarComplex& src, const BarComplex& dst, const ChainMap& f);

/// Bisimplicial model of B(M, O, B(N, O, I)) (left) or B(B(M, O, N), O, I)
/// (right): cells M∘O^p∘N∘O^q∘I.
struct Bisimplicial {
    BarComplex complex;
    Layer left, mid;
    bool left_convention = true;
};
Bisimplicial bisimplicial_bar(const BarContextPtr& ctx, const Bimodule& M, const Bimodule& N, bool left_convention);
/// The iso e -> (-1)^{pq} e from the left to the right convention.
ChainMap bar_assoc_iso(const Bisimplicial& L, const Bisimplicial& R);
ChainMap bar_assoc_iso(const BarContextPtr& ctx, const Bimodule& M, const Bimodule& N);

/// The O-algebra structure on B(M, O, I) from the left action on M and the
/// shuffle map, on the total complex.
Algebra bar_algebra(const BarComplex& B, const Bimodule& M);

/// Augmentation onto the relative composite M∘_O I (cokernel of d_0 - d_1).
struct RelativeAlgebraComposite {
    ChainComplex complex;
    ChainMap augmentation;  // bar total -> complex
};
RelativeAlgebraComposite augmentation_to_relative(const BarComplex& B);

/// Comparison of B(M, O, J) with J = B(N, O, I) (honest nesting) to the
/// bisimplicial model: leaves are shuffled to a common simplicial degree.
ChainMap nested_to_bisimplicial(const BarComplex& outer, const BarComplex& inner, const Bisimplicial& bis);

/// one_term_model: coinvariants(Mn ⊗ TQ(I)^{⊗n}) and the comparison to B(Mn, O, I).
struct OneTerm {
    ChainComplex model;
    ChainMap comparison;
    BarComplex bar;
    BarComplex tq;
};
OneTerm one_term_model(const BarContextPtr& ctx, const Bimodule& Mn);

}  // namespace opcalc
