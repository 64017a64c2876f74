#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "opcalc/operad.hpp"

namespace opcalc {

/// One layer of a tree stack: a sequence applied on top of the layers below.
/// Bar layers are the simplicial direction; their unit nodes make a layer
/// degenerate.
struct Layer {
    std::string key;
    SymSeq seq;
    bool bar = false;
    Index unit = 0;
};
using Stack = std::vector<Layer>;

/// A node of a Schur level: x ∈ X(r) in degree xdeg on the word of child
/// ids. Symmetric layers keep the word sorted and x a quotient
/// representative; planar layers keep x ∈ P(r) and any word.
struct Node {
    int r = 0;
    int xdeg = 0;
    Index x = 0;
    std::vector<Index> word;
    int deg = 0;
    /// Bit j: depth j below this node is a bar layer made only of units.
    std::uint32_t mask = 0;
};

/// Basis of the level-0 composite L_0 ∘ L_1 ∘ ... ∘ L_k ∘ leaf, degrees <= bound,
/// ids sorted by degree. The empty stack is the leaf itself.
class Level {
public:
    const Stack& stack() const { return stack_; }
    int bound() const { return bound_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(Index id) const { return nodes_[id]; }
    int degree(Index id) const { return nodes_[id].deg; }
    /// First id of degree d (ids of degree d are [offset(d), offset(d+1))).
    Index offset(int d) const;
    std::size_t count(int d) const { return offset(d + 1) - offset(d); }
    std::optional<Index> find(int r, int xdeg, Index x, const std::vector<Index>& word) const;

private:
    friend class Engine;
    struct VecHash {
        std::size_t operator()(const std::vector<std::int64_t>& v) const;
    };
    Stack stack_;
    int bound_ = 0;
    std::vector<Node> nodes_;
    std::unordered_map<std::vector<std::int64_t>, Index, VecHash> lookup_;
    std::map<std::vector<int>, std::shared_ptr<Quotient>> quotients_;  // (r, xdeg, runs..)
    std::vector<std::unique_ptr<SparseVec>> diff_memo_;
    std::vector<std::vector<std::unique_ptr<SparseVec>>> face_memo_;  // [depth][id]
};

/// Builds and caches levels for stacks over one leaf algebra, with the merge
/// registry giving the structure maps between adjacent layers.
class Engine {
public:
    /// Levels of a stack with b bar layers keep degrees <= top_bound - b.
    Engine(Algebra leaf, int top_bound);

    const Field& field() const { return field_; }
    const Algebra& leaf() const { return leaf_; }
    int top_bound() const { return top_bound_; }

    /// upper ∘ lower -> result through fn (block order).
    void register_merge(const Layer& upper, const Layer& lower, ComposeFn fn, const Layer& result);
    /// Layer acting on the leaf (the last merge of a stack).
    void register_act(const Layer& layer, ActFn act);
    bool has_merge(const std::string& upper, const std::string& lower) const;

    const Level& level(const Stack& s);
    static Stack tail(const Stack& s, std::size_t from = 1);
    /// Stack after merging layers depth and depth+1 (the leaf when last).
    Stack face_stack(const Stack& s, std::size_t depth) const;

    /// Class of x ⊗ word in level(s), x a vector in the base of s[0](r).
    SparseVec canonical(const Stack& s, int r, int xdeg, const SparseVec& x, const std::vector<Index>& word);
    /// Internal differential.
    const SparseVec& diff(const Stack& s, Index id);
    /// d_depth: merge of layers depth and depth+1, in level(face_stack(s, depth)).
    const SparseVec& face(const Stack& s, std::size_t depth, Index id);
    /// x ∈ top(r) applied to kids of level(kid_stack) through the registered
    /// merge of top with kid_stack[0] (or the leaf action), with the Koszul
    /// sign of moving each argument past the subtrees of earlier ones.
    SparseVec merge(const Layer& top, int r, int xdeg, const SparseVec& x, const std::vector<Index>& kids,
                    const Stack& kid_stack);
    /// Degeneracy: inserts an all-unit layer u at position pos (1 <= pos <= size).
    SparseVec insert_unit(const Stack& s, std::size_t pos, const Layer& u, Index id);
    /// Level complex with the internal differential, degrees <= max_deg.
    ChainComplex complex(const Stack& s, int max_deg);

private:
    struct Merge {
        ComposeFn fn;
        Layer result;
    };
    Level& build(const Stack& s);
    SparseVec tau(const Layer& L, int r, int i, int deg, const SparseVec& v) const;
    std::shared_ptr<Quotient> quotient(Level& lv, int r, int xdeg, const std::vector<Index>& word, const Level& kids);
    SparseVec compute_diff(const Stack& s, Index id);
    SparseVec compute_face(const Stack& s, std::size_t depth, Index id);

    Field field_;
    Algebra leaf_;
    int top_bound_;
    std::map<std::pair<std::string, std::string>, Merge> merges_;
    std::map<std::string, ActFn> acts_;
    std::map<std::vector<std::string>, std::unique_ptr<Level>> levels_;
};
using EnginePtr = std::shared_ptr<Engine>;

/// Calls f(coefficient, ids) for each term of v_1 ⊗ ... ⊗ v_k.
void for_each_term(const Field& F, const std::vector<SparseVec>& vs,
                   const std::function<void(const Scalar&, const std::vector<Index>&)>& f);

/// Map of levels induced by a map of leaves (same stacks in both engines).
class InducedMap {
public:
    /// leaf_map(id) is the image of leaf id of src as a vector of dst leaf ids.
    InducedMap(EnginePtr src, EnginePtr dst, std::function<SparseVec(Index)> leaf_map);
    const SparseVec& operator()(const Stack& s, Index id);

private:
    EnginePtr src_, dst_;
    std::function<SparseVec(Index)> leaf_map_;
    std::map<std::vector<std::string>, std::vector<std::unique_ptr<SparseVec>>> memo_;
};

std::vector<std::string> stack_keys(const Stack& s);

/// The free algebra together with the engine computing it.
struct FreeAlgebra {
    Algebra algebra;
    EnginePtr engine;
    Layer layer;
};
FreeAlgebra free_algebra_with_engine(const OperadPtr& O, const ChainComplex& V, int degree_cap);
/// The algebra map free(V) -> A extending the chain map g: V -> A.
ChainMap extend_from_generators(const FreeAlgebra& F, const Algebra& A, const ChainMap& g);

}  // namespace opcalc
