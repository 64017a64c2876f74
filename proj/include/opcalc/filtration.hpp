#pragma once

#include <string>
#include <utility>
#include <vector>

#include "opcalc/bar.hpp"

namespace opcalc {

/// 1 <= i < m <= ∞.
struct FiltrationIndex {
    int i = 1;
    ExtNat m = ExtNat::inf();

    FiltrationIndex(int i_, ExtNat m_);
    std::string str() const;
};

/// O restricted to arities i <= k < m, as a bimodule over O.
Bimodule filtration_module(const OperadPtr& O, const FiltrationIndex& idx);

/// I^i_m = B(O_i^m, O, I).
struct FiltrationPiece {
    FiltrationIndex index;
    Bimodule module;
    BarComplex complex;
};
FiltrationPiece filtration_piece(const BarContextPtr& ctx, const FiltrationIndex& idx);
/// Structure map I^i_m -> I^j_n for j <= i, n <= m.
ChainMap structure_map(const FiltrationPiece& from, const FiltrationPiece& to);

/// P_n = B(M^{<=n}, O, I).
struct GoodwillieStage {
    int n = 1;
    Bimodule module;
    BarComplex complex;
};
GoodwillieStage goodwillie_stage(const BarContextPtr& ctx, const Bimodule& M, int n);
/// P_n -> P_m for m <= n.
ChainMap tower_map(const GoodwillieStage& from, const GoodwillieStage& to);

struct ConnectivityEntry {
    int n = 0;
    int valid_through = 0;
    std::vector<std::size_t> betti;  // Betti(I^n)(d) for d <= valid_through
    bool piece_ok = false;           // vanishing below n·c
    bool cone_ok = false;            // cone(I -> P_n) vanishing through (n+1)c - 1
};
struct ConnectivityReport {
    int c = 0;
    std::vector<ConnectivityEntry> entries;
    bool ok() const;
};
/// Requires the algebra of ctx to be concentrated in degrees >= c >= 1.
ConnectivityReport connectivity_report(const BarContextPtr& ctx, int c, int n_max);

/// Rank checks for a sequence L -i-> M -p-> N: degreewise short exactness
/// and exactness of the long exact homology sequence at every node in
/// degrees <= through. Failures are described in failures.
struct ExactnessReport {
    bool short_exact = true;
    bool long_exact = true;
    std::vector<std::string> failures;
};
ExactnessReport check_fiber_sequence(const ChainMap& i, const ChainMap& p, int through);

/// (ij, min(ij + (n - j), mj)).
std::pair<int, ExtNat> pairing_index(int i, ExtNat m, int j, ExtNat n);
/// Least s <= s_max of a summand (r; s_1..s_r) with r >= i and all s_k >= j
/// that is killed in O_i^m ∘ O_j^n (r >= m or some s_k >= n); ∞ if none.
ExtNat pairing_index_oracle(int i, ExtNat m, int j, ExtNat n, int s_max);

/// J^j_n as an algebra (bar total with the shuffle action).
struct FilteredAlgebra {
    BarContextPtr ctx;
    FiltrationIndex index;
    Bimodule module;
    BarComplex bar;
    Algebra algebra;
};
FilteredAlgebra filtered_algebra(const Algebra& J, const FiltrationIndex& idx, BarOptions opt);

/// bar(O_i^m, O, J^j_n) -> J^{ij}_N through the bisimplicial model, the
/// associativity iso and μ: O_i^m ∘ O_j^n -> O_{ij}^N.
struct PairingMap {
    ChainMap map;
    BarComplex source;
    BarComplex target;
    FiltrationIndex index;
};
PairingMap pairing_map(const FilteredAlgebra& inner, const FiltrationIndex& outer);

/// I^n -> (J^d)^n -> J^{dn} for an algebra map f: I -> J^d given on
/// underlying complexes; n = 1 returns f.
ChainMap power_map(const Algebra& I, const FilteredAlgebra& Jd, const ChainMap& f, int n);

/// I(0) -> I(1) -> ... -> I(s) with TQ(f(k)) null; each homotopy is a
/// nullhomotopy of the induced map TQ(I(k-1)) -> TQ(I(k)).
struct AQFactorization {
    std::vector<Algebra> algebras;
    std::vector<ChainMap> maps;
    std::vector<ChainHomotopy> tq_null;
    BarOptions options;
};
/// Finds the nullhomotopies; throws std::invalid_argument when some TQ(f(k))
/// is not null.
AQFactorization aq_factorization(std::vector<Algebra> algebras, std::vector<ChainMap> maps, BarOptions opt);

struct AQLiftReport {
    int s = 0;
    int c = 0;
    int valid_through = 0;
    bool nullhomotopies_verified = false;
    bool triangle_verified = false;
    bool target_connected = false;  // H_d(J^{2^s}) = 0 for d < 2^s c
    bool vanishing = false;         // H_d(f) = 0 for d < 2^s c
    std::vector<std::size_t> ranks;  // rank H_d(f), d <= valid_through
};
/// Lift of f' : I^1_∞ -> J^1_∞ through J^{2^s}_∞ -> J^1_∞, with the chain
/// homotopy incl∘lift ≃ f'. Supports s <= 1.
struct AQLift {
    BarComplex domain;      // I^1_∞
    BarComplex target;      // J^{2^s}_∞
    BarComplex base;        // J^1_∞
    ChainMap lift;          // domain -> target
    ChainMap f_bar;         // domain -> base
    ChainHomotopy triangle;  // f = inclusion∘lift, g = f_bar
    AQLiftReport report;
};
AQLift aq_lift(const AQFactorization& fact);

}  // namespace opcalc
