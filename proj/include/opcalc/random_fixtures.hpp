#pragma once

#include <random>

#include "opcalc/chain.hpp"

namespace opcalc {

/// Sum of lines and contractible pairs in degrees [lo, hi].
ChainComplex random_complex(const Field& F, std::mt19937_64& rng, int lo, int hi, int max_pieces = 2);
/// Contractible pairs only.
ChainComplex random_acyclic(const Field& F, std::mt19937_64& rng, int lo, int hi, int max_pieces = 2);
/// Random element of the space of chain maps S -> T.
ChainMap random_chain_map(const ChainComplex& S, const ChainComplex& T, std::mt19937_64& rng);
/// c -> (s c, ψ c) into C ⊕ W for a random unit s and chain map ψ. W is
/// acyclic when quasi_iso is set.
ChainMap random_injection(const ChainComplex& C, std::mt19937_64& rng, bool quasi_iso);

struct PushoutTrial {
    bool f1_quasi_iso = false;
    bool corner_injective = false;
    bool corner_quasi_iso = false;
};
/// pushout_corner_map of the tensor square of two random injections.
PushoutTrial pushout_corner_trial(const Field& F, std::mt19937_64& rng);

}  // namespace opcalc
