#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace opcalc::detail {

inline std::uint64_t factorial(int n) {
    std::uint64_t f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline std::uint64_t perm_key(const std::vector<int>& p) {
    std::uint64_t k = 0;
    for (int v : p) k = k * 16 + static_cast<std::uint64_t>(v);
    return k;
}

// Permutation of {0..n-1} with the given lexicographic rank.
inline std::vector<int> unrank_perm(int n, std::uint64_t rank) {
    std::vector<int> pool(n), out;
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = n; k >= 1; --k) {
        std::uint64_t f = factorial(k - 1);
        std::size_t q = static_cast<std::size_t>(rank / f);
        rank %= f;
        out.push_back(pool[q]);
        pool.erase(pool.begin() + static_cast<long>(q));
    }
    return out;
}

inline std::uint64_t rank_perm(const std::vector<int>& p) {
    std::uint64_t r = 0;
    int n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i) {
        int smaller = 0;
        for (int j = i + 1; j < n; ++j) smaller += p[j] < p[i];
        r += smaller * factorial(n - 1 - i);
    }
    return r;
}

// Adjacent transpositions (as positions) that exchange a block of length a
// at offset off with the following block of length b.
inline std::vector<int> block_swaps(int off, int a, int b) {
    std::vector<int> word(a, 1);
    word.resize(a + b, 0);
    std::vector<int> out;
    for (int pass = 0; pass < a + b; ++pass)
        for (int t = 0; t + 1 < a + b; ++t)
            if (word[t] > word[t + 1]) {
                std::swap(word[t], word[t + 1]);
                out.push_back(off + t);
            }
    return out;
}

}  // namespace opcalc::detail
