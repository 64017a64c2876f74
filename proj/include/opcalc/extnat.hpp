#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace opcalc {

/// Natural number or ∞, ordered above all naturals.
class ExtNat {
public:
    constexpr ExtNat() = default;
    constexpr ExtNat(std::uint64_t v) : v_(v) {}  // NOLINT(implicit)
    static constexpr ExtNat inf() {
        ExtNat e;
        e.inf_ = true;
        return e;
    }
    /// Parses a decimal natural, "inf" or "∞".
    static ExtNat parse(const std::string& s);

    constexpr bool is_inf() const { return inf_; }
    constexpr std::uint64_t value() const { return v_; }
    std::string str() const { return inf_ ? "inf" : std::to_string(v_); }
    /// Finite value, or `fallback` for ∞.
    constexpr std::uint64_t or_else(std::uint64_t fallback) const { return inf_ ? fallback : v_; }

    friend constexpr bool operator==(ExtNat a, ExtNat b) { return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_); }
    friend constexpr bool operator<(ExtNat a, ExtNat b) {
        if (a.inf_) return false;
        return b.inf_ || a.v_ < b.v_;
    }
    friend constexpr bool operator<=(ExtNat a, ExtNat b) { return a < b || a == b; }
    friend constexpr bool operator>(ExtNat a, ExtNat b) { return b < a; }
    friend constexpr bool operator>=(ExtNat a, ExtNat b) { return b <= a; }

    friend constexpr ExtNat operator+(ExtNat a, ExtNat b) {
        if (a.inf_ || b.inf_) return inf();
        return ExtNat(a.v_ + b.v_);
    }
    /// ∞·x = ∞ for every x, including 0 (indices here are always >= 1).
    friend constexpr ExtNat operator*(ExtNat a, ExtNat b) {
        if (a.inf_ || b.inf_) return inf();
        return ExtNat(a.v_ * b.v_);
    }
    /// a - k for finite k; ∞ stays ∞.
    friend constexpr ExtNat operator-(ExtNat a, std::uint64_t k) { return a.inf_ ? a : ExtNat(a.v_ - k); }
    friend constexpr ExtNat min(ExtNat a, ExtNat b) { return a < b ? a : b; }

private:
    std::uint64_t v_ = 0;
    bool inf_ = false;
};

inline ExtNat ExtNat::parse(const std::string& s) {
    if (s == "inf" || s == "∞" || s == "oo") return inf();
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("ExtNat: bad value '" + s + "'");
    return ExtNat(v);
}

}  // namespace opcalc
