#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace opcalc {

/// Exact rational number. Numerator and denominator live inline while they
/// fit in 64 bits; anything larger is promoted to a shared GMP rational.
/// Residues mod p are stored as small integers in [0, p).
class Scalar {
public:
    Scalar() = default;
    Scalar(std::int64_t v) : num_(v) {}  // NOLINT(implicit)

    static Scalar fraction(std::int64_t num, std::int64_t den);
    static Scalar from_mpq(const mpq_class& q);

    bool is_zero() const { return !big_ && num_ == 0; }
    bool is_one() const { return !big_ && num_ == 1 && den_ == 1; }
    bool is_small() const { return !big_; }
    bool is_integer() const;
    std::int64_t small_num() const { return num_; }
    std::int64_t small_den() const { return den_; }

    mpq_class to_mpq() const;
    /// "n" for integers, "n/d" otherwise.
    std::string str() const;

    friend bool operator==(const Scalar& a, const Scalar& b);
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    // Arithmetic over Q.
    friend Scalar operator+(const Scalar& a, const Scalar& b);
    friend Scalar operator-(const Scalar& a, const Scalar& b);
    friend Scalar operator*(const Scalar& a, const Scalar& b);
    friend Scalar operator/(const Scalar& a, const Scalar& b);
    Scalar operator-() const;

private:
    static Scalar normalize(const mpq_class& q);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    std::shared_ptr<const mpq_class> big_;
};

/// Coefficient field: the rationals or a prime field F_p.
class Field {
public:
    Field() = default;
    static Field rationals() { return Field(); }
    static Field prime(std::uint32_t p);
    /// Parses "Q" or "Fp:<p>".
    static Field parse(const std::string& text);

    bool is_rational() const { return p_ == 0; }
    std::uint32_t characteristic() const { return p_; }
    std::string name() const;

    Scalar from_int(std::int64_t v) const;
    /// Image of a rational number in this field; throws if the
    /// denominator vanishes mod p.
    Scalar reduce(const Scalar& q) const;
    Scalar parse_scalar(const std::string& text) const;

    Scalar add(const Scalar& a, const Scalar& b) const;
    Scalar sub(const Scalar& a, const Scalar& b) const;
    Scalar mul(const Scalar& a, const Scalar& b) const;
    Scalar div(const Scalar& a, const Scalar& b) const;
    Scalar neg(const Scalar& a) const;
    Scalar inv(const Scalar& a) const;
    /// (-1)^k
    Scalar sign(long k) const { return from_int((k & 1) ? -1 : 1); }

    friend bool operator==(const Field& a, const Field& b) { return a.p_ == b.p_; }
    friend bool operator!=(const Field& a, const Field& b) { return a.p_ != b.p_; }

private:
    explicit Field(std::uint32_t p) : p_(p) {}
    std::uint32_t p_ = 0;
};

class FieldMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_same_field(const Field& a, const Field& b, const char* where) {
    if (a != b)
        throw FieldMismatch(std::string(where) + ": field mismatch (" + a.name() + " vs " + b.name() + ")");
}

}  // namespace opcalc
