#include "opcalc/field.hpp"

#include <numeric>
#include <tuple>
#include <utility>

namespace opcalc {

namespace {

using i128 = __int128;

bool fits(i128 v) {
    return v >= static_cast<i128>(INT64_MIN) + 1 && v <= static_cast<i128>(INT64_MAX);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

mpq_class mpq_from_i64(std::int64_t n, std::int64_t d) {
    mpz_class zn, zd;
    mpz_set_si(zn.get_mpz_t(), n);
    mpz_set_si(zd.get_mpz_t(), d);
    mpq_class q(zn, zd);
    q.canonicalize();
    return q;
}

bool is_prime(std::uint32_t p) {
    if (p < 2) return false;
    for (std::uint64_t d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

std::int64_t mod_inverse(std::int64_t a, std::int64_t p) {
    std::int64_t t = 0, nt = 1, r = p, nr = a;
    while (nr != 0) {
        std::int64_t q = r / nr;
        std::tie(t, nt) = std::make_pair(nt, t - q * nt);
        std::tie(r, nr) = std::make_pair(nr, r - q * nr);
    }
    if (t < 0) t += p;
    return t;
}

}  // namespace

Scalar Scalar::fraction(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("Scalar: zero denominator");
    i128 n = num, d = den;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    if (fits(n) && fits(d)) {
        Scalar s;
        s.num_ = static_cast<std::int64_t>(n);
        s.den_ = static_cast<std::int64_t>(d);
        return s;
    }
    return normalize(mpq_from_i64(num, den));
}

Scalar Scalar::from_mpq(const mpq_class& q) {
    mpq_class c = q;
    c.canonicalize();
    return normalize(c);
}

Scalar Scalar::normalize(const mpq_class& q) {
    const mpz_class& n = q.get_num();
    const mpz_class& d = q.get_den();
    if (mpz_fits_slong_p(n.get_mpz_t()) && mpz_fits_slong_p(d.get_mpz_t())) {
        long nn = mpz_get_si(n.get_mpz_t());
        long dd = mpz_get_si(d.get_mpz_t());
        if (nn != INT64_MIN) {
            Scalar s;
            s.num_ = nn;
            s.den_ = dd;
            return s;
        }
    }
    Scalar s;
    s.big_ = std::make_shared<const mpq_class>(q);
    return s;
}

bool Scalar::is_integer() const {
    if (big_) return big_->get_den() == 1;
    return den_ == 1;
}

mpq_class Scalar::to_mpq() const {
    if (big_) return *big_;
    return mpq_from_i64(num_, den_);
}

std::string Scalar::str() const {
    if (big_) return big_->get_str();
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

bool operator==(const Scalar& a, const Scalar& b) {
    if (!a.big_ && !b.big_) return a.num_ == b.num_ && a.den_ == b.den_;
    return a.to_mpq() == b.to_mpq();
}

Scalar operator+(const Scalar& a, const Scalar& b) {
    if (!a.big_ && !b.big_) {
        if (a.den_ == 1 && b.den_ == 1) {
            i128 s = static_cast<i128>(a.num_) + b.num_;
            if (fits(s)) return Scalar(static_cast<std::int64_t>(s));
        } else {
            i128 n = static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_;
            i128 d = static_cast<i128>(a.den_) * b.den_;
            i128 g = gcd128(n, d);
            if (g > 1) {
                n /= g;
                d /= g;
            }
            if (n == 0) return Scalar();
            if (fits(n) && fits(d)) {
                Scalar s;
                s.num_ = static_cast<std::int64_t>(n);
                s.den_ = static_cast<std::int64_t>(d);
                return s;
            }
        }
    }
    return Scalar::normalize(a.to_mpq() + b.to_mpq());
}

Scalar Scalar::operator-() const {
    if (!big_ && num_ != INT64_MIN) {
        Scalar s = *this;
        s.num_ = -num_;
        return s;
    }
    return normalize(-to_mpq());
}

Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }

Scalar operator*(const Scalar& a, const Scalar& b) {
    if (!a.big_ && !b.big_) {
        if (a.num_ == 0 || b.num_ == 0) return Scalar();
        i128 n = static_cast<i128>(a.num_) * b.num_;
        i128 d = static_cast<i128>(a.den_) * b.den_;
        if (d != 1) {
            i128 g = gcd128(n, d);
            if (g > 1) {
                n /= g;
                d /= g;
            }
        }
        if (fits(n) && fits(d)) {
            Scalar s;
            s.num_ = static_cast<std::int64_t>(n);
            s.den_ = static_cast<std::int64_t>(d);
            return s;
        }
    }
    return Scalar::normalize(a.to_mpq() * b.to_mpq());
}

Scalar operator/(const Scalar& a, const Scalar& b) {
    if (b.is_zero()) throw std::domain_error("Scalar: division by zero");
    if (!b.big_) {
        Scalar r;
        r.num_ = b.num_ < 0 ? -b.den_ : b.den_;
        r.den_ = b.num_ < 0 ? -b.num_ : b.num_;
        if (b.num_ != INT64_MIN) return a * r;
    }
    return Scalar::normalize(a.to_mpq() / b.to_mpq());
}

// ---------------------------------------------------------------------------

Field Field::prime(std::uint32_t p) {
    if (!is_prime(p)) throw std::invalid_argument("Field: " + std::to_string(p) + " is not prime");
    if (p > (1u << 31)) throw std::invalid_argument("Field: prime too large");
    return Field(p);
}

Field Field::parse(const std::string& text) {
    if (text == "Q" || text == "q") return rationals();
    if (text.rfind("Fp:", 0) == 0 || text.rfind("fp:", 0) == 0) {
        unsigned long p = std::stoul(text.substr(3));
        return prime(static_cast<std::uint32_t>(p));
    }
    throw std::invalid_argument("Field: expected Q or Fp:<p>, got '" + text + "'");
}

std::string Field::name() const { return p_ == 0 ? "Q" : "Fp:" + std::to_string(p_); }

Scalar Field::from_int(std::int64_t v) const {
    if (p_ == 0) return Scalar(v);
    std::int64_t r = v % static_cast<std::int64_t>(p_);
    if (r < 0) r += p_;
    return Scalar(r);
}

Scalar Field::reduce(const Scalar& q) const {
    if (p_ == 0) return q;
    mpq_class m = q.to_mpq();
    mpz_class n = m.get_num(), d = m.get_den();
    mpz_class pz(static_cast<unsigned long>(p_));
    mpz_class dr = d % pz;
    if (dr == 0) throw std::domain_error("Field: denominator vanishes in " + name());
    mpz_class nr = n % pz;
    if (nr < 0) nr += pz;
    std::int64_t a = nr.get_si();
    std::int64_t b = dr.get_si();
    return Scalar((a * mod_inverse(b, p_)) % p_);
}

Scalar Field::parse_scalar(const std::string& text) const {
    mpq_class q;
    if (q.set_str(text, 10) != 0) throw std::invalid_argument("bad scalar '" + text + "'");
    q.canonicalize();
    return reduce(Scalar::from_mpq(q));
}

Scalar Field::add(const Scalar& a, const Scalar& b) const {
    if (p_ == 0) return a + b;
    std::int64_t s = a.small_num() + b.small_num();
    if (s >= p_) s -= p_;
    return Scalar(s);
}

Scalar Field::sub(const Scalar& a, const Scalar& b) const {
    if (p_ == 0) return a - b;
    std::int64_t s = a.small_num() - b.small_num();
    if (s < 0) s += p_;
    return Scalar(s);
}

Scalar Field::mul(const Scalar& a, const Scalar& b) const {
    if (p_ == 0) return a * b;
    return Scalar((a.small_num() * b.small_num()) % p_);
}

Scalar Field::neg(const Scalar& a) const {
    if (p_ == 0) return -a;
    return a.small_num() == 0 ? a : Scalar(p_ - a.small_num());
}

Scalar Field::inv(const Scalar& a) const {
    if (a.is_zero()) throw std::domain_error("Field: inverse of zero");
    if (p_ == 0) return Scalar(1) / a;
    return Scalar(mod_inverse(a.small_num(), p_));
}

Scalar Field::div(const Scalar& a, const Scalar& b) const {
    if (p_ == 0) return a / b;
    return mul(a, inv(b));
}

}  // namespace opcalc
