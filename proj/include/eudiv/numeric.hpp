#pragma once

#include <gmpxx.h>

#include <compare>
#include <ostream>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eudiv {

using Natural = mpz_class;
using Integer = mpz_class;
using Rational = mpq_class;

/// Exact rationals serialize as "num/den", always with an explicit denominator.
inline std::string to_fraction(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline Rational parse_fraction(const std::string& text) {
  Rational q;
  if (q.set_str(text, 10) != 0) throw std::invalid_argument("not a rational: " + text);
  if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + text);
  q.canonicalize();
  return q;
}

inline Natural parse_natural(const std::string& text) {
  Natural n;
  if (text.empty() || text[0] == '-' || n.set_str(text, 10) != 0)
    throw std::invalid_argument("not a natural number: " + text);
  return n;
}

inline Natural pow2(std::uint64_t e) {
  Natural r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
  return r;
}

/// 2^-e as an exact rational.
inline Rational inverse_pow2(std::uint64_t e) {
  Rational q(Natural(1), pow2(e));
  return q;
}

inline Natural ceil(const Rational& q) {
  Natural r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

inline bool fits_u64(const Natural& n) {
  return n >= 0 && mpz_sizeinbase(n.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t to_u64(const Natural& n) {
  if (!fits_u64(n)) throw std::overflow_error("value does not fit in 64 bits");
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, n.get_mpz_t());
  return out;
}

inline Natural from_u64(std::uint64_t v) {
  Natural n;
  mpz_import(n.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
  return n;
}

// Rationals extended with -inf and +inf, as needed for U_L/U_U.
class ExtRational {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  ExtRational() = default;
  ExtRational(Rational v) : value_(std::move(v)) { value_.canonicalize(); }  // NOLINT(google-explicit-constructor)
  ExtRational(long v) : value_(v) {}                 // NOLINT(google-explicit-constructor)

  static ExtRational neg_inf() { return ExtRational(Kind::NegInf); }
  static ExtRational pos_inf() { return ExtRational(Kind::PosInf); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }

  const Rational& value() const {
    if (!is_finite()) throw std::domain_error("infinite value has no rational representation");
    return value_;
  }

  ExtRational operator-() const {
    switch (kind_) {
      case Kind::NegInf: return pos_inf();
      case Kind::PosInf: return neg_inf();
      default: return ExtRational(Rational(-value_));
    }
  }

  friend ExtRational operator+(const ExtRational& a, const ExtRational& b) {
    if (a.is_finite() && b.is_finite()) return ExtRational(Rational(a.value_ + b.value_));
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
      throw std::domain_error("+inf + -inf is undefined");
    return a.is_finite() ? b : a;
  }

  friend ExtRational operator-(const ExtRational& a, const ExtRational& b) { return a + (-b); }

  /// Multiplication by a nonnegative rational; 0 * inf = 0 (measure convention).
  ExtRational scaled(const Rational& factor) const {
    if (factor < 0) throw std::domain_error("scale factor must be nonnegative");
    if (factor == 0) return ExtRational(0L);
    if (!is_finite()) return *this;
    return ExtRational(Rational(value_ * factor));
  }

  friend bool operator==(const ExtRational& a, const ExtRational& b) {
    if (a.kind_ != b.kind_) return false;
    return !a.is_finite() || a.value_ == b.value_;
  }

  friend std::strong_ordering operator<=>(const ExtRational& a, const ExtRational& b) {
    auto rank = [](Kind k) { return k == Kind::NegInf ? 0 : k == Kind::Finite ? 1 : 2; };
    if (a.kind_ != b.kind_) return rank(a.kind_) <=> rank(b.kind_);
    if (!a.is_finite()) return std::strong_ordering::equal;
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less
                 : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& out, const ExtRational& x) { return out << x.str(); }

  std::string str() const {
    switch (kind_) {
      case Kind::NegInf: return "-inf";
      case Kind::PosInf: return "+inf";
      default: return to_fraction(value_);
    }
  }

 private:
  explicit ExtRational(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Finite;
  Rational value_;
};

inline const ExtRational& min(const ExtRational& a, const ExtRational& b) { return b < a ? b : a; }
inline const ExtRational& max(const ExtRational& a, const ExtRational& b) { return a < b ? b : a; }

}  // namespace eudiv
