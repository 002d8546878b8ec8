#pragma once

// Exact rational arithmetic on 64-bit numerator/denominator with overflow
// checking. All quantized distances, window metrics and tower bounds in this
// project are dyadic-times-1/q rationals, so 64 bits are plenty once sums are
// gcd-reduced through 128-bit intermediates; anything larger throws instead of
// silently wrapping.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace meandim {

class arithmetic_overflow : public std::overflow_error {
 public:
  explicit arithmetic_overflow(const std::string& what)
      : std::overflow_error(what) {}
};

class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("Rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Rational r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
  }

  // 2^e for |e| <= 62.
  static Rational dyadic(int e) {
    if (e < -62 || e > 62) throw arithmetic_overflow("Rational::dyadic: exponent out of range");
    return e >= 0 ? Rational(std::int64_t(1) << e)
                  : Rational(1, std::int64_t(1) << (-e));
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }
  double to_double() const { return double(num_) / double(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                i128(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                i128(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
    return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
  }
  Rational operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_)
                     : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  using i128 = __int128;

  static std::int64_t narrow(i128 v) {
    if (v > INT64_MAX || v < INT64_MIN)
      throw arithmetic_overflow("Rational: 64-bit overflow");
    return std::int64_t(v);
  }
  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) {
      i128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational abs(const Rational& r) { return r.is_negative() ? -r : r; }
inline const Rational& min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// Closed interval [lo, hi]; used wherever a truncated series can only be
// bracketed, not evaluated.
struct RationalInterval {
  Rational lo;
  Rational hi;

  bool contains(const Rational& v) const { return lo <= v && v <= hi; }
  bool certainly_less_than(const Rational& v) const { return hi < v; }
  bool certainly_at_least(const Rational& v) const { return lo >= v; }
};

}  // namespace meandim

namespace Eigen {

template <>
struct NumTraits<meandim::Rational> : GenericNumTraits<meandim::Rational> {
  using Real = meandim::Rational;
  using NonInteger = meandim::Rational;
  using Nested = meandim::Rational;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 8,
    MulCost = 8,
  };
  static inline Real epsilon() { return meandim::Rational(0); }
  static inline Real dummy_precision() { return meandim::Rational(0); }
  static inline int digits10() { return 18; }
};

}  // namespace Eigen
