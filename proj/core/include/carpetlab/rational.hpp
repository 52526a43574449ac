#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace carpetlab {

using BigInt = mpz_class;

// Exact rational in lowest terms with positive denominator.
class Rational {
 public:
  Rational() = default;
  Rational(long value) : value_(value) {}  // NOLINT: integers convert implicitly
  Rational(long num, long den);
  Rational(const BigInt& num, const BigInt& den);
  explicit Rational(const mpq_class& value);

  static Rational parse(std::string_view text);
  // Exact value of a binary double.
  static Rational from_double(double x);

  BigInt numerator() const { return value_.get_num(); }
  BigInt denominator() const { return value_.get_den(); }
  const mpq_class& raw() const { return value_; }

  double to_double() const { return value_.get_d(); }
  std::string to_string() const;
  int sign() const { return sgn(value_); }

  Rational pow(unsigned long e) const;

  Rational operator-() const { return Rational(mpq_class(-value_)); }
  Rational& operator+=(const Rational& o);
  Rational& operator-=(const Rational& o);
  Rational& operator*=(const Rational& o);
  Rational& operator/=(const Rational& o);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.value_, b.value_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpq_class value_;
};

BigInt big_pow(const BigInt& base, unsigned long e);

}  // namespace carpetlab

namespace carpetlab {

// Natural log of a positive rational, accurate for arbitrarily large parts.
double log_of(const Rational& x);

}  // namespace carpetlab
