#include "carpetlab/rational.hpp"

#include <cctype>
#include <cmath>

#include "carpetlab/errors.hpp"

namespace carpetlab {

namespace {

bool is_integer_literal(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

Rational::Rational(long num, long den) {
  if (den == 0) throw PreconditionError("zero denominator");
  value_ = mpq_class(num, den);
  value_.canonicalize();
}

Rational::Rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw PreconditionError("zero denominator");
  value_ = mpq_class(num, den);
  value_.canonicalize();
}

Rational::Rational(const mpq_class& value) : value_(value) { value_.canonicalize(); }

Rational Rational::parse(std::string_view text) {
  std::string_view num = text;
  std::string_view den = "1";
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    num = text.substr(0, slash);
    den = text.substr(slash + 1);
  }
  if (!is_integer_literal(num) || !is_integer_literal(den)) {
    throw ParseError("malformed rational \"" + std::string(text) + "\"");
  }
  BigInt n(std::string(num[0] == '+' ? num.substr(1) : num));
  BigInt d(std::string(den[0] == '+' ? den.substr(1) : den));
  if (d == 0) throw ParseError("zero denominator in rational \"" + std::string(text) + "\"");
  return Rational(n, d);
}

Rational Rational::from_double(double x) { return Rational(mpq_class(x)); }

std::string Rational::to_string() const {
  if (value_.get_den() == 1) return value_.get_num().get_str();
  return value_.get_num().get_str() + "/" + value_.get_den().get_str();
}

Rational Rational::pow(unsigned long e) const {
  return Rational(big_pow(value_.get_num(), e), big_pow(value_.get_den(), e));
}

Rational& Rational::operator+=(const Rational& o) {
  value_ += o.value_;
  return *this;
}
Rational& Rational::operator-=(const Rational& o) {
  value_ -= o.value_;
  return *this;
}
Rational& Rational::operator*=(const Rational& o) {
  value_ *= o.value_;
  return *this;
}
Rational& Rational::operator/=(const Rational& o) {
  if (o.sign() == 0) throw PreconditionError("division by zero");
  value_ /= o.value_;
  return *this;
}

BigInt big_pow(const BigInt& base, unsigned long e) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

}  // namespace carpetlab

namespace carpetlab {

namespace {

double log_big(const BigInt& v) {
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

}  // namespace

double log_of(const Rational& x) {
  if (x.sign() <= 0) throw PreconditionError("log of non-positive rational");
  return log_big(x.numerator()) - log_big(x.denominator());
}

}  // namespace carpetlab
