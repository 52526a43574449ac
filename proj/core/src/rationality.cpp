#include "carpetlab/rationality.hpp"

#include <algorithm>
#include <numeric>

#include "carpetlab/errors.hpp"

namespace carpetlab {

namespace {

BigInt pollard_brent(const BigInt& n) {
  if (n % 2 == 0) return 2;
  for (unsigned long c = 1;; ++c) {
    BigInt y = 2, x, g = 1, q = 1, ys;
    unsigned long r = 1;
    const unsigned long m = 128;
    auto f = [&](const BigInt& v) { return BigInt((v * v + c) % n); };
    do {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = f(y);
      unsigned long k = 0;
      while (k < r && g == 1) {
        ys = y;
        for (unsigned long i = 0; i < std::min(m, r - k); ++i) {
          y = f(y);
          BigInt d = abs(x - y);
          q = (q * d) % n;
        }
        g = gcd(q, n);
        k += m;
      }
      r *= 2;
    } while (g == 1);
    if (g == n) {
      do {
        ys = f(ys);
        g = gcd(BigInt(abs(x - ys)), n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

bool is_prime(const BigInt& n) { return mpz_probab_prime_p(n.get_mpz_t(), 40) > 0; }

void split(const BigInt& n, std::map<BigInt, std::int64_t>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    ++out[n];
    return;
  }
  BigInt d = pollard_brent(n);
  split(d, out);
  split(BigInt(n / d), out);
}

std::pair<std::int64_t, std::int64_t> reduced(std::int64_t p, std::int64_t q) {
  if (q < 0) {
    p = -p;
    q = -q;
  }
  std::int64_t g = std::gcd(p, q);
  if (g == 0) g = 1;
  return {p / g, q / g};
}

ExponentVector ev_of(const Rational& r) { return ExponentVector::of(r); }

bool irrational_pair(const ExponentVector& x, const ExponentVector& y) {
  return !parallel_ratio(x, y).has_value();
}

bool irrational_ratio(const Rational& x, const Rational& y) { return !log_ratio_rational(x, y); }

// log x / log y as an exact rational, given that it is rational.
Rational ratio_value(const Rational& x, const Rational& y) {
  auto pq = log_ratio_rational(x, y);
  return Rational(pq->first, pq->second);
}

}  // namespace

std::map<BigInt, std::int64_t> factorize(BigInt n) {
  if (n <= 0) throw PreconditionError("factorize: non-positive input");
  std::map<BigInt, std::int64_t> out;
  for (unsigned long p = 2; p < 10000 && BigInt(p) * p <= n; p += (p == 2 ? 1 : 2)) {
    while (n % p == 0) {
      ++out[BigInt(p)];
      n /= p;
    }
  }
  if (n > 1) split(n, out);
  return out;
}

ExponentVector ExponentVector::of(const BigInt& x) {
  ExponentVector ev;
  ev.exps_ = factorize(x);
  return ev;
}

ExponentVector ExponentVector::of(const Rational& x) {
  if (x.sign() <= 0) throw PreconditionError("exponent vector of non-positive rational");
  ExponentVector ev = of(x.numerator());
  for (const auto& [p, e] : factorize(x.denominator())) {
    ev.exps_[p] -= e;
    if (ev.exps_[p] == 0) ev.exps_.erase(p);
  }
  return ev;
}

Rational ExponentVector::value() const {
  BigInt num = 1, den = 1;
  for (const auto& [p, e] : exps_) {
    if (e > 0) num *= big_pow(p, static_cast<unsigned long>(e));
    else den *= big_pow(p, static_cast<unsigned long>(-e));
  }
  return Rational(num, den);
}

ExponentVector& ExponentVector::operator+=(const ExponentVector& o) {
  for (const auto& [p, e] : o.exps_) {
    auto& slot = exps_[p];
    slot += e;
    if (slot == 0) exps_.erase(p);
  }
  return *this;
}

ExponentVector ExponentVector::scaled(std::int64_t c) const {
  ExponentVector out;
  if (c == 0) return out;
  for (const auto& [p, e] : exps_) out.exps_[p] = e * c;
  return out;
}

std::optional<std::pair<std::int64_t, std::int64_t>> parallel_ratio(const ExponentVector& x,
                                                                     const ExponentVector& y) {
  if (y.is_zero()) return std::nullopt;
  // q·x = p·y: read p/q off the first prime of y.
  const auto& [p0, y0] = *y.exponents().begin();
  auto it = x.exponents().find(p0);
  std::int64_t x0 = it == x.exponents().end() ? 0 : it->second;
  auto [p, q] = reduced(x0, y0);
  for (const auto& [prime, ye] : y.exponents()) {
    auto xi = x.exponents().find(prime);
    std::int64_t xe = xi == x.exponents().end() ? 0 : xi->second;
    if (q * xe != p * ye) return std::nullopt;
  }
  for (const auto& [prime, xe] : x.exponents()) {
    if (!y.exponents().count(prime)) return std::nullopt;
  }
  return std::make_pair(p, q);
}

std::optional<std::pair<std::int64_t, std::int64_t>> log_ratio_rational(const Rational& x,
                                                                        const Rational& y) {
  if (!(x.sign() > 0 && x < Rational(1)) || !(y.sign() > 0 && y < Rational(1))) {
    throw PreconditionError("log_ratio_rational: arguments must lie in (0,1)");
  }
  return parallel_ratio(ExponentVector::of(x), ExponentVector::of(y));
}

const char* verdict_name(TypeVerdict v) {
  switch (v) {
    case TypeVerdict::IrrationalType1: return "IrrationalType1";
    case TypeVerdict::IrrationalType2: return "IrrationalType2";
    default: return "Rational";
  }
}

TypeClassification classify_gl_type(const GLCarpet& carpet) {
  TypeClassification out;
  const auto& rows = carpet.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].cells.size(); ++j) {
      if (irrational_ratio(rows[i].cells[j].a, rows[i].b)) {
        out.verdict = TypeVerdict::IrrationalType1;
        out.irrational_pair = {i, j};
        return out;
      }
    }
  }
  std::optional<std::pair<std::size_t, std::size_t>> first;
  std::optional<Rational> first_ratio;
  for (std::size_t i = 0; i < rows.size() && !out.distinct_ratio_pairs; ++i) {
    for (std::size_t j = 0; j < rows[i].cells.size(); ++j) {
      Rational r = ratio_value(rows[i].cells[j].a, rows[i].b);
      if (!first) {
        first = {i, j};
        first_ratio = r;
      } else if (r != *first_ratio) {
        out.distinct_ratio_pairs = {{*first, {i, j}}};
        break;
      }
    }
  }
  if (!out.distinct_ratio_pairs) return out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].cells.size(); ++j) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (irrational_ratio(rows[i].cells[j].a, rows[k].b)) {
          out.verdict = TypeVerdict::IrrationalType2;
          out.irrational_pair = {i, j};
          out.other_row = k;
          return out;
        }
      }
    }
  }
  out.distinct_ratio_pairs.reset();
  return out;
}

TypeClassification classify_baranski_type(const BaranskiCarpet& carpet) {
  TypeClassification out;
  const auto& a = carpet.col_widths;
  const auto& b = carpet.row_heights;
  for (const Digit& d : carpet.digits) {
    if (irrational_ratio(a[d.col], b[d.row])) {
      out.verdict = TypeVerdict::IrrationalType1;
      out.irrational_pair = {d.col, d.row};
      return out;
    }
  }
  for (std::size_t x = 0; x < carpet.digits.size() && !out.distinct_ratio_pairs; ++x) {
    for (std::size_t y = x + 1; y < carpet.digits.size(); ++y) {
      const Digit& d = carpet.digits[x];
      const Digit& e = carpet.digits[y];
      if (ratio_value(a[d.col], b[d.row]) != ratio_value(a[e.col], b[e.row])) {
        out.distinct_ratio_pairs = {{{d.col, d.row}, {e.col, e.row}}};
        break;
      }
    }
  }
  if (!out.distinct_ratio_pairs) return out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      Digit g{i, j};
      if (std::find(carpet.digits.begin(), carpet.digits.end(), g) != carpet.digits.end()) continue;
      if (irrational_ratio(a[i], b[j])) {
        out.verdict = TypeVerdict::IrrationalType2;
        out.irrational_pair = {i, j};
        return out;
      }
    }
  }
  out.distinct_ratio_pairs.reset();
  return out;
}

TypeClassification classify(const Carpet& carpet) {
  if (const auto* gl = std::get_if<GLCarpet>(&carpet)) return classify_gl_type(*gl);
  if (const auto* bk = std::get_if<BaranskiCarpet>(&carpet)) return classify_baranski_type(*bk);
  return classify_gl_type(to_gl(std::get<UniformFibreCarpet>(carpet)));
}

bool verify_classification(const TypeClassification& c, const GLCarpet& carpet) {
  const auto& rows = carpet.rows;
  auto cell_ok = [&](std::pair<std::size_t, std::size_t> ij) {
    return ij.first < rows.size() && ij.second < rows[ij.first].cells.size();
  };
  switch (c.verdict) {
    case TypeVerdict::IrrationalType1: {
      if (!c.irrational_pair || !cell_ok(*c.irrational_pair)) return false;
      auto [i, j] = *c.irrational_pair;
      return irrational_ratio(rows[i].cells[j].a, rows[i].b);
    }
    case TypeVerdict::IrrationalType2: {
      if (!c.irrational_pair || !c.other_row || !c.distinct_ratio_pairs) return false;
      auto [i, j] = *c.irrational_pair;
      auto [u, v] = *c.distinct_ratio_pairs;
      if (!cell_ok({i, j}) || *c.other_row >= rows.size() || !cell_ok(u) || !cell_ok(v)) return false;
      if (!irrational_ratio(rows[i].cells[j].a, rows[*c.other_row].b)) return false;
      const Rational& au = rows[u.first].cells[u.second].a;
      const Rational& av = rows[v.first].cells[v.second].a;
      if (irrational_ratio(au, rows[u.first].b) || irrational_ratio(av, rows[v.first].b)) return false;
      return ratio_value(au, rows[u.first].b) != ratio_value(av, rows[v.first].b);
    }
    default:
      return classify_gl_type(carpet).verdict == TypeVerdict::Rational;
  }
}

bool verify_classification(const TypeClassification& c, const BaranskiCarpet& carpet) {
  const auto& a = carpet.col_widths;
  const auto& b = carpet.row_heights;
  auto in_d = [&](std::pair<std::size_t, std::size_t> ij) {
    return std::find(carpet.digits.begin(), carpet.digits.end(), Digit{ij.first, ij.second}) !=
           carpet.digits.end();
  };
  switch (c.verdict) {
    case TypeVerdict::IrrationalType1: {
      if (!c.irrational_pair || !in_d(*c.irrational_pair)) return false;
      auto [i, j] = *c.irrational_pair;
      return irrational_ratio(a[i], b[j]);
    }
    case TypeVerdict::IrrationalType2: {
      if (!c.irrational_pair || !c.distinct_ratio_pairs) return false;
      auto [i, j] = *c.irrational_pair;
      if (i >= a.size() || j >= b.size() || in_d({i, j})) return false;
      if (!irrational_ratio(a[i], b[j])) return false;
      auto [u, v] = *c.distinct_ratio_pairs;
      if (!in_d(u) || !in_d(v)) return false;
      if (irrational_ratio(a[u.first], b[u.second]) || irrational_ratio(a[v.first], b[v.second])) {
        return false;
      }
      return ratio_value(a[u.first], b[u.second]) != ratio_value(a[v.first], b[v.second]);
    }
    default:
      return classify_baranski_type(carpet).verdict == TypeVerdict::Rational;
  }
}

std::pair<std::optional<std::size_t>, int> select_irrational_composition(
    const ScaleEV& base, const std::vector<AffineMap>& maps) {
  if (irrational_pair(base.a, base.b)) return {std::nullopt, 0};
  for (std::size_t idx = 0; idx < maps.size(); ++idx) {
    ExponentVector ea = ev_of(maps[idx].x_scale);
    ExponentVector eb = ev_of(maps[idx].y_scale);
    for (int e = 1; e <= 2; ++e) {
      if (irrational_pair(base.a + ea.scaled(e), base.b + eb.scaled(e))) return {idx, e};
    }
  }
  throw PreconditionError(
      "no composition with power <= 2 yields an irrational log-ratio; carpet is not of irrational type");
}

CompositionChoice select_irrational_composition(const Rational& base_a, const Rational& base_b,
                                                const std::vector<AffineMap>& maps) {
  ScaleEV base{ev_of(base_a), ev_of(base_b)};
  auto [idx, power] = select_irrational_composition(base, maps);
  CompositionChoice out{idx, power, base_a, base_b};
  if (idx) {
    out.a = base_a * maps[*idx].x_scale.pow(power);
    out.b = base_b * maps[*idx].y_scale.pow(power);
  }
  return out;
}

CompositionChoice select_irrational_composition(const Rational& base_a, const Rational& base_b,
                                                const Carpet& carpet) {
  return select_irrational_composition(base_a, base_b, as_maps(carpet));
}

}  // namespace carpetlab
