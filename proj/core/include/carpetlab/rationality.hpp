#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/rational.hpp"

namespace carpetlab {

// Prime factorization of a positive rational: prime -> signed exponent.
class ExponentVector {
 public:
  ExponentVector() = default;
  static ExponentVector of(const Rational& x);
  static ExponentVector of(const BigInt& x);

  const std::map<BigInt, std::int64_t>& exponents() const { return exps_; }
  bool is_zero() const { return exps_.empty(); }
  Rational value() const;

  ExponentVector& operator+=(const ExponentVector& o);
  ExponentVector scaled(std::int64_t c) const;
  friend ExponentVector operator+(ExponentVector x, const ExponentVector& y) { return x += y; }
  friend bool operator==(const ExponentVector&, const ExponentVector&) = default;

 private:
  std::map<BigInt, std::int64_t> exps_;
};

std::map<BigInt, std::int64_t> factorize(BigInt n);

// (p,q) in lowest terms, q > 0, with q·x = p·y; nullopt if not parallel.
std::optional<std::pair<std::int64_t, std::int64_t>> parallel_ratio(const ExponentVector& x,
                                                                     const ExponentVector& y);

// log x / log y = p/q exactly, or nullopt when irrational. Requires 0 < x,y < 1.
std::optional<std::pair<std::int64_t, std::int64_t>> log_ratio_rational(const Rational& x,
                                                                        const Rational& y);

enum class TypeVerdict { IrrationalType1, IrrationalType2, Rational };
const char* verdict_name(TypeVerdict v);

// Indices are zero-based. For GL, `cell` is (row i, cell j) and `other_row` is k.
// For Barański, a digit pair is (column i, row j).
struct TypeClassification {
  TypeVerdict verdict = TypeVerdict::Rational;
  std::optional<std::pair<std::size_t, std::size_t>> irrational_pair;
  std::optional<std::size_t> other_row;
  std::optional<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>>
      distinct_ratio_pairs;
};

TypeClassification classify_gl_type(const GLCarpet& carpet);
TypeClassification classify_baranski_type(const BaranskiCarpet& carpet);
TypeClassification classify(const Carpet& carpet);
// Re-checks the witnesses against their clause.
bool verify_classification(const TypeClassification& c, const GLCarpet& carpet);
bool verify_classification(const TypeClassification& c, const BaranskiCarpet& carpet);

struct CompositionChoice {
  std::optional<std::size_t> map_index;  // into as_maps order
  int power = 0;
  Rational a;  // base_a · a_ij^power
  Rational b;  // base_b · b_i^power
};

// Scale pair candidate as exponent vectors.
struct ScaleEV {
  ExponentVector a, b;
};

// Lowest index, lowest power first; power 0 is tried before any map.
// Throws PreconditionError when no candidate gives an irrational ratio.
CompositionChoice select_irrational_composition(const Rational& base_a, const Rational& base_b,
                                                const std::vector<AffineMap>& maps);
CompositionChoice select_irrational_composition(const Rational& base_a, const Rational& base_b,
                                                const Carpet& carpet);
// Same search on exponent vectors (for bases too large to materialize cheaply).
std::pair<std::optional<std::size_t>, int> select_irrational_composition(
    const ScaleEV& base, const std::vector<AffineMap>& maps);

}  // namespace carpetlab
