#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "carpetlab/carpet.hpp"

namespace carpetlab {

struct Word {
  std::vector<std::uint32_t> symbols;
  std::size_t size() const { return symbols.size(); }
  friend auto operator<=>(const Word&, const Word&) = default;
};

// For plain cylinders `word` indexes the carpet's maps and `x_word` is empty.
// For approximate squares Q(σ,ξ,σ′), `word` is σ and `x_word` is σ′.
struct CylinderRect {
  Word word;
  Word x_word;
  Rational x0, width, y0, height;
};

struct ScalePair {
  int k = 0;
  int ell = 0;
  Rational Z;
};

// Floating copy of a rectangle for counting.
struct Box {
  double x0, w, y0, h;
};

ScalePair ell_of_k(const Rational& a, const Rational& b, int k);

struct CylinderFamily {
  std::vector<CylinderRect> rects;
  ScalePair scales;
  Word xi;
};

// Q_k(ξ) with |ξ| = ℓ(k); with extended=true, Q̃_k(ξ′) with |ξ′| = ℓ(k)+1.
CylinderFamily approx_square_family(const UniformFibreCarpet& carpet, int k, const Word& xi,
                                    bool extended = false);

CylinderRect cylinder(const std::vector<AffineMap>& maps, const Word& word);

// Words extended until max(width, height) <= delta, starting from the root.
// Throws BudgetExceeded when more than `budget` rectangles would be produced.
std::vector<CylinderRect> cylinder_cover(const std::vector<AffineMap>& maps, const Rational& delta,
                                         std::size_t budget = 50'000'000);
std::vector<Box> cover_boxes(const std::vector<AffineMap>& maps, const Rational& delta,
                             std::size_t budget = 50'000'000);

Box to_box(const CylinderRect& r);

// All words of the given length over an alphabet of size `base`, lexicographic.
std::vector<Word> all_words(std::size_t base, std::size_t length);

}  // namespace carpetlab
