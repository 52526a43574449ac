#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "carpetlab/rational.hpp"

namespace carpetlab {

struct Cell {
  Rational a;  // width
  Rational c;  // offset
};

struct Row {
  Rational b;  // height
  Rational d;  // offset
  std::vector<Cell> cells;
};

struct GLCarpet {
  std::vector<Row> rows;
  std::size_t map_count() const;
};

// Digit (i,j): column i, row j. Zero-based in memory, one-based in files.
struct Digit {
  std::size_t col = 0;
  std::size_t row = 0;
  friend auto operator<=>(const Digit&, const Digit&) = default;
};

struct BaranskiCarpet {
  std::vector<Rational> col_widths;   // a_i
  std::vector<Rational> row_heights;  // b_j
  std::vector<Digit> digits;
};

struct UniformFibreCarpet {
  Rational a;
  Rational b;
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<Rational> row_offsets;
  std::vector<std::vector<Rational>> cell_offsets;
};

using Carpet = std::variant<GLCarpet, BaranskiCarpet, UniformFibreCarpet>;

// (x,y) -> (x_scale*x + x_offset, y_scale*y + y_offset)
struct AffineMap {
  Rational x_scale, x_offset, y_scale, y_offset;

  // this ∘ inner
  AffineMap compose(const AffineMap& inner) const;
  static AffineMap identity();
  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const;
  std::string summary() const;
};

ValidationReport validate_gl(const GLCarpet& carpet);
ValidationReport validate_baranski(const BaranskiCarpet& carpet);
ValidationReport validate_uniform(const UniformFibreCarpet& carpet);
ValidationReport validate(const Carpet& carpet);

// Throws PreconditionError when the carpet is invalid. Map order: GL row-major
// (row, cell); Barański in digit order.
std::vector<AffineMap> as_maps(const GLCarpet& carpet);
std::vector<AffineMap> as_maps(const BaranskiCarpet& carpet);
std::vector<AffineMap> as_maps(const UniformFibreCarpet& carpet);
std::vector<AffineMap> as_maps(const Carpet& carpet);

GLCarpet to_gl(const UniformFibreCarpet& carpet);
// Barański digits become GL cells when every kept digit has a_i < b_j.
std::optional<GLCarpet> to_gl(const BaranskiCarpet& carpet);
// Groups maps into rows by their y-part. Fails if the result is not a GL carpet.
std::optional<GLCarpet> gl_from_maps(const std::vector<AffineMap>& maps);

GLCarpet canonical(GLCarpet carpet);
BaranskiCarpet canonical(BaranskiCarpet carpet);
UniformFibreCarpet canonical(UniformFibreCarpet carpet);
Carpet canonical(Carpet carpet);

bool operator==(const GLCarpet& x, const GLCarpet& y);
bool operator==(const BaranskiCarpet& x, const BaranskiCarpet& y);
bool operator==(const UniformFibreCarpet& x, const UniformFibreCarpet& y);

// Open images of the unit square are disjoint (exact).
bool interiors_disjoint(const AffineMap& f, const AffineMap& g);

const char* type_name(const Carpet& carpet);

}  // namespace carpetlab
