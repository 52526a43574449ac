#include "carpetlab/catalog.hpp"

namespace carpetlab::catalog {

namespace {

std::vector<Rational> spread(std::size_t count, const Rational& width) {
  std::vector<Rational> out;
  if (count == 1) return {Rational(0)};
  Rational step = (Rational(1) - width) / Rational(static_cast<long>(count - 1));
  for (std::size_t i = 0; i < count; ++i) out.push_back(step * Rational(static_cast<long>(i)));
  return out;
}

}  // namespace

UniformFibreCarpet uniform_grid(const Rational& a, const Rational& b, std::size_t m, std::size_t n) {
  UniformFibreCarpet c;
  c.a = a;
  c.b = b;
  c.m = m;
  c.n = n;
  c.row_offsets = spread(m, b);
  c.cell_offsets.assign(m, spread(n, a));
  return c;
}

BaranskiCarpet cantor_product(const Rational& ax, const Rational& by) {
  BaranskiCarpet c;
  c.col_widths = {ax, Rational(1) - ax - ax, ax};
  c.row_heights = {by, Rational(1) - by - by, by};
  c.digits = {{0, 0}, {0, 2}, {2, 0}, {2, 2}};
  return c;
}

BaranskiCarpet bedford_mcmullen(std::size_t n, std::size_t m,
                                const std::vector<std::pair<std::size_t, std::size_t>>& digits) {
  BaranskiCarpet c;
  c.col_widths.assign(n, Rational(1, static_cast<long>(n)));
  c.row_heights.assign(m, Rational(1, static_cast<long>(m)));
  for (auto [i, j] : digits) c.digits.push_back({i - 1, j - 1});
  return canonical(std::move(c));
}

UniformFibreCarpet staggered_2x2(const Rational& a, const Rational& b) {
  UniformFibreCarpet c = uniform_grid(a, b, 2, 2);
  // second row: cells at 2a and 1-3a
  c.cell_offsets[1] = {a * Rational(2), Rational(1) - a * Rational(3)};
  return c;
}

}  // namespace carpetlab::catalog
