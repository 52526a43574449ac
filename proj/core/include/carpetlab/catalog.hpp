#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "carpetlab/carpet.hpp"

namespace carpetlab::catalog {

// m×n uniform-fibre carpet with rows and cells spread evenly from 0 to 1-b
// (resp. 1-a). For m=n=2 this is the corner layout.
UniformFibreCarpet uniform_grid(const Rational& a, const Rational& b, std::size_t m, std::size_t n);

// C_ax × C_by: middle-gap Cantor sets on both axes, as a Barański carpet.
BaranskiCarpet cantor_product(const Rational& ax, const Rational& by);

// Bedford-McMullen: n columns of width 1/n, m rows of height 1/m.
// Digits given one-based as (column, row).
BaranskiCarpet bedford_mcmullen(std::size_t n, std::size_t m,
                                const std::vector<std::pair<std::size_t, std::size_t>>& digits);

// 2×2 uniform carpet whose two rows use different cell offsets.
UniformFibreCarpet staggered_2x2(const Rational& a, const Rational& b);

}  // namespace carpetlab::catalog
