#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carpetlab/carpet.hpp"

namespace carpetlab {

struct RenderOptions {
  std::optional<int> depth;      // all cylinders of this word length
  std::optional<double> delta;   // or the δ-cover
  std::optional<double> theta;   // adds the projected strip
  std::size_t budget = 1'000'000;
  double size = 512;             // pixels per unit
};

struct RenderResult {
  std::string svg;
  std::size_t rects = 0;
  std::optional<std::int64_t> cells;  // marked strip cells
  double strip_delta = 0;             // δ used for the strip
};

// Exactly one of depth / delta must be set. In depth mode the strip uses the δ-cover
// with δ = the largest side among the drawn cylinders.
RenderResult render_svg(const std::vector<AffineMap>& maps, const RenderOptions& options);
RenderResult render_svg(const Carpet& carpet, const RenderOptions& options);

}  // namespace carpetlab
