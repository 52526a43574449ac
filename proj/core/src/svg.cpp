#include "carpetlab/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "carpetlab/errors.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/symbolic.hpp"

namespace carpetlab {

namespace {

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  std::string s(buf, r.ptr);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<Box> depth_boxes(const std::vector<AffineMap>& maps, int depth, std::size_t budget) {
  if (depth < 0) throw PreconditionError("depth must be non-negative");
  double total = std::pow(static_cast<double>(maps.size()), depth);
  if (total > static_cast<double>(budget)) {
    throw BudgetExceeded("depth " + std::to_string(depth) + " needs " + num(total) + " rectangles");
  }
  std::vector<Box> out;
  for (const auto& w : all_words(maps.size(), static_cast<std::size_t>(depth))) out.push_back(to_box(cylinder(maps, w)));
  return out;
}

}  // namespace

RenderResult render_svg(const std::vector<AffineMap>& maps, const RenderOptions& options) {
  if (maps.empty()) throw PreconditionError("empty map list");
  if (options.depth.has_value() == options.delta.has_value()) {
    throw PreconditionError("exactly one of depth and delta must be given");
  }
  if (!(options.size > 0)) throw PreconditionError("size must be positive");
  RenderResult res;
  std::vector<Box> boxes = options.depth ? depth_boxes(maps, *options.depth, options.budget)
                                         : cover_boxes(maps, Rational::from_double(*options.delta), options.budget);
  res.rects = boxes.size();

  const double s = options.size, pad = 8, strip_h = 40;
  std::vector<std::int64_t> cells;
  double span = 0;
  if (options.theta) {
    double theta = *options.theta;
    if (!(theta > 0 && theta < std::acos(-1.0)) || std::abs(theta - std::acos(0.0)) < 1e-12) {
      throw PreconditionError("the strip needs θ in (0, π) away from π/2");
    }
    double delta = 0;
    if (options.delta) {
      delta = *options.delta;
    } else {
      for (const auto& b : boxes) delta = std::max({delta, b.w, b.h});
    }
    auto param = ProjectionParam::from_theta(theta, maps.front().x_scale);
    auto cover = options.delta ? boxes : cover_boxes(maps, Rational::from_double(delta), options.budget);
    cells = marked_cells(cover, param, delta, ProjectionMode::orthogonal);
    res.cells = static_cast<std::int64_t>(cells.size());
    res.strip_delta = delta;
    double c = std::cos(theta), sn = std::sin(theta);
    span = std::abs(c) + std::abs(sn);
  }

  double width = s + 2 * pad;
  double height = s + 2 * pad + (options.theta ? strip_h + pad : 0);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\" data-rects=\"" << res.rects << "\"";
  if (res.cells) os << " data-cells=\"" << *res.cells << "\" data-delta=\"" << shortest(res.strip_delta) << "\"";
  os << ">\n";
  os << "<rect x=\"" << num(pad) << "\" y=\"" << num(pad) << "\" width=\"" << num(s) << "\" height=\"" << num(s)
     << "\" fill=\"none\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
  os << "<g class=\"cylinders\" fill=\"#1f4e79\" stroke=\"none\">\n";
  for (const auto& b : boxes) {
    os << "<rect x=\"" << num(pad + b.x0 * s) << "\" y=\"" << num(pad + (1 - b.y0 - b.h) * s) << "\" width=\""
       << num(b.w * s) << "\" height=\"" << num(b.h * s) << "\"/>\n";
  }
  os << "</g>\n";
  if (options.theta) {
    // the projected unit square spans the full width
    double y0 = pad + s + pad, scale = s / span;
    os << "<g class=\"strip\" data-theta=\"" << shortest(*options.theta) << "\">\n";
    os << "<rect x=\"" << num(pad) << "\" y=\"" << num(y0) << "\" width=\"" << num(s) << "\" height=\""
       << num(strip_h) << "\" fill=\"#eee\"/>\n";
    for (std::size_t i = 0; i < cells.size();) {
      std::size_t j = i;
      while (j + 1 < cells.size() && cells[j + 1] == cells[j] + 1) ++j;
      double a = static_cast<double>(cells[i]) * res.strip_delta;
      double b = static_cast<double>(cells[j] + 1) * res.strip_delta;
      b = std::min(b, span);
      os << "<rect class=\"run\" data-first=\"" << cells[i] << "\" data-count=\"" << (j - i + 1) << "\" x=\""
         << num(pad + a * scale) << "\" y=\"" << num(y0) << "\" width=\"" << num(std::max(b - a, 0.0) * scale)
         << "\" height=\"" << num(strip_h) << "\" fill=\"#c0392b\"/>\n";
      i = j + 1;
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  res.svg = os.str();
  return res;
}

RenderResult render_svg(const Carpet& carpet, const RenderOptions& options) {
  return render_svg(as_maps(carpet), options);
}

}  // namespace carpetlab
