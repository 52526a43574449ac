#include "carpetlab/projection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "carpetlab/errors.hpp"
#include "carpetlab/parallel.hpp"

namespace carpetlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAngleEps = 1e-12;

enum class Principal { none, x_axis, y_axis };

Principal principal_of(double theta) {
  if (std::abs(theta) < kAngleEps || std::abs(theta - kPi) < kAngleEps) return Principal::x_axis;
  if (std::abs(theta - kPi / 2) < kAngleEps) return Principal::y_axis;
  return Principal::none;
}

// Linear form c_x·x + c_y·y for the chosen projection.
std::pair<double, double> coefficients(const ProjectionParam& param, ProjectionMode mode) {
  if (mode == ProjectionMode::orthogonal) return {std::cos(param.theta), std::sin(param.theta)};
  return {param.skew(), 1.0};
}

Interval apply(double cx, double cy, double x0, double w, double y0, double h) {
  double base = cx * x0 + cy * y0;
  double dx = cx * w, dy = cy * h;
  double lo = base + std::min(dx, 0.0) + std::min(dy, 0.0);
  double hi = base + std::max(dx, 0.0) + std::max(dy, 0.0);
  return {lo, hi};
}

struct Marking {
  double lo;
  double delta;
  std::vector<std::uint8_t> hit;

  Marking(double lo_, double hi_, double delta_) : lo(lo_), delta(delta_) {
    double cells = std::floor((hi_ - lo_) / delta_) + 2;
    if (cells > 4e9) throw BudgetExceeded("projection grid too large for δ = " + std::to_string(delta_));
    hit.assign(static_cast<std::size_t>(cells), 0);
  }

  void mark(double s, double e) {
    auto last = static_cast<std::int64_t>(hit.size()) - 1;
    auto i = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((s - lo) / delta)), 0, last);
    // A right endpoint on a grid line does not claim the next cell.
    auto j = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil((e - lo) / delta)) - 1, i, last);
    std::fill(hit.begin() + i, hit.begin() + j + 1, 1);
  }

  std::int64_t count() const { return std::count(hit.begin(), hit.end(), 1); }
};

// 1-d IFS x ↦ s·x + o on [0,1], refined until interval length <= δ.
std::int64_t marginal_count(const std::vector<std::pair<Rational, Rational>>& maps, double delta,
                            std::size_t budget) {
  Rational d = Rational::from_double(delta);
  std::vector<std::pair<Rational, Rational>> stack{{Rational(0), Rational(1)}};
  Marking marking(0.0, 1.0, delta);
  std::size_t leaves = 0;
  while (!stack.empty()) {
    auto [x0, w] = stack.back();
    stack.pop_back();
    if (w <= d) {
      if (++leaves > budget) throw BudgetExceeded("marginal cover exceeds budget");
      marking.mark(x0.to_double(), (x0 + w).to_double());
      continue;
    }
    for (const auto& [s, o] : maps) stack.push_back({x0 + w * o, w * s});
  }
  return marking.count();
}

std::vector<std::pair<Rational, Rational>> marginal_maps(const std::vector<AffineMap>& maps, bool x_axis) {
  std::set<std::pair<Rational, Rational>> distinct;
  for (const auto& f : maps) {
    if (x_axis) {
      distinct.insert({f.x_scale, f.x_offset});
    } else {
      distinct.insert({f.y_scale, f.y_offset});
    }
  }
  return {distinct.begin(), distinct.end()};
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ProjectionParam ProjectionParam::from_theta(double theta, const Rational& a_ref) {
  ProjectionParam p;
  p.theta = theta;
  p.a_ref = a_ref;
  double log_a = std::log(a_ref.to_double());
  if (principal_of(theta) != Principal::none) {
    p.tau = std::numeric_limits<double>::infinity();
  } else if (theta < kPi / 2) {
    p.tau = std::log(std::tan(theta)) / log_a;
  } else {
    p.tau = std::log(-std::tan(theta)) / log_a;
    p.tilde = true;
  }
  return p;
}

ProjectionParam ProjectionParam::from_tau(double tau, const Rational& a_ref, bool tilde) {
  ProjectionParam p;
  p.tau = tau;
  p.a_ref = a_ref;
  p.tilde = tilde;
  double t = std::atan(std::pow(a_ref.to_double(), tau));
  p.theta = tilde ? kPi - t : t;
  return p;
}

double ProjectionParam::skew() const {
  double s = std::pow(a_ref.to_double(), -tau);
  return tilde ? -s : s;
}

Interval project_box(const Box& box, const ProjectionParam& param, ProjectionMode mode) {
  if (mode == ProjectionMode::orthogonal && principal_of(param.theta) != Principal::none) {
    throw PreconditionError("θ is a principal direction");
  }
  auto [cx, cy] = coefficients(param, mode);
  return apply(cx, cy, box.x0, box.w, box.y0, box.h);
}

Interval project_rect(const CylinderRect& rect, const ProjectionParam& param, ProjectionMode mode) {
  return project_box(to_box(rect), param, mode);
}

namespace {

Marking mark_boxes(const std::vector<Box>& boxes, const ProjectionParam& param, double delta, ProjectionMode mode) {
  if (!(delta > 0)) throw PreconditionError("δ must be positive");
  auto [cx, cy] = coefficients(param, mode);
  Interval hull = apply(cx, cy, 0, 1, 0, 1);
  Marking marking(hull.lo, hull.hi, delta);
  for (const auto& b : boxes) {
    Interval iv = apply(cx, cy, b.x0, b.w, b.y0, b.h);
    marking.mark(iv.lo, iv.hi);
  }
  return marking;
}

}  // namespace

std::int64_t count_projected_cells(const std::vector<Box>& boxes, const ProjectionParam& param, double delta,
                                   ProjectionMode mode) {
  return mark_boxes(boxes, param, delta, mode).count();
}

std::vector<std::int64_t> marked_cells(const std::vector<Box>& boxes, const ProjectionParam& param, double delta,
                                       ProjectionMode mode) {
  auto marking = mark_boxes(boxes, param, delta, mode);
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < marking.hit.size(); ++i) {
    if (marking.hit[i]) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::int64_t box_count_projection(const std::vector<AffineMap>& maps, const ProjectionParam& param, double delta,
                                  ProjectionMode mode, std::size_t budget) {
  if (!(delta > 0)) throw PreconditionError("δ must be positive");
  if (mode == ProjectionMode::orthogonal) {
    Principal pr = principal_of(param.theta);
    if (pr != Principal::none) return marginal_count(marginal_maps(maps, pr == Principal::x_axis), delta, budget);
  }
  auto boxes = cover_boxes(maps, Rational::from_double(delta), budget);
  return count_projected_cells(boxes, param, delta, mode);
}

std::int64_t box_count_projection(const Carpet& carpet, const ProjectionParam& param, double delta,
                                  ProjectionMode mode, std::size_t budget) {
  return box_count_projection(as_maps(carpet), param, delta, mode, budget);
}

std::vector<double> dyadic_ladder(double delta_min, double delta_max) {
  if (!(delta_min > 0) || delta_max < delta_min) throw PreconditionError("need 0 < delta_min <= delta_max");
  std::vector<double> out;
  for (double d = delta_max; d >= delta_min * (1 - 1e-12); d /= 2) out.push_back(d);
  return out;
}

double fit_slope(const std::vector<std::pair<double, std::int64_t>>& scales, int drop) {
  std::size_t first = static_cast<std::size_t>(std::max(drop, 0));
  if (scales.size() < first + 3) throw PreconditionError("fewer than 3 feasible scales");
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = first; i < scales.size(); ++i) {
    double x = -std::log(scales[i].first);
    double y = std::log(static_cast<double>(scales[i].second));
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

BoxCountCurve finish_curve(std::vector<std::pair<double, std::int64_t>> scales, int drop) {
  BoxCountCurve c;
  c.scales = std::move(scales);
  c.slope = fit_slope(c.scales, drop);
  for (std::size_t i = 1; i < c.scales.size(); ++i) {
    double octaves = std::log2(c.scales[i - 1].first / c.scales[i].first);
    c.increments.push_back(std::log2(static_cast<double>(c.scales[i].second) / c.scales[i - 1].second) / octaves);
  }
  return c;
}

void require_ladder(const std::vector<double>& ladder) {
  if (ladder.size() < 6) throw PreconditionError("δ ladder needs at least 6 scales");
}

}  // namespace

BoxCountCurve estimate_projection_dimension(const std::vector<AffineMap>& maps, const ProjectionParam& param,
                                            double delta_min, double delta_max, const EstimateOptions& opts) {
  auto ladder = dyadic_ladder(delta_min, delta_max);
  require_ladder(ladder);
  std::vector<std::pair<double, std::int64_t>> scales;
  for (double d : ladder) {
    try {
      scales.push_back({d, box_count_projection(maps, param, d, opts.mode, opts.budget)});
    } catch (const BudgetExceeded&) {
      break;
    }
  }
  return finish_curve(std::move(scales), opts.drop_coarsest);
}

BoxCountCurve estimate_projection_dimension(const Carpet& carpet, const ProjectionParam& param, double delta_min,
                                            double delta_max, const EstimateOptions& opts) {
  return estimate_projection_dimension(as_maps(carpet), param, delta_min, delta_max, opts);
}

std::vector<double> theta_grid(std::size_t count, double margin) {
  std::vector<double> out;
  if (count == 0) return out;
  if (!(margin > 0) || margin >= kPi / 4) throw PreconditionError("margin must lie in (0, π/4)");
  // Same lattice on both arcs, spaced so that π/4 and 3π/4 are grid points.
  std::size_t n1 = (count + 1) / 2, n2 = count - n1;
  double half = static_cast<double>(n1 / 2);
  double step = half > 0 ? (kPi / 4 - margin) / half : 0;
  double start = half > 0 ? margin : kPi / 4;
  for (std::size_t j = 0; j < n1; ++j) out.push_back(start + step * static_cast<double>(j));
  for (std::size_t j = 0; j < n2; ++j) out.push_back(kPi / 2 + start + step * static_cast<double>(j));
  return out;
}

std::vector<SweepRow> sweep(const std::vector<AffineMap>& maps, const std::vector<double>& thetas, double delta_min,
                            double delta_max, const SweepOptions& opts) {
  std::vector<SweepRow> rows(thetas.size());
  if (thetas.empty()) return rows;
  for (double t : thetas) {
    bool bad = !(t > 0 && t < kPi) || t < opts.margin - kAngleEps || t > kPi - opts.margin + kAngleEps ||
               std::abs(t - kPi / 2) < opts.margin - kAngleEps;
    if (bad) throw PreconditionError("θ = " + format_double(t) + " is within the margin of a principal direction");
  }
  auto ladder = dyadic_ladder(delta_min, delta_max);
  require_ladder(ladder);
  Rational a_ref = tau_reference(maps);
  std::vector<ProjectionParam> params;
  for (double t : thetas) params.push_back(ProjectionParam::from_theta(t, a_ref));
  std::vector<std::vector<std::pair<double, std::int64_t>>> scales(thetas.size());
  for (double d : ladder) {
    std::vector<Box> boxes;
    try {
      boxes = cover_boxes(maps, Rational::from_double(d), opts.budget);
    } catch (const BudgetExceeded&) {
      break;
    }
    std::vector<std::int64_t> counts(thetas.size());
    parallel_for(thetas.size(), opts.jobs, [&](std::size_t i) {
      counts[i] = count_projected_cells(boxes, params[i], d, ProjectionMode::orthogonal);
    });
    for (std::size_t i = 0; i < thetas.size(); ++i) scales[i].push_back({d, counts[i]});
  }
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    rows[i].theta = thetas[i];
    rows[i].tau = params[i].tau;
    rows[i].curve = finish_curve(std::move(scales[i]), opts.drop_coarsest);
    rows[i].slope = rows[i].curve.slope;
    rows[i].n_finest = rows[i].curve.scales.back().second;
    rows[i].delta_finest = rows[i].curve.scales.back().first;
  }
  return rows;
}

std::vector<SweepRow> sweep(const Carpet& carpet, const std::vector<double>& thetas, double delta_min,
                            double delta_max, const SweepOptions& opts) {
  return sweep(as_maps(carpet), thetas, delta_min, delta_max, opts);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "theta,tau,slope,n_finest,delta_finest\n";
  for (const auto& r : rows) {
    out << format_double(r.theta) << ',' << format_double(r.tau) << ',' << format_double(r.slope) << ','
        << r.n_finest << ',' << format_double(r.delta_finest) << '\n';
  }
  return out.str();
}

Rational tau_reference(const std::vector<AffineMap>& maps) {
  if (maps.empty()) throw PreconditionError("no maps");
  return maps.front().x_scale;
}

}  // namespace carpetlab
