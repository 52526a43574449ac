#include "carpetlab/separated.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "carpetlab/dimension.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/parallel.hpp"

namespace carpetlab {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<Box> boxes_of(const std::vector<CylinderRect>& rects) {
  std::vector<Box> out;
  out.reserve(rects.size());
  for (const auto& r : rects) out.push_back(to_box(r));
  return out;
}

std::vector<Interval> project_all(const std::vector<Box>& rects, double theta) {
  std::vector<Interval> out;
  out.reserve(rects.size());
  for (const auto& b : rects) out.push_back(project_theta(b, theta));
  return out;
}

// Indices ordered by right endpoint, ties by left endpoint then index.
std::vector<std::size_t> order_by_right(const std::vector<Interval>& iv) {
  std::vector<std::size_t> order(iv.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (iv[i].hi != iv[j].hi) return iv[i].hi < iv[j].hi;
    if (iv[i].lo != iv[j].lo) return iv[i].lo < iv[j].lo;
    return i < j;
  });
  return order;
}

// Greedy on the members of `mask` (all when empty); returns the selection size.
std::size_t greedy_count(const std::vector<Interval>& iv, const std::vector<std::size_t>& order,
                         const std::vector<char>& mask, double rho) {
  std::size_t count = 0;
  double last = 0;
  for (std::size_t i : order) {
    if (!mask.empty() && !mask[i]) continue;
    if (count == 0 || iv[i].lo >= last + rho) {
      last = iv[i].hi;
      ++count;
    }
  }
  return count;
}

struct Subfamilies {
  std::vector<std::vector<char>> random;  // independent of θ
};

Subfamilies random_subfamilies(std::size_t n, int trials, std::uint64_t seed) {
  Subfamilies s;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  for (int t = 0; t < trials; ++t) {
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t size = 1 + static_cast<std::size_t>(rng() % n);
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
      std::swap(idx[i], idx[j]);
    }
    std::vector<char> mask(n, 0);
    for (std::size_t i = 0; i < size; ++i) mask[idx[i]] = 1;
    s.random.push_back(std::move(mask));
  }
  return s;
}

Theorem21Check check_one(const std::vector<Box>& rects, double theta, const SeparatedConfig& config,
                         const Subfamilies& subs) {
  const std::size_t n = rects.size();
  auto iv = project_all(rects, theta);
  auto order = order_by_right(iv);
  Theorem21Check out;
  out.theta = theta;
  out.min_ratio = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<char>& mask, std::size_t size) {
    std::size_t sel = greedy_count(iv, order, mask, config.rho);
    double eta = static_cast<double>(size) / static_cast<double>(n);
    double ratio = static_cast<double>(sel) / (config.epsilon * eta * eta * static_cast<double>(n));
    if (ratio < out.min_ratio) {
      out.min_ratio = ratio;
      out.worst_size = size;
      out.worst_selected = sel;
    }
  };
  consider({}, n);
  // Projection-clustered windows.
  std::vector<std::size_t> by_center(n);
  std::iota(by_center.begin(), by_center.end(), 0);
  std::sort(by_center.begin(), by_center.end(), [&](std::size_t i, std::size_t j) {
    double ci = iv[i].lo + iv[i].hi, cj = iv[j].lo + iv[j].hi;
    return ci != cj ? ci < cj : i < j;
  });
  std::vector<char> mask(n, 0);
  mask[by_center[0]] = 1;
  consider(mask, 1);
  for (std::size_t div : {2, 4, 8}) {
    std::size_t size = n / div;
    if (size == 0) continue;
    for (std::size_t start : {std::size_t(0), (n - size) / 2, n - size}) {
      std::fill(mask.begin(), mask.end(), 0);
      for (std::size_t i = start; i < start + size; ++i) mask[by_center[i]] = 1;
      consider(mask, size);
    }
  }
  for (const auto& m : subs.random) {
    consider(m, static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)));
  }
  out.pass = config.delta > 0 ? out.min_ratio >= config.delta : out.min_ratio > 0;
  return out;
}

// Integral of 1/|x - y| over P × Q.
double cross_energy(const Box& p, const Box& q, int depth) {
  double dx = (p.x0 + p.w / 2) - (q.x0 + q.w / 2);
  double dy = (p.y0 + p.h / 2) - (q.y0 + q.h / 2);
  double d = std::hypot(dx, dy);
  double diam = std::max(std::hypot(p.w, p.h), std::hypot(q.w, q.h));
  double mass = p.w * p.h * q.w * q.h;
  if (d >= 4 * diam || depth == 0) return mass / d;
  double total = 0;
  Box ps[4], qs[4];
  for (int i = 0; i < 4; ++i) {
    ps[i] = {p.x0 + (i % 2) * p.w / 2, p.w / 2, p.y0 + (i / 2) * p.h / 2, p.h / 2};
    qs[i] = {q.x0 + (i % 2) * q.w / 2, q.w / 2, q.y0 + (i / 2) * q.h / 2, q.h / 2};
  }
  for (const auto& a : ps) {
    for (const auto& b : qs) total += cross_energy(a, b, depth - 1);
  }
  return total;
}

constexpr int kEnergyDepth = 6;

// Self term S(R): halving both sides scales S by 1/8, so S = Σ_i S(R_i) + C
// gives S = 2C with C the ordered cross terms between the four quadrants.
double self_energy(double w, double h) {
  Box q[4];
  for (int i = 0; i < 4; ++i) q[i] = {(i % 2) * w / 2, w / 2, (i / 2) * h / 2, h / 2};
  double c = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) c += 2 * cross_energy(q[i], q[j], kEnergyDepth);
  }
  return 2 * c;
}

// CDF of U[0,p] + U[0,q].
double trapezoid_cdf(double t, double p, double q) {
  if (p > q) std::swap(p, q);
  if (t <= 0) return 0;
  if (t >= p + q) return 1;
  if (q <= 0) return 1;
  if (p <= 1e-15 * q) return std::min(t / q, 1.0);
  if (t <= p) return t * t / (2 * p * q);
  if (t <= q) return (2 * t - p) / (2 * q);
  double r = p + q - t;
  return 1 - r * r / (2 * p * q);
}

}  // namespace

void SeparatedConfig::validate() const {
  if (!(rho > 0)) throw PreconditionError("ρ must be positive");
  if (!(A > 1)) throw PreconditionError("A must exceed 1");
  if (!(A1 > 0) || !(A2 > 0)) throw PreconditionError("A1 and A2 must be positive");
  if (!(gamma > 0 && gamma < 1)) throw PreconditionError("γ must lie in (0,1), got " + fmt(gamma));
  if (!(epsilon > 0 && epsilon < 1)) throw PreconditionError("ε must lie in (0,1)");
}

SeparatedConfig default_config(const UniformFibreCarpet& carpet, int k, double epsilon) {
  SeparatedConfig c;
  double a = carpet.a.to_double(), b = carpet.b.to_double();
  c.gamma = uniform_fibre_dimension(carpet);
  c.rho = std::pow(b, k);
  c.A = std::max(std::sqrt(1 + 1 / (a * a)), 2.0);
  c.A1 = static_cast<double>(carpet.n);
  c.A2 = 9.0 * static_cast<double>(carpet.n) * std::pow(b, -c.gamma);
  c.epsilon = epsilon;
  c.validate();
  return c;
}

Interval project_theta(const Box& box, double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  double base = c * box.x0 + s * box.y0;
  double dx = c * box.w, dy = s * box.h;
  return {base + std::min(dx, 0.0) + std::min(dy, 0.0), base + std::max(dx, 0.0) + std::max(dy, 0.0)};
}

std::vector<std::size_t> max_separated_subfamily(const std::vector<Box>& rects, double theta, double rho) {
  if (!(rho > 0)) throw PreconditionError("ρ must be positive");
  auto iv = project_all(rects, theta);
  std::vector<std::size_t> chosen;
  double last = 0;
  for (std::size_t i : order_by_right(iv)) {
    if (chosen.empty() || iv[i].lo >= last + rho) {
      chosen.push_back(i);
      last = iv[i].hi;
    }
  }
  if (!is_separated(rects, chosen, theta, rho)) throw Error("separated selection failed certification");
  return chosen;
}

std::vector<std::size_t> max_separated_subfamily(const std::vector<CylinderRect>& rects,
                                                 const ProjectionParam& param, double rho) {
  return max_separated_subfamily(boxes_of(rects), param.theta, rho);
}

bool is_separated(const std::vector<Box>& rects, const std::vector<std::size_t>& chosen, double theta, double rho) {
  std::vector<Interval> iv;
  for (std::size_t i : chosen) iv.push_back(project_theta(rects.at(i), theta));
  std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  // Sorted by left endpoint, every interval must clear the furthest right end so far.
  double reach = -std::numeric_limits<double>::infinity();
  for (const auto& x : iv) {
    if (x.lo < reach + rho) return false;
    reach = std::max(reach, x.hi);
  }
  return true;
}

HypothesisReport check_hypotheses(const std::vector<Box>& rects, const SeparatedConfig& config, std::uint64_t seed,
                                  int disk_samples) {
  config.validate();
  HypothesisReport rep;
  const double tol = 1e-12;
  const double rho = config.rho;
  if (rects.empty()) {
    rep.violations.push_back({"empty", "family is empty"});
    return rep;
  }
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const auto& r = rects[i];
    if (std::min(r.w, r.h) / 2 < rho / config.A * (1 - tol)) {
      rep.violations.push_back({"inner_disk", "element " + std::to_string(i) + " has no disk of radius ρ/A"});
      break;
    }
    if (std::hypot(r.w, r.h) / 2 > config.A * rho * (1 + tol)) {
      rep.violations.push_back({"outer_disk", "element " + std::to_string(i) + " exceeds a disk of radius Aρ"});
      break;
    }
  }
  double need = std::pow(rho, -config.gamma) / config.A1;
  if (static_cast<double>(rects.size()) < need * (1 - tol)) {
    rep.violations.push_back(
        {"cardinality", "|Q| = " + std::to_string(rects.size()) + " < ρ^{-γ}/A1 = " + fmt(need)});
  }
  if (rects.size() <= 5000) {
    std::vector<std::size_t> order(rects.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return rects[i].x0 < rects[j].x0; });
    bool overlap = false;
    for (std::size_t a = 0; a < order.size() && !overlap; ++a) {
      const auto& p = rects[order[a]];
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        const auto& q = rects[order[b]];
        if (q.x0 >= p.x0 + p.w * (1 - tol)) break;
        bool y_overlap = q.y0 < p.y0 + p.h * (1 - tol) && p.y0 < q.y0 + q.h * (1 - tol);
        if (y_overlap) {
          overlap = true;
          rep.violations.push_back({"interiors", "elements " + std::to_string(order[a]) + " and " +
                                                     std::to_string(order[b]) + " overlap"});
          break;
        }
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < disk_samples; ++s) {
    const auto& c = rects[rng() % rects.size()];
    double cx = c.x0 + c.w * unit(rng), cy = c.y0 + c.h * unit(rng);
    double ell = rho * std::pow(1 / rho, unit(rng));
    if (ell <= rho || ell >= 1) continue;
    std::size_t hits = 0;
    for (const auto& r : rects) {
      double dx = std::max({r.x0 - cx, 0.0, cx - (r.x0 + r.w)});
      double dy = std::max({r.y0 - cy, 0.0, cy - (r.y0 + r.h)});
      if (dx * dx + dy * dy < ell * ell) ++hits;
    }
    double ratio = static_cast<double>(hits) / (config.A2 * std::pow(ell / rho, config.gamma));
    rep.max_intersection_ratio = std::max(rep.max_intersection_ratio, ratio);
  }
  if (rep.max_intersection_ratio > 1) {
    rep.violations.push_back({"disk_count", "a disk of radius ℓ meets more than A2 (ℓ/ρ)^γ elements (ratio " +
                                                fmt(rep.max_intersection_ratio) + ")"});
  }
  return rep;
}

Theorem21Check check_theorem21(const std::vector<Box>& rects, double theta, const SeparatedConfig& config,
                               int trials, std::uint64_t seed) {
  config.validate();
  if (rects.empty()) throw PreconditionError("family is empty");
  return check_one(rects, theta, config, random_subfamilies(rects.size(), trials, seed));
}

Theorem21Check check_theorem21(const CylinderFamily& family, const ProjectionParam& param,
                               const SeparatedConfig& config, int trials, std::uint64_t seed) {
  return check_theorem21(boxes_of(family.rects), param.theta, config, trials, seed);
}

double fit_delta_hat(const std::vector<double>& ratios, double step, double epsilon) {
  if (ratios.empty()) return 0;
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  auto allowed = static_cast<std::size_t>(std::floor(epsilon / step + 1e-9));
  return sorted[std::min(allowed, sorted.size() - 1)];
}

double grid_step(const std::vector<double>& thetas) {
  double step = 0;
  for (std::size_t i = 1; i < thetas.size(); ++i) {
    double d = thetas[i] - thetas[i - 1];
    if (d > 0 && (step == 0 || d < step)) step = d;
  }
  return step;
}

GoodAngleSet good_angle_set(const std::vector<Box>& rects, const std::vector<double>& thetas,
                            const SeparatedConfig& config, int trials, std::uint64_t seed, int jobs) {
  config.validate();
  if (rects.empty()) throw PreconditionError("family is empty");
  GoodAngleSet g;
  g.thetas = thetas;
  g.step = grid_step(thetas);
  g.min_ratio.assign(thetas.size(), 0);
  auto subs = random_subfamilies(rects.size(), trials, seed);
  parallel_for(thetas.size(), jobs,
               [&](std::size_t i) { g.min_ratio[i] = check_one(rects, thetas[i], config, subs).min_ratio; });
  g.delta_hat = config.delta > 0 ? config.delta : fit_delta_hat(g.min_ratio, g.step, config.epsilon);
  std::size_t fails = 0;
  for (double r : g.min_ratio) {
    bool ok = r >= g.delta_hat && r > 0;
    g.pass.push_back(ok);
    if (!ok) ++fails;
  }
  g.bad_measure = g.step * static_cast<double>(fails);
  return g;
}

std::vector<std::pair<double, double>> grid_intervals(const std::vector<double>& thetas,
                                                      const std::vector<bool>& mask) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!mask[i]) continue;
    if (i > 0 && mask[i - 1] && !out.empty()) {
      out.back().second = thetas[i];
    } else {
      out.push_back({thetas[i], thetas[i]});
    }
  }
  return out;
}

XiAggregate per_xi_aggregate(const UniformFibreCarpet& carpet, int k, const SeparatedConfig& config,
                             const std::vector<double>& thetas, int trials, std::uint64_t seed, int jobs,
                             std::size_t budget) {
  config.validate();
  XiAggregate agg;
  agg.k = k;
  auto scales = ell_of_k(carpet.a, carpet.b, k);
  agg.ell = scales.ell;
  double count = std::pow(static_cast<double>(carpet.m), scales.ell);
  if (count > static_cast<double>(budget)) {
    throw BudgetExceeded("m^ℓ(k) = " + fmt(count) + " families exceed the budget");
  }
  agg.xis = all_words(carpet.m, static_cast<std::size_t>(scales.ell));
  agg.thetas = thetas;
  agg.step = grid_step(thetas);
  agg.bound = std::sqrt(config.epsilon);
  std::vector<GoodAngleSet> sets;
  for (std::size_t x = 0; x < agg.xis.size(); ++x) {
    auto fam = approx_square_family(carpet, k, agg.xis[x]);
    auto boxes = boxes_of(fam.rects);
    auto hyp = check_hypotheses(boxes, config, seed + x);
    agg.hypotheses.max_intersection_ratio =
        std::max(agg.hypotheses.max_intersection_ratio, hyp.max_intersection_ratio);
    for (auto& v : hyp.violations) {
      bool seen = false;
      for (const auto& w : agg.hypotheses.violations) seen = seen || w.code == v.code;
      if (!seen) agg.hypotheses.violations.push_back(v);
    }
    sets.push_back(good_angle_set(boxes, thetas, config, trials, seed, jobs));
    agg.xi_delta_hat.push_back(sets.back().delta_hat);
  }
  agg.delta_hat = *std::min_element(agg.xi_delta_hat.begin(), agg.xi_delta_hat.end());
  double total = static_cast<double>(agg.xis.size());
  std::size_t outside = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    std::size_t good = 0;
    for (const auto& s : sets) good += s.min_ratio[i] >= agg.delta_hat && s.min_ratio[i] > 0;
    double f = static_cast<double>(good) / total;
    agg.fraction.push_back(f);
    bool in = f > 1 - agg.bound;
    agg.in_J.push_back(in);
    if (!in) ++outside;
  }
  agg.J = grid_intervals(thetas, agg.in_J);
  agg.complement_measure = agg.step * static_cast<double>(outside);
  return agg;
}

double riesz_energy(const std::vector<Box>& rects) {
  if (rects.empty()) throw PreconditionError("family is empty");
  std::map<std::pair<double, double>, double> self_cache;
  double area = 0, total = 0;
  for (const auto& r : rects) area += r.w * r.h;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const auto& r = rects[i];
    auto key = std::make_pair(r.w, r.h);
    auto it = self_cache.find(key);
    if (it == self_cache.end()) it = self_cache.emplace(key, self_energy(r.w, r.h)).first;
    total += it->second;
    for (std::size_t j = i + 1; j < rects.size(); ++j) total += 2 * cross_energy(r, rects[j], kEnergyDepth);
  }
  return total / (area * area);
}

double riesz_energy(const CylinderFamily& family) { return riesz_energy(boxes_of(family.rects)); }

double density_l2(const std::vector<Box>& rects, double theta, double bin_width) {
  if (rects.empty()) throw PreconditionError("family is empty");
  if (!(bin_width > 0)) throw PreconditionError("bin width must be positive");
  double c = std::cos(theta), s = std::sin(theta);
  double area = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<Interval> iv;
  for (const auto& r : rects) {
    area += r.w * r.h;
    iv.push_back(project_theta(r, theta));
    lo = std::min(lo, iv.back().lo);
    hi = std::max(hi, iv.back().hi);
  }
  auto bins = static_cast<std::size_t>(std::floor((hi - lo) / bin_width)) + 1;
  if (bins > 200'000'000) throw BudgetExceeded("too many density bins");
  std::vector<double> mass(bins, 0.0);
  for (std::size_t i = 0; i < rects.size(); ++i) {
    double p = std::abs(c) * rects[i].w, q = std::abs(s) * rects[i].h;
    double m = rects[i].w * rects[i].h / area;
    auto first = static_cast<std::size_t>(std::floor((iv[i].lo - lo) / bin_width));
    auto last = std::min(bins - 1, static_cast<std::size_t>(std::floor((iv[i].hi - lo) / bin_width)));
    for (std::size_t b = first; b <= last; ++b) {
      double t0 = lo + bin_width * static_cast<double>(b) - iv[i].lo;
      double t1 = t0 + bin_width;
      mass[b] += m * (trapezoid_cdf(t1, p, q) - trapezoid_cdf(t0, p, q));
    }
  }
  double sum = 0;
  for (double x : mass) sum += x * x;
  return sum / bin_width;
}

double density_l2(const CylinderFamily& family, const ProjectionParam& param, double bin_width) {
  double rho = family.rects.empty() ? 0 : family.rects.front().height.to_double();
  if (bin_width > rho / 4 * (1 + 1e-12)) throw PreconditionError("bin width must be at most ρ/4");
  return density_l2(boxes_of(family.rects), param.theta, bin_width);
}

std::string good_angle_csv(const GoodAngleSet& set) {
  std::ostringstream out;
  out << "theta,min_ratio,pass,delta_hat\n";
  for (std::size_t i = 0; i < set.thetas.size(); ++i) {
    out << fmt(set.thetas[i]) << ',' << fmt(set.min_ratio[i]) << ',' << (set.pass[i] ? 1 : 0) << ','
        << fmt(set.delta_hat) << '\n';
  }
  return out.str();
}

std::string xi_fraction_csv(const XiAggregate& agg) {
  std::ostringstream out;
  out << "theta,fraction,in_J\n";
  for (std::size_t i = 0; i < agg.thetas.size(); ++i) {
    out << fmt(agg.thetas[i]) << ',' << fmt(agg.fraction[i]) << ',' << (agg.in_J[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace carpetlab
