#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "carpetlab/catalog.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/separated.hpp"
#include "exhaustive_separated.hpp"

using namespace carpetlab;

namespace {

constexpr double kPi = std::numbers::pi;

// E[1/|x - y|] for independent uniform points of a w × h rectangle, by polar quadrature
// of the difference density 4(w - u)(h - v)/(wh)².
double rectangle_mean_inverse_distance(double w, double h) {
  const int n = 200000;
  double corner = std::atan2(h, w), sum = 0;
  for (int i = 0; i < n; ++i) {
    double phi = (i + 0.5) * (kPi / 2) / n;
    double c = std::cos(phi), s = std::sin(phi);
    double r = phi < corner ? w / c : h / s;
    sum += 4 * (w * h * r - (w * s + h * c) * r * r / 2 + c * s * r * r * r / 3);
  }
  return sum * (kPi / 2) / n / (w * w * h * h);
}

std::vector<Box> random_boxes(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(0.0, 1.0), size(0.01, 0.2);
  std::vector<Box> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({pos(rng), size(rng), pos(rng), size(rng)});
  return out;
}

std::vector<Box> family_boxes(const CylinderFamily& fam) {
  std::vector<Box> out;
  for (const auto& r : fam.rects) out.push_back(to_box(r));
  return out;
}

}  // namespace

TEST(MaxSeparated, Examples) {
  std::vector<Box> squares{{0, 1, 0, 1}, {3, 1, 0, 1}, {6, 1, 0, 1}};
  auto all = max_separated_subfamily(squares, 0.0, 1.0);
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(max_separated_subfamily(squares, kPi / 2, 1.0).size(), 1u);
  EXPECT_EQ(max_separated_subfamily(squares, 0.0, 2.0).size(), 3u);
  EXPECT_EQ(max_separated_subfamily(squares, 0.0, 2.5).size(), 2u);
  EXPECT_THROW(max_separated_subfamily(squares, 0.0, 0.0), PreconditionError);
}

TEST(MaxSeparated, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> angle(0.0, kPi), rho(0.001, 0.3);
  for (int t = 0; t < 300; ++t) {
    auto boxes = random_boxes(rng, 1 + rng() % 20);
    double theta = angle(rng), r = rho(rng);
    auto chosen = max_separated_subfamily(boxes, theta, r);
    EXPECT_TRUE(is_separated(boxes, chosen, theta, r));
    EXPECT_EQ(chosen.size(), testsupport::exhaustive_separated(boxes, theta, r));
    for (std::size_t i = 1; i < chosen.size(); ++i) {
      EXPECT_LT(project_theta(boxes[chosen[i - 1]], theta).lo, project_theta(boxes[chosen[i]], theta).lo);
    }
  }
}

TEST(MaxSeparated, LargeFamiliesStaySeparated) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto boxes = random_boxes(rng, 50);
    auto chosen = max_separated_subfamily(boxes, 1.0 + 0.05 * t, 0.01);
    EXPECT_TRUE(is_separated(boxes, chosen, 1.0 + 0.05 * t, 0.01));
    EXPECT_FALSE(chosen.empty());
  }
}

TEST(Config, DefaultsAndValidation) {
  auto c = catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 2, 2);
  auto cfg = default_config(c, 3, 0.04);
  EXPECT_DOUBLE_EQ(cfg.rho, 1.0 / 64);
  EXPECT_NEAR(cfg.A, std::sqrt(82.0), 1e-12);
  EXPECT_EQ(cfg.A1, 2.0);
  EXPECT_NEAR(cfg.gamma, 0.5 + std::log(2.0) / std::log(9.0), 1e-12);
  EXPECT_THROW(default_config(catalog::uniform_grid(Rational(1, 3), Rational(1, 2), 2, 2), 3, 0.04),
               PreconditionError);
  SeparatedConfig bad = cfg;
  bad.epsilon = 1.5;
  EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(Hypotheses, HoldForApproximateSquares) {
  auto c = catalog::staggered_2x2(Rational(1, 9), Rational(1, 4));
  for (int k = 2; k <= 5; ++k) {
    auto cfg = default_config(c, k, 0.04);
    auto s = ell_of_k(c.a, c.b, k);
    auto fam = approx_square_family(c, k, Word{std::vector<std::uint32_t>(s.ell, 1)});
    auto rep = check_hypotheses(family_boxes(fam), cfg);
    EXPECT_TRUE(rep.ok()) << (rep.ok() ? "" : rep.violations[0].message);
    EXPECT_GT(rep.max_intersection_ratio, 0);
  }
}

TEST(Hypotheses, ReportViolations) {
  auto c = catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 2, 2);
  auto cfg = default_config(c, 3, 0.04);
  std::vector<Box> overlapping{{0, 0.05, 0, 0.05}, {0.01, 0.05, 0.01, 0.05}};
  auto rep = check_hypotheses(overlapping, cfg);
  bool interiors = false, cardinality = false, outer = false;
  for (const auto& v : rep.violations) {
    interiors = interiors || v.code == "interiors";
    cardinality = cardinality || v.code == "cardinality";
    outer = outer || v.code == "outer_disk";
  }
  EXPECT_TRUE(interiors);
  EXPECT_TRUE(cardinality);
  EXPECT_FALSE(outer);
  std::vector<Box> thin{{0, 0.5, 0, 0.001}};
  auto rep2 = check_hypotheses(thin, cfg);
  EXPECT_FALSE(rep2.ok());
}

TEST(SeparationCheck, PassesOnUniformCarpet) {
  auto c = catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 2, 2);
  auto cfg = default_config(c, 4, 0.04);
  auto fam = approx_square_family(c, 4, Word{{0, 1}});
  auto p = ProjectionParam::from_theta(0.7, c.a);
  auto check = check_theorem21(fam, p, cfg);
  EXPECT_TRUE(check.pass);
  EXPECT_GT(check.min_ratio, 0);
  EXPECT_LE(check.worst_selected, check.worst_size);
}

TEST(SeparationCheck, SingleElementRatio) {
  SeparatedConfig cfg;
  cfg.rho = 0.1;
  cfg.epsilon = 0.04;
  auto check = check_theorem21(std::vector<Box>{{0, 0.1, 0, 0.1}}, 0.5, cfg, 4);
  EXPECT_DOUBLE_EQ(check.min_ratio, 1 / 0.04);
}

TEST(SeparationCheck, StackedProjectionsAreFlagged) {
  // Squares along the diagonal collapse onto one interval at θ = 3π/4.
  std::vector<Box> stack;
  for (int i = 0; i < 32; ++i) stack.push_back({i / 32.0, 1 / 32.0, i / 32.0, 1 / 32.0});
  SeparatedConfig cfg;
  cfg.rho = 1.0 / 32;
  cfg.epsilon = 0.04;
  auto bad = check_theorem21(stack, 3 * kPi / 4, cfg);
  auto good = check_theorem21(stack, kPi / 4, cfg);
  EXPECT_EQ(bad.worst_selected, 1u);
  EXPECT_LT(bad.min_ratio, good.min_ratio / 4);
  auto grid = theta_grid(64, 0.05);
  SeparatedConfig fixed = cfg;
  fixed.delta = good.min_ratio / 2;
  auto set = good_angle_set(stack, grid, fixed);
  EXPECT_FALSE(set.pass[48]);
  EXPECT_TRUE(set.pass[16]);
  auto fitted = good_angle_set(stack, theta_grid(720, 0.05), cfg);
  EXPECT_LE(fitted.bad_measure, cfg.epsilon + 1e-12);
  EXPECT_GT(fitted.delta_hat, 0);
}

TEST(GoodAngles, FitAndIntervals) {
  std::vector<double> r{5, 1, 4, 3, 2};
  EXPECT_EQ(fit_delta_hat(r, 0.1, 0.25), 3);
  EXPECT_EQ(fit_delta_hat(r, 0.1, 0.05), 1);
  EXPECT_EQ(fit_delta_hat(r, 0.1, 10), 5);
  std::vector<double> th{0.1, 0.2, 0.3, 0.4, 0.5};
  auto iv = grid_intervals(th, {true, true, false, true, false});
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0], std::make_pair(0.1, 0.2));
  EXPECT_EQ(iv[1], std::make_pair(0.4, 0.4));
  EXPECT_NEAR(grid_step(th), 0.1, 1e-12);
}

TEST(Aggregate, TwoFamiliesForEllOne) {
  auto c = catalog::staggered_2x2(Rational(1, 9), Rational(1, 4));
  auto cfg = default_config(c, 2, 0.04);
  auto grid = theta_grid(90, 0.05);
  auto agg = per_xi_aggregate(c, 2, cfg, grid);
  EXPECT_EQ(agg.ell, 1);
  EXPECT_EQ(agg.xis.size(), 2u);
  EXPECT_EQ(agg.xi_delta_hat.size(), 2u);
  EXPECT_GT(agg.delta_hat, 0);
  EXPECT_TRUE(agg.hypotheses.ok());
  EXPECT_LE(agg.complement_measure, agg.bound + 2 * agg.step);
  for (double f : agg.fraction) EXPECT_TRUE(f == 0 || f == 0.5 || f == 1);
  EXPECT_EQ(xi_fraction_csv(agg).substr(0, 19), "theta,fraction,in_J");
}

TEST(Aggregate, BudgetEnforced) {
  auto c = catalog::staggered_2x2(Rational(1, 9), Rational(1, 4));
  auto cfg = default_config(c, 5, 0.04);
  EXPECT_THROW(per_xi_aggregate(c, 5, cfg, theta_grid(8, 0.05), 4, 1, 1, 4), BudgetExceeded);
}

TEST(Riesz, UnitSquareAndRectangles) {
  for (auto [w, h] : {std::pair{1.0, 1.0}, std::pair{2.0, 1.0}, std::pair{1.5, 0.5}}) {
    double e = riesz_energy(std::vector<Box>{{0, w, 0, h}});
    EXPECT_NEAR(e / rectangle_mean_inverse_distance(w, h), 1.0, 0.01);
  }
  EXPECT_NEAR(rectangle_mean_inverse_distance(1, 1), 4 * std::log(1 + std::sqrt(2.0)) - 4.0 / 3 * (std::sqrt(2.0) - 1),
              1e-6);
}

TEST(Riesz, DilationLaw) {
  auto c = catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 2, 2);
  auto boxes = family_boxes(approx_square_family(c, 3, Word{{1}}));
  double base = riesz_energy(boxes);
  for (double lambda : {0.25, 3.0, 10.0}) {
    std::vector<Box> scaled;
    for (const auto& b : boxes) scaled.push_back({b.x0 * lambda, b.w * lambda, b.y0 * lambda, b.h * lambda});
    EXPECT_NEAR(riesz_energy(scaled) * lambda / base, 1.0, 0.01);
  }
}

TEST(Riesz, FarApartSquares) {
  double rho = 0.01, d = 0.9;
  double e = riesz_energy(std::vector<Box>{{0, rho, 0, rho}, {d, rho, 0, rho}});
  double expected = rectangle_mean_inverse_distance(1, 1) / (2 * rho) + 1 / (2 * d);
  EXPECT_NEAR(e / expected, 1.0, 0.01);
}

TEST(Density, Examples) {
  std::vector<Box> unit{{0, 1, 0, 1}};
  EXPECT_NEAR(density_l2(unit, kPi / 2, 1.0 / 64), 1.0, 1e-9);
  double w = 0.1;
  std::vector<Box> pair{{0, w, 0, w}, {3 * w, w, 0, w}};
  EXPECT_NEAR(density_l2(pair, 0.0, w / 8), 1 / (2 * w), 1e-9);
  // Projection at π/4 of the unit square: triangular density on [0, √2].
  double tri = density_l2(unit, kPi / 4, 1e-4);
  EXPECT_NEAR(tri, 2 * std::sqrt(2.0) / 3, 1e-3);
}

TEST(Density, AngleAverageTracksEnergy) {
  auto c = catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 2, 2);
  auto grid = theta_grid(64, 0.01);
  std::vector<double> ratios;
  for (int k : {2, 3, 4}) {
    auto s = ell_of_k(c.a, c.b, k);
    auto fam = approx_square_family(c, k, Word{std::vector<std::uint32_t>(s.ell, 0)});
    double rho = std::pow(0.25, k);
    double avg = 0;
    for (double t : grid) avg += density_l2(fam, ProjectionParam::from_theta(t, c.a), rho / 4);
    avg /= static_cast<double>(grid.size());
    ratios.push_back(avg / riesz_energy(fam));
  }
  for (double r : ratios) {
    EXPECT_GT(r, 0.05);
    EXPECT_LT(r, 5.0);
  }
}
