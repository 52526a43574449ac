#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "carpetlab/catalog.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/subsystem.hpp"
#include "random_carpets.hpp"

using namespace carpetlab;

namespace {

constexpr double kPi = std::numbers::pi;

BaranskiCarpet full_square() {
  return {{Rational(1, 2), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
}

Interval sampled(const CylinderRect& r, double theta) {
  double lo = 1e300, hi = -1e300;
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      double x = r.x0.to_double() + r.width.to_double() * i / n;
      double y = r.y0.to_double() + r.height.to_double() * j / n;
      double v = x * std::cos(theta) + y * std::sin(theta);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

}  // namespace

TEST(ProjectionParam, ChartRoundTrip) {
  Rational a(1, 4);
  for (double theta : {0.3, 1.0, 1.4, 1.8, 2.5}) {
    auto p = ProjectionParam::from_theta(theta, a);
    EXPECT_EQ(p.tilde, theta > kPi / 2);
    auto q = ProjectionParam::from_tau(p.tau, a, p.tilde);
    EXPECT_NEAR(q.theta, theta, 1e-12);
    EXPECT_NEAR(std::abs(p.skew()), 1.0 / std::abs(std::tan(theta)), 1e-9);
  }
}

TEST(ProjectRect, Examples) {
  CylinderRect unit{{}, {}, Rational(0), Rational(1), Rational(0), Rational(1)};
  auto p = ProjectionParam::from_theta(kPi / 4, Rational(1, 4));
  auto iv = project_rect(unit, p, ProjectionMode::orthogonal);
  EXPECT_NEAR(iv.lo, 0, 1e-15);
  EXPECT_NEAR(iv.hi, std::sqrt(2.0), 1e-15);

  CylinderRect r{{}, {}, Rational(0), Rational(1, 5), Rational(0), Rational(1, 7)};
  auto skew = ProjectionParam::from_tau(1.0, Rational(1, 2));
  auto jv = project_rect(r, skew, ProjectionMode::pi_tau);
  EXPECT_NEAR(jv.lo, 0, 1e-15);
  EXPECT_NEAR(jv.hi, 2.0 / 5 + 1.0 / 7, 1e-14);

  CylinderRect s{{}, {}, Rational(1, 4), Rational(1, 4), Rational(0), Rational(1, 3)};
  auto kv = project_rect(s, ProjectionParam::from_theta(kPi / 3, Rational(1, 4)), ProjectionMode::orthogonal);
  auto oracle = sampled(s, kPi / 3);
  EXPECT_NEAR(kv.lo, oracle.lo, 1e-12);
  EXPECT_NEAR(kv.hi, oracle.hi, 1e-12);
}

TEST(ProjectRect, MatchesSamplingOnRandomRects) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(0.01, kPi - 0.01);
  for (int t = 0; t < 50; ++t) {
    Rational x0(rng() % 50, 100), y0(rng() % 50, 100), w(1 + rng() % 50, 100), h(1 + rng() % 50, 100);
    CylinderRect r{{}, {}, x0, w, y0, h};
    double theta = angle(rng);
    if (std::abs(theta - kPi / 2) < 1e-3) continue;
    auto iv = project_rect(r, ProjectionParam::from_theta(theta, Rational(1, 3)), ProjectionMode::orthogonal);
    auto oracle = sampled(r, theta);
    EXPECT_NEAR(iv.lo, oracle.lo, 1e-12);
    EXPECT_NEAR(iv.hi, oracle.hi, 1e-12);
  }
}

TEST(ProjectRect, PrincipalDirectionsRejected) {
  CylinderRect unit{{}, {}, Rational(0), Rational(1), Rational(0), Rational(1)};
  for (double theta : {0.0, kPi / 2, kPi}) {
    EXPECT_THROW(project_rect(unit, ProjectionParam::from_theta(theta, Rational(1, 2)), ProjectionMode::orthogonal),
                 PreconditionError);
  }
}

TEST(BoxCount, FullSquareDiagonal) {
  auto p = ProjectionParam::from_theta(kPi / 4, Rational(1, 2));
  auto n = box_count_projection(Carpet(full_square()), p, std::ldexp(1.0, -8));
  double expected = std::ceil(std::sqrt(2.0) * 256);
  EXPECT_LE(std::abs(static_cast<double>(n) - expected), 1.0);
}

TEST(BoxCount, SinglePointStaysBounded) {
  // The fixed point (1/2, 1/2). The last cover square projects to an interval of
  // length up to √2·δ, which can meet three cells.
  std::vector<AffineMap> maps{{Rational(1, 2), Rational(1, 4), Rational(1, 2), Rational(1, 4)}};
  auto p = ProjectionParam::from_theta(1.0, Rational(1, 2));
  for (int e = 1; e <= 20; ++e) {
    auto n = box_count_projection(maps, p, std::ldexp(1.0, -e));
    EXPECT_GE(n, 1);
    EXPECT_LE(n, 3);
  }
}

TEST(BoxCount, RationalProductDiagonalGrowsLikeThreeToTheK) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 4));
  auto p = ProjectionParam::from_theta(kPi / 4, Rational(1, 4));
  std::int64_t prev = 0;
  for (int k = 2; k <= 8; ++k) {
    auto n = box_count_projection(c, p, std::pow(4.0, -k));
    double ratio = static_cast<double>(n) / std::pow(3.0, k);
    EXPECT_GE(ratio, 1.0);
    EXPECT_LE(ratio, 3.0);
    if (k > 4) EXPECT_NEAR(static_cast<double>(n) / prev, 3.0, 0.1);
    prev = n;
  }
}

TEST(BoxCount, PrincipalDirectionsUseMarginals) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 3));
  auto x0 = ProjectionParam::from_theta(0.0, Rational(1, 4));
  auto xpi = ProjectionParam::from_theta(kPi, Rational(1, 4));
  auto y = ProjectionParam::from_theta(kPi / 2, Rational(1, 4));
  // x-marginal: two maps of ratio 1/4 with grid-aligned images.
  for (int k = 1; k <= 6; ++k) {
    EXPECT_EQ(box_count_projection(c, x0, std::pow(4.0, -k)), std::int64_t(1) << k);
    EXPECT_EQ(box_count_projection(c, xpi, std::pow(4.0, -k)), std::int64_t(1) << k);
  }
  auto curve = estimate_projection_dimension(c, y, std::pow(2.0, -18), std::pow(2.0, -6));
  EXPECT_NEAR(curve.slope, std::log(2.0) / std::log(3.0), 0.03);
}

TEST(Estimate, RationalProductDip) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 4));
  auto p = ProjectionParam::from_theta(kPi / 4, Rational(1, 4));
  auto curve = estimate_projection_dimension(c, p, std::pow(2.0, -16), std::pow(2.0, -6));
  EXPECT_EQ(curve.scales.size(), 11u);
  EXPECT_EQ(curve.increments.size(), 10u);
  EXPECT_NEAR(curve.slope, std::log(3.0) / std::log(4.0), 0.03);
}

TEST(Estimate, IrrationalProductNearOne) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 3));
  auto p = ProjectionParam::from_theta(kPi / 4, Rational(1, 4));
  auto curve = estimate_projection_dimension(c, p, std::pow(2.0, -14), std::pow(2.0, -6));
  EXPECT_GE(curve.slope, 0.93);
  EXPECT_LE(curve.slope, 1.02);
}

TEST(Estimate, LadderPreconditions) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 3));
  auto p = ProjectionParam::from_theta(1.0, Rational(1, 4));
  EXPECT_THROW(estimate_projection_dimension(c, p, 1.0 / 16, 1.0 / 2), PreconditionError);
  EXPECT_THROW(fit_slope({{0.5, 2}, {0.25, 4}, {0.125, 8}, {0.0625, 16}}, 2), PreconditionError);
  EXPECT_NEAR(fit_slope({{0.5, 2}, {0.25, 4}, {0.125, 8}, {0.0625, 16}}, 0), std::log(2.0) / std::log(2.0), 1e-12);
  EXPECT_EQ(dyadic_ladder(1.0 / 64, 1.0 / 2).size(), 6u);
}

TEST(Estimate, PiTauAgreesWithOrthogonal) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 3));
  for (double theta : {0.4, 0.9, 2.2}) {
    auto p = ProjectionParam::from_theta(theta, Rational(1, 4));
    EstimateOptions orth;
    EstimateOptions skew;
    skew.mode = ProjectionMode::pi_tau;
    auto a = estimate_projection_dimension(c, p, std::pow(2.0, -14), std::pow(2.0, -6), orth);
    auto b = estimate_projection_dimension(c, p, std::pow(2.0, -14), std::pow(2.0, -6), skew);
    EXPECT_NEAR(a.slope, b.slope, 0.02) << "θ = " << theta;
  }
}

TEST(BoxCount, MonotoneAndBoundedOnRandomCarpets) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> angle(0.1, kPi - 0.1);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    Carpet c = testsupport::random_gl(rng, 1 + static_cast<int>(rng() % 3));
    auto maps = as_maps(c);
    if (maps.size() < 2) continue;
    double theta = angle(rng);
    if (std::abs(theta - kPi / 2) < 0.05) continue;
    auto p = ProjectionParam::from_theta(theta, tau_reference(maps));
    double diam = std::abs(std::cos(theta)) + std::sin(theta);
    std::int64_t prev = 0;
    try {
      for (int e = 2; e <= 9; ++e) {
        double delta = std::ldexp(1.0, -e);
        auto n = box_count_projection(maps, p, delta, ProjectionMode::orthogonal, 500'000);
        EXPECT_GE(n, prev);
        EXPECT_LE(static_cast<double>(n), diam / delta + 2);
        prev = n;
      }
    } catch (const BudgetExceeded&) {
    }
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(Estimate, SubsystemSlopeDoesNotExceedParent) {
  auto gl = to_gl(catalog::cantor_product(Rational(1, 4), Rational(1, 3))).value();
  auto plan = build_subsystem(gl, 3);
  auto sub = enumerate_subsystem_maps(plan, gl, 100000);
  auto full = as_maps(gl);
  for (double theta : {0.5, 1.2, 2.4}) {
    auto p = ProjectionParam::from_theta(theta, tau_reference(full));
    auto parent = estimate_projection_dimension(full, p, std::pow(2.0, -13), std::pow(2.0, -6));
    auto child = estimate_projection_dimension(sub, p, std::pow(2.0, -13), std::pow(2.0, -6));
    EXPECT_LE(child.slope, parent.slope + 0.02) << "θ = " << theta;
  }
}

TEST(Sweep, GridAndCsv) {
  EXPECT_TRUE(theta_grid(0, 0.05).empty());
  auto grid = theta_grid(64, 0.05);
  ASSERT_EQ(grid.size(), 64u);
  EXPECT_NEAR(grid[16], kPi / 4, 1e-12);
  EXPECT_NEAR(grid[48], 3 * kPi / 4, 1e-12);
  for (double t : grid) {
    EXPECT_GE(t, 0.05 - 1e-12);
    EXPECT_LE(t, kPi - 0.05 + 1e-12);
    EXPECT_GE(std::abs(t - kPi / 2), 0.05 - 1e-12);
  }
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 4));
  EXPECT_TRUE(sweep(c, {}, 1e-4, 1e-1).empty());
  EXPECT_EQ(sweep_csv({}), "theta,tau,slope,n_finest,delta_finest\n");
  EXPECT_THROW(sweep(c, {0.01}, std::pow(2.0, -10), std::pow(2.0, -4)), PreconditionError);
  EXPECT_THROW(sweep(c, {kPi / 2 + 0.01}, std::pow(2.0, -10), std::pow(2.0, -4)), PreconditionError);
}

TEST(Sweep, RationalDipAndParallelDeterminism) {
  Carpet c = catalog::cantor_product(Rational(1, 4), Rational(1, 4));
  auto grid = theta_grid(32, 0.05);
  SweepOptions one;
  SweepOptions many;
  many.jobs = 4;
  auto a = sweep(c, grid, std::pow(2.0, -14), std::pow(2.0, -6), one);
  auto b = sweep(c, grid, std::pow(2.0, -14), std::pow(2.0, -6), many);
  EXPECT_EQ(sweep_csv(a), sweep_csv(b));
  std::size_t arg = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].slope < a[arg].slope) arg = i;
  }
  double step = grid[1] - grid[0];
  EXPECT_LE(std::abs(a[arg].theta - kPi / 4), step + 1e-12);
  EXPECT_EQ(a[0].delta_finest, std::pow(2.0, -14));
}
