#include <gtest/gtest.h>

#include <cmath>

#include "carpetlab/catalog.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/subsystem.hpp"

using namespace carpetlab;

namespace {

GLCarpet mixed_two_row() {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 3), Rational(0)}, {Rational(1, 4), Rational(1, 2)}}});
  c.rows.push_back({Rational(1, 3), Rational(2, 3), {{Rational(1, 5), Rational(0)}}});
  return c;
}

// Exact multinomial r!/Π c! by repeated binomials, independent of the factorial route.
BigInt multinomial(std::vector<std::uint64_t> parts) {
  BigInt out = 1;
  std::uint64_t acc = 0;
  for (auto c : parts) {
    acc += c;
    BigInt b;
    mpz_bin_uiui(b.get_mpz_t(), acc, c);
    out *= b;
  }
  return out;
}

}  // namespace

TEST(OptimalWeights, UniformIsUniform) {
  auto c = to_gl(catalog::uniform_grid(Rational(1, 3), Rational(1, 2), 2, 2));
  auto w = optimal_weights(c);
  for (const auto& row : w.q)
    for (double q : row) EXPECT_NEAR(q, 0.25, 1e-6);
}

TEST(OptimalWeights, SingleRowGivesSimilarityWeights) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 4), Rational(0)}, {Rational(1, 8), Rational(1, 2)}}});
  auto w = optimal_weights(c);
  EXPECT_EQ(w.p_star[0], 1.0);
  EXPECT_NEAR(w.q[0][0], std::pow(0.25, w.t_star), 1e-12);
  EXPECT_NEAR(w.q[0][1], std::pow(0.125, w.t_star), 1e-12);
}

TEST(OptimalWeights, MixedCarpetRecomputes) {
  auto c = mixed_two_row();
  auto w = optimal_weights(c);
  double total = 0;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    double denom = 0;
    for (const auto& cell : c.rows[i].cells) denom += std::pow(cell.a.to_double(), w.t_star);
    for (std::size_t j = 0; j < c.rows[i].cells.size(); ++j) {
      EXPECT_NEAR(w.q[i][j], w.p_star[i] * std::pow(c.rows[i].cells[j].a.to_double(), w.t_star) / denom, 1e-14);
      total += w.q[i][j];
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(BuildSubsystem, UniformKFour) {
  auto c = to_gl(catalog::uniform_grid(Rational(1, 4), Rational(1, 2), 2, 2));
  auto plan = build_subsystem(c, 4);
  for (const auto& row : plan.counts)
    for (auto v : row) EXPECT_EQ(v, 1u);
  EXPECT_EQ(plan.r_k, 4u);
  EXPECT_EQ(gamma_k_exact(plan), 24);
  EXPECT_EQ(gamma_tilde_k_exact(plan), 6);
  EXPECT_NEAR(std::exp(plan.log_gamma_k), 24, 1e-9);
  EXPECT_NEAR(std::exp(plan.log_gamma_tilde_k), 6, 1e-9);
  EXPECT_EQ(plan.a_prime, Rational(1, 256));
  EXPECT_EQ(plan.b_prime, Rational(1, 16));
}

TEST(BuildSubsystem, KOneUsesEveryDigitOnce) {
  auto c = mixed_two_row();
  auto plan = build_subsystem(c, 1);
  EXPECT_EQ(plan.r_k, c.map_count());
}

TEST(BuildSubsystem, ApproachesDimensionFromBelow) {
  auto c = mixed_two_row();
  double dim = gl_dimension(c).value;
  double prev = 0;
  for (int k : {50, 100, 200}) {
    auto plan = build_subsystem(c, k);
    EXPECT_LE(plan.dim_k, dim + 1e-9);
    EXPECT_GE(plan.dim_k, prev - 1e-12);
    EXPECT_LE(plan.log_gamma_tilde_k, plan.log_gamma_k);
    EXPECT_LT(plan.a_prime, plan.b_prime);
    prev = plan.dim_k;
  }
  EXPECT_LT(dim - prev, 0.05);
}

TEST(BuildSubsystem, LogCountsMatchExact) {
  auto c = mixed_two_row();
  for (int k = 1; k <= 40; k += 3) {
    auto plan = build_subsystem(c, k);
    std::vector<std::uint64_t> parts;
    for (const auto& row : plan.counts) parts.insert(parts.end(), row.begin(), row.end());
    BigInt exact = multinomial(parts);
    EXPECT_EQ(gamma_k_exact(plan), exact);
    double log_exact = std::log(exact.get_d());
    EXPECT_NEAR(plan.log_gamma_k, log_exact, 1e-9 * std::max(1.0, log_exact));
  }
}

TEST(Enumerate, UniformKOne) {
  auto c = to_gl(catalog::uniform_grid(Rational(1, 4), Rational(1, 2), 2, 2));
  auto plan = build_subsystem(c, 1);
  auto maps = enumerate_subsystem_maps(plan, c, 1000);
  EXPECT_EQ(maps.size(), 24u);
  for (const auto& f : maps) EXPECT_EQ(f.x_scale, Rational(1, 256));
  EXPECT_THROW(enumerate_subsystem_maps(plan, c, 10), BudgetExceeded);
}

TEST(Enumerate, SingleDigit) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 3), Rational(0)}}});
  auto plan = build_subsystem(c, 1);
  EXPECT_EQ(enumerate_subsystem_maps(plan, c, 10).size(), 1u);
}

TEST(Enumerate, SubsystemIsSelfConsistent) {
  auto c = mixed_two_row();
  for (int k : {1, 2, 3}) {
    auto plan = build_subsystem(c, k);
    auto maps = enumerate_subsystem_maps(plan, c, 100000);
    EXPECT_EQ(BigInt(static_cast<unsigned long>(maps.size())), gamma_k_exact(plan));
    auto sub = gl_from_maps(maps);
    ASSERT_TRUE(sub.has_value());
    EXPECT_EQ(sub->rows.size(), gamma_tilde_k_exact(plan).get_ui());
    EXPECT_NEAR(gl_dimension(*sub).value, plan.dim_k, 1e-6);
  }
}

TEST(Irrationalize, AlreadyIrrational) {
  auto c = to_gl(catalog::uniform_grid(Rational(1, 3), Rational(1, 2), 2, 2));
  auto plan = build_subsystem(c, 3);
  auto adj = irrationalize_subsystem(plan, c);
  EXPECT_EQ(adj.power, 0);
  EXPECT_FALSE(adj.map_index.has_value());
  EXPECT_TRUE(adj.certified_irrational);
  EXPECT_NEAR(adj.dimension, plan.dim_k, 1e-12);
}

TEST(Irrationalize, RationalCarpetRejected) {
  auto c = to_gl(catalog::uniform_grid(Rational(1, 4), Rational(1, 2), 2, 2));
  EXPECT_THROW(irrationalize_subsystem(build_subsystem(c, 2), c), PreconditionError);
}

TEST(Irrationalize, RationalBaseComposesOnce) {
  // Plan scales come from the rational uniform carpet; composing with the
  // (1/3, 1/2) map of the second carpet breaks the resonance.
  auto base = to_gl(catalog::uniform_grid(Rational(1, 4), Rational(1, 2), 2, 2));
  auto plan = build_subsystem(base, 1);
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 3), Rational(0)}}});
  auto adj = irrationalize_subsystem(plan, c);
  EXPECT_EQ(adj.power, 1);
  ASSERT_TRUE(adj.map_index.has_value());
  EXPECT_EQ(adj.a, plan.a_prime * Rational(1, 3));
  EXPECT_EQ(adj.b, plan.b_prime * Rational(1, 2));
  EXPECT_TRUE(adj.certified_irrational);
  EXPECT_FALSE(log_ratio_rational(adj.a, adj.b).has_value());
}
