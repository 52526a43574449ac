#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/dimension.hpp"
#include "carpetlab/rationality.hpp"

namespace carpetlab {

struct WeightPlan {
  ProbVector p_star;
  double t_star = 0.0;
  std::vector<std::vector<double>> q;  // q[i][j] over rows/cells
};

struct SubsystemPlan {
  int k = 0;
  std::vector<std::vector<std::uint64_t>> counts;  // ⌈k q_ij⌉
  std::uint64_t r_k = 0;
  double log_gamma_k = 0.0;
  double log_gamma_tilde_k = 0.0;
  Rational a_prime;
  Rational b_prime;
  ExponentVector a_prime_ev;
  ExponentVector b_prime_ev;
  double dim_k = 0.0;
};

struct AdjustedSubsystem {
  std::optional<std::size_t> map_index;  // into as_maps(carpet)
  int power = 0;
  Rational a;
  Rational b;
  ExponentVector a_ev;
  ExponentVector b_ev;
  bool certified_irrational = false;  // exponent vectors re-checked as non-parallel
  double dimension = 0.0;
};

WeightPlan optimal_weights(const GLCarpet& carpet, const OptimizerOptions& options = {});
SubsystemPlan build_subsystem(const GLCarpet& carpet, int k, const OptimizerOptions& options = {});
SubsystemPlan build_subsystem(const GLCarpet& carpet, const WeightPlan& weights, int k);

// Exact |Γ_k| and |Γ̃_k|.
BigInt gamma_k_exact(const SubsystemPlan& plan);
BigInt gamma_tilde_k_exact(const SubsystemPlan& plan);

AdjustedSubsystem irrationalize_subsystem(const SubsystemPlan& plan, const GLCarpet& carpet);

// Every word of Γ_k composed into one map, in lexicographic word order.
// Throws BudgetExceeded when |Γ_k| > cap.
std::vector<AffineMap> enumerate_subsystem_maps(const SubsystemPlan& plan, const GLCarpet& carpet,
                                                std::uint64_t cap);

// Barański carpets enter this module only when every kept digit has a_i < b_j.
GLCarpet subsystem_source(const Carpet& carpet);

}  // namespace carpetlab
