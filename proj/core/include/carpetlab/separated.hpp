#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/symbolic.hpp"

namespace carpetlab {

struct SeparatedConfig {
  double rho = 0;
  double A = 2;
  double A1 = 1;
  double A2 = 1;
  double gamma = 0.5;
  double epsilon = 0.04;
  // Threshold for a single-angle pass; 0 means "any positive ratio".
  double delta = 0;

  void validate() const;
};

// A = max(√(1 + a^{-2}), 2), A1 = n, A2 = 9n·b^{-γ}, ρ = b^k.
SeparatedConfig default_config(const UniformFibreCarpet& carpet, int k, double epsilon);

// Orthogonal projection x cosθ + y sinθ; principal directions allowed.
Interval project_theta(const Box& box, double theta);

// Maximum subfamily whose projected intervals are pairwise ≥ ρ apart, as indices
// sorted by projected position.
std::vector<std::size_t> max_separated_subfamily(const std::vector<Box>& rects, double theta, double rho);
std::vector<std::size_t> max_separated_subfamily(const std::vector<CylinderRect>& rects,
                                                 const ProjectionParam& param, double rho);

bool is_separated(const std::vector<Box>& rects, const std::vector<std::size_t>& chosen, double theta, double rho);

struct HypothesisReport {
  std::vector<Violation> violations;
  double max_intersection_ratio = 0;  // worst count / (A2 (ℓ/ρ)^γ) over sampled disks
  bool ok() const { return violations.empty(); }
};

HypothesisReport check_hypotheses(const std::vector<Box>& rects, const SeparatedConfig& config,
                                  std::uint64_t seed = 1, int disk_samples = 200);

struct Theorem21Check {
  double theta = 0;
  double min_ratio = 0;          // min over sampled Q′ of |Q1| / (ε η² |Q|)
  std::size_t worst_size = 0;    // |Q′| attaining min_ratio
  std::size_t worst_selected = 0;
  bool pass = false;
};

// Sampled subfamilies: the full family, a single element, projection-clustered
// windows of sizes |Q|/2, |Q|/4, |Q|/8, and `trials` random subsets.
Theorem21Check check_theorem21(const std::vector<Box>& rects, double theta, const SeparatedConfig& config,
                               int trials = 32, std::uint64_t seed = 1);
Theorem21Check check_theorem21(const CylinderFamily& family, const ProjectionParam& param,
                               const SeparatedConfig& config, int trials = 32, std::uint64_t seed = 1);

struct GoodAngleSet {
  std::vector<double> thetas;
  std::vector<double> min_ratio;
  std::vector<bool> pass;
  double step = 0;
  double delta_hat = 0;
  double bad_measure = 0;  // step · #fail
};

// Largest threshold t (among observed ratios) with step·#{ratio < t} ≤ ε.
double fit_delta_hat(const std::vector<double>& ratios, double step, double epsilon);

// Spacing of the lattice the angles sit on.
double grid_step(const std::vector<double>& thetas);

GoodAngleSet good_angle_set(const std::vector<Box>& rects, const std::vector<double>& thetas,
                            const SeparatedConfig& config, int trials = 32, std::uint64_t seed = 1, int jobs = 1);

// Angle-grid runs [first, last] of a boolean mask.
std::vector<std::pair<double, double>> grid_intervals(const std::vector<double>& thetas,
                                                      const std::vector<bool>& mask);

struct XiAggregate {
  int k = 0;
  int ell = 0;
  std::vector<Word> xis;
  std::vector<double> thetas;
  std::vector<double> xi_delta_hat;
  double delta_hat = 0;             // min over ξ
  std::vector<double> fraction;     // |Ξ_θ| / m^ℓ
  std::vector<bool> in_J;           // fraction > 1 - √ε
  std::vector<std::pair<double, double>> J;
  double step = 0;
  double complement_measure = 0;
  double bound = 0;                 // √ε
  HypothesisReport hypotheses;      // merged over all ξ
};

XiAggregate per_xi_aggregate(const UniformFibreCarpet& carpet, int k, const SeparatedConfig& config,
                             const std::vector<double>& thetas, int trials = 32, std::uint64_t seed = 1,
                             int jobs = 1, std::size_t budget = 4096);

// I₁ of normalized Lebesgue measure on the union of the rectangles.
double riesz_energy(const std::vector<Box>& rects);
double riesz_energy(const CylinderFamily& family);

// ∫ f_θ² for the projection of normalized Lebesgue measure, from exact bin masses.
double density_l2(const std::vector<Box>& rects, double theta, double bin_width);
double density_l2(const CylinderFamily& family, const ProjectionParam& param, double bin_width);

std::string good_angle_csv(const GoodAngleSet& set);
std::string xi_fraction_csv(const XiAggregate& agg);

}  // namespace carpetlab
