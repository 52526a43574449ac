#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "carpetlab/carpet.hpp"

namespace carpetlab {

struct ProbVector {
  std::vector<double> entries;

  ProbVector() = default;
  explicit ProbVector(std::vector<double> e);  // validates
  std::size_t size() const { return entries.size(); }
  double operator[](std::size_t i) const { return entries[i]; }
  static ProbVector uniform(std::size_t n);
};

struct OptimizerOptions {
  int starts = 16;
  std::uint64_t seed = 1;
  int max_iterations = 5000;
  double tolerance = 1e-12;
  int jobs = 1;
};

struct OptimizerDiagnostics {
  int iterations = 0;       // summed over starts
  int starts = 0;
  double spread = 0.0;      // best minus worst local optimum
};

struct DimensionReport {
  double value = 0.0;
  ProbVector maximizer;
  std::optional<double> t_of_p;
  std::optional<double> d_x;
  std::optional<double> d_y;
  OptimizerDiagnostics diagnostics;
};

// Root of Σ p_i log Σ_j a_ij^t = 0.
double solve_t(const ProbVector& p, const GLCarpet& carpet);
double t_residual(const ProbVector& p, const GLCarpet& carpet, double t);
double gl_objective(const ProbVector& p, const GLCarpet& carpet);
DimensionReport gl_dimension(const GLCarpet& carpet, const OptimizerOptions& options = {});

// Marginals over D in digit order.
double baranski_dx(const ProbVector& p, const BaranskiCarpet& carpet);
double baranski_dy(const ProbVector& p, const BaranskiCarpet& carpet);
DimensionReport baranski_dimension(const BaranskiCarpet& carpet, const OptimizerOptions& options = {});

double uniform_fibre_dimension(const UniformFibreCarpet& carpet);

DimensionReport dimension(const Carpet& carpet, const OptimizerOptions& options = {});

// Exhaustive maximization on the simplex lattice with step 1/resolution.
// Throws BudgetExceeded past max_points or when the simplex has more than 6 vertices.
double grid_oracle_dimension(const Carpet& carpet, int resolution, std::size_t max_points = 20'000'000);

}  // namespace carpetlab
