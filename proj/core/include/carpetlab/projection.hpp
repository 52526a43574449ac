#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/rational.hpp"
#include "carpetlab/symbolic.hpp"

namespace carpetlab {

enum class ProjectionMode { orthogonal, pi_tau };

// θ and its τ-chart. For θ ∈ (π/2, π) the Π̃ branch is used (tilde = true).
struct ProjectionParam {
  double theta = 0;
  double tau = 0;
  Rational a_ref;
  bool tilde = false;

  static ProjectionParam from_theta(double theta, const Rational& a_ref);
  static ProjectionParam from_tau(double tau, const Rational& a_ref, bool tilde = false);
  // x coefficient of Π_τ (a^{-τ}, negated on the Π̃ branch).
  double skew() const;
};

struct Interval {
  double lo = 0, hi = 0;
};

Interval project_rect(const CylinderRect& rect, const ProjectionParam& param, ProjectionMode mode);
Interval project_box(const Box& box, const ProjectionParam& param, ProjectionMode mode);

// Number of δ-grid cells met by the projected cover. The grid is anchored at the
// minimum of the projected unit square. θ = 0 and θ = π/2 (orthogonal mode) use
// the 1-d cover of the x- or y-marginal IFS.
std::int64_t box_count_projection(const std::vector<AffineMap>& maps, const ProjectionParam& param, double delta,
                                  ProjectionMode mode = ProjectionMode::orthogonal,
                                  std::size_t budget = 50'000'000);
std::int64_t box_count_projection(const Carpet& carpet, const ProjectionParam& param, double delta,
                                  ProjectionMode mode = ProjectionMode::orthogonal,
                                  std::size_t budget = 50'000'000);

// Counting step on a precomputed cover.
std::int64_t count_projected_cells(const std::vector<Box>& boxes, const ProjectionParam& param, double delta,
                                   ProjectionMode mode);
// Indices of the marked cells, ascending; cell i is [lo + iδ, lo + (i+1)δ) with lo the hull minimum.
std::vector<std::int64_t> marked_cells(const std::vector<Box>& boxes, const ProjectionParam& param, double delta,
                                       ProjectionMode mode);

struct BoxCountCurve {
  std::vector<std::pair<double, std::int64_t>> scales;  // (δ, N(δ)), coarsest first
  double slope = 0;
  std::vector<double> increments;  // per-octave log2 N(δ/2) - log2 N(δ)
};

struct EstimateOptions {
  int drop_coarsest = 2;
  ProjectionMode mode = ProjectionMode::orthogonal;
  std::size_t budget = 50'000'000;
  int jobs = 1;
};

// δ = delta_max, delta_max/2, ... down to delta_min.
std::vector<double> dyadic_ladder(double delta_min, double delta_max);

// Least-squares slope of log N against log(1/δ), ignoring the first `drop` scales.
double fit_slope(const std::vector<std::pair<double, std::int64_t>>& scales, int drop);

BoxCountCurve estimate_projection_dimension(const std::vector<AffineMap>& maps, const ProjectionParam& param,
                                            double delta_min, double delta_max, const EstimateOptions& opts = {});
BoxCountCurve estimate_projection_dimension(const Carpet& carpet, const ProjectionParam& param, double delta_min,
                                            double delta_max, const EstimateOptions& opts = {});

struct SweepRow {
  double theta = 0;
  double tau = 0;
  double slope = 0;
  std::int64_t n_finest = 0;
  double delta_finest = 0;
  BoxCountCurve curve;
};

struct SweepOptions {
  double margin = 0.05;
  int drop_coarsest = 2;
  std::size_t budget = 50'000'000;
  int jobs = 1;
};

// `count` angles in [margin, π/2 - margin] ∪ [π/2 + margin, π - margin], one
// lattice per arc, containing π/4 (and 3π/4 once the second arc reaches it).
std::vector<double> theta_grid(std::size_t count, double margin);

std::vector<SweepRow> sweep(const std::vector<AffineMap>& maps, const std::vector<double>& thetas, double delta_min,
                            double delta_max, const SweepOptions& opts = {});
std::vector<SweepRow> sweep(const Carpet& carpet, const std::vector<double>& thetas, double delta_min,
                            double delta_max, const SweepOptions& opts = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);

// τ-chart reference scale: the x-scale of the first map.
Rational tau_reference(const std::vector<AffineMap>& maps);

}  // namespace carpetlab
