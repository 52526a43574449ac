#include "carpetlab/subsystem.hpp"

#include <algorithm>
#include <cmath>

#include "carpetlab/errors.hpp"

namespace carpetlab {

namespace {

BigInt factorial(std::uint64_t n) {
  BigInt r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

double dim_of(double log_gamma, double log_gamma_tilde, double log_a, double log_b) {
  return log_gamma_tilde / -log_b + (log_gamma - log_gamma_tilde) / -log_a;
}

}  // namespace

WeightPlan optimal_weights(const GLCarpet& carpet, const OptimizerOptions& options) {
  auto rep = gl_dimension(carpet, options);
  WeightPlan plan;
  plan.p_star = rep.maximizer;
  plan.t_star = *rep.t_of_p;
  for (std::size_t i = 0; i < carpet.rows.size(); ++i) {
    const auto& cells = carpet.rows[i].cells;
    double denom = 0;
    std::vector<double> w;
    for (const auto& cell : cells) {
      w.push_back(std::pow(cell.a.to_double(), plan.t_star));
      denom += w.back();
    }
    for (double& v : w) v = plan.p_star[i] * v / denom;
    plan.q.push_back(std::move(w));
  }
  return plan;
}

SubsystemPlan build_subsystem(const GLCarpet& carpet, int k, const OptimizerOptions& options) {
  return build_subsystem(carpet, optimal_weights(carpet, options), k);
}

SubsystemPlan build_subsystem(const GLCarpet& carpet, const WeightPlan& weights, int k) {
  if (k < 1) throw PreconditionError("k must be positive");
  if (k > 1'000'000'000) throw PreconditionError("k too large: counts would overflow");
  SubsystemPlan plan;
  plan.k = k;
  double log_a_total = 0, log_b_total = 0;
  for (std::size_t i = 0; i < carpet.rows.size(); ++i) {
    const Row& row = carpet.rows[i];
    std::vector<std::uint64_t> counts;
    for (std::size_t j = 0; j < row.cells.size(); ++j) {
      double v = std::ceil(k * weights.q[i][j] - 1e-9);
      counts.push_back(static_cast<std::uint64_t>(std::max(0.0, v)));
    }
    plan.counts.push_back(std::move(counts));
  }
  plan.a_prime = Rational(1);
  plan.b_prime = Rational(1);
  double lg = 0, lgt = 0;
  for (std::size_t i = 0; i < carpet.rows.size(); ++i) {
    const Row& row = carpet.rows[i];
    std::uint64_t row_total = 0;
    auto eb = ExponentVector::of(row.b);
    for (std::size_t j = 0; j < row.cells.size(); ++j) {
      std::uint64_t c = plan.counts[i][j];
      if (c == 0) continue;
      row_total += c;
      lg -= std::lgamma(static_cast<double>(c) + 1);
      log_a_total += static_cast<double>(c) * log_of(row.cells[j].a);
      log_b_total += static_cast<double>(c) * log_of(row.b);
      plan.a_prime *= row.cells[j].a.pow(c);
      plan.b_prime *= row.b.pow(c);
      plan.a_prime_ev += ExponentVector::of(row.cells[j].a).scaled(static_cast<std::int64_t>(c));
      plan.b_prime_ev += eb.scaled(static_cast<std::int64_t>(c));
    }
    plan.r_k += row_total;
    lgt -= std::lgamma(static_cast<double>(row_total) + 1);
  }
  double lr = std::lgamma(static_cast<double>(plan.r_k) + 1);
  plan.log_gamma_k = lr + lg;
  plan.log_gamma_tilde_k = lr + lgt;
  plan.dim_k = dim_of(plan.log_gamma_k, plan.log_gamma_tilde_k, log_a_total, log_b_total);
  return plan;
}

BigInt gamma_k_exact(const SubsystemPlan& plan) {
  BigInt r = factorial(plan.r_k);
  for (const auto& row : plan.counts)
    for (auto c : row) r /= factorial(c);
  return r;
}

BigInt gamma_tilde_k_exact(const SubsystemPlan& plan) {
  BigInt r = factorial(plan.r_k);
  for (const auto& row : plan.counts) {
    std::uint64_t total = 0;
    for (auto c : row) total += c;
    r /= factorial(total);
  }
  return r;
}

AdjustedSubsystem irrationalize_subsystem(const SubsystemPlan& plan, const GLCarpet& carpet) {
  auto cls = classify_gl_type(carpet);
  if (cls.verdict == TypeVerdict::Rational) {
    throw PreconditionError("irrationalize_subsystem: carpet is of rational type");
  }
  auto maps = as_maps(carpet);
  auto [idx, power] = select_irrational_composition(ScaleEV{plan.a_prime_ev, plan.b_prime_ev}, maps);
  AdjustedSubsystem out;
  out.map_index = idx;
  out.power = power;
  out.a = plan.a_prime;
  out.b = plan.b_prime;
  out.a_ev = plan.a_prime_ev;
  out.b_ev = plan.b_prime_ev;
  if (idx) {
    out.a *= maps[*idx].x_scale.pow(power);
    out.b *= maps[*idx].y_scale.pow(power);
    out.a_ev += ExponentVector::of(maps[*idx].x_scale).scaled(power);
    out.b_ev += ExponentVector::of(maps[*idx].y_scale).scaled(power);
  }
  out.certified_irrational = !parallel_ratio(out.a_ev, out.b_ev).has_value() &&
                             out.a_ev.value() == out.a && out.b_ev.value() == out.b;
  out.dimension = dim_of(plan.log_gamma_k, plan.log_gamma_tilde_k, log_of(out.a), log_of(out.b));
  return out;
}

std::vector<AffineMap> enumerate_subsystem_maps(const SubsystemPlan& plan, const GLCarpet& carpet,
                                                std::uint64_t cap) {
  BigInt total = gamma_k_exact(plan);
  if (total > BigInt(static_cast<unsigned long>(cap))) {
    throw BudgetExceeded("|Γ_k| = " + total.get_str() + " exceeds cap " + std::to_string(cap));
  }
  auto maps = as_maps(carpet);
  std::vector<std::size_t> word;
  std::size_t flat = 0;
  for (const auto& row : plan.counts) {
    for (auto c : row) {
      word.insert(word.end(), c, flat);
      ++flat;
    }
  }
  std::vector<AffineMap> out;
  out.reserve(total.get_ui());
  do {
    AffineMap f = AffineMap::identity();
    for (std::size_t d : word) f = f.compose(maps[d]);
    out.push_back(std::move(f));
  } while (std::next_permutation(word.begin(), word.end()));
  return out;
}

GLCarpet subsystem_source(const Carpet& carpet) {
  if (const auto* gl = std::get_if<GLCarpet>(&carpet)) return *gl;
  if (const auto* u = std::get_if<UniformFibreCarpet>(&carpet)) return to_gl(*u);
  auto gl = to_gl(std::get<BaranskiCarpet>(carpet));
  if (!gl) {
    throw PreconditionError(
        "subsystem: Barański carpet is not a Gatzouras-Lalley carpet (some kept digit has a_i >= b_j)");
  }
  return *gl;
}

}  // namespace carpetlab
