#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/dimension.hpp"

namespace testsupport {

// log_m Σ_j t_j^{log m / log n}, t_j = digits in row j; a_i = 1/n, b_j = 1/m.
inline double mcmullen(const carpetlab::BaranskiCarpet& c) {
  const double n = static_cast<double>(c.col_widths.size());
  const double m = static_cast<double>(c.row_heights.size());
  std::map<std::size_t, int> per_row;
  for (const auto& d : c.digits) per_row[d.row]++;
  double s = 0;
  for (const auto& [row, t] : per_row) s += std::pow(static_cast<double>(t), std::log(m) / std::log(n));
  return std::log(s) / std::log(m);
}

inline double closed_form_uniform(double a, double b, double m, double n) {
  return std::log(m) / -std::log(b) + std::log(n) / -std::log(a);
}

// Root of Σ p_i log Σ_j a_ij^t by scanning `points` samples of [0, t_max] for
// the sign change, then interpolating linearly inside the bracketing cell.
inline double sign_scan_t(const std::vector<double>& p, const std::vector<std::vector<double>>& a,
                          double t_max, int points) {
  auto f = [&](double t) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == 0) continue;
      double inner = 0;
      for (double v : a[i]) inner += std::pow(v, t);
      s += p[i] * std::log(inner);
    }
    return s;
  };
  double prev_t = 0, prev_f = f(0);
  if (prev_f <= 0) return 0;
  for (int k = 1; k <= points; ++k) {
    double t = t_max * k / points;
    double v = f(t);
    if (v <= 0) return prev_t + (t - prev_t) * prev_f / (prev_f - v);
    prev_t = t;
    prev_f = v;
  }
  return NAN;
}

}  // namespace testsupport
