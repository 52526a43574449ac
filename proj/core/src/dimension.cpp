#include "carpetlab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "carpetlab/errors.hpp"
#include "carpetlab/parallel.hpp"

namespace carpetlab {

namespace {

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

struct GLNumeric {
  std::vector<double> log_b;
  std::vector<std::vector<double>> log_a;
  double t_max = 1.0;

  explicit GLNumeric(const GLCarpet& c) {
    for (const auto& row : c.rows) {
      log_b.push_back(log_of(row.b));
      std::vector<double> la;
      double max_log_a = -std::numeric_limits<double>::infinity();
      for (const auto& cell : row.cells) {
        la.push_back(log_of(cell.a));
        max_log_a = std::max(max_log_a, la.back());
      }
      t_max = std::max(t_max, std::log(static_cast<double>(la.size())) / -max_log_a + 1.0);
      log_a.push_back(std::move(la));
    }
  }

  // f(t) and f'(t)
  std::pair<double, double> eval(const std::vector<double>& p, double t) const {
    double f = 0, df = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0) continue;
      double s = 0, ds = 0;
      for (double la : log_a[i]) {
        double v = std::exp(t * la);
        s += v;
        ds += v * la;
      }
      f += p[i] * std::log(s);
      df += p[i] * ds / s;
    }
    return {f, df};
  }

  double solve(const std::vector<double>& p) const {
    double lo = 0, hi = t_max;
    auto [f0, d0] = eval(p, 0.0);
    if (f0 <= 0) return 0.0;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      auto [f, df] = eval(p, t);
      if (std::abs(f) <= 1e-15) return t;
      if (f > 0) lo = t;
      else hi = t;
      double next = df < 0 ? t - f / df : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == t || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) return t;
      t = next;
    }
    return t;
  }

  double objective(const std::vector<double>& p) const {
    double h = 0, lb = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      h += xlogx(p[i]);
      lb += p[i] * log_b[i];
    }
    return h / lb + solve(p);
  }
};

struct BaranskiNumeric {
  std::vector<double> log_a, log_b;
  std::vector<Digit> digits;

  explicit BaranskiNumeric(const BaranskiCarpet& c) : digits(c.digits) {
    for (const auto& a : c.col_widths) log_a.push_back(log_of(a));
    for (const auto& b : c.row_heights) log_b.push_back(log_of(b));
  }

  std::pair<double, double> eval(const std::vector<double>& p) const {
    std::vector<double> q(log_a.size(), 0.0), r(log_b.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      q[digits[k].col] += p[k];
      r[digits[k].row] += p[k];
    }
    double hq = 0, hr = 0, qa = 0, rb = 0, cond_q = 0, cond_r = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      hq += xlogx(q[i]);
      qa += q[i] * log_a[i];
    }
    for (std::size_t j = 0; j < r.size(); ++j) {
      hr += xlogx(r[j]);
      rb += r[j] * log_b[j];
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] <= 0) continue;
      cond_q += p[k] * std::log(p[k] / q[digits[k].col]);
      cond_r += p[k] * std::log(p[k] / r[digits[k].row]);
    }
    double dx = hq / qa + cond_q / rb;
    double dy = hr / rb + cond_r / qa;
    return {dx, dy};
  }
};

std::vector<double> softmax(const std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

struct LocalResult {
  std::vector<double> p;
  double value;
  int iterations;
};

using Objective = std::function<double(const std::vector<double>&)>;

// BFGS ascent in softmax coordinates with central-difference gradients.
LocalResult ascend(const Objective& f, std::vector<double> z, const OptimizerOptions& opt) {
  const std::size_t n = z.size();
  auto g_of = [&](const std::vector<double>& x) { return -f(softmax(x)); };
  auto grad = [&](std::vector<double> x) {
    std::vector<double> g(n);
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      double xi = x[i];
      x[i] = xi + h;
      double up = g_of(x);
      x[i] = xi - h;
      double dn = g_of(x);
      x[i] = xi;
      g[i] = (up - dn) / (2 * h);
    }
    return g;
  };
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  double fx = g_of(z);
  std::vector<double> gx = grad(z);
  int it = 0;
  int quiet = 0;
  for (; it < opt.max_iterations; ++it) {
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * gx[j];
    double slope = std::inner_product(d.begin(), d.end(), gx.begin(), 0.0);
    if (slope >= 0) {
      for (std::size_t i = 0; i < n; ++i) d[i] = -gx[i];
      std::fill(H.begin(), H.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
      slope = -std::inner_product(gx.begin(), gx.end(), gx.begin(), 0.0);
    }
    if (slope > -1e-300) break;
    double step = 1.0;
    std::vector<double> zn(n);
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) zn[i] = z[i] + step * d[i];
      fn = g_of(zn);
      if (fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> gn = grad(zn);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = zn[i] - z[i];
      y[i] = gn[i] - gx[i];
    }
    double improvement = fx - fn;
    z = zn;
    fx = fn;
    gx = gn;
    double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-18) {
      std::vector<double> Hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
      double yHy = std::inner_product(y.begin(), y.end(), Hy.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          H[i * n + j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) - (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
    }
    if (improvement < opt.tolerance) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }
  return {softmax(z), -fx, it};
}

struct MaxResult {
  std::vector<double> p;
  double value;
  OptimizerDiagnostics diag;
};

MaxResult maximize(const Objective& f, std::size_t n, const OptimizerOptions& opt) {
  if (n == 1) return {{1.0}, f({1.0}), {0, 1, 0.0}};
  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(n, 0.0));
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<double> z(n, 0.0);
    z[v] = 6.0;
    starts.push_back(z);
  }
  std::mt19937_64 rng(opt.seed);
  std::exponential_distribution<double> expo(1.0);
  while (starts.size() < static_cast<std::size_t>(std::max(opt.starts, 16))) {
    std::vector<double> z(n);
    for (auto& v : z) v = std::log(expo(rng) + 1e-300);
    starts.push_back(z);
  }
  std::vector<LocalResult> results(starts.size());
  parallel_for(starts.size(), opt.jobs, [&](std::size_t i) { results[i] = ascend(f, starts[i], opt); });
  MaxResult best{results[0].p, results[0].value, {}};
  double worst = results[0].value;
  for (const auto& r : results) {
    best.diag.iterations += r.iterations;
    if (r.value > best.value) {
      best.value = r.value;
      best.p = r.p;
    }
    worst = std::min(worst, r.value);
  }
  best.diag.starts = static_cast<int>(results.size());
  best.diag.spread = best.value - worst;
  return best;
}

void check_size(const ProbVector& p, std::size_t n) {
  if (p.size() != n) throw PreconditionError("probability vector has wrong length");
}

// Visits every lattice point of the simplex with denominator R.
void lattice(std::size_t n, int R, const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<int> k(n, 0);
  std::vector<double> p(n);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == n) {
      k[i] = left;
      for (std::size_t j = 0; j < n; ++j) p[j] = static_cast<double>(k[j]) / R;
      visit(p);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, R);
}

double binomial(double n, double k) {
  return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1));
}

}  // namespace

ProbVector::ProbVector(std::vector<double> e) : entries(std::move(e)) {
  if (entries.empty()) throw PreconditionError("empty probability vector");
  double s = 0;
  for (double v : entries) {
    if (!(v >= 0)) throw PreconditionError("negative probability entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) throw PreconditionError("probability vector does not sum to 1");
}

ProbVector ProbVector::uniform(std::size_t n) { return ProbVector(std::vector<double>(n, 1.0 / n)); }

double solve_t(const ProbVector& p, const GLCarpet& carpet) {
  check_size(p, carpet.rows.size());
  return GLNumeric(carpet).solve(p.entries);
}

double t_residual(const ProbVector& p, const GLCarpet& carpet, double t) {
  check_size(p, carpet.rows.size());
  return GLNumeric(carpet).eval(p.entries, t).first;
}

double gl_objective(const ProbVector& p, const GLCarpet& carpet) {
  check_size(p, carpet.rows.size());
  return GLNumeric(carpet).objective(p.entries);
}

DimensionReport gl_dimension(const GLCarpet& carpet, const OptimizerOptions& options) {
  auto report = validate_gl(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  GLNumeric num(carpet);
  auto best = maximize([&](const std::vector<double>& p) { return num.objective(p); },
                       carpet.rows.size(), options);
  DimensionReport out;
  out.value = best.value;
  out.maximizer.entries = best.p;
  out.t_of_p = num.solve(best.p);
  out.diagnostics = best.diag;
  return out;
}

double baranski_dx(const ProbVector& p, const BaranskiCarpet& carpet) {
  check_size(p, carpet.digits.size());
  return BaranskiNumeric(carpet).eval(p.entries).first;
}

double baranski_dy(const ProbVector& p, const BaranskiCarpet& carpet) {
  check_size(p, carpet.digits.size());
  return BaranskiNumeric(carpet).eval(p.entries).second;
}

DimensionReport baranski_dimension(const BaranskiCarpet& carpet, const OptimizerOptions& options) {
  auto report = validate_baranski(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  BaranskiNumeric num(carpet);
  const std::size_t n = carpet.digits.size();
  auto bx = maximize([&](const std::vector<double>& p) { return num.eval(p).first; }, n, options);
  auto by = maximize([&](const std::vector<double>& p) { return num.eval(p).second; }, n, options);
  DimensionReport out;
  out.d_x = bx.value;
  out.d_y = by.value;
  const auto& best = bx.value >= by.value ? bx : by;
  out.value = best.value;
  out.maximizer.entries = best.p;
  out.diagnostics = {bx.diag.iterations + by.diag.iterations, bx.diag.starts + by.diag.starts,
                     std::max(bx.diag.spread, by.diag.spread)};
  return out;
}

double uniform_fibre_dimension(const UniformFibreCarpet& carpet) {
  auto report = validate_uniform(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  return std::log(static_cast<double>(carpet.m)) / -log_of(carpet.b) +
         std::log(static_cast<double>(carpet.n)) / -log_of(carpet.a);
}

DimensionReport dimension(const Carpet& carpet, const OptimizerOptions& options) {
  if (const auto* bk = std::get_if<BaranskiCarpet>(&carpet)) return baranski_dimension(*bk, options);
  if (const auto* gl = std::get_if<GLCarpet>(&carpet)) return gl_dimension(*gl, options);
  return gl_dimension(to_gl(std::get<UniformFibreCarpet>(carpet)), options);
}

double grid_oracle_dimension(const Carpet& carpet, int resolution, std::size_t max_points) {
  auto report = validate(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  if (resolution < 1) throw PreconditionError("resolution must be positive");
  std::function<double(const std::vector<double>&)> f;
  std::size_t n;
  std::optional<GLNumeric> gl;
  std::optional<BaranskiNumeric> bk;
  if (const auto* b = std::get_if<BaranskiCarpet>(&carpet)) {
    bk.emplace(*b);
    n = b->digits.size();
    f = [&](const std::vector<double>& p) {
      auto [dx, dy] = bk->eval(p);
      return std::max(dx, dy);
    };
  } else {
    GLCarpet g = std::holds_alternative<GLCarpet>(carpet)
                     ? std::get<GLCarpet>(carpet)
                     : to_gl(std::get<UniformFibreCarpet>(carpet));
    gl.emplace(g);
    n = g.rows.size();
    f = [&](const std::vector<double>& p) { return gl->objective(p); };
  }
  if (n > 6) throw BudgetExceeded("grid oracle: simplex has more than 6 vertices");
  double points = binomial(resolution + n - 1.0, n - 1.0);
  if (points > static_cast<double>(max_points)) {
    throw BudgetExceeded("grid oracle: " + std::to_string(static_cast<long long>(points)) +
                         " lattice points exceed budget");
  }
  double best = -std::numeric_limits<double>::infinity();
  lattice(n, resolution, [&](const std::vector<double>& p) { best = std::max(best, f(p)); });
  return best;
}

}  // namespace carpetlab
