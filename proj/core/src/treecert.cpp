#include "carpetlab/treecert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "carpetlab/dimension.hpp"
#include "carpetlab/errors.hpp"
#include "carpetlab/parallel.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/rationality.hpp"
#include "carpetlab/separated.hpp"
#include "carpetlab/symbolic.hpp"

namespace carpetlab {

namespace {

constexpr double kSlack = 1e-12;
constexpr std::uint64_t kTableCap = 50'000'000;

std::string str(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require_valid(const UniformFibreCarpet& carpet) {
  auto report = validate_uniform(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
}

// Row classes: rows with identical cell offsets give identical x-geometry.
std::vector<std::uint32_t> row_classes(const UniformFibreCarpet& carpet) {
  std::vector<std::uint32_t> cls(carpet.m);
  for (std::size_t r = 0; r < carpet.m; ++r) {
    cls[r] = static_cast<std::uint32_t>(r);
    for (std::size_t q = 0; q < r; ++q) {
      if (carpet.cell_offsets[q] == carpet.cell_offsets[r]) {
        cls[r] = cls[q];
        break;
      }
    }
  }
  return cls;
}

std::vector<std::uint32_t> class_sequence(std::uint64_t code, const UniformFibreCarpet& carpet, int length,
                                          const std::vector<std::uint32_t>& cls) {
  auto letters = word_letters(code, carpet.m, length);
  for (auto& l : letters) l = cls[l];
  return letters;
}

// x-extent Σ a^i c[ξ_i][ν′_i] for all ν′, in code order.
std::vector<double> x_positions(const UniformFibreCarpet& carpet, const std::vector<std::uint32_t>& xi) {
  double a = carpet.a.to_double();
  std::vector<double> xs{0.0};
  double scale = 1;
  for (auto row : xi) {
    std::vector<double> next;
    next.reserve(xs.size() * carpet.n);
    for (double x : xs) {
      for (std::size_t c = 0; c < carpet.n; ++c) next.push_back(x + scale * carpet.cell_offsets[row][c].to_double());
    }
    xs = std::move(next);
    scale *= a;
  }
  return xs;
}

double y_position(const UniformFibreCarpet& carpet, std::uint64_t code, int length) {
  double b = carpet.b.to_double();
  double y = 0, scale = 1;
  for (auto l : word_letters(code, carpet.m, length)) {
    y += scale * carpet.row_offsets[l].to_double();
    scale *= b;
  }
  return y;
}

struct LocalRect {
  double lo, hi;
  Child child;
};

// Projected intervals of the offspring rectangles in local coordinates.
std::vector<LocalRect> local_intervals(const UniformFibreCarpet& carpet, const std::vector<std::uint32_t>& xi,
                                       const std::vector<Child>& children, int k, double skew) {
  auto xs = x_positions(carpet, xi);
  double w = std::pow(carpet.a.to_double(), static_cast<double>(xi.size()));
  double h = std::pow(carpet.b.to_double(), k);
  std::vector<LocalRect> out;
  out.reserve(children.size());
  for (const auto& c : children) {
    double base = skew * xs[c.nu_prime] + y_position(carpet, c.nu, k);
    double dx = skew * w;
    out.push_back({base + std::min(dx, 0.0), base + std::max(dx, 0.0) + h, c});
  }
  return out;
}

bool is_integer(double t) { return std::isfinite(t) && std::floor(t) == t && std::abs(t) < 64; }

struct SplitWord {
  int p = 0;  // jk - e_{s(j)-1}
  int q = 0;  // e_{s(j)} - jk
  int s = 0;
};

SplitWord split_at(const RotationSchedule& sched, int j) {
  if (j >= static_cast<int>(sched.s.size())) throw PreconditionError("schedule too short for level " + std::to_string(j));
  SplitWord sp;
  sp.s = sched.s[j];
  sp.p = j * sched.k - sched.e[sp.s - 1];
  sp.q = sched.e[sp.s] - j * sched.k;
  return sp;
}

std::vector<std::uint64_t> compute_theta(const LevelAlphabet& gamma, const SplitWord& sp, std::uint64_t m) {
  std::uint64_t mq = int_pow(m, sp.q);
  std::uint64_t mp = int_pow(m, sp.p);
  std::vector<std::uint64_t> out;
  for (std::uint64_t eta = 0; eta < mp; ++eta) {
    std::uint64_t phi = 0;
    for (std::uint64_t r = 0; r < mq; ++r) phi += gamma.member[eta * mq + r] ? 1 : 0;
    if (2 * phi > mq) out.push_back(eta);
  }
  return out;
}

std::vector<std::uint64_t> theta_prime(const LevelAlphabet& gamma, const SplitWord& sp, std::uint64_t m,
                                       std::uint64_t eta) {
  std::uint64_t mq = int_pow(m, sp.q);
  std::vector<std::uint64_t> out;
  for (std::uint64_t r = 0; r < mq; ++r) {
    if (gamma.member[eta * mq + r]) out.push_back(r);
  }
  return out;
}

// Codes (of length k - q) of ξ_{s(j)} ⋯ ξ_{s(j+1)-2} η″ with η″ ∈ Θ(j+1).
std::vector<std::uint64_t> g_tails(const CertTree& tree, int j, std::uint64_t m) {
  const auto& sched = tree.schedule;
  SplitWord cur = split_at(sched, j), nxt = split_at(sched, j + 1);
  std::vector<std::uint64_t> codes{0};
  for (int i = cur.s; i <= nxt.s - 2; ++i) {
    const auto& g = tree.gammas.at(i);
    auto words = g.words();
    std::uint64_t shift = int_pow(m, g.length);
    std::vector<std::uint64_t> next;
    next.reserve(codes.size() * words.size());
    for (auto c : codes) {
      for (auto w : words) next.push_back(c * shift + w);
    }
    codes = std::move(next);
    if (codes.size() > kTableCap) throw BudgetExceeded("offspring alphabet too large");
  }
  const auto& th = tree.thetas.at(j + 1);
  std::uint64_t shift = int_pow(m, nxt.p);
  std::vector<std::uint64_t> out;
  out.reserve(codes.size() * th.size());
  for (auto c : codes) {
    for (auto w : th) out.push_back(c * shift + w);
  }
  if (out.size() > kTableCap) throw BudgetExceeded("offspring alphabet too large");
  return out;
}

std::vector<std::uint64_t> xi_domain(const CertTree& tree, int j, std::uint64_t m) {
  const auto& sched = tree.schedule;
  int len = sched.e[j + 1] - sched.e[j];
  if (j <= sched.s[j] - 2) return tree.gammas.at(j).words();
  std::vector<std::uint64_t> all(int_pow(m, len));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::uint64_t letters_code(const std::vector<std::uint32_t>& w, std::size_t from, std::size_t to, std::uint64_t m) {
  std::uint64_t c = 0;
  for (std::size_t i = from; i < to; ++i) c = c * m + w[i];
  return c;
}

}  // namespace

std::uint64_t int_pow(std::uint64_t base, int exponent) {
  if (exponent < 0) throw PreconditionError("negative exponent");
  std::uint64_t r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base) {
      throw BudgetExceeded("word count overflows 64 bits");
    }
    r *= base;
  }
  return r;
}

std::uint64_t word_code(const std::vector<std::uint32_t>& letters, std::uint64_t base) {
  std::uint64_t c = 0;
  for (auto l : letters) {
    if (l >= base) throw PreconditionError("letter out of range");
    c = c * base + l;
  }
  return c;
}

std::vector<std::uint32_t> word_letters(std::uint64_t code, std::uint64_t base, int length) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(length));
  for (int i = length - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(code % base);
    code /= base;
  }
  return out;
}

int closed_form_e(const Rational& a, const Rational& b, int k, int j) {
  if (j == 0) return 0;
  return ell_of_k(a, b, j * k).ell;
}

RotationSchedule rotation_schedule(const Rational& a, const Rational& b, int k, int j_max) {
  if (!(a.sign() > 0 && a < b && b < Rational(1))) throw PreconditionError("need 0 < a < b < 1");
  if (k < 1) throw PreconditionError("k must be positive");
  if (j_max < 1) throw PreconditionError("j_max must be positive");
  if (auto r = log_ratio_rational(a, b)) {
    throw PreconditionError("log a / log b = " + std::to_string(r->first) + "/" + std::to_string(r->second) +
                            " is rational");
  }
  RotationSchedule sched;
  sched.k = k;
  sched.ell = ell_of_k(a, b, k).ell;
  sched.e.assign(1, 0);
  Rational ae(1), bjk(1);
  const Rational bk = b.pow(static_cast<unsigned long>(k));
  for (int j = 1; j <= j_max; ++j) {
    bjk *= bk;
    int prev = sched.e.back();
    Rational cand = ae * a.pow(static_cast<unsigned long>(sched.ell + 1));
    int e = cand < bjk ? prev + sched.ell : prev + sched.ell + 1;
    ae = cand < bjk ? ae * a.pow(static_cast<unsigned long>(sched.ell)) : cand;
    sched.e.push_back(e);
  }
  // invariants, recomputed from scratch
  const double log_a = log_of(a);
  for (int j = 0; j <= j_max; ++j) {
    Rational aej = a.pow(static_cast<unsigned long>(sched.e[j]));
    Rational bj = b.pow(static_cast<unsigned long>(j * k));
    if (!(bj <= aej && aej * a < bj)) throw Error("schedule invariant failed at j = " + std::to_string(j));
    sched.orbit.push_back(log_of(aej / bj) / -log_a);
  }
  sched.alpha = sched.orbit[1];
  sched.s.push_back(0);
  for (int j = 1; j * k <= sched.e.back(); ++j) {
    int s = 1;
    while (sched.e[s] < j * k) ++s;
    sched.s.push_back(s);
  }
  return sched;
}

DiscrepancyReport equidistribution_check(double alpha, std::size_t horizon, double lo, double hi) {
  if (horizon < 100) throw PreconditionError("horizon must be at least 100");
  std::vector<double> x(horizon);
  std::size_t hits = 0;
  for (std::size_t j = 1; j <= horizon; ++j) {
    double v = static_cast<double>(j) * alpha;
    v -= std::floor(v);
    x[j - 1] = v;
    if (v > lo && v < hi) ++hits;
  }
  std::sort(x.begin(), x.end());
  double n = static_cast<double>(horizon), d = 0;
  for (std::size_t i = 0; i < horizon; ++i) {
    d = std::max({d, static_cast<double>(i + 1) / n - x[i], x[i] - static_cast<double>(i) / n});
  }
  DiscrepancyReport r;
  r.horizon = horizon;
  r.star_discrepancy = d;
  r.interval_length = std::max(0.0, hi - lo);
  r.frequency = static_cast<double>(hits) / n;
  r.frequency_error = std::abs(r.frequency - r.interval_length);
  return r;
}

const char* alphabet_kind_name(AlphabetKind k) {
  switch (k) {
    case AlphabetKind::full: return "full";
    case AlphabetKind::B: return "B";
    case AlphabetKind::B_tilde: return "B_tilde";
  }
  return "?";
}

std::size_t LevelAlphabet::size() const {
  return static_cast<std::size_t>(std::count(member.begin(), member.end(), 1));
}

std::vector<std::uint64_t> LevelAlphabet::words() const {
  std::vector<std::uint64_t> out;
  for (std::uint64_t c = 0; c < member.size(); ++c) {
    if (member[c]) out.push_back(c);
  }
  return out;
}

EmpiricalTauOracle::EmpiricalTauOracle(const UniformFibreCarpet& carpet, int k, double tau, double epsilon,
                                       bool tilde, int cells, int trials, std::uint64_t seed)
    : tau_(tau), cells_(cells) {
  require_valid(carpet);
  if (cells < 1) throw PreconditionError("need at least one τ-cell");
  if (!(epsilon > 0 && epsilon < 1)) throw PreconditionError("ε must lie in (0,1)");
  int ell = ell_of_k(carpet.a, carpet.b, k).ell;
  if (ell == 0) throw PreconditionError("ℓ(k) = 0, choose a larger k");
  SeparatedConfig cfg;
  double a = carpet.a.to_double(), b = carpet.b.to_double();
  cfg.gamma = std::min(uniform_fibre_dimension(carpet), 0.999);
  cfg.rho = std::pow(b, k);
  cfg.A = std::max(std::sqrt(1 + 1 / (a * a)), 2.0);
  cfg.A1 = static_cast<double>(carpet.n);
  cfg.A2 = 9.0 * static_cast<double>(carpet.n) * std::pow(b, -cfg.gamma);
  cfg.epsilon = epsilon;

  std::uint64_t count = int_pow(carpet.m, ell);
  if (count > kTableCap) throw BudgetExceeded("m^ℓ too large for the empirical oracle");
  auto cls = row_classes(carpet);
  std::map<std::vector<std::uint32_t>, std::size_t> class_of;
  std::vector<std::uint64_t> reps;
  std::vector<std::size_t> xi_class(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    auto key = class_sequence(c, carpet, ell, cls);
    auto [it, fresh] = class_of.emplace(key, reps.size());
    if (fresh) reps.push_back(c);
    xi_class[c] = it->second;
  }
  std::vector<ProjectionParam> params;
  for (int c = 0; c < cells; ++c) {
    params.push_back(ProjectionParam::from_tau(tau + (c + 0.5) / cells, carpet.a, tilde));
  }
  // ratio[class][cell]
  std::vector<std::vector<double>> ratio(reps.size(), std::vector<double>(cells));
  for (std::size_t r = 0; r < reps.size(); ++r) {
    Word xi{word_letters(reps[r], carpet.m, ell)};
    auto fam = approx_square_family(carpet, k, xi);
    auto boxes = std::vector<Box>();
    boxes.reserve(fam.rects.size());
    for (const auto& q : fam.rects) boxes.push_back(to_box(q));
    for (int c = 0; c < cells; ++c) {
      ratio[r][c] = check_theorem21(boxes, params[c].theta, cfg, trials, seed).min_ratio;
    }
  }
  delta_hat_ = std::numeric_limits<double>::infinity();
  for (const auto& row : ratio) delta_hat_ = std::min(delta_hat_, fit_delta_hat(row, 1.0 / cells, epsilon));
  double need = (1 - std::sqrt(epsilon)) * static_cast<double>(count);
  for (int c = 0; c < cells; ++c) {
    std::vector<char> mask(count);
    std::size_t size = 0;
    for (std::uint64_t x = 0; x < count; ++x) {
      mask[x] = ratio[xi_class[x]][c] >= delta_hat_ ? 1 : 0;
      size += mask[x];
    }
    good_.push_back(static_cast<double>(size) > need);
    sets_.push_back(std::move(mask));
  }
}

std::optional<std::vector<char>> EmpiricalTauOracle::good_set(double t) const {
  double u = t - tau_;
  u -= std::floor(u);
  auto c = std::min(static_cast<int>(u * cells_), cells_ - 1);
  if (!good_[c]) return std::nullopt;
  return sets_[c];
}

std::vector<double> CertTree::log_sizes() const {
  std::vector<double> out{0.0};
  for (const auto& lv : levels) out.push_back(out.back() + std::log(static_cast<double>(lv.count)));
  return out;
}

int choose_j0(const RotationSchedule& schedule) {
  for (int j = 1; j <= schedule.j_max(); ++j) {
    if (schedule.ell < j * schedule.k - schedule.e[j]) return j;
  }
  throw PreconditionError("no admissible starting level within the schedule");
}

CertTree build_tree(const UniformFibreCarpet& carpet, double tau, int k, double epsilon, int depth,
                    const GoodAngleOracle& oracle, const TreeOptions& options, bool tilde) {
  require_valid(carpet);
  if (!(epsilon > 0 && epsilon < 1)) throw PreconditionError("ε must lie in (0,1)");
  if (!std::isfinite(tau)) throw PreconditionError("τ must be finite");
  int ell = ell_of_k(carpet.a, carpet.b, k).ell;
  if (ell == 0) throw PreconditionError("ℓ(k) = 0, choose a larger k");
  const std::uint64_t m = carpet.m, n = carpet.n;

  CertTree tree;
  tree.carpet = carpet;
  tree.k = k;
  tree.tau = tau;
  tree.epsilon = epsilon;
  tree.tilde = tilde;
  tree.depth = depth;
  tree.oracle = oracle.name();
  int j_max = static_cast<int>(std::ceil(static_cast<double>(depth + 2) * k / ell)) + 2;
  tree.schedule = rotation_schedule(carpet.a, carpet.b, k, j_max);
  const auto& sched = tree.schedule;
  tree.j0 = choose_j0(sched);
  if (depth < tree.j0) {
    throw PreconditionError("depth " + std::to_string(depth) + " is below the starting level " +
                            std::to_string(tree.j0));
  }
  const int j0 = tree.j0;
  const std::uint64_t ell_words = int_pow(m, ell);

  for (int i = j0; i <= sched.s.at(depth) - 1; ++i) {
    LevelAlphabet g;
    g.i = i;
    g.t = tau + sched.orbit[i];
    g.length = sched.e[i + 1] - sched.e[i];
    std::uint64_t size = int_pow(m, g.length);
    if (size > kTableCap) throw BudgetExceeded("level alphabet too large");
    auto set = oracle.good_set(g.t);
    if (!set) {
      g.kind = AlphabetKind::full;
      g.member.assign(size, 1);
    } else {
      if (set->size() != ell_words) throw PreconditionError("oracle mask has the wrong size");
      g.kind = g.length == ell ? AlphabetKind::B : AlphabetKind::B_tilde;
      g.member.assign(size, 0);
      std::uint64_t tail = size / ell_words;
      for (std::uint64_t c = 0; c < size; ++c) g.member[c] = (*set)[c / tail];
    }
    tree.gammas.emplace(i, std::move(g));
  }
  for (int j = j0; j <= depth; ++j) {
    SplitWord sp = split_at(sched, j);
    auto th = compute_theta(tree.gammas.at(sp.s - 1), sp, m);
    if (th.empty()) throw PreconditionError("Θ(" + std::to_string(j) + ") is empty");
    tree.thetas.emplace(j, std::move(th));
  }

  // root
  tree.root_sigma.assign(static_cast<std::size_t>(sched.e[j0]), 0);
  SplitWord sp0 = split_at(sched, j0);
  for (int i = j0; i <= sp0.s - 2; ++i) {
    const auto& g = tree.gammas.at(i);
    auto words = g.words();
    if (words.empty()) throw PreconditionError("empty level alphabet at " + std::to_string(i));
    for (auto l : word_letters(words.front(), m, g.length)) tree.root_sigma.push_back(l);
  }
  for (auto l : word_letters(tree.thetas.at(j0).front(), m, sp0.p)) tree.root_sigma.push_back(l);
  tree.root_sigma_prime.assign(static_cast<std::size_t>(sched.e[j0]), 0);

  auto cls = row_classes(carpet);
  std::uint64_t work = 0;
  for (int j = j0; j < depth; ++j) {
    LevelTable lv;
    lv.j = j;
    lv.t = tau + sched.orbit[j];
    lv.good = tree.gammas.at(j).kind != AlphabetKind::full;
    lv.xi_length = sched.e[j + 1] - sched.e[j];
    SplitWord sp = split_at(sched, j);
    lv.eta_length = sp.p;
    const auto& gprev = tree.gammas.at(sp.s - 1);
    auto tails = g_tails(tree, j, m);
    if (tails.empty()) throw PreconditionError("empty offspring alphabet at level " + std::to_string(j));
    const std::uint64_t tail_shift = int_pow(m, k - sp.q);

    std::map<std::vector<std::uint64_t>, std::size_t> prime_ids;
    std::vector<std::vector<std::uint64_t>> prime_sets;
    std::vector<std::size_t> eta_prime;
    const auto& th = tree.thetas.at(j);
    for (auto eta : th) {
      auto tp = theta_prime(gprev, sp, m, eta);
      auto [it, fresh] = prime_ids.emplace(tp, prime_sets.size());
      if (fresh) prime_sets.push_back(tp);
      eta_prime.push_back(it->second);
    }
    auto xis = xi_domain(tree, j, m);
    if (xis.size() * th.size() > kTableCap) throw BudgetExceeded("level table too large");

    // geometry key -> list id
    std::map<std::pair<std::vector<std::uint32_t>, std::size_t>, std::uint32_t> geo;
    std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> geo_keys;
    for (auto xi : xis) {
      auto cs = class_sequence(xi, carpet, lv.xi_length, cls);
      for (std::size_t h = 0; h < th.size(); ++h) {
        auto key = std::make_pair(cs, eta_prime[h]);
        auto [it, fresh] = geo.emplace(key, static_cast<std::uint32_t>(geo_keys.size()));
        if (fresh) geo_keys.push_back(key);
        lv.entries.emplace(std::make_pair(xi, th[h]), it->second);
      }
    }
    lv.child_lists.resize(geo_keys.size());
    if (!lv.good) {
      lv.count = 1;
      for (std::size_t g = 0; g < geo_keys.size(); ++g) {
        lv.child_lists[g] = {Child{prime_sets[geo_keys[g].second].front() * tail_shift + tails.front(), 0}};
      }
    } else {
      const std::uint64_t xcount = int_pow(n, lv.xi_length);
      for (const auto& key : geo_keys) {
        work += prime_sets[key.second].size() * tails.size() * xcount;
      }
      if (work > options.work_budget) throw BudgetExceeded("tree construction exceeds the work budget");
      double skew = ProjectionParam::from_tau(lv.t, carpet.a, tilde).skew();
      double rho = std::pow(carpet.b.to_double(), k);
      parallel_for(geo_keys.size(), options.jobs, [&](std::size_t g) {
        const auto& [cs, pid] = geo_keys[g];
        std::vector<Child> cand;
        for (auto ep : prime_sets[pid]) {
          for (auto tl : tails) {
            for (std::uint64_t x = 0; x < xcount; ++x) cand.push_back({ep * tail_shift + tl, x});
          }
        }
        // class ids are representative row indices
        auto rects = local_intervals(carpet, cs, cand, k, skew);
        std::sort(rects.begin(), rects.end(), [](const LocalRect& p, const LocalRect& q) {
          if (p.hi != q.hi) return p.hi < q.hi;
          if (p.lo != q.lo) return p.lo < q.lo;
          if (p.child.nu != q.child.nu) return p.child.nu < q.child.nu;
          return p.child.nu_prime < q.child.nu_prime;
        });
        std::vector<Child> chosen;
        double last = -std::numeric_limits<double>::infinity();
        for (const auto& r : rects) {
          if (chosen.empty() || r.lo - last >= rho * (1 - kSlack)) {
            chosen.push_back(r.child);
            last = r.hi;
          }
        }
        lv.child_lists[g] = std::move(chosen);
      });
      std::size_t cmin = std::numeric_limits<std::size_t>::max();
      for (const auto& l : lv.child_lists) cmin = std::min(cmin, l.size());
      if (cmin == 0) throw Error("good level " + std::to_string(j) + " produced an empty separated family");
      for (auto& l : lv.child_lists) l.resize(cmin);
      lv.count = cmin;
    }
    tree.levels.push_back(std::move(lv));
  }
  return tree;
}

bool TreeReport::has(char property) const {
  return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.property == property; });
}

bool TreeReport::only(char property) const {
  return has(property) &&
         std::all_of(violations.begin(), violations.end(), [&](const auto& v) { return v.property == property; });
}

std::string TreeReport::summary() const {
  if (violations.empty()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].property << "@" << violations[i].level << ": " << violations[i].message;
  }
  return os.str();
}

TreeReport verify_tree(const CertTree& tree, const UniformFibreCarpet& carpet, double tau, std::size_t node_cap) {
  TreeReport rep;
  auto fail = [&](char p, int level, std::string msg) { rep.violations.push_back({p, level, std::move(msg)}); };
  if (!(tree.carpet == carpet)) fail('A', tree.j0, "tree was built for a different carpet");
  if (tree.tau != tau) fail('A', tree.j0, "tree was built for τ = " + str(tree.tau));
  if (!rep.ok()) return rep;
  const std::uint64_t m = carpet.m, n = carpet.n;
  const int k = tree.k, j0 = tree.j0, depth = tree.depth;
  const auto& sched = tree.schedule;

  // B: schedule, exact sizes
  RotationSchedule fresh;
  try {
    fresh = rotation_schedule(carpet.a, carpet.b, k, sched.j_max());
  } catch (const Error& e) {
    fail('B', 0, e.what());
    return rep;
  }
  if (fresh.e != sched.e || fresh.s != sched.s || fresh.ell != sched.ell) fail('B', 0, "schedule differs from recurrence");
  for (int j = 0; j <= sched.j_max(); ++j) {
    if (closed_form_e(carpet.a, carpet.b, k, j) != sched.e[j]) fail('B', j, "e_j differs from closed form");
    Rational w = carpet.a.pow(static_cast<unsigned long>(sched.e[j]));
    Rational h = carpet.b.pow(static_cast<unsigned long>(j * k));
    if (!(h <= w && w * carpet.a < h)) fail('B', j, "rectangle is not an approximate square");
  }
  for (int j = 0; j <= sched.j_max() && j < static_cast<int>(fresh.orbit.size()); ++j) {
    if (std::abs(fresh.orbit[j] - sched.orbit[j]) > 1e-12) fail('B', j, "orbit value mismatch");
  }
  if (!rep.ok()) return rep;
  if (depth < j0 || choose_j0(sched) != j0) fail('A', j0, "bad starting level");
  if (static_cast<int>(tree.levels.size()) != depth - j0) fail('A', j0, "level count mismatch");
  if (!rep.ok()) return rep;

  // A/C: alphabets and Θ
  const double root_eps = std::sqrt(tree.epsilon);
  for (const auto& [i, g] : tree.gammas) {
    int len = sched.e[i + 1] - sched.e[i];
    if (g.length != len || g.member.size() != int_pow(m, len)) {
      fail('A', i, "alphabet has the wrong word length");
      continue;
    }
    bool kind_ok = true;
    if (g.kind == AlphabetKind::full) {
      kind_ok = g.size() == g.member.size();
    } else if (g.kind == AlphabetKind::B) {
      kind_ok = len == sched.ell;
    } else {
      kind_ok = len == sched.ell + 1;
      for (std::uint64_t c = 0; kind_ok && c < g.member.size(); ++c) kind_ok = g.member[c] == g.member[c - c % m];
    }
    if (!kind_ok) fail('C', i, std::string("alphabet inconsistent with kind ") + alphabet_kind_name(g.kind));
  }
  for (int i = j0; i <= sched.s[depth] - 1; ++i) {
    if (!tree.gammas.count(i)) fail('C', i, "missing level alphabet");
  }
  if (!rep.ok()) return rep;
  for (int j = j0; j <= depth; ++j) {
    SplitWord sp = split_at(sched, j);
    const auto& gprev = tree.gammas.at(sp.s - 1);
    auto th = compute_theta(gprev, sp, m);
    auto it = tree.thetas.find(j);
    if (it == tree.thetas.end() || it->second != th) {
      fail('C', j, "Θ does not match its alphabet");
      continue;
    }
    double full = static_cast<double>(gprev.member.size());
    if (static_cast<double>(gprev.size()) >= (1 - root_eps) * full) {
      double need = (1 - 2 * root_eps) * static_cast<double>(int_pow(m, sp.p));
      if (!(static_cast<double>(th.size()) >= need)) fail('C', j, "Θ below its count bound");
    }
  }
  if (!rep.ok()) return rep;

  auto block_ok = [&](const std::vector<std::uint32_t>& sigma, int i) {
    auto c = letters_code(sigma, sched.e[i], sched.e[i + 1], m);
    return tree.gammas.at(i).member[c] != 0;
  };
  auto eta_ok = [&](const std::vector<std::uint32_t>& sigma, int j) {
    SplitWord sp = split_at(sched, j);
    auto c = letters_code(sigma, sched.e[sp.s - 1], static_cast<std::size_t>(j * k), m);
    return std::binary_search(tree.thetas.at(j).begin(), tree.thetas.at(j).end(), c);
  };

  // A/C: root
  if (tree.root_sigma.size() != static_cast<std::size_t>(j0 * k) ||
      tree.root_sigma_prime.size() != static_cast<std::size_t>(sched.e[j0])) {
    fail('A', j0, "root word lengths");
    return rep;
  }
  for (auto l : tree.root_sigma)
    if (l >= m) fail('A', j0, "root letter out of range");
  for (auto l : tree.root_sigma_prime)
    if (l >= n) fail('A', j0, "root x-letter out of range");
  if (!rep.ok()) return rep;
  for (int i = j0; i <= sched.s[j0] - 2; ++i) {
    if (!block_ok(tree.root_sigma, i)) fail('C', j0, "root block " + std::to_string(i) + " outside Γ");
  }
  if (!eta_ok(tree.root_sigma, j0)) fail('C', j0, "root tail outside Θ");

  // per level tables
  auto cls = row_classes(carpet);
  const double rho_local = std::pow(carpet.b.to_double(), k);
  for (const auto& lv : tree.levels) {
    const int j = lv.j;
    SplitWord sp = split_at(sched, j);
    int dlen = sched.e[j + 1] - sched.e[j];
    if (lv.xi_length != dlen || lv.eta_length != sp.p) fail('A', j, "table word lengths");
    bool good = tree.gammas.at(j).kind != AlphabetKind::full;
    if (lv.good != good) fail('C', j, "good flag disagrees with the level alphabet");
    if (std::abs(lv.t - (tau + sched.orbit[j])) > 1e-12) fail('B', j, "level angle mismatch");
    // E
    if (lv.count < 1) fail('E', j, "C_j = 0");
    if (!lv.good && lv.count != 1) fail('E', j, "bad level with C_j ≠ 1");
    for (std::size_t g = 0; g < lv.child_lists.size(); ++g) {
      if (lv.child_lists[g].size() != lv.count) {
        fail('E', j, "child list " + std::to_string(g) + " has " + std::to_string(lv.child_lists[g].size()) +
                         " children, C_j = " + std::to_string(lv.count));
      }
    }
    // C: completeness and membership
    const std::uint64_t mk = int_pow(m, k), nx = int_pow(n, dlen), tail_shift = int_pow(m, k - sp.q);
    auto tails = g_tails(tree, j, m);
    std::sort(tails.begin(), tails.end());
    const auto& gprev = tree.gammas.at(sp.s - 1);
    const std::uint64_t mq = int_pow(m, sp.q);
    std::size_t required = 0;
    for (auto xi : xi_domain(tree, j, m)) {
      for (auto eta : tree.thetas.at(j)) {
        ++required;
        if (!lv.entries.count({xi, eta})) {
          fail('C', j, "table misses a required (ξ, η) key");
          break;
        }
      }
      if (rep.has('C')) break;
    }
    if (lv.entries.size() != required) fail('C', j, "table has unexpected keys");
    std::set<std::tuple<std::vector<std::uint32_t>, std::uint32_t>> local_done;
    std::set<std::pair<std::uint64_t, std::uint32_t>> member_done;
    for (const auto& [key, id] : lv.entries) {
      if (id >= lv.child_lists.size()) {
        fail('A', j, "dangling child list");
        continue;
      }
      const auto& list = lv.child_lists[id];
      if (member_done.insert({key.second, id}).second) {
        for (const auto& c : list) {
          if (c.nu >= mk || c.nu_prime >= nx) {
            fail('A', j, "child word out of range");
            continue;
          }
          std::uint64_t ep = c.nu / tail_shift, tl = c.nu % tail_shift;
          if (!gprev.member[key.second * mq + ep]) fail('C', j, "child prefix outside Θ′");
          if (!std::binary_search(tails.begin(), tails.end(), tl)) fail('C', j, "child outside G_k");
        }
      }
      // D: local separation, per x-geometry
      auto cs = class_sequence(key.first, carpet, dlen, cls);
      if (lv.good && local_done.insert({cs, id}).second) {
        double skew = ProjectionParam::from_tau(lv.t, carpet.a, tree.tilde).skew();
        auto rects = local_intervals(carpet, cs, list, k, skew);
        std::sort(rects.begin(), rects.end(), [](const auto& p, const auto& q) { return p.lo < q.lo; });
        for (std::size_t r = 1; r < rects.size(); ++r) {
          if (rects[r].lo - rects[r - 1].hi < rho_local * (1 - kSlack)) {
            fail('D', j, "siblings closer than b^k in Π_t");
            break;
          }
        }
      }
    }
  }

  // materialized levels: global counts, membership and separation
  struct Node {
    std::vector<std::uint32_t> sigma, sigma_prime;
  };
  std::vector<Node> nodes{{tree.root_sigma, tree.root_sigma_prime}};
  const bool exact = is_integer(tau);
  const Rational skew_exact = [&] {
    if (!exact) return Rational(0);
    Rational s = tau >= 0 ? Rational(1) / carpet.a.pow(static_cast<unsigned long>(tau))
                          : carpet.a.pow(static_cast<unsigned long>(-tau));
    return tree.tilde ? -s : s;
  }();
  const double skew_d = ProjectionParam::from_tau(tau, carpet.a, tree.tilde).skew();
  rep.materialized_through = j0;
  for (const auto& lv : tree.levels) {
    const int j = lv.j;
    if (nodes.size() * lv.count > node_cap) {
      rep.notes.push_back("global check stops at level " + std::to_string(j) + " (node cap)");
      break;
    }
    SplitWord sp = split_at(sched, j);
    std::vector<Node> next;
    bool broken = false;
    for (const auto& nd : nodes) {
      auto xi = letters_code(nd.sigma, sched.e[j], sched.e[j + 1], m);
      auto eta = letters_code(nd.sigma, sched.e[sp.s - 1], static_cast<std::size_t>(j * k), m);
      auto it = lv.entries.find({xi, eta});
      if (it == lv.entries.end() || it->second >= lv.child_lists.size()) {
        fail('C', j, "node has no offspring entry");
        broken = true;
        break;
      }
      for (const auto& c : lv.child_lists[it->second]) {
        Node ch = nd;
        for (auto l : word_letters(c.nu, m, k)) ch.sigma.push_back(l);
        for (auto l : word_letters(c.nu_prime, n, sched.e[j + 1] - sched.e[j])) ch.sigma_prime.push_back(l);
        next.push_back(std::move(ch));
      }
    }
    if (broken) break;
    if (next.size() != nodes.size() * lv.count) fail('E', j + 1, "|R_{j+1}| ≠ C_j·|R_j|");
    SplitWord sn = split_at(sched, j + 1);
    for (const auto& ch : next) {
      if (!std::equal(tree.root_sigma.begin(), tree.root_sigma.end(), ch.sigma.begin()) ||
          !std::equal(tree.root_sigma_prime.begin(), tree.root_sigma_prime.end(), ch.sigma_prime.begin())) {
        fail('A', j + 1, "lost the root prefix");
        break;
      }
      bool ok = eta_ok(ch.sigma, j + 1);
      for (int i = sp.s - 1; ok && i <= sn.s - 2; ++i) ok = block_ok(ch.sigma, i);
      if (!ok) {
        fail('C', j + 1, "node word leaves the level alphabets");
        break;
      }
    }
    // D: global Π_τ gaps at scale b^{(j+1)k}
    const int len = (j + 1) * k, ex = sched.e[j + 1];
    std::vector<std::pair<double, double>> iv;
    iv.reserve(next.size());
    bool checked = false;
    if (exact && next.size() <= 20'000) {
      std::vector<std::pair<Rational, Rational>> ivx;
      Rational w = carpet.a.pow(static_cast<unsigned long>(ex)), h = carpet.b.pow(static_cast<unsigned long>(len));
      for (const auto& ch : next) {
        Rational x(0), y(0), sa(1), sb(1);
        for (int i = 0; i < ex; ++i) {
          x += sa * carpet.cell_offsets[ch.sigma[i]][ch.sigma_prime[i]];
          sa *= carpet.a;
        }
        for (int i = 0; i < len; ++i) {
          y += sb * carpet.row_offsets[ch.sigma[i]];
          sb *= carpet.b;
        }
        Rational base = skew_exact * x + y, dx = skew_exact * w;
        ivx.push_back({base + std::min(dx, Rational(0)), base + std::max(dx, Rational(0)) + h});
      }
      std::sort(ivx.begin(), ivx.end());
      for (std::size_t r = 1; r < ivx.size(); ++r) {
        if (ivx[r].first - ivx[r - 1].second < h) {
          fail('D', j + 1, "nodes closer than b^{jk} in Π_τ (exact)");
          break;
        }
      }
      checked = true;
    } else {
      double h = std::pow(carpet.b.to_double(), len);
      if (h < 1e-9 * (1 + std::abs(skew_d))) {
        rep.notes.push_back("global gap check skipped at level " + std::to_string(j + 1) + " (precision)");
      } else {
        double a = carpet.a.to_double(), b = carpet.b.to_double(), w = std::pow(a, ex);
        for (const auto& ch : next) {
          double x = 0, y = 0, sa = 1, sb = 1;
          for (int i = 0; i < ex; ++i) {
            x += sa * carpet.cell_offsets[ch.sigma[i]][ch.sigma_prime[i]].to_double();
            sa *= a;
          }
          for (int i = 0; i < len; ++i) {
            y += sb * carpet.row_offsets[ch.sigma[i]].to_double();
            sb *= b;
          }
          double base = skew_d * x + y, dx = skew_d * w;
          iv.push_back({base + std::min(dx, 0.0), base + std::max(dx, 0.0) + h});
        }
        std::sort(iv.begin(), iv.end());
        for (std::size_t r = 1; r < iv.size(); ++r) {
          if (iv[r].first - iv[r - 1].second < h * (1 - 1e-9)) {
            fail('D', j + 1, "nodes closer than b^{jk} in Π_τ");
            break;
          }
        }
        checked = true;
      }
    }
    if (checked) rep.materialized_through = j + 1;
    nodes = std::move(next);
  }
  return rep;
}

double lower_bound(const CertTree& tree, const UniformFibreCarpet& carpet, std::size_t node_cap) {
  auto rep = verify_tree(tree, carpet, tree.tau, node_cap);
  if (!rep.ok()) throw PreconditionError("tree failed verification: " + rep.summary());
  if (tree.depth == tree.j0) return 0;
  double sum = 0;
  for (const auto& lv : tree.levels) sum += std::log(static_cast<double>(lv.count));
  return sum / (static_cast<double>(tree.depth - tree.j0) * -tree.k * log_of(carpet.b));
}

namespace {

std::vector<Child>& fault_list(CertTree& tree, int level) {
  int idx = level - tree.j0;
  if (idx < 0 || idx >= static_cast<int>(tree.levels.size())) throw PreconditionError("no such level");
  auto& lv = tree.levels[static_cast<std::size_t>(idx)];
  if (lv.count < 2 || lv.child_lists.empty()) throw PreconditionError("level has fewer than two offspring");
  return lv.child_lists.front();
}

}  // namespace

void inject_duplicate_child(CertTree& tree, int level) {
  auto& list = fault_list(tree, level);
  list[1] = list[0];
}

void inject_missing_child(CertTree& tree, int level) { fault_list(tree, level).pop_back(); }

UniformFibreCarpet iterate_carpet(const UniformFibreCarpet& carpet, int q) {
  require_valid(carpet);
  if (q < 1) throw PreconditionError("iterate must be positive");
  std::uint64_t rows = int_pow(carpet.m, q), cells = int_pow(carpet.n, q);
  if (rows * cells > 1'000'000) throw BudgetExceeded("iterate has too many maps");
  UniformFibreCarpet out;
  out.a = carpet.a.pow(static_cast<unsigned long>(q));
  out.b = carpet.b.pow(static_cast<unsigned long>(q));
  out.m = rows;
  out.n = cells;
  for (std::uint64_t r = 0; r < rows; ++r) {
    auto rw = word_letters(r, carpet.m, q);
    Rational y(0), sb(1);
    for (auto l : rw) {
      y += sb * carpet.row_offsets[l];
      sb *= carpet.b;
    }
    out.row_offsets.push_back(y);
    std::vector<Rational> xs;
    for (std::uint64_t c = 0; c < cells; ++c) {
      auto cw = word_letters(c, carpet.n, q);
      Rational x(0), sa(1);
      for (int i = 0; i < q; ++i) {
        x += sa * carpet.cell_offsets[rw[i]][cw[i]];
        sa *= carpet.a;
      }
      xs.push_back(x);
    }
    out.cell_offsets.push_back(std::move(xs));
  }
  return out;
}

ThinResult thin_to_subunit(const UniformFibreCarpet& carpet, int max_iterate) {
  require_valid(carpet);
  double g0 = uniform_fibre_dimension(carpet);
  if (g0 < 1) return {carpet, 1, carpet.m, carpet.n, g0};
  double la = -log_of(carpet.a), lb = -log_of(carpet.b);
  std::optional<ThinResult> best;
  for (int q = 1; q <= max_iterate; ++q) {
    std::uint64_t rows = int_pow(carpet.m, q), cells = int_pow(carpet.n, q);
    if (rows * cells > 1'000'000) break;
    for (std::uint64_t mr = 1; mr <= rows; ++mr) {
      for (std::uint64_t nc = 1; nc <= cells; ++nc) {
        double g = std::log(static_cast<double>(mr)) / (q * lb) + std::log(static_cast<double>(nc)) / (q * la);
        if (g >= 1 - 1e-12 || g <= 0) continue;
        if (!best || g > best->dimension + 1e-12) best = ThinResult{{}, q, mr, nc, g};
      }
    }
  }
  if (!best) throw PreconditionError("no subsystem with dimension in (0,1)");
  auto it = iterate_carpet(carpet, best->iterate);
  it.m = best->rows;
  it.n = best->cells;
  it.row_offsets.resize(best->rows);
  it.cell_offsets.resize(best->rows);
  for (auto& row : it.cell_offsets) row.resize(best->cells);
  best->carpet = std::move(it);
  best->dimension = uniform_fibre_dimension(best->carpet);
  return *best;
}

}  // namespace carpetlab
