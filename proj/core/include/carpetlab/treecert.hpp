#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carpetlab/carpet.hpp"
#include "carpetlab/rational.hpp"

namespace carpetlab {

// Words over Σ_N of fixed length are stored as base-N codes, first letter most significant.
std::uint64_t word_code(const std::vector<std::uint32_t>& letters, std::uint64_t base);
std::vector<std::uint32_t> word_letters(std::uint64_t code, std::uint64_t base, int length);
std::uint64_t int_pow(std::uint64_t base, int exponent);  // throws BudgetExceeded on overflow

struct RotationSchedule {
  int k = 0;
  int ell = 0;
  double alpha = 0;
  std::vector<int> e;         // e[0] = 0, e[j] for j = 1..j_max
  std::vector<int> s;         // s[j] for j with jk <= e[j_max]; s[0] = 0
  std::vector<double> orbit;  // T^j(0)

  int j_max() const { return static_cast<int>(e.size()) - 1; }
};

// e_j by the exact recurrence; invariants verified before returning.
RotationSchedule rotation_schedule(const Rational& a, const Rational& b, int k, int j_max);

// max{e : a^e >= b^{jk}}, by exact comparison.
int closed_form_e(const Rational& a, const Rational& b, int k, int j);

struct DiscrepancyReport {
  std::size_t horizon = 0;
  double star_discrepancy = 0;
  double interval_length = 0;
  double frequency = 0;
  double frequency_error = 0;
};

// Orbit T^j(0) = jα mod 1 for j = 1..horizon; frequency of visits to (lo, hi).
DiscrepancyReport equidistribution_check(double alpha, std::size_t horizon, double lo = 0, double hi = 0);

enum class AlphabetKind { full, B, B_tilde };
const char* alphabet_kind_name(AlphabetKind k);

// Γ_k(i): words of length e_{i+1} - e_i over the row alphabet.
struct LevelAlphabet {
  int i = 0;
  double t = 0;
  AlphabetKind kind = AlphabetKind::full;
  int length = 0;
  std::vector<char> member;  // indexed by word code

  std::size_t size() const;
  std::vector<std::uint64_t> words() const;
};

// Stand-in for the good set F̃ and the collections B_t.
class GoodAngleOracle {
 public:
  virtual ~GoodAngleOracle() = default;
  // nullopt when t ∉ F̃; otherwise B_t as a mask over codes of Σ_m^{ℓ(k)}.
  virtual std::optional<std::vector<char>> good_set(double t) const = 0;
  virtual std::string name() const = 0;
};

class AcceptAllOracle : public GoodAngleOracle {
 public:
  AcceptAllOracle(std::size_t m, int ell) : size_(int_pow(m, ell)) {}
  std::optional<std::vector<char>> good_set(double) const override { return std::vector<char>(size_, 1); }
  std::string name() const override { return "accept_all"; }

 private:
  std::uint64_t size_;
};

class RejectAllOracle : public GoodAngleOracle {
 public:
  std::optional<std::vector<char>> good_set(double) const override { return std::nullopt; }
  std::string name() const override { return "reject_all"; }
};

class FunctionOracle : public GoodAngleOracle {
 public:
  using Fn = std::function<std::optional<std::vector<char>>(double)>;
  FunctionOracle(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}
  std::optional<std::vector<char>> good_set(double t) const override { return fn_(t); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

// Empirical F̃ on a grid of `cells` equal cells of [τ, τ+1): at each cell midpoint the
// ratio of the separated harness is computed for every Q_k(ξ); δ̂_ξ is fitted with
// measure step 1/cells and ε, B_t = {ξ : ratio ≥ min δ̂}, and the cell is good when
// |B_t| > (1 - √ε) m^ℓ.
class EmpiricalTauOracle : public GoodAngleOracle {
 public:
  EmpiricalTauOracle(const UniformFibreCarpet& carpet, int k, double tau, double epsilon, bool tilde = false,
                     int cells = 32, int trials = 8, std::uint64_t seed = 1);
  std::optional<std::vector<char>> good_set(double t) const override;
  std::string name() const override { return "empirical_tau"; }
  double delta_hat() const { return delta_hat_; }
  const std::vector<bool>& good_cells() const { return good_; }

 private:
  double tau_;
  int cells_;
  double delta_hat_ = 0;
  std::vector<bool> good_;
  std::vector<std::vector<char>> sets_;
};

struct Child {
  std::uint64_t nu = 0;        // over Σ_m^k
  std::uint64_t nu_prime = 0;  // over Σ_n^{e_{j+1} - e_j}
  friend bool operator==(const Child&, const Child&) = default;
};

struct LevelTable {
  int j = 0;
  double t = 0;  // τ + T^j(0)
  bool good = false;
  std::uint64_t count = 0;  // C_j
  int xi_length = 0;
  int eta_length = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t> entries;  // (ξ, η) -> child list
  std::vector<std::vector<Child>> child_lists;
};

struct CertTree {
  UniformFibreCarpet carpet;
  int k = 0;
  double tau = 0;
  double epsilon = 0;
  bool tilde = false;
  int j0 = 0;
  int depth = 0;
  std::string oracle;
  RotationSchedule schedule;
  std::map<int, LevelAlphabet> gammas;
  std::map<int, std::vector<std::uint64_t>> thetas;  // Θ(j), sorted codes of length jk - e_{s(j)-1}
  std::vector<std::uint32_t> root_sigma;
  std::vector<std::uint32_t> root_sigma_prime;
  std::vector<LevelTable> levels;  // j = j0 .. depth-1

  // log |R_j| for j = j0..depth.
  std::vector<double> log_sizes() const;
};

struct TreeOptions {
  std::uint64_t work_budget = 500'000'000;  // total candidate rectangles examined
  int jobs = 1;
};

// Smallest j with ℓ(k) < jk - e_j.
int choose_j0(const RotationSchedule& schedule);

CertTree build_tree(const UniformFibreCarpet& carpet, double tau, int k, double epsilon, int depth,
                    const GoodAngleOracle& oracle, const TreeOptions& options = {}, bool tilde = false);

struct TreeViolation {
  char property = '?';
  int level = 0;
  std::string message;
};

struct TreeReport {
  std::vector<TreeViolation> violations;
  std::vector<std::string> notes;
  int materialized_through = -1;  // last level checked globally
  bool ok() const { return violations.empty(); }
  bool has(char property) const;
  bool only(char property) const;  // fails, and only this property
  std::string summary() const;
};

// A (prefix/word lengths), B (exact sizes), C (alphabet membership), D (separation),
// E (offspring counts). Levels with at most `node_cap` nodes are also checked globally.
TreeReport verify_tree(const CertTree& tree, const UniformFibreCarpet& carpet, double tau,
                       std::size_t node_cap = 1'000'000);

// Σ log C_j / ((J - j0)(-k log b)); throws PreconditionError on an unverified tree.
double lower_bound(const CertTree& tree, const UniformFibreCarpet& carpet, std::size_t node_cap = 1'000'000);

// Fault injection for the verifier's tests. Both act on the first table of `level` with C_j >= 2.
void inject_duplicate_child(CertTree& tree, int level);
void inject_missing_child(CertTree& tree, int level);

UniformFibreCarpet iterate_carpet(const UniformFibreCarpet& carpet, int q);

struct ThinResult {
  UniformFibreCarpet carpet;
  int iterate = 1;
  std::size_t rows = 0;
  std::size_t cells = 0;
  double dimension = 0;
};

// Largest-dimension subsystem with γ < 1 among iterates q = 1..max_iterate, keeping
// the first rows and the first cells of every row.
ThinResult thin_to_subunit(const UniformFibreCarpet& carpet, int max_iterate = 3);

}  // namespace carpetlab
