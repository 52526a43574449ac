#pragma once

#include <cstdint>
#include <vector>

#include "carpetlab/separated.hpp"

namespace testsupport {

// Largest ρ-separated subfamily by branch and bound over the conflict graph (n ≤ 32).
inline std::size_t exhaustive_separated(const std::vector<carpetlab::Box>& rects, double theta, double rho) {
  const std::size_t n = rects.size();
  std::vector<carpetlab::Interval> iv;
  for (const auto& r : rects) iv.push_back(carpetlab::project_theta(r, theta));
  std::vector<std::uint32_t> conflict(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double gap = iv[i].lo >= iv[j].hi ? iv[i].lo - iv[j].hi : iv[j].lo >= iv[i].hi ? iv[j].lo - iv[i].hi : -1;
      if (gap < rho) conflict[i] |= 1u << j;
    }
  }
  std::size_t best = 0;
  auto rec = [&](auto&& self, std::uint32_t candidates, std::size_t taken) -> void {
    if (candidates == 0) {
      if (taken > best) best = taken;
      return;
    }
    if (taken + static_cast<std::size_t>(__builtin_popcount(candidates)) <= best) return;
    int v = __builtin_ctz(candidates);
    self(self, candidates & ~(1u << v) & ~conflict[v], taken + 1);
    self(self, candidates & ~(1u << v), taken);
  };
  rec(rec, n == 32 ? 0xffffffffu : ((1u << n) - 1), 0);
  return best;
}

}  // namespace testsupport
