#pragma once

#include <numeric>
#include <optional>
#include <utility>

#include "carpetlab/rational.hpp"

namespace testsupport {

// Smallest (p,q), both <= bound, with x^q = y^p; x,y in (0,1).
inline std::optional<std::pair<long, long>> brute_log_ratio(const carpetlab::Rational& x,
                                                            const carpetlab::Rational& y, long bound) {
  for (long q = 1; q <= bound; ++q) {
    for (long p = 1; p <= bound; ++p) {
      if (std::gcd(p, q) != 1) continue;
      if (x.pow(q) == y.pow(p)) return std::make_pair(p, q);
    }
  }
  return std::nullopt;
}

}  // namespace testsupport
