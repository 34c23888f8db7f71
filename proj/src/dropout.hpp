#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tucker/model.hpp"

namespace tucker::detail {

/// Inverted-dropout mask: each entry is 0 with probability p, otherwise
/// 1/(1-p). A zero rate yields all ones and draws nothing from `rng`.
inline std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng) {
  std::vector<double> mask(n, 1.0);
  if (p <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (auto& v : mask) v = keep(rng) ? scale : 0.0;
  return mask;
}

}  // namespace tucker::detail
