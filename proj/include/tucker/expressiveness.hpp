#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "tucker/data.hpp"
#include "tucker/model.hpp"

namespace tucker {

/// Largest n_e^2 * n_r that verify_separation will enumerate.
inline constexpr std::size_t kMaxEnumeratedTriples = 1'000'000;

/// One-hot embeddings (E = I_{n_e}, R = I_{n_r}) and a core with +1 at every
/// true (s, r, o) and -1 elsewhere. Batch norm and dropout are disabled, so
/// every score is exactly +1 or -1.
TuckerModel construct_full_expressive(std::span<const Triple> world, std::size_t n_e,
                                      std::size_t n_r);

struct SeparationReport {
  std::size_t correct = 0;
  std::size_t total = 0;
  double margin = 0.0;  // min over all triples of |sigmoid(score) - threshold|

  [[nodiscard]] bool perfect() const { return correct == total; }
};

/// Classifies every possible (s, r, o) as true iff sigmoid(score) > threshold
/// (the boundary itself counts as false) and compares with `world`.
SeparationReport verify_separation(const TuckerModel& m, std::span<const Triple> world,
                                   double threshold = 0.5);

std::string format_separation_text(const SeparationReport& report);
std::string format_separation_csv(const SeparationReport& report);

}  // namespace tucker
