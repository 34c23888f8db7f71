#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "tucker/train.hpp"

namespace tucker {

/// Best reported TuckER hyper-parameters per benchmark, with the benchmark's
/// entity and (raw) relation counts.
struct Preset {
  std::string_view name;
  double lr;
  double decay;
  std::size_t d_e;
  std::size_t d_r;
  double d1;
  double d2;
  double d3;
  double label_smoothing;
  std::size_t num_entities;
  std::size_t num_relations;
};

inline constexpr std::array<Preset, 4> kPresets{{
    {"fb15k", 0.003, 0.99, 200, 200, 0.2, 0.2, 0.3, 0.0, 14951, 1345},
    {"fb15k-237", 0.0005, 1.0, 200, 200, 0.3, 0.4, 0.5, 0.1, 14541, 237},
    {"wn18", 0.005, 0.995, 200, 30, 0.2, 0.1, 0.2, 0.1, 40943, 18},
    {"wn18rr", 0.01, 1.0, 200, 30, 0.2, 0.2, 0.3, 0.1, 40943, 11},
}};

inline std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  return std::nullopt;
}

/// Copies the preset's hyper-parameters into `cfg`, leaving the rest alone.
inline void apply_preset(const Preset& p, TrainConfig& cfg) {
  cfg.lr = p.lr;
  cfg.decay = p.decay;
  cfg.d_e = p.d_e;
  cfg.d_r = p.d_r;
  cfg.dropout = {p.d1, p.d2, p.d3};
  cfg.label_smoothing = p.label_smoothing;
}

}  // namespace tucker
