#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tucker/data.hpp"
#include "tucker/model.hpp"
#include "tucker/train.hpp"

namespace tucker {

/// Self-checks run by `tucker verify`. Each suite compares an implementation
/// path against an independent formula or brute-force enumeration.
struct VerifyOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  /// Negative control: perturbs the constrained cores so their suites must fail.
  bool corrupt_cores = false;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t trials = 0;
  double worst = 0.0;  // largest error observed (suite-specific meaning)
  std::string detail;
};

inline constexpr double kEquivalenceTolerance = 1e-12;
inline constexpr double kGradientTolerance = 1e-4;
inline constexpr double kFiniteDifferenceStep = 1e-5;

/// Constrained-core scores vs sum_i es_i * wr_i * eo_i.
SuiteResult verify_distmult(const VerifyOptions& options);
/// Constrained-core scores vs Re(<es, wr, conj(eo)>) in complex arithmetic.
SuiteResult verify_complex(const VerifyOptions& options);
/// Constrained-core scores vs 1/2 (<h_s, w_r, t_o> + <h_o, w_r^-1, t_s>).
SuiteResult verify_simple(const VerifyOptions& options);
/// rescal_score and the general scorer with R = I vs e_s^T W_r e_o.
SuiteResult verify_rescal(const VerifyOptions& options);
/// Analytic gradients vs central finite differences on a tiny model.
SuiteResult verify_gradients(const VerifyOptions& options);
/// filtered_rank vs a sort-based ranking of the filtered candidate list.
SuiteResult verify_ranking(const VerifyOptions& options);
/// Full-expressiveness construction on random worlds, exhaustively checked.
SuiteResult verify_theorem1(const VerifyOptions& options);

std::vector<std::string_view> verify_suite_names();
SuiteResult run_verify_suite(std::string_view name, const VerifyOptions& options);

/// One sampled parameter in a finite-difference check.
struct GradientSample {
  std::string block;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

/// |a - n| / max(|a|, |n|, 1e-6).
double gradient_relative_error(double analytic, double numeric);

/// Compares forward_backward gradients with central differences of its loss
/// at `samples_per_block` random entries of each parameter block (dropout
/// off, deterministic regime given by `regime`).
std::vector<GradientSample> finite_difference_check(const TuckerModel& m, const Batch& batch,
                                                    const TrainConfig& cfg,
                                                    std::size_t samples_per_block, double step,
                                                    BatchNormRegime regime, Rng& rng);

/// A tiny model (n_e=6, d_e=4, d_r=3, 4 relations) with randomized batch-norm
/// state, and a batch touching several pairs.
TuckerModel make_gradient_check_model(Rng& rng);
Batch make_gradient_check_batch();

}  // namespace tucker
