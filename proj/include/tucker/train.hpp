#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tucker/data.hpp"
#include "tucker/eval.hpp"
#include "tucker/model.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double lr = 0.0005;
  double decay = 1.0;  // per-epoch learning-rate multiplier
  std::size_t d_e = 200;
  std::size_t d_r = 200;
  DropoutRates dropout{0.3, 0.4, 0.5};
  double label_smoothing = 0.1;
  std::size_t batch_size = 128;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
  AdamConfig adam;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Gradients with the shapes of the parameters they belong to.
struct GradientSet {
  DenseMatrix entities;
  DenseMatrix relations;
  DenseTensor3 core;
  std::vector<double> bn_input_scale;
  std::vector<double> bn_input_shift;
  std::vector<double> bn_hidden_scale;
  std::vector<double> bn_hidden_shift;

  static GradientSet zeros_like(const TuckerModel& m);
  /// Every block in a fixed order: E, R, W, then the batch-norm vectors.
  [[nodiscard]] std::vector<std::span<double>> blocks();
  [[nodiscard]] std::vector<std::span<const double>> blocks() const;
};

/// Parameter blocks of `m` in GradientSet::blocks() order.
std::vector<std::span<double>> parameter_blocks(TuckerModel& m);

/// How batch normalization behaves in a training pass. Batch statistics is the
/// normal training regime and gradients flow through the statistics; running
/// statistics freezes them, which makes the loss a plain function of the
/// parameters (used for finite-difference checks).
enum class BatchNormRegime { BatchStatistics, RunningStatistics };

struct ForwardOptions {
  BatchNormRegime batch_norm = BatchNormRegime::BatchStatistics;
  bool dropout = true;
};

/// Per-feature statistics of one batch-norm layer over one batch.
struct BatchStatistics {
  std::vector<double> mean;
  std::vector<double> var;  // biased
  std::size_t count = 0;
};

struct StepResult {
  double loss = 0.0;
  GradientSet grads;
  BatchStatistics input_stats;
  BatchStatistics hidden_stats;
};

/// Probability floor applied before taking logs.
inline constexpr double kProbabilityClamp = 1e-12;

/// Mean Bernoulli negative log-likelihood.
double bce_loss(std::span<const double> p, std::span<const double> y);

/// (1 - ls) * y + ls / n_e, elementwise.
std::vector<double> smooth_labels(std::span<const double> y, double ls, std::size_t n_e);

/// Loss of one 1-N batch (mean over its pairs) and its exact gradient with
/// respect to E, R, W and the batch-norm scale/shift. Dropout masks come from
/// `rng` and are part of the realized computation.
StepResult forward_backward(const TuckerModel& m, const Batch& batch, const TrainConfig& cfg,
                            Rng& rng, ForwardOptions options = {});

/// Folds the batch statistics of a BatchStatistics-regime step into the
/// running mean/variance (unbiased variance, momentum from the state).
void update_running_stats(TuckerModel& m, const StepResult& step);

struct AdamState {
  GradientSet first_moment;
  GradientSet second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const TuckerModel& m);

/// Which parameter blocks an optimizer may change. Constrained baselines keep
/// their structural core (or, for Rescal, their identity relation matrix).
struct TrainableBlocks {
  bool entities = true;
  bool relations = true;
  bool core = true;
  bool batch_norm = true;
};

TrainableBlocks trainable_blocks(const TuckerModel& m);

/// One bias-corrected Adam update of every trainable block.
void adam_step(TuckerModel& m, const GradientSet& g, AdamState& state, double lr,
               const AdamConfig& adam = {}, TrainableBlocks trainable = {});

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;        // rate used during this epoch
  double train_loss = 0.0;
  std::optional<EvalReport> valid;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitCallbacks {
  /// Called after each epoch; a returned report is attached to that epoch's
  /// metrics.
  std::function<std::optional<EvalReport>(std::size_t epoch, const TuckerModel&)> evaluate;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Runs cfg.epochs epochs of 1-N training on the (augmented) train split.
/// The learning rate is multiplied by cfg.decay after every epoch.
std::vector<EpochMetrics> fit(TuckerModel& m, const TripleStore& ts, const TrainConfig& cfg,
                              const FitCallbacks& callbacks = {});

/// Learning rate in effect at the start of `epoch` (0-based).
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

/// CSV with header epoch,lr,train_loss,valid_mrr,valid_hits1,valid_hits3,valid_hits10.
std::string format_metrics_csv(const std::vector<EpochMetrics>& metrics);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);

}  // namespace tucker
