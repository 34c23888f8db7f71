#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "tucker/tensor.hpp"

namespace tucker {

using Rng = std::mt19937_64;
using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

/// Per-feature batch normalization parameters and running statistics.
struct BatchNormState {
  std::vector<double> scale;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t features);

  [[nodiscard]] std::size_t features() const { return scale.size(); }

  /// Normalizes `in` with the running statistics (evaluation mode).
  void apply_running(std::span<const double> in, std::span<double> out) const;

  friend bool operator==(const BatchNormState&, const BatchNormState&) = default;
};

/// Dropout probabilities at the three sites of the scoring pipeline.
struct DropoutRates {
  double input = 0.0;     // subject embedding
  double relation = 0.0;  // materialized relation matrix
  double hidden = 0.0;    // transformed subject embedding

  friend bool operator==(const DropoutRates&, const DropoutRates&) = default;
};

enum class ModelTag { Tucker, DistMult, ComplEx, SimplE, Rescal };

std::string_view to_string(ModelTag tag);
/// Parses "tucker", "distmult", "complex", "simple" or "rescal".
ModelTag parse_model_tag(std::string_view name);

/// Which scoring function a model realizes. `base_dim` is the embedding size
/// of the original formulation, before ComplEx/SimplE double it.
struct ModelKind {
  ModelTag tag = ModelTag::Tucker;
  std::size_t base_dim = 0;

  friend bool operator==(const ModelKind&, const ModelKind&) = default;
};

/// Entity embeddings E (n_e x d_e), relation embeddings R (n_r_aug x d_r) and
/// core tensor W (d_e x d_r x d_e). E is shared between subject and object.
struct TuckerModel {
  DenseMatrix entities;
  DenseMatrix relations;
  DenseTensor3 core;
  BatchNormState bn_input;
  BatchNormState bn_hidden;
  bool batch_norm = true;
  DropoutRates dropout;
  ModelKind kind;

  [[nodiscard]] std::size_t num_entities() const { return entities.rows(); }
  [[nodiscard]] std::size_t num_relations() const { return relations.rows(); }
  [[nodiscard]] std::size_t entity_dim() const { return entities.cols(); }
  [[nodiscard]] std::size_t relation_dim() const { return relations.cols(); }

  /// Throws ShapeError if E, R, W and the batch-norm states disagree.
  void validate() const;

  friend bool operator==(const TuckerModel&, const TuckerModel&) = default;
};

/// Gaussian embeddings with std 1/sqrt(dim), uniform[-1, 1] core, identity
/// batch normalization.
TuckerModel init_model(std::size_t n_e, std::size_t n_r_aug, std::size_t d_e, std::size_t d_r,
                       Rng& rng);

/// A model whose core is fixed to the constrained structure of `kind`, with
/// random embeddings of the matching width. For Rescal, R is the identity
/// and the core holds one random d x d slice per relation.
TuckerModel make_constrained_model(ModelKind kind, std::size_t n_e, std::size_t n_r_aug,
                                   Rng& rng);

/// The subject embedding after relation transform, in evaluation mode:
/// bn_hidden(bn_input(e_s)^T W_r). Dotting it with e_o gives the score.
std::vector<double> transformed_subject(const TuckerModel& m, EntityId s, RelationId r);

/// W x1 e_s x2 w_r x3 e_o in evaluation mode (raw, before the sigmoid).
double score_triple(const TuckerModel& m, EntityId s, RelationId r, EntityId o);

/// Scores (s, r, o) for every object o at once. With training=false this is
/// score_triple for every o, bit for bit. With training=true dropout masks
/// are drawn from `rng` (subject, relation matrix, hidden, in that order);
/// batch normalization still uses running statistics since a single pair has
/// no batch statistics.
std::vector<double> score_all_objects(const TuckerModel& m, EntityId s, RelationId r,
                                      bool training, Rng& rng);

/// W x2 w_r, the d_e x d_e bilinear form of relation r.
DenseMatrix relation_matrix(const TuckerModel& m, RelationId r);

/// ||W - W^T||_F / max(||W||_F, eps); 0 for a symmetric matrix.
double symmetry_score(const DenseMatrix& w);

/// Embedding plus core parameters (batch-norm parameters are not counted).
/// For DistMult, ComplEx and SimplE `d_e` is the base dimension and `d_r`
/// is ignored; Rescal ignores `d_r` as well.
std::uint64_t param_count(std::uint64_t n_e, std::uint64_t n_r_aug, std::uint64_t d_e,
                          std::uint64_t d_r, ModelTag kind);

/// Superdiagonal d x d x d core.
DenseTensor3 build_distmult_core(std::size_t d);

/// 2d x 2d x 2d core; embeddings packed as [Re; Im].
DenseTensor3 build_complex_core(std::size_t d);

/// 2d x 2d x 2d core; entities packed as [h; t], relations as [w_r; w_r^-1].
DenseTensor3 build_simple_core(std::size_t d);

/// e_s^T W_r e_o where W_r is the r-th lateral slice of `core` (Tucker2).
double rescal_score(const DenseMatrix& entities, const DenseTensor3& core, EntityId s,
                    RelationId r, EntityId o);

double sigmoid(double x);

}  // namespace tucker
