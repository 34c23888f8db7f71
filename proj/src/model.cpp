#include "tucker/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dropout.hpp"
#include "tucker/errors.hpp"

namespace tucker {

namespace {

void check_entity(const TuckerModel& m, EntityId e) {
  if (e >= m.num_entities()) {
    throw IndexError("entity id " + std::to_string(e) + " out of range [0, " +
                     std::to_string(m.num_entities()) + ")");
  }
}

void check_relation(const TuckerModel& m, RelationId r) {
  if (r >= m.num_relations()) {
    throw IndexError("relation id " + std::to_string(r) + " out of range [0, " +
                     std::to_string(m.num_relations()) + ")");
  }
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix out(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  for (double& v : out.data()) v = normal(rng);
  return out;
}

DenseTensor3 uniform_core(std::size_t d1, std::size_t d2, std::size_t d3, Rng& rng) {
  DenseTensor3 out(d1, d2, d3);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (double& v : out.data()) v = uniform(rng);
  return out;
}

// h[k] = sum_i x[i] * w(i, k)
std::vector<double> row_times_matrix(std::span<const double> x, const DenseMatrix& w) {
  std::vector<double> h(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    const auto row = w.row(i);
    for (std::size_t k = 0; k < w.cols(); ++k) h[k] += xi * row[k];
  }
  return h;
}

}  // namespace

BatchNormState::BatchNormState(std::size_t features)
    : scale(features, 1.0),
      shift(features, 0.0),
      running_mean(features, 0.0),
      running_var(features, 1.0) {}

void BatchNormState::apply_running(std::span<const double> in, std::span<double> out) const {
  for (std::size_t f = 0; f < features(); ++f) {
    out[f] = scale[f] * (in[f] - running_mean[f]) / std::sqrt(running_var[f] + epsilon) +
             shift[f];
  }
}

std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Tucker: return "tucker";
    case ModelTag::DistMult: return "distmult";
    case ModelTag::ComplEx: return "complex";
    case ModelTag::SimplE: return "simple";
    case ModelTag::Rescal: return "rescal";
  }
  return "unknown";
}

ModelTag parse_model_tag(std::string_view name) {
  for (auto tag : {ModelTag::Tucker, ModelTag::DistMult, ModelTag::ComplEx, ModelTag::SimplE,
                   ModelTag::Rescal}) {
    if (to_string(tag) == name) return tag;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void TuckerModel::validate() const {
  const std::size_t de = entity_dim();
  if (core.dim1() != de || core.dim3() != de || core.dim2() != relation_dim()) {
    throw ShapeError("core " + core.shape_string() + " does not match E " +
                     entities.shape_string() + " and R " + relations.shape_string());
  }
  if (bn_input.features() != de || bn_hidden.features() != de) {
    throw ShapeError("batch-norm feature count does not match entity dimension " +
                     std::to_string(de));
  }
}

TuckerModel init_model(std::size_t n_e, std::size_t n_r_aug, std::size_t d_e, std::size_t d_r,
                       Rng& rng) {
  if (n_e == 0 || n_r_aug == 0 || d_e == 0 || d_r == 0) {
    throw std::invalid_argument("init_model: all dimensions must be positive");
  }
  TuckerModel m;
  m.entities = gaussian_matrix(n_e, d_e, rng);
  m.relations = gaussian_matrix(n_r_aug, d_r, rng);
  m.core = uniform_core(d_e, d_r, d_e, rng);
  m.bn_input = BatchNormState(d_e);
  m.bn_hidden = BatchNormState(d_e);
  m.kind = {ModelTag::Tucker, d_e};
  return m;
}

TuckerModel make_constrained_model(ModelKind kind, std::size_t n_e, std::size_t n_r_aug,
                                   Rng& rng) {
  const std::size_t d = kind.base_dim;
  if (d == 0) throw std::invalid_argument("make_constrained_model: base_dim must be positive");
  TuckerModel m;
  switch (kind.tag) {
    case ModelTag::Tucker:
      return init_model(n_e, n_r_aug, d, d, rng);
    case ModelTag::DistMult:
      m.entities = gaussian_matrix(n_e, d, rng);
      m.relations = gaussian_matrix(n_r_aug, d, rng);
      m.core = build_distmult_core(d);
      break;
    case ModelTag::ComplEx:
      m.entities = gaussian_matrix(n_e, 2 * d, rng);
      m.relations = gaussian_matrix(n_r_aug, 2 * d, rng);
      m.core = build_complex_core(d);
      break;
    case ModelTag::SimplE:
      m.entities = gaussian_matrix(n_e, 2 * d, rng);
      m.relations = gaussian_matrix(n_r_aug, 2 * d, rng);
      m.core = build_simple_core(d);
      break;
    case ModelTag::Rescal:
      m.entities = gaussian_matrix(n_e, d, rng);
      m.relations = DenseMatrix::identity(n_r_aug);
      m.core = uniform_core(d, n_r_aug, d, rng);
      break;
  }
  m.bn_input = BatchNormState(m.entity_dim());
  m.bn_hidden = BatchNormState(m.entity_dim());
  m.kind = kind;
  return m;
}

DenseMatrix relation_matrix(const TuckerModel& m, RelationId r) {
  check_relation(m, r);
  return mode_n_vec_product(m.core, m.relations.row(r), 2);
}

std::vector<double> transformed_subject(const TuckerModel& m, EntityId s, RelationId r) {
  check_entity(m, s);
  check_relation(m, r);
  std::vector<double> x(m.entities.row(s).begin(), m.entities.row(s).end());
  if (m.batch_norm) m.bn_input.apply_running(x, x);
  auto h = row_times_matrix(x, relation_matrix(m, r));
  if (m.batch_norm) m.bn_hidden.apply_running(h, h);
  return h;
}

double score_triple(const TuckerModel& m, EntityId s, RelationId r, EntityId o) {
  check_entity(m, o);
  const auto h = transformed_subject(m, s, r);
  return dot(h, m.entities.row(o));
}

std::vector<double> score_all_objects(const TuckerModel& m, EntityId s, RelationId r,
                                      bool training, Rng& rng) {
  std::vector<double> h;
  if (!training) {
    h = transformed_subject(m, s, r);
  } else {
    check_entity(m, s);
    check_relation(m, r);
    const std::size_t de = m.entity_dim();
    std::vector<double> x(m.entities.row(s).begin(), m.entities.row(s).end());
    if (m.batch_norm) m.bn_input.apply_running(x, x);
    const auto mask_in = detail::dropout_mask(de, m.dropout.input, rng);
    for (std::size_t i = 0; i < de; ++i) x[i] *= mask_in[i];
    DenseMatrix wr = relation_matrix(m, r);
    const auto mask_rel = detail::dropout_mask(wr.size(), m.dropout.relation, rng);
    for (std::size_t i = 0; i < wr.size(); ++i) wr.data()[i] *= mask_rel[i];
    h = row_times_matrix(x, wr);
    if (m.batch_norm) m.bn_hidden.apply_running(h, h);
    const auto mask_hidden = detail::dropout_mask(de, m.dropout.hidden, rng);
    for (std::size_t i = 0; i < de; ++i) h[i] *= mask_hidden[i];
  }
  std::vector<double> scores(m.num_entities());
  for (std::size_t o = 0; o < scores.size(); ++o) scores[o] = dot(h, m.entities.row(o));
  return scores;
}

double symmetry_score(const DenseMatrix& w) {
  if (w.rows() != w.cols()) {
    throw ShapeError("symmetry_score needs a square matrix, got " + w.shape_string());
  }
  constexpr double kEps = 1e-12;
  double diff = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double d = w(i, j) - w(j, i);
      diff += d * d;
    }
  }
  return std::sqrt(diff) / std::max(frobenius_norm(w.data()), kEps);
}

std::uint64_t param_count(std::uint64_t n_e, std::uint64_t n_r_aug, std::uint64_t d_e,
                          std::uint64_t d_r, ModelTag kind) {
  switch (kind) {
    case ModelTag::Tucker: return n_e * d_e + n_r_aug * d_r + d_e * d_e * d_r;
    case ModelTag::DistMult: return n_e * d_e + n_r_aug * d_e;
    case ModelTag::ComplEx:
    case ModelTag::SimplE: return n_e * 2 * d_e + n_r_aug * 2 * d_e;
    case ModelTag::Rescal: return n_e * d_e + n_r_aug * d_e * d_e;
  }
  return 0;
}

DenseTensor3 build_distmult_core(std::size_t d) {
  DenseTensor3 z(d, d, d);
  for (std::size_t i = 0; i < d; ++i) z(i, i, i) = 1.0;
  return z;
}

DenseTensor3 build_complex_core(std::size_t d) {
  // Re(<a, b, conj(c)>) = <Re a, Re b, Re c> + <Re a, Im b, Im c>
  //                     + <Im a, Re b, Im c> - <Im a, Im b, Re c>
  DenseTensor3 z(2 * d, 2 * d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    z(i, i, i) = 1.0;
    z(i, d + i, d + i) = 1.0;
    z(d + i, i, d + i) = 1.0;
    z(d + i, d + i, i) = -1.0;
  }
  return z;
}

DenseTensor3 build_simple_core(std::size_t d) {
  DenseTensor3 z(2 * d, 2 * d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    z(i, i, d + i) = 0.5;
    z(d + i, d + i, i) = 0.5;
  }
  return z;
}

double rescal_score(const DenseMatrix& entities, const DenseTensor3& core, EntityId s,
                    RelationId r, EntityId o) {
  if (core.dim1() != entities.cols() || core.dim3() != entities.cols()) {
    throw ShapeError("rescal_score: core " + core.shape_string() + " vs entities " +
                     entities.shape_string());
  }
  if (s >= entities.rows() || o >= entities.rows()) throw IndexError("rescal_score: entity id");
  if (r >= core.dim2()) throw IndexError("rescal_score: relation id");
  const auto es = entities.row(s);
  const auto eo = entities.row(o);
  double acc = 0.0;
  for (std::size_t i = 0; i < core.dim1(); ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < core.dim3(); ++k) inner += core(i, r, k) * eo[k];
    acc += es[i] * inner;
  }
  return acc;
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace tucker
