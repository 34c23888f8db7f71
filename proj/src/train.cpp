#include "tucker/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "dropout.hpp"
#include "tucker/errors.hpp"

namespace tucker {

namespace {

struct NormCache {
  std::vector<double> xhat;     // B x d, normalized input
  std::vector<double> inv_std;  // d
};

// Batch normalization over the rows of `x` (B x d), in place.
NormCache batch_norm_forward(std::vector<double>& x, std::size_t batch, const BatchNormState& bn,
                             BatchNormRegime regime, BatchStatistics& stats) {
  const std::size_t d = bn.features();
  NormCache cache;
  cache.xhat.resize(x.size());
  cache.inv_std.resize(d);
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  if (regime == BatchNormRegime::BatchStatistics) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t f = 0; f < d; ++f) mean[f] += x[b * d + f];
    for (auto& v : mean) v /= static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t f = 0; f < d; ++f) {
        const double c = x[b * d + f] - mean[f];
        var[f] += c * c;
      }
    }
    for (auto& v : var) v /= static_cast<double>(batch);
    stats = {mean, var, batch};
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  for (std::size_t f = 0; f < d; ++f) cache.inv_std[f] = 1.0 / std::sqrt(var[f] + bn.epsilon);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t i = b * d + f;
      cache.xhat[i] = (x[i] - mean[f]) * cache.inv_std[f];
      x[i] = bn.scale[f] * cache.xhat[i] + bn.shift[f];
    }
  }
  return cache;
}

// Turns the upstream gradient `dy` (B x d) into the gradient w.r.t. the layer
// input, in place, and accumulates the scale/shift gradients.
void batch_norm_backward(std::vector<double>& dy, std::size_t batch, const BatchNormState& bn,
                         BatchNormRegime regime, const NormCache& cache,
                         std::vector<double>& dscale, std::vector<double>& dshift) {
  const std::size_t d = bn.features();
  std::vector<double> sum_dxhat(d, 0.0), sum_dxhat_xhat(d, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t i = b * d + f;
      dscale[f] += dy[i] * cache.xhat[i];
      dshift[f] += dy[i];
      const double dxhat = dy[i] * bn.scale[f];
      sum_dxhat[f] += dxhat;
      sum_dxhat_xhat[f] += dxhat * cache.xhat[i];
    }
  }
  const auto n = static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t i = b * d + f;
      const double dxhat = dy[i] * bn.scale[f];
      if (regime == BatchNormRegime::BatchStatistics) {
        dy[i] = cache.inv_std[f] / n *
                (n * dxhat - sum_dxhat[f] - cache.xhat[i] * sum_dxhat_xhat[f]);
      } else {
        dy[i] = dxhat * cache.inv_std[f];
      }
    }
  }
}

// d/dz of the clamped per-entry loss -[y log p + (1 - y) log(1 - p)], p = sigmoid(z).
double loss_slope(double p, double y) {
  double slope = 0.0;
  if (p > kProbabilityClamp) slope -= y * (1.0 - p);
  if (1.0 - p > kProbabilityClamp) slope += (1.0 - y) * p;
  return slope;
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw TrainingError(std::string("non-finite ") + what);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must be in (0, 1]");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw std::invalid_argument("label smoothing must be in [0, 1)");
  }
  for (double p : {dropout.input, dropout.relation, dropout.hidden}) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout rates must be in [0, 1)");
  }
  if (d_e == 0 || d_r == 0) throw std::invalid_argument("embedding sizes must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

GradientSet GradientSet::zeros_like(const TuckerModel& m) {
  GradientSet g;
  g.entities = DenseMatrix(m.entities.rows(), m.entities.cols());
  g.relations = DenseMatrix(m.relations.rows(), m.relations.cols());
  g.core = DenseTensor3(m.core.dim1(), m.core.dim2(), m.core.dim3());
  g.bn_input_scale.assign(m.bn_input.features(), 0.0);
  g.bn_input_shift.assign(m.bn_input.features(), 0.0);
  g.bn_hidden_scale.assign(m.bn_hidden.features(), 0.0);
  g.bn_hidden_shift.assign(m.bn_hidden.features(), 0.0);
  return g;
}

std::vector<std::span<double>> GradientSet::blocks() {
  return {entities.data(), relations.data(), core.data(), bn_input_scale,
          bn_input_shift,  bn_hidden_scale,  bn_hidden_shift};
}

std::vector<std::span<const double>> GradientSet::blocks() const {
  return {entities.data(), relations.data(), core.data(), bn_input_scale,
          bn_input_shift,  bn_hidden_scale,  bn_hidden_shift};
}

std::vector<std::span<double>> parameter_blocks(TuckerModel& m) {
  return {m.entities.data(),  m.relations.data(),  m.core.data(),
          m.bn_input.scale,   m.bn_input.shift,    m.bn_hidden.scale,
          m.bn_hidden.shift};
}

double bce_loss(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) {
    throw ShapeError("bce_loss: " + std::to_string(p.size()) + " probabilities vs " +
                     std::to_string(y.size()) + " labels");
  }
  if (p.empty()) throw ShapeError("bce_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kProbabilityClamp);
    const double qi = std::max(1.0 - p[i], kProbabilityClamp);
    acc += y[i] * std::log(pi) + (1.0 - y[i]) * std::log(qi);
  }
  return -acc / static_cast<double>(p.size());
}

std::vector<double> smooth_labels(std::span<const double> y, double ls, std::size_t n_e) {
  std::vector<double> out(y.size());
  const double floor = ls / static_cast<double>(n_e);
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (1.0 - ls) * y[i] + floor;
  return out;
}

StepResult forward_backward(const TuckerModel& m, const Batch& batch, const TrainConfig& cfg,
                            Rng& rng, ForwardOptions options) {
  m.validate();
  const std::size_t B = batch.size();
  const std::size_t d = m.entity_dim();
  const std::size_t dr = m.relation_dim();
  const std::size_t n = m.num_entities();
  if (B == 0) throw std::invalid_argument("forward_backward: empty batch");
  if (batch.targets.size() != B) throw ShapeError("batch targets do not match its pairs");
  const DropoutRates rates = options.dropout ? cfg.dropout : DropoutRates{};

  StepResult result;
  result.grads = GradientSet::zeros_like(m);
  GradientSet& g = result.grads;

  // Relation matrices W x2 w_r, one per distinct relation in the batch.
  std::map<RelationId, DenseMatrix> relation_mats;
  for (const auto& pair : batch.pairs) {
    if (pair.s >= n) throw IndexError("batch subject id out of range");
    if (!relation_mats.contains(pair.r)) relation_mats.emplace(pair.r, relation_matrix(m, pair.r));
  }

  // Subject embeddings -> bn_input -> dropout.
  std::vector<double> x(B * d);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = m.entities.row(batch.pairs[b].s);
    std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  NormCache in_cache;
  if (m.batch_norm) {
    in_cache = batch_norm_forward(x, B, m.bn_input, options.batch_norm, result.input_stats);
  }
  std::vector<double> mask_in(B * d), mask_rel(B * d * d);
  for (std::size_t b = 0; b < B; ++b) {
    const auto mi = detail::dropout_mask(d, rates.input, rng);
    const auto mr = detail::dropout_mask(d * d, rates.relation, rng);
    std::copy(mi.begin(), mi.end(), mask_in.begin() + static_cast<std::ptrdiff_t>(b * d));
    std::copy(mr.begin(), mr.end(), mask_rel.begin() + static_cast<std::ptrdiff_t>(b * d * d));
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask_in[i];

  // h = x^T (W_r o mask) -> bn_hidden -> dropout.
  std::vector<double> h(B * d, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const DenseMatrix& wr = relation_mats.at(batch.pairs[b].r);
    const double* mask = mask_rel.data() + b * d * d;
    double* hb = h.data() + b * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x[b * d + i];
      if (xi == 0.0) continue;
      const auto wrow = wr.row(i);
      for (std::size_t k = 0; k < d; ++k) hb[k] += xi * wrow[k] * mask[i * d + k];
    }
  }
  NormCache hidden_cache;
  if (m.batch_norm) {
    hidden_cache = batch_norm_forward(h, B, m.bn_hidden, options.batch_norm, result.hidden_stats);
  }
  std::vector<double> mask_hidden(B * d);
  for (std::size_t b = 0; b < B; ++b) {
    const auto mh = detail::dropout_mask(d, rates.hidden, rng);
    std::copy(mh.begin(), mh.end(), mask_hidden.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask_hidden[i];

  // Scores against every entity, loss, and d loss / d score.
  std::vector<double> dh(B * d, 0.0);
  std::vector<double> y(n), p(n), dscore(n);
  const double ls = cfg.label_smoothing;
  const double scale = 1.0 / (static_cast<double>(B) * static_cast<double>(n));
  double loss_sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(y.begin(), y.end(), 0.0);
    for (EntityId o : batch.targets[b]) {
      if (o >= n) throw IndexError("batch target id out of range");
      y[o] = 1.0;
    }
    if (ls > 0.0) y = smooth_labels(y, ls, n);
    const std::span<const double> hb(h.data() + b * d, d);
    for (std::size_t o = 0; o < n; ++o) p[o] = sigmoid(dot(hb, m.entities.row(o)));
    loss_sum += bce_loss(p, y);
    for (std::size_t o = 0; o < n; ++o) dscore[o] = loss_slope(p[o], y[o]) * scale;

    double* dhb = dh.data() + b * d;
    for (std::size_t o = 0; o < n; ++o) {
      const double ds = dscore[o];
      if (ds == 0.0) continue;
      const auto eo = m.entities.row(o);
      auto geo = g.entities.row(o);
      for (std::size_t k = 0; k < d; ++k) {
        geo[k] += ds * hb[k];
        dhb[k] += ds * eo[k];
      }
    }
  }
  result.loss = loss_sum / static_cast<double>(B);

  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= mask_hidden[i];
  if (m.batch_norm) {
    batch_norm_backward(dh, B, m.bn_hidden, options.batch_norm, hidden_cache, g.bn_hidden_scale,
                        g.bn_hidden_shift);
  }

  // Back through x^T (W_r o mask), accumulating dW_r per relation.
  std::map<RelationId, DenseMatrix> relation_grads;
  std::vector<double> dx(B * d, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const RelationId r = batch.pairs[b].r;
    const DenseMatrix& wr = relation_mats.at(r);
    auto [it, inserted] = relation_grads.try_emplace(r, d, d);
    DenseMatrix& dwr = it->second;
    const double* mask = mask_rel.data() + b * d * d;
    const double* dhb = dh.data() + b * d;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x[b * d + i];
      const auto wrow = wr.row(i);
      auto drow = dwr.row(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double mk = mask[i * d + k];
        acc += wrow[k] * mk * dhb[k];
        drow[k] += xi * dhb[k] * mk;
      }
      dx[b * d + i] = acc;
    }
  }
  for (const auto& [r, dwr] : relation_grads) {
    const auto wr_vec = m.relations.row(r);
    auto dr_vec = g.relations.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < dr; ++j) {
        double acc = 0.0;
        const double wj = wr_vec[j];
        for (std::size_t k = 0; k < d; ++k) {
          g.core(i, j, k) += wj * dwr(i, k);
          acc += m.core(i, j, k) * dwr(i, k);
        }
        dr_vec[j] += acc;
      }
    }
  }

  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_in[i];
  if (m.batch_norm) {
    batch_norm_backward(dx, B, m.bn_input, options.batch_norm, in_cache, g.bn_input_scale,
                        g.bn_input_shift);
  }
  for (std::size_t b = 0; b < B; ++b) {
    auto gs = g.entities.row(batch.pairs[b].s);
    for (std::size_t f = 0; f < d; ++f) gs[f] += dx[b * d + f];
  }
  return result;
}

void update_running_stats(TuckerModel& m, const StepResult& step) {
  if (!m.batch_norm) return;
  auto fold = [](BatchNormState& bn, const BatchStatistics& stats) {
    if (stats.count == 0) return;
    const double unbias = stats.count > 1 ? static_cast<double>(stats.count) /
                                                static_cast<double>(stats.count - 1)
                                          : 1.0;
    for (std::size_t f = 0; f < bn.features(); ++f) {
      bn.running_mean[f] = (1.0 - bn.momentum) * bn.running_mean[f] + bn.momentum * stats.mean[f];
      bn.running_var[f] =
          (1.0 - bn.momentum) * bn.running_var[f] + bn.momentum * stats.var[f] * unbias;
    }
  };
  fold(m.bn_input, step.input_stats);
  fold(m.bn_hidden, step.hidden_stats);
}

AdamState make_adam_state(const TuckerModel& m) {
  return {GradientSet::zeros_like(m), GradientSet::zeros_like(m), 0};
}

TrainableBlocks trainable_blocks(const TuckerModel& m) {
  TrainableBlocks t;
  t.batch_norm = m.batch_norm;
  switch (m.kind.tag) {
    case ModelTag::Tucker: break;
    case ModelTag::DistMult:
    case ModelTag::ComplEx:
    case ModelTag::SimplE: t.core = false; break;
    case ModelTag::Rescal: t.relations = false; break;
  }
  return t;
}

void adam_step(TuckerModel& m, const GradientSet& g, AdamState& state, double lr,
               const AdamConfig& adam, TrainableBlocks trainable) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(adam.beta1, t);
  const double correction2 = 1.0 - std::pow(adam.beta2, t);
  auto params = parameter_blocks(m);
  const auto grads = g.blocks();
  auto first = state.first_moment.blocks();
  auto second = state.second_moment.blocks();
  const bool enabled[] = {trainable.entities, trainable.relations, trainable.core,
                          trainable.batch_norm, trainable.batch_norm, trainable.batch_norm,
                          trainable.batch_norm};
  for (std::size_t blk = 0; blk < params.size(); ++blk) {
    if (!enabled[blk]) continue;
    if (grads[blk].size() != params[blk].size()) throw ShapeError("adam_step: gradient shape");
    for (std::size_t i = 0; i < params[blk].size(); ++i) {
      const double gi = grads[blk][i];
      first[blk][i] = adam.beta1 * first[blk][i] + (1.0 - adam.beta1) * gi;
      second[blk][i] = adam.beta2 * second[blk][i] + (1.0 - adam.beta2) * gi * gi;
      const double mhat = first[blk][i] / correction1;
      const double vhat = second[blk][i] / correction2;
      params[blk][i] -= lr * mhat / (std::sqrt(vhat) + adam.epsilon);
    }
  }
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr * std::pow(cfg.decay, static_cast<double>(epoch));
}

std::vector<EpochMetrics> fit(TuckerModel& m, const TripleStore& ts, const TrainConfig& cfg,
                              const FitCallbacks& callbacks) {
  cfg.validate();
  m.validate();
  std::vector<EpochMetrics> log;
  if (cfg.epochs == 0) return log;
  if (!ts.augmented) throw std::logic_error("fit expects an augmented triple store");

  Rng rng(cfg.seed);
  const TrainingPairs pairs = collect_training_pairs(ts, m.num_entities());
  if (pairs.pairs.empty()) throw std::invalid_argument("fit: empty training split");
  AdamState adam = make_adam_state(m);
  const TrainableBlocks trainable = trainable_blocks(m);
  double lr = cfg.lr;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_1n_batches(pairs, cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      StepResult step = forward_backward(m, batches[bi], cfg, rng);
      if (!std::isfinite(step.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                            ", batch " + std::to_string(bi));
      }
      adam_step(m, step.grads, adam, lr, cfg.adam, trainable);
      update_running_stats(m, step);
      loss_sum += step.loss * static_cast<double>(batches[bi].size());
      seen += batches[bi].size();
    }
    for (auto block : parameter_blocks(m)) check_finite(block, "parameter after update");

    EpochMetrics metrics;
    metrics.epoch = epoch + 1;
    metrics.lr = lr;
    metrics.train_loss = loss_sum / static_cast<double>(seen);
    if (callbacks.evaluate) metrics.valid = callbacks.evaluate(epoch + 1, m);
    spdlog::info("epoch {} lr {:.6g} loss {:.6f}", metrics.epoch, lr, metrics.train_loss);
    if (callbacks.on_epoch) callbacks.on_epoch(metrics);
    log.push_back(std::move(metrics));
    lr *= cfg.decay;
  }
  return log;
}

std::string format_metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::ostringstream out;
  out << "epoch,lr,train_loss,valid_mrr,valid_hits1,valid_hits3,valid_hits10\n";
  char buf[256];
  for (const auto& e : metrics) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", e.epoch, e.lr, e.train_loss);
    out << buf;
    if (e.valid) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g", e.valid->mrr,
                    e.valid->hits_at(1), e.valid->hits_at(3), e.valid->hits_at(10));
      out << buf;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_metrics_csv(metrics);
}

}  // namespace tucker
