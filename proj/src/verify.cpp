#include "tucker/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <string>

#include "tucker/eval.hpp"
#include "tucker/expressiveness.hpp"

namespace tucker {

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// A two-entity, one-relation model with the given core; entity 0 is the
// subject, entity 1 the object.
TuckerModel single_triple_model(const DenseTensor3& core, std::span<const double> es,
                                std::span<const double> wr, std::span<const double> eo) {
  TuckerModel m;
  std::vector<double> e(es.begin(), es.end());
  e.insert(e.end(), eo.begin(), eo.end());
  m.entities = DenseMatrix(2, es.size(), std::move(e));
  m.relations = DenseMatrix(1, wr.size(), std::vector<double>(wr.begin(), wr.end()));
  m.core = core;
  m.bn_input = BatchNormState(es.size());
  m.bn_hidden = BatchNormState(es.size());
  m.batch_norm = false;
  return m;
}

void maybe_corrupt(DenseTensor3& core, const VerifyOptions& options) {
  if (options.corrupt_cores) core.data()[0] += 0.5;
}

SuiteResult finish(SuiteResult r, double tolerance) {
  r.passed = r.worst <= tolerance;
  char buf[128];
  std::snprintf(buf, sizeof buf, "max abs error %.3e (tolerance %.0e)", r.worst, tolerance);
  r.detail = buf;
  return r;
}

}  // namespace

SuiteResult verify_distmult(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  SuiteResult r{"distmult", false, options.trials, 0.0, {}};
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t d = dim(rng);
    auto core = build_distmult_core(d);
    maybe_corrupt(core, options);
    const auto es = random_vector(d, rng), wr = random_vector(d, rng), eo = random_vector(d, rng);
    double direct = 0.0;
    for (std::size_t i = 0; i < d; ++i) direct += es[i] * wr[i] * eo[i];
    const double via_core = score_triple(single_triple_model(core, es, wr, eo), 0, 0, 1);
    r.worst = std::max(r.worst, std::abs(via_core - direct));
  }
  return finish(r, kEquivalenceTolerance);
}

SuiteResult verify_complex(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  SuiteResult r{"complex", false, options.trials, 0.0, {}};
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t d = dim(rng);
    auto core = build_complex_core(d);
    maybe_corrupt(core, options);
    const auto es = random_vector(2 * d, rng), wr = random_vector(2 * d, rng),
               eo = random_vector(2 * d, rng);
    std::complex<double> direct = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const std::complex<double> a(es[i], es[d + i]), b(wr[i], wr[d + i]), c(eo[i], eo[d + i]);
      direct += a * b * std::conj(c);
    }
    const double via_core = score_triple(single_triple_model(core, es, wr, eo), 0, 0, 1);
    r.worst = std::max(r.worst, std::abs(via_core - direct.real()));
  }
  return finish(r, kEquivalenceTolerance);
}

SuiteResult verify_simple(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  SuiteResult r{"simple", false, options.trials, 0.0, {}};
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t d = dim(rng);
    auto core = build_simple_core(d);
    maybe_corrupt(core, options);
    // entity = [h; t], relation = [w_r; w_r^-1]
    const auto es = random_vector(2 * d, rng), wr = random_vector(2 * d, rng),
               eo = random_vector(2 * d, rng);
    double forward = 0.0, inverse = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      forward += es[i] * wr[i] * eo[d + i];
      inverse += eo[i] * wr[d + i] * es[d + i];
    }
    const double direct = 0.5 * (forward + inverse);
    const double via_core = score_triple(single_triple_model(core, es, wr, eo), 0, 0, 1);
    r.worst = std::max(r.worst, std::abs(via_core - direct));
  }
  return finish(r, kEquivalenceTolerance);
}

SuiteResult verify_rescal(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  SuiteResult r{"rescal", false, options.trials, 0.0, {}};
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t d = dim(rng), n_e = dim(rng), n_r = dim(rng);
    TuckerModel m = make_constrained_model({ModelTag::Rescal, d}, n_e, n_r, rng);
    m.batch_norm = false;
    std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(n_e - 1));
    std::uniform_int_distribution<RelationId> rel(0, static_cast<RelationId>(n_r - 1));
    const EntityId s = ent(rng), o = ent(rng);
    const RelationId rr = rel(rng);
    // e_s^T W_r e_o with W_r read straight from the core slice.
    double direct = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        direct += m.entities(s, i) * m.core(i, rr, k) * m.entities(o, k);
    const double tucker2 = rescal_score(m.entities, m.core, s, rr, o);
    const double general = score_triple(m, s, rr, o);
    r.worst = std::max({r.worst, std::abs(tucker2 - direct), std::abs(general - direct)});
  }
  return finish(r, kEquivalenceTolerance);
}

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

TuckerModel make_gradient_check_model(Rng& rng) {
  TuckerModel m = init_model(6, 4, 4, 3, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5), pos(0.5, 1.5);
  for (auto* bn : {&m.bn_input, &m.bn_hidden}) {
    for (auto& v : bn->scale) v = pos(rng);
    for (auto& v : bn->shift) v = u(rng);
    for (auto& v : bn->running_mean) v = u(rng);
    for (auto& v : bn->running_var) v = pos(rng);
  }
  return m;
}

Batch make_gradient_check_batch() {
  Batch batch;
  batch.pairs = {{0, 0}, {1, 2}, {3, 1}, {5, 3}, {2, 0}};
  batch.targets = {{1, 4}, {0}, {2, 3, 5}, {4}, {0, 1}};
  return batch;
}

std::vector<GradientSample> finite_difference_check(const TuckerModel& m, const Batch& batch,
                                                    const TrainConfig& cfg,
                                                    std::size_t samples_per_block, double step,
                                                    BatchNormRegime regime, Rng& rng) {
  const ForwardOptions options{regime, false};
  Rng unused(0);
  const StepResult base = forward_backward(m, batch, cfg, unused, options);
  const auto grads = base.grads.blocks();
  static const char* kNames[] = {"E",          "R",           "W",          "bn_input.scale",
                                 "bn_input.shift", "bn_hidden.scale", "bn_hidden.shift"};
  std::vector<GradientSample> out;
  TuckerModel probe = m;
  for (std::size_t blk = 0; blk < grads.size(); ++blk) {
    std::uniform_int_distribution<std::size_t> pick(0, grads[blk].size() - 1);
    for (std::size_t s = 0; s < samples_per_block; ++s) {
      const std::size_t idx = pick(rng);
      auto params = parameter_blocks(probe);
      const double orig = params[blk][idx];
      params[blk][idx] = orig + step;
      const double up = forward_backward(probe, batch, cfg, unused, options).loss;
      params[blk][idx] = orig - step;
      const double down = forward_backward(probe, batch, cfg, unused, options).loss;
      params[blk][idx] = orig;
      const double numeric = (up - down) / (2.0 * step);
      out.push_back({kNames[blk], idx, grads[blk][idx], numeric,
                     gradient_relative_error(grads[blk][idx], numeric)});
    }
  }
  return out;
}

SuiteResult verify_gradients(const VerifyOptions& options) {
  Rng rng(options.seed);
  SuiteResult r{"gradient", false, 0, 0.0, {}};
  TrainConfig cfg;
  cfg.label_smoothing = 0.1;
  for (auto regime : {BatchNormRegime::RunningStatistics, BatchNormRegime::BatchStatistics}) {
    const TuckerModel m = make_gradient_check_model(rng);
    const Batch batch = make_gradient_check_batch();
    for (const auto& s :
         finite_difference_check(m, batch, cfg, 5, kFiniteDifferenceStep, regime, rng)) {
      r.worst = std::max(r.worst, s.relative_error);
      ++r.trials;
    }
  }
  r.passed = r.worst < kGradientTolerance;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu sampled parameters, max relative error %.3e", r.trials,
                r.worst);
  r.detail = buf;
  return r;
}

SuiteResult verify_ranking(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> size(2, 60);
  std::uniform_int_distribution<int> level(0, 9);  // coarse scores force ties
  SuiteResult r{"ranking", true, options.trials, 0.0, {}};
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t n = size(rng);
    std::vector<double> scores(n);
    for (auto& s : scores) s = level(rng);
    std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(n - 1));
    const EntityId truth = ent(rng);
    std::vector<EntityId> filter{truth};
    std::bernoulli_distribution known(0.3);
    for (EntityId o = 0; o < n; ++o)
      if (o != truth && known(rng)) filter.push_back(o);

    // Oracle: sort the surviving candidates, best first, the true object ahead
    // of anything it ties with, and read off its position.
    std::vector<EntityId> candidates;
    for (EntityId o = 0; o < n; ++o) {
      const bool filtered =
          o != truth && std::find(filter.begin(), filter.end(), o) != filter.end();
      if (!filtered) candidates.push_back(o);
    }
    std::sort(candidates.begin(), candidates.end(), [&](EntityId a, EntityId b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      if ((a == truth) != (b == truth)) return a == truth;
      return a < b;
    });
    const auto pos = std::find(candidates.begin(), candidates.end(), truth) - candidates.begin();
    const std::size_t expected = static_cast<std::size_t>(pos) + 1;
    if (filtered_rank(scores, truth, filter) != expected) ++mismatches;
  }
  r.passed = mismatches == 0;
  r.worst = static_cast<double>(mismatches);
  r.detail = std::to_string(mismatches) + " mismatching ranks";
  return r;
}

SuiteResult verify_theorem1(const VerifyOptions& options) {
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> ents(1, 8), rels(1, 4);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  const std::size_t worlds = std::min<std::size_t>(options.trials, 50);
  SuiteResult r{"theorem1", true, worlds, 0.0, {}};
  const double expected_margin = sigmoid(1.0) - 0.5;
  std::size_t errors = 0;
  for (std::size_t t = 0; t < worlds; ++t) {
    const std::size_t n_e = ents(rng), n_r = rels(rng);
    std::bernoulli_distribution fact(density(rng));
    std::vector<Triple> world;
    for (EntityId s = 0; s < n_e; ++s)
      for (RelationId rr = 0; rr < n_r; ++rr)
        for (EntityId o = 0; o < n_e; ++o)
          if (fact(rng)) world.push_back({s, rr, o});
    const auto report = verify_separation(construct_full_expressive(world, n_e, n_r), world);
    errors += report.total - report.correct;
    r.worst = std::max(r.worst, std::abs(report.margin - expected_margin));
  }
  r.passed = errors == 0 && r.worst < 1e-15;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu worlds, %zu misclassified, margin deviation %.1e", worlds,
                errors, r.worst);
  r.detail = buf;
  return r;
}

std::vector<std::string_view> verify_suite_names() {
  return {"distmult", "complex", "simple", "rescal", "gradient", "ranking", "theorem1"};
}

SuiteResult run_verify_suite(std::string_view name, const VerifyOptions& options) {
  if (name == "distmult") return verify_distmult(options);
  if (name == "complex") return verify_complex(options);
  if (name == "simple") return verify_simple(options);
  if (name == "rescal") return verify_rescal(options);
  if (name == "gradient") return verify_gradients(options);
  if (name == "ranking") return verify_ranking(options);
  if (name == "theorem1") return verify_theorem1(options);
  throw std::invalid_argument("unknown verify suite '" + std::string(name) + "'");
}

}  // namespace tucker
