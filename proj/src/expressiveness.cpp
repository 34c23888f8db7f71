#include "tucker/expressiveness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "tucker/errors.hpp"

namespace tucker {

TuckerModel construct_full_expressive(std::span<const Triple> world, std::size_t n_e,
                                      std::size_t n_r) {
  if (n_e == 0 || n_r == 0) throw std::invalid_argument("construct_full_expressive: empty world");
  TuckerModel m;
  m.entities = DenseMatrix::identity(n_e);
  m.relations = DenseMatrix::identity(n_r);
  m.core = DenseTensor3(n_e, n_r, n_e, -1.0);
  for (const auto& t : world) {
    if (t.s >= n_e || t.o >= n_e || t.r >= n_r) {
      throw IndexError("world triple (" + std::to_string(t.s) + ", " + std::to_string(t.r) +
                       ", " + std::to_string(t.o) + ") out of range");
    }
    m.core(t.s, t.r, t.o) = 1.0;
  }
  m.bn_input = BatchNormState(n_e);
  m.bn_hidden = BatchNormState(n_e);
  m.batch_norm = false;
  m.dropout = {};
  m.kind = {ModelTag::Tucker, n_e};
  return m;
}

SeparationReport verify_separation(const TuckerModel& m, std::span<const Triple> world,
                                   double threshold) {
  const std::size_t n_e = m.num_entities();
  const std::size_t n_r = m.num_relations();
  if (n_e * n_e * n_r > kMaxEnumeratedTriples) {
    throw std::invalid_argument("world too large to enumerate: " + std::to_string(n_e * n_e * n_r) +
                                " triples (limit " + std::to_string(kMaxEnumeratedTriples) + ")");
  }
  std::vector<char> truth(n_e * n_r * n_e, 0);
  for (const auto& t : world) {
    if (t.s >= n_e || t.o >= n_e || t.r >= n_r) throw IndexError("world triple out of range");
    truth[(t.s * n_r + t.r) * n_e + t.o] = 1;
  }
  SeparationReport report;
  report.total = truth.size();
  report.margin = std::numeric_limits<double>::infinity();
  for (EntityId s = 0; s < n_e; ++s) {
    for (RelationId r = 0; r < n_r; ++r) {
      const auto h = transformed_subject(m, s, r);
      for (EntityId o = 0; o < n_e; ++o) {
        const double p = sigmoid(dot(h, m.entities.row(o)));
        const bool predicted = p > threshold;
        report.correct += predicted == static_cast<bool>(truth[(s * n_r + r) * n_e + o]);
        report.margin = std::min(report.margin, std::abs(p - threshold));
      }
    }
  }
  return report;
}

std::string format_separation_text(const SeparationReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "separation: %zu/%zu correct, margin %.6f%s\n", report.correct,
                report.total, report.margin, report.perfect() ? " (exact)" : "");
  return buf;
}

std::string format_separation_csv(const SeparationReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "correct,total,margin\n%zu,%zu,%.17g\n", report.correct,
                report.total, report.margin);
  return buf;
}

}  // namespace tucker
