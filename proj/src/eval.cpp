#include "tucker/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "tucker/errors.hpp"

namespace tucker {

std::size_t filtered_rank(std::span<const double> scores, EntityId true_o,
                          std::span<const EntityId> filter_set) {
  if (true_o >= scores.size()) {
    throw IndexError("true object " + std::to_string(true_o) + " out of range [0, " +
                     std::to_string(scores.size()) + ")");
  }
  const double target = scores[true_o];
  std::size_t above = 0;
  for (double s : scores) above += s > target ? 1 : 0;
  for (EntityId o : filter_set) {
    if (o >= scores.size()) throw IndexError("filter id " + std::to_string(o) + " out of range");
    if (o != true_o && scores[o] > target) --above;
  }
  return above + 1;
}

EvalReport evaluate(const TuckerModel& m, std::span<const Triple> queries,
                    const FilterIndex& filter, EvalOptions options) {
  if (queries.empty()) throw std::invalid_argument("evaluate: no queries");

  // Queries sharing (s, r) share one scored vector.
  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return QueryPair{queries[a].s, queries[a].r} < QueryPair{queries[b].s, queries[b].r};
  });
  std::vector<std::size_t> group_start;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& q = queries[order[i]];
    if (i == 0 || q.s != queries[order[i - 1]].s || q.r != queries[order[i - 1]].r) {
      group_start.push_back(i);
    }
  }
  group_start.push_back(order.size());
  const std::size_t num_groups = group_start.size() - 1;

  std::vector<std::size_t> ranks(queries.size(), 0);
  auto work = [&](std::size_t first_group, std::size_t last_group) {
    std::vector<double> scores(m.num_entities());
    for (std::size_t g = first_group; g < last_group; ++g) {
      const auto& head = queries[order[group_start[g]]];
      const auto h = transformed_subject(m, head.s, head.r);
      for (std::size_t o = 0; o < scores.size(); ++o) scores[o] = dot(h, m.entities.row(o));
      const auto& known = filter.objects(head.s, head.r);
      for (std::size_t i = group_start[g]; i < group_start[g + 1]; ++i) {
        ranks[order[i]] = filtered_rank(scores, queries[order[i]].o, known);
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, num_groups);
  if (threads == 1) {
    work(0, num_groups);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (num_groups + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t first = t * chunk;
      const std::size_t last = std::min(num_groups, first + chunk);
      if (first < last) pool.emplace_back(work, first, last);
    }
  }

  EvalReport report;
  report.num_queries = queries.size();
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  double reciprocal_sum = 0.0;
  for (std::size_t rank : ranks) {
    reciprocal_sum += 1.0 / static_cast<double>(rank);
    h1 += rank <= 1;
    h3 += rank <= 3;
    h10 += rank <= 10;
  }
  const auto n = static_cast<double>(ranks.size());
  report.mrr = reciprocal_sum / n;
  report.hits[1] = static_cast<double>(h1) / n;
  report.hits[3] = static_cast<double>(h3) / n;
  report.hits[10] = static_cast<double>(h10) / n;
  if (options.keep_ranks) report.ranks = std::move(ranks);
  return report;
}

EvalReport evaluate(const TuckerModel& m, const TripleStore& ts, const FilterIndex& filter,
                    EvalOptions options) {
  if (!ts.augmented) throw std::logic_error("evaluate expects an augmented triple store");
  if (ts.test.empty()) throw std::invalid_argument("evaluate: empty test split");
  return evaluate(m, std::span<const Triple>(ts.test), filter, options);
}

std::string format_report_table(const EvalReport& report, const std::string& title) {
  std::ostringstream out;
  char line[128];
  out << title << '\n';
  std::snprintf(line, sizeof line, "  %-10s %10zu\n", "queries", report.num_queries);
  out << line;
  std::snprintf(line, sizeof line, "  %-10s %10.6f\n", "mrr", report.mrr);
  out << line;
  for (const auto& [k, v] : report.hits) {
    const std::string name = "hits@" + std::to_string(k);
    std::snprintf(line, sizeof line, "  %-10s %10.6f\n", name.c_str(), v);
    out << line;
  }
  return out.str();
}

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  char line[128];
  out << "metric,value\n";
  std::snprintf(line, sizeof line, "queries,%zu\n", report.num_queries);
  out << line;
  std::snprintf(line, sizeof line, "mrr,%.17g\n", report.mrr);
  out << line;
  for (const auto& [k, v] : report.hits) {
    std::snprintf(line, sizeof line, "hits@%zu,%.17g\n", k, v);
    out << line;
  }
  return out.str();
}

void write_rank_dump(const std::filesystem::path& path, std::span<const Triple> queries,
                     const EvalReport& report, const Vocabulary& vocab) {
  if (report.ranks.size() != queries.size()) {
    throw std::invalid_argument("rank dump needs per-query ranks for every query");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "subject,relation,object,rank\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out << vocab.entity_name(queries[i].s) << ',' << vocab.relation_name(queries[i].r) << ','
        << vocab.entity_name(queries[i].o) << ',' << report.ranks[i] << '\n';
  }
}

}  // namespace tucker
