#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tucker/data.hpp"
#include "tucker/model.hpp"

namespace tucker {

struct EvalReport {
  double mrr = 0.0;
  std::map<std::size_t, double> hits;  // k -> fraction of ranks <= k, k in {1, 3, 10}
  std::size_t num_queries = 0;
  std::vector<std::size_t> ranks;  // per query, only when requested

  [[nodiscard]] double hits_at(std::size_t k) const { return hits.at(k); }
};

/// 1 + the number of candidates outside `filter_set \ {true_o}` that score
/// strictly higher than true_o. Ties never worsen the rank. `filter_set`
/// holds distinct ids.
std::size_t filtered_rank(std::span<const double> scores, EntityId true_o,
                          std::span<const EntityId> filter_set);

struct EvalOptions {
  std::size_t threads = 1;
  bool keep_ranks = false;
};

/// Filtered MRR and hits@{1,3,10} over `queries`, each ranked against every
/// entity as an (s, r, ?) query in evaluation mode.
EvalReport evaluate(const TuckerModel& m, std::span<const Triple> queries,
                    const FilterIndex& filter, EvalOptions options = {});

/// Evaluates the (augmented) test split, so every original test triple is
/// queried in both directions.
EvalReport evaluate(const TuckerModel& m, const TripleStore& ts, const FilterIndex& filter,
                    EvalOptions options = {});

/// Aligned text table, one metric per line.
std::string format_report_table(const EvalReport& report, const std::string& title);
/// "metric,value" CSV.
std::string format_report_csv(const EvalReport& report);
/// "subject,relation,object,rank" per query; requires keep_ranks.
void write_rank_dump(const std::filesystem::path& path, std::span<const Triple> queries,
                     const EvalReport& report, const Vocabulary& vocab);

}  // namespace tucker
