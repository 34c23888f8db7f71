#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"
#include "tucker/errors.hpp"
#include "tucker/eval.hpp"
#include "tucker/expressiveness.hpp"

using namespace tucker;
using tucker::testing::random_vector;

namespace {

// Sort the surviving candidates best-first and find true_o. Ties are
// resolved in favour of the true object.
std::size_t sort_oracle_rank(const std::vector<double>& scores, EntityId true_o,
                             const std::set<EntityId>& filter) {
  std::vector<EntityId> candidates;
  for (EntityId o = 0; o < scores.size(); ++o)
    if (o == true_o || !filter.count(o)) candidates.push_back(o);
  std::stable_sort(candidates.begin(), candidates.end(), [&](EntityId a, EntityId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a == true_o && b != true_o;
  });
  return static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), true_o) -
                                  candidates.begin()) +
         1;
}

}  // namespace

TEST(FilteredRank, HandComputed) {
  const std::vector<double> scores{3, 2, 1};
  EXPECT_EQ(filtered_rank(scores, 2, std::vector<EntityId>{1, 2}), 2u);
  EXPECT_EQ(filtered_rank(scores, 0, std::vector<EntityId>{0}), 1u);
  EXPECT_EQ(filtered_rank(scores, 2, std::vector<EntityId>{2}), 3u);
  EXPECT_EQ(filtered_rank(std::vector<double>{1, 1, 1}, 2, std::vector<EntityId>{}), 1u);
  EXPECT_THROW(filtered_rank(scores, 3, std::vector<EntityId>{}), IndexError);
}

TEST(FilteredRank, MatchesSortOracle) {
  Rng rng(1);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + trial % 40;
    std::vector<double> scores = random_vector(n, rng);
    if (trial % 2 == 0)
      for (double& s : scores) s = coarse(rng);  // force ties
    std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n - 1));
    const EntityId true_o = pick(rng);
    std::set<EntityId> filter{true_o};
    const std::size_t extra = pick(rng) / 2;
    for (std::size_t i = 0; i < extra; ++i) filter.insert(pick(rng));
    const std::vector<EntityId> filter_list(filter.begin(), filter.end());
    ASSERT_EQ(filtered_rank(scores, true_o, filter_list), sort_oracle_rank(scores, true_o, filter));
  }
}

TEST(FilteredRank, MonotoneInFilterAndShiftInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto scores = random_vector(30, rng);
    const EntityId true_o = 7;
    std::vector<EntityId> filter{true_o};
    std::size_t previous = filtered_rank(scores, true_o, filter);
    for (EntityId extra = 0; extra < 30; extra += 3) {
      if (extra == true_o) continue;
      filter.push_back(extra);
      const std::size_t rank = filtered_rank(scores, true_o, filter);
      EXPECT_LE(rank, previous);
      previous = rank;
    }
    for (double& s : scores) s += 17.0;
    EXPECT_EQ(filtered_rank(scores, true_o, filter), previous);
  }
}

TEST(Evaluate, TheoremOneModelIsPerfect) {
  const std::vector<Triple> world{{0, 0, 1}, {1, 0, 2}, {2, 1, 0}, {3, 1, 3}, {0, 1, 2}};
  const TuckerModel m = construct_full_expressive(world, 4, 2);
  FilterIndex fi;
  for (const Triple& t : world) fi.insert(t);
  fi.finalize();
  const EvalReport report = evaluate(m, world, fi);
  EXPECT_EQ(report.mrr, 1.0);
  EXPECT_EQ(report.hits_at(1), 1.0);
  EXPECT_EQ(report.num_queries, world.size());
}

TEST(Evaluate, SingleQueryAtRankFour) {
  TuckerModel m;
  m.entities = DenseMatrix(5, 1, std::vector<double>{5, 4, 3, 2, 1});
  m.relations = DenseMatrix(1, 1, 1.0);
  m.core = DenseTensor3(1, 1, 1, 1.0);
  m.bn_input = BatchNormState(1);
  m.bn_hidden = BatchNormState(1);
  m.batch_norm = false;
  // Subject 0 scores object o by 5 * e_o, so object 3 is ranked fourth.
  const std::vector<Triple> query{{0, 0, 3}};
  FilterIndex fi;
  fi.insert(query[0]);
  fi.finalize();
  const EvalReport report = evaluate(m, query, fi, {1, true});
  EXPECT_EQ(report.ranks, std::vector<std::size_t>{4});
  EXPECT_EQ(report.mrr, 0.25);
  EXPECT_EQ(report.hits_at(1), 0.0);
  EXPECT_EQ(report.hits_at(3), 0.0);
  EXPECT_EQ(report.hits_at(10), 1.0);
}

TEST(Evaluate, UntrainedModelNearChance) {
  const Dataset d = generate_synthetic(200, 0);
  const TripleStore ts = augment_reciprocal(d.store, d.vocab);
  Rng rng(3);
  const TuckerModel m = init_model(200, d.vocab.num_augmented_relations(), 30, 30, rng);
  const EvalReport report = evaluate(m, ts, build_filter_index(ts));
  EXPECT_EQ(report.num_queries, ts.test.size());
  EXPECT_LT(report.mrr, 0.1);
  EXPECT_LE(report.hits_at(1), report.hits_at(3));
  EXPECT_LE(report.hits_at(3), report.hits_at(10));
  EXPECT_GE(report.mrr, report.hits_at(1));
}

TEST(Evaluate, DeterministicAcrossThreadCounts) {
  const Dataset d = generate_synthetic(60, 1);
  const TripleStore ts = augment_reciprocal(d.store, d.vocab);
  const FilterIndex fi = build_filter_index(ts);
  Rng rng(4);
  const TuckerModel m = init_model(60, d.vocab.num_augmented_relations(), 8, 8, rng);
  const EvalReport one = evaluate(m, ts, fi, {1, true});
  const EvalReport four = evaluate(m, ts, fi, {4, true});
  EXPECT_EQ(one.ranks, four.ranks);
  EXPECT_EQ(format_report_csv(one), format_report_csv(four));
  EXPECT_EQ(format_report_csv(one), format_report_csv(evaluate(m, ts, fi, {1, true})));
}

TEST(Evaluate, EmptyInputsRejected) {
  TuckerModel m;
  FilterIndex fi;
  EXPECT_THROW(evaluate(m, std::vector<Triple>{}, fi), std::invalid_argument);
  TripleStore ts;
  ts.augmented = true;
  EXPECT_THROW(evaluate(m, ts, fi), std::invalid_argument);
}
