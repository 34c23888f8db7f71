#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "tucker/data.hpp"
#include "tucker/errors.hpp"

using namespace tucker;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("tucker_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
  }

 private:
  fs::path path_;
};

std::vector<Triple> all_triples(const TripleStore& ts) {
  std::vector<Triple> out = ts.train;
  out.insert(out.end(), ts.valid.begin(), ts.valid.end());
  out.insert(out.end(), ts.test.begin(), ts.test.end());
  return out;
}

}  // namespace

TEST(LoadTriples, SmallFileBuildsVocabulary) {
  TempDir dir;
  dir.write("train.txt", "a\tlikes\tb\nb\tlikes\tc\nc\tlikes\ta\n");
  dir.write("valid.txt", "");
  dir.write("test.txt", "");
  const Dataset d = load_triples(dir.path(), VocabMode::Build);
  EXPECT_EQ(d.vocab.num_entities(), 3u);
  EXPECT_EQ(d.vocab.num_relations(), 1u);
  EXPECT_EQ(d.vocab.num_augmented_relations(), 2u);
  EXPECT_EQ(d.store.train.size(), 3u);
  EXPECT_EQ(*d.vocab.find_entity("c"), 2u);
  EXPECT_EQ(d.store.train[1], (Triple{1, 0, 2}));
  EXPECT_EQ(d.vocab.relation_name(1), "likes_reverse");
  EXPECT_EQ(d.vocab.find_augmented_relation("likes_reverse"), RelationId{1});
}

TEST(LoadTriples, MalformedLineReportsLineNumber) {
  TempDir dir;
  dir.write("train.txt", "a\tr\tb\na\tr\n");
  dir.write("valid.txt", "");
  dir.write("test.txt", "");
  try {
    load_triples(dir.path(), VocabMode::Build);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos) << e.what();
  }
}

TEST(LoadTriples, ReuseModeRejectsUnknownNames) {
  TempDir dir;
  dir.write("train.txt", "a\tr\tb\n");
  dir.write("valid.txt", "a\tr\tz\n");
  dir.write("test.txt", "");
  Vocabulary vocab;
  vocab.add_entity("a");
  vocab.add_entity("b");
  vocab.add_relation("r");
  EXPECT_THROW(load_triples(dir.path(), VocabMode::Reuse, vocab), DataError);
  dir.write("valid.txt", "b\tr\ta\n");
  const Dataset d = load_triples(dir.path(), VocabMode::Reuse, vocab);
  EXPECT_EQ(d.vocab, vocab);
  EXPECT_EQ(d.store.valid.front(), (Triple{1, 0, 0}));
}

TEST(LoadTriples, DuplicatesAreDropped) {
  TempDir dir;
  dir.write("train.txt", "a\tr\tb\na\tr\tb\n");
  dir.write("valid.txt", "");
  dir.write("test.txt", "");
  EXPECT_EQ(load_triples(dir.path(), VocabMode::Build).store.train.size(), 1u);
}

TEST(AugmentReciprocal, DoublesEverySplit) {
  Vocabulary vocab;
  vocab.add_entity("a");
  vocab.add_entity("b");
  vocab.add_relation("r");
  TripleStore ts;
  ts.train = {{0, 0, 1}};
  const TripleStore aug = augment_reciprocal(ts, vocab);
  EXPECT_TRUE(aug.augmented);
  EXPECT_EQ(aug.train.size(), 2u);
  EXPECT_NE(std::find(aug.train.begin(), aug.train.end(), Triple{1, 1, 0}), aug.train.end());
  EXPECT_THROW(augment_reciprocal(aug, vocab), std::logic_error);

  ts.train = {{0, 0, 1}, {1, 0, 0}};
  ts.test = {{0, 0, 0}};
  const TripleStore sym = augment_reciprocal(ts, vocab);
  const std::set<Triple> got(sym.train.begin(), sym.train.end());
  EXPECT_EQ(got, (std::set<Triple>{{0, 0, 1}, {1, 0, 0}, {1, 1, 0}, {0, 1, 1}}));
  EXPECT_EQ(sym.test.size(), 2u);
}

TEST(FilterIndex, SingleTriple) {
  Vocabulary vocab;
  vocab.add_entity("a");
  vocab.add_entity("b");
  vocab.add_relation("r");
  TripleStore ts;
  ts.test = {{0, 0, 1}};
  const FilterIndex fi = build_filter_index(augment_reciprocal(ts, vocab));
  EXPECT_EQ(fi.num_pairs(), 2u);
  EXPECT_EQ(fi.objects(0, 0), std::vector<EntityId>{1});
  EXPECT_EQ(fi.objects(1, 1), std::vector<EntityId>{0});
  EXPECT_TRUE(fi.objects(1, 0).empty());
  EXPECT_THROW(build_filter_index(ts), std::logic_error);
}

TEST(FilterIndex, MatchesBruteForceScan) {
  const Dataset d = generate_synthetic(40, 3);
  const TripleStore aug = augment_reciprocal(d.store, d.vocab);
  const FilterIndex fi = build_filter_index(aug);
  std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> brute;
  for (const Triple& t : all_triples(aug)) brute[{t.s, t.r}].insert(t.o);
  EXPECT_EQ(fi.num_pairs(), brute.size());
  for (const auto& [key, objects] : brute) {
    const auto& got = fi.objects(key.first, key.second);
    EXPECT_EQ(std::vector<EntityId>(objects.begin(), objects.end()), got);
  }
  for (const Triple& t : aug.test) EXPECT_TRUE(fi.contains(t));
}

TEST(Batches, LabelVectorMarksTrueObjects) {
  TripleStore ts;
  ts.train = {{0, 0, 1}, {0, 0, 3}};
  ts.augmented = true;
  Rng rng(1);
  const auto batches = make_1n_batches(ts, 4, 128, rng);
  // Hand-built store without reciprocals: (0, 0) is the only pair.
  ASSERT_EQ(batches.size(), 1u);
  ASSERT_EQ(batches[0].size(), 1u);
  const DenseMatrix y = batches[0].label_matrix(4);
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_EQ(y(0, 1), 1.0);
  EXPECT_EQ(y(0, 2), 0.0);
  EXPECT_EQ(y(0, 3), 1.0);
}

TEST(Batches, SizesAndDeterminism) {
  TrainingPairs pairs;
  pairs.num_entities = 10;
  for (EntityId s = 0; s < 300; ++s) {
    pairs.pairs.push_back({s, 0});
    pairs.targets.push_back({0});
  }
  Rng a(5), b(5);
  const auto first = make_1n_batches(pairs, 128, a);
  ASSERT_EQ(first.size(), 3u);
  EXPECT_EQ(first[0].size(), 128u);
  EXPECT_EQ(first[1].size(), 128u);
  EXPECT_EQ(first[2].size(), 44u);
  const auto second = make_1n_batches(pairs, 128, b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(first[i].pairs, second[i].pairs);
  std::set<QueryPair> seen;
  for (const auto& batch : first) seen.insert(batch.pairs.begin(), batch.pairs.end());
  EXPECT_EQ(seen.size(), 300u);
}

TEST(Batches, PairsAreUniqueTrainPairs) {
  const Dataset d = generate_synthetic(30, 1);
  const TripleStore aug = augment_reciprocal(d.store, d.vocab);
  const TrainingPairs pairs = collect_training_pairs(aug, d.vocab.num_entities());
  std::set<std::pair<EntityId, RelationId>> expected;
  std::size_t targets = 0;
  for (const Triple& t : aug.train) expected.insert({t.s, t.r});
  EXPECT_EQ(pairs.pairs.size(), expected.size());
  for (const auto& t : pairs.targets) targets += t.size();
  EXPECT_EQ(targets, aug.train.size());
}

TEST(Synthetic, StructureAndCoverage) {
  const Dataset d = generate_synthetic(200, 0);
  EXPECT_EQ(d.vocab.num_entities(), 200u);
  EXPECT_EQ(d.vocab.num_relations(), 5u);
  const auto world = all_triples(d.store);
  const std::set<Triple> facts(world.begin(), world.end());
  EXPECT_EQ(facts.size(), world.size());

  const RelationId sym = *d.vocab.find_relation(kSynthSymmetric);
  const RelationId order = *d.vocab.find_relation(kSynthOrder);
  std::size_t order_facts = 0;
  for (const Triple& t : world) {
    if (t.r == sym) {
      EXPECT_TRUE(facts.count({t.o, t.r, t.s}));
      EXPECT_NE(t.s, t.o);
    }
    if (t.r == order) {
      ++order_facts;
      EXPECT_FALSE(facts.count({t.o, t.r, t.s}));
    }
  }
  EXPECT_EQ(order_facts, 60u * 59 / 2);

  // maps_ab == maps_b . maps_a
  std::map<EntityId, EntityId> a, b, ab;
  for (const Triple& t : world) {
    if (t.r == *d.vocab.find_relation(kSynthFirstMap)) a[t.s] = t.o;
    if (t.r == *d.vocab.find_relation(kSynthSecondMap)) b[t.s] = t.o;
    if (t.r == *d.vocab.find_relation(kSynthComposed)) ab[t.s] = t.o;
  }
  EXPECT_EQ(a.size(), 200u);
  for (const auto& [s, o] : ab) EXPECT_EQ(o, b.at(a.at(s)));

  std::set<EntityId> train_entities;
  std::set<RelationId> train_relations;
  for (const Triple& t : d.store.train) {
    train_entities.insert(t.s);
    train_entities.insert(t.o);
    train_relations.insert(t.r);
  }
  EXPECT_EQ(train_entities.size(), 200u);
  EXPECT_EQ(train_relations.size(), 5u);
  const double train_share =
      static_cast<double>(d.store.train.size()) / static_cast<double>(world.size());
  EXPECT_NEAR(train_share, 0.8, 0.02);
}

TEST(Synthetic, SeedDeterminism) {
  const Dataset a = generate_synthetic(50, 9);
  const Dataset b = generate_synthetic(50, 9);
  EXPECT_EQ(a.store.train, b.store.train);
  EXPECT_EQ(a.store.test, b.store.test);
  EXPECT_EQ(a.vocab, b.vocab);
  EXPECT_NE(generate_synthetic(50, 10).store.train, a.store.train);
  EXPECT_THROW(generate_synthetic(10, 0), std::invalid_argument);
}

TEST(Synthetic, TsvRoundTripKeepsIds) {
  TempDir dir;
  const Dataset d = generate_synthetic(60, 4);
  write_dataset(dir.path(), d);
  const Dataset back = load_triples(dir.path(), VocabMode::Build);
  EXPECT_EQ(back.vocab, d.vocab);
  EXPECT_EQ(back.store.train, d.store.train);
  EXPECT_EQ(back.store.valid, d.store.valid);
  EXPECT_EQ(back.store.test, d.store.test);
  const Vocabulary dumped =
      Vocabulary::load(dir.path() / "entities.dict", dir.path() / "relations.dict");
  EXPECT_EQ(dumped, d.vocab);
}
