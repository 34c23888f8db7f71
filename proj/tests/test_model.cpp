#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "test_util.hpp"
#include "tucker/errors.hpp"
#include "tucker/model.hpp"

using namespace tucker;
using tucker::testing::brute_force_score;
using tucker::testing::plain_model;
using tucker::testing::random_tensor;
using tucker::testing::random_vector;

namespace {

// A model with explicit rows, BN off; handy for the constrained cores.
TuckerModel model_from(std::vector<std::vector<double>> ents, std::vector<std::vector<double>> rels,
                       DenseTensor3 core) {
  const std::size_t de = ents.front().size(), dr = rels.front().size();
  TuckerModel m;
  m.entities = DenseMatrix(ents.size(), de);
  m.relations = DenseMatrix(rels.size(), dr);
  for (std::size_t i = 0; i < ents.size(); ++i)
    std::copy(ents[i].begin(), ents[i].end(), m.entities.row(i).begin());
  for (std::size_t i = 0; i < rels.size(); ++i)
    std::copy(rels[i].begin(), rels[i].end(), m.relations.row(i).begin());
  m.core = std::move(core);
  m.bn_input = BatchNormState(de);
  m.bn_hidden = BatchNormState(de);
  m.batch_norm = false;
  return m;
}

std::size_t nonzeros(const DenseTensor3& t) {
  std::size_t n = 0;
  for (double v : t.data()) n += v != 0.0;
  return n;
}

}  // namespace

TEST(ScoreTriple, OneHotsSelectCoreEntry) {
  Rng rng(1);
  TuckerModel m = plain_model(3, 2, 3, 2, rng);
  m.entities = DenseMatrix::identity(3);
  m.relations = DenseMatrix::identity(2);
  m.core = random_tensor(3, 2, 3, rng);
  for (EntityId s = 0; s < 3; ++s)
    for (RelationId r = 0; r < 2; ++r)
      for (EntityId o = 0; o < 3; ++o) EXPECT_EQ(score_triple(m, s, r, o), m.core(s, r, o));
}

TEST(ScoreTriple, ZeroCoreScoresZero) {
  Rng rng(2);
  TuckerModel m = plain_model(4, 2, 3, 2, rng);
  m.core = DenseTensor3(3, 2, 3);
  for (EntityId s = 0; s < 4; ++s) EXPECT_EQ(score_triple(m, s, 1, 3), 0.0);
}

TEST(ScoreTriple, MatchesTripleSum) {
  Rng rng(3);
  const TuckerModel m = plain_model(4, 2, 5, 3, rng);
  for (EntityId s = 0; s < 4; ++s)
    for (RelationId r = 0; r < 2; ++r)
      for (EntityId o = 0; o < 4; ++o)
        EXPECT_NEAR(score_triple(m, s, r, o), brute_force_score(m, s, r, o), 1e-12);
}

TEST(ScoreTriple, OutOfRangeIds) {
  Rng rng(4);
  const TuckerModel m = plain_model(4, 2, 3, 3, rng);
  EXPECT_THROW(score_triple(m, 4, 0, 0), IndexError);
  EXPECT_THROW(score_triple(m, 0, 2, 0), IndexError);
  EXPECT_THROW(score_triple(m, 0, 0, 9), IndexError);
  EXPECT_THROW(score_all_objects(m, 0, 5, false, rng), IndexError);
}

TEST(ScoreAllObjects, EvaluationModeEqualsScoreTripleExactly) {
  Rng rng(5);
  TuckerModel m = init_model(3, 2, 4, 3, rng);
  // Non-trivial running statistics so batch norm actually transforms.
  m.bn_input.running_mean = random_vector(4, rng);
  m.bn_hidden.running_var = random_vector(4, rng, 0.5, 2.0);
  m.bn_hidden.scale = random_vector(4, rng);
  m.dropout = {0.3, 0.4, 0.5};
  for (EntityId s = 0; s < 3; ++s)
    for (RelationId r = 0; r < 2; ++r) {
      const auto v = score_all_objects(m, s, r, false, rng);
      for (EntityId o = 0; o < 3; ++o) EXPECT_EQ(v[o], score_triple(m, s, r, o));
    }
}

TEST(ScoreAllObjects, NoDropoutNoBatchNormMatchesBruteForce) {
  Rng rng(6);
  const TuckerModel m = plain_model(7, 3, 4, 2, rng);
  const auto v = score_all_objects(m, 2, 1, true, rng);
  for (EntityId o = 0; o < 7; ++o) EXPECT_NEAR(v[o], brute_force_score(m, 2, 1, o), 1e-12);
}

TEST(ScoreAllObjects, TrainingModeIsRepeatableUnderSeed) {
  Rng init(7);
  TuckerModel m = init_model(10, 2, 6, 4, init);
  m.dropout = {0.2, 0.2, 0.3};
  Rng a(99), b(99), c(100);
  const auto va = score_all_objects(m, 1, 1, true, a);
  EXPECT_EQ(va, score_all_objects(m, 1, 1, true, b));
  EXPECT_NE(va, score_all_objects(m, 1, 1, true, c));
}

TEST(RelationMatrix, OneHotAndZeroRelation) {
  Rng rng(8);
  TuckerModel m = plain_model(3, 2, 4, 3, rng);
  std::fill(m.relations.row(0).begin(), m.relations.row(0).end(), 0.0);
  m.relations(0, 1) = 1.0;
  const DenseMatrix slice = relation_matrix(m, 0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(slice(i, k), m.core(i, 1, k));
  std::fill(m.relations.row(1).begin(), m.relations.row(1).end(), 0.0);
  const DenseMatrix zero = relation_matrix(m, 1);
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
}

TEST(RelationMatrix, BilinearIdentity) {
  Rng rng(9);
  const TuckerModel m = plain_model(12, 4, 5, 3, rng);
  std::uniform_int_distribution<EntityId> ent(0, 11);
  std::uniform_int_distribution<RelationId> rel(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const EntityId s = ent(rng), o = ent(rng);
    const RelationId r = rel(rng);
    const DenseMatrix w = relation_matrix(m, r);
    double bilinear = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 5; ++k) bilinear += m.entities(s, i) * w(i, k) * m.entities(o, k);
    EXPECT_NEAR(score_triple(m, s, r, o), bilinear, 1e-12);
  }
}

TEST(RelationMatrix, SymmetricMatrixGivesSymmetricScores) {
  Rng rng(10);
  TuckerModel m = plain_model(6, 1, 4, 1, rng);
  m.relations(0, 0) = 1.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < i; ++k) m.core(i, 0, k) = m.core(k, 0, i);
  EXPECT_EQ(symmetry_score(relation_matrix(m, 0)), 0.0);
  // Reals: the two directions sum in different orders.
  for (EntityId s = 0; s < 6; ++s)
    for (EntityId o = 0; o < 6; ++o)
      EXPECT_NEAR(score_triple(m, s, 0, o), score_triple(m, o, 0, s), 1e-12);

  // Small integers: every partial sum is exact, so the scores are identical.
  std::uniform_int_distribution<int> small(-4, 4);
  for (double& v : m.entities.data()) v = small(rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k <= i; ++k) m.core(i, 0, k) = m.core(k, 0, i) = small(rng);
  for (EntityId s = 0; s < 6; ++s)
    for (EntityId o = 0; o < 6; ++o) EXPECT_EQ(score_triple(m, s, 0, o), score_triple(m, o, 0, s));
}

TEST(SymmetryScore, Cases) {
  DenseMatrix sym(2, 2, std::vector<double>{1, 3, 3, 2});
  EXPECT_EQ(symmetry_score(sym), 0.0);
  EXPECT_EQ(symmetry_score(DenseMatrix(3, 3)), 0.0);

  DenseMatrix anti(2, 2, std::vector<double>{0, 2, -2, 0});
  // ||W - W^T|| = ||2W|| = 2 ||W||.
  EXPECT_NEAR(symmetry_score(anti), 2.0, 1e-15);

  DenseMatrix general(2, 2, std::vector<double>{1, 2, 5, 4});
  const double diff = std::sqrt(9.0 + 9.0);
  const double norm = std::sqrt(1.0 + 4.0 + 25.0 + 16.0);
  EXPECT_NEAR(symmetry_score(general), diff / norm, 1e-15);
  EXPECT_THROW(symmetry_score(DenseMatrix(2, 3)), ShapeError);
}

TEST(ParamCount, PublishedFigures) {
  EXPECT_EQ(param_count(40943, 22, 200, 30, ModelTag::Tucker), 9'389'260u);
  EXPECT_EQ(param_count(40943, 22, 200, 0, ModelTag::ComplEx), 16'386'000u);
  EXPECT_EQ(param_count(14541, 474, 100, 100, ModelTag::Tucker), 2'501'500u);
  EXPECT_EQ(param_count(14541, 474, 100, 0, ModelTag::ComplEx), 3'003'000u);
}

TEST(ParamCount, Formulas) {
  EXPECT_EQ(param_count(10, 4, 3, 2, ModelTag::Tucker), 10u * 3 + 4 * 2 + 3 * 3 * 2);
  EXPECT_EQ(param_count(10, 4, 3, 99, ModelTag::DistMult), 10u * 3 + 4 * 3);
  EXPECT_EQ(param_count(10, 4, 3, 99, ModelTag::SimplE), 10u * 6 + 4 * 6);
  EXPECT_EQ(param_count(10, 4, 3, 99, ModelTag::Rescal), 10u * 3 + 4 * 9);
}

TEST(ConstrainedCores, DistMultStructureAndOracle) {
  const DenseTensor3 z = build_distmult_core(2);
  EXPECT_EQ(nonzeros(z), 2u);
  EXPECT_EQ(z(0, 0, 0), 1.0);
  EXPECT_EQ(z(1, 1, 1), 1.0);

  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto es = random_vector(5, rng), wr = random_vector(5, rng), eo = random_vector(5, rng);
    const TuckerModel m = model_from({es, eo}, {wr}, build_distmult_core(5));
    double direct = 0.0;
    for (std::size_t i = 0; i < 5; ++i) direct += es[i] * wr[i] * eo[i];
    ASSERT_NEAR(score_triple(m, 0, 0, 1), direct, 1e-12);
    ASSERT_NEAR(score_triple(m, 1, 0, 0), score_triple(m, 0, 0, 1), 1e-12);
  }
}

TEST(ConstrainedCores, ComplExStructureAndOracle) {
  const DenseTensor3 z1 = build_complex_core(1);
  EXPECT_EQ(nonzeros(z1), 4u);
  double sum = 0.0;
  for (double v : z1.data()) sum += v;
  EXPECT_EQ(sum, 2.0);

  const std::size_t d = 4;
  Rng rng(12);
  auto pack = [](const std::vector<std::complex<double>>& z) {
    std::vector<double> v(2 * z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      v[i] = z[i].real();
      v[z.size() + i] = z[i].imag();
    }
    return v;
  };
  auto random_complex = [&](bool real_only) {
    std::vector<std::complex<double>> z(d);
    for (auto& c : z) {
      const auto parts = random_vector(2, rng);
      c = {parts[0], real_only ? 0.0 : parts[1]};
    }
    return z;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto es = random_complex(false), wr = random_complex(false), eo = random_complex(false);
    const TuckerModel m = model_from({pack(es), pack(eo)}, {pack(wr)}, build_complex_core(d));
    std::complex<double> direct = 0.0;
    for (std::size_t i = 0; i < d; ++i) direct += es[i] * wr[i] * std::conj(eo[i]);
    ASSERT_NEAR(score_triple(m, 0, 0, 1), direct.real(), 1e-12);
  }
  // Real-valued entities: ComplEx collapses to a symmetric score.
  const TuckerModel m = model_from({pack(random_complex(true)), pack(random_complex(true))},
                                   {pack(random_complex(false))}, build_complex_core(d));
  EXPECT_NEAR(score_triple(m, 0, 0, 1), score_triple(m, 1, 0, 0), 1e-12);
}

TEST(ConstrainedCores, SimplEStructureAndOracle) {
  const DenseTensor3 z1 = build_simple_core(1);
  EXPECT_EQ(nonzeros(z1), 2u);
  for (double v : z1.data()) EXPECT_TRUE(v == 0.0 || v == 0.5);

  const std::size_t d = 4;
  Rng rng(13);
  auto concat = [](std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  auto tri = [&](const std::vector<double>& a, const std::vector<double>& b,
                 const std::vector<double>& c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += a[i] * b[i] * c[i];
    return acc;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto hs = random_vector(d, rng), ts = random_vector(d, rng);
    const auto ho = random_vector(d, rng), to = random_vector(d, rng);
    const auto w = random_vector(d, rng), w_inv = random_vector(d, rng);
    const TuckerModel m =
        model_from({concat(hs, ts), concat(ho, to)}, {concat(w, w_inv)}, build_simple_core(d));
    const double direct = 0.5 * (tri(hs, w, to) + tri(ho, w_inv, ts));
    ASSERT_NEAR(score_triple(m, 0, 0, 1), direct, 1e-12);
  }
  const auto hs = random_vector(d, rng), ts = random_vector(d, rng);
  const auto ho = random_vector(d, rng), to = random_vector(d, rng), w = random_vector(d, rng);
  const TuckerModel m = model_from({concat(hs, ts), concat(ho, to)},
                                   {concat(w, std::vector<double>(d, 0.0))}, build_simple_core(d));
  EXPECT_NEAR(score_triple(m, 0, 0, 1), 0.5 * tri(hs, w, to), 1e-12);
}

TEST(Rescal, SliceBilinearFormAndIdentityRelations) {
  Rng rng(14);
  const std::size_t n_e = 5, n_r = 3, d = 4;
  for (int trial = 0; trial < 200; ++trial) {
    TuckerModel m = plain_model(n_e, n_r, d, n_r, rng);
    m.relations = DenseMatrix::identity(n_r);
    for (EntityId s = 0; s < n_e; s += 2)
      for (RelationId r = 0; r < n_r; ++r) {
        double direct = 0.0;
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t k = 0; k < d; ++k)
            direct += m.entities(s, i) * m.core(i, r, k) * m.entities(3, k);
        ASSERT_NEAR(rescal_score(m.entities, m.core, s, r, 3), direct, 1e-12);
        ASSERT_NEAR(score_triple(m, s, r, 3), direct, 1e-12);
      }
  }
  DenseTensor3 core = random_tensor(3, 2, 3, rng);
  EXPECT_EQ(rescal_score(DenseMatrix::identity(3), core, 2, 1, 0), core(2, 1, 0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < i; ++k) core(i, 0, k) = core(k, 0, i);
  const DenseMatrix ents = tucker::testing::random_matrix(4, 3, rng);
  EXPECT_NEAR(rescal_score(ents, core, 0, 0, 3), rescal_score(ents, core, 3, 0, 0), 1e-12);
  EXPECT_THROW(rescal_score(ents, core, 0, 2, 1), IndexError);
}

TEST(InitModel, ShapesDeterminismAndStatistics) {
  Rng a(15), b(15);
  const TuckerModel m = init_model(5000, 6, 200, 30, a);
  EXPECT_EQ(m, init_model(5000, 6, 200, 30, b));
  EXPECT_EQ(m.entities.rows(), 5000u);
  EXPECT_EQ(m.entities.cols(), 200u);
  EXPECT_EQ(m.relations.rows(), 6u);
  EXPECT_EQ(m.relations.cols(), 30u);
  EXPECT_EQ(m.core.dim1(), 200u);
  EXPECT_EQ(m.core.dim2(), 30u);
  EXPECT_EQ(m.core.dim3(), 200u);
  EXPECT_NO_THROW(m.validate());

  double mean = 0.0, sq = 0.0;
  for (double v : m.entities.data()) mean += v;
  mean /= static_cast<double>(m.entities.size());
  for (double v : m.entities.data()) sq += (v - mean) * (v - mean);
  const double std_dev = std::sqrt(sq / static_cast<double>(m.entities.size() - 1));
  EXPECT_NEAR(std_dev, 1.0 / std::sqrt(200.0), 0.05 / std::sqrt(200.0));

  for (double v : m.core.data()) {
    ASSERT_GE(v, -1.0);
    ASSERT_LE(v, 1.0);
  }
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(m.bn_input.scale[i], 1.0);
    EXPECT_EQ(m.bn_input.shift[i], 0.0);
    EXPECT_EQ(m.bn_hidden.running_mean[i], 0.0);
    EXPECT_EQ(m.bn_hidden.running_var[i], 1.0);
  }
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(1.0), 0.7310585786300049, 1e-15);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_EQ(parse_model_tag("complex"), ModelTag::ComplEx);
  EXPECT_THROW(parse_model_tag("transe"), std::invalid_argument);
}
