#include <gtest/gtest.h>

#include <numeric>

#include "expect_error.hpp"
#include "support.hpp"

using namespace opnp;
using opnp::testing::Rng;

TEST(Logits, MatchNaiveMatVecWithMasks) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = opnp::testing::uniform_size(rng, 1, 20), k = opnp::testing::uniform_size(rng, 1, 9);
    auto head = opnp::testing::random_head(rng, l, k);
    Mask wm(l * k), nm(l);
    for (auto& m : wm) m = opnp::testing::uniform(rng, 0, 1) < 0.8;
    for (auto& m : nm) m = opnp::testing::uniform(rng, 0, 1) < 0.8;
    head = head.with_masks(wm, nm);
    const auto x = opnp::testing::random_features(rng, 1, l);
    const auto f = compute_logits(head, x.row(0));
    const auto ref = opnp::testing::naive_logits(head, x.row(0));
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(f[j], ref[j], 1e-12);
  }
}

TEST(Logits, ZeroFeatureGivesBias) {
  ClassifierHead head(Matrix<Real>(3, 2, 5.0f), {0.25f, -1.5f});
  const std::vector<Real> zero(3, 0.0f);
  const auto f = compute_logits(head, zero);
  EXPECT_EQ(f[0], 0.25);
  EXPECT_EQ(f[1], -1.5);
}

TEST(Softmax, SumsToOneAndSurvivesHugeLogits) {
  const auto p = softmax(LogitVector{{1000.0, 999.0, -1000.0}});
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Softmax, TemperatureFlattens) {
  const LogitVector f{{2.0, 0.0}};
  EXPECT_GT(softmax(f, 1.0)[0], softmax(f, 10.0)[0]);
  EXPECT_NEAR(softmax(f, 1e6)[0], 0.5, 1e-6);
  EXPECT_OPNP_ERROR(softmax(f, 0.0), ErrorKind::NonPositiveTemperature);
  EXPECT_OPNP_ERROR(softmax(f, -1.0), ErrorKind::NonPositiveTemperature);
}

TEST(Energy, EqualLogitsGiveLogK) {
  EXPECT_NEAR(energy_score(LogitVector{{3.0, 3.0, 3.0, 3.0}}), 3.0 + std::log(4.0), 1e-12);
  EXPECT_NEAR(energy_score(LogitVector{{-800.0, -800.0}}), -800.0 + std::log(2.0), 1e-9);
  EXPECT_OPNP_ERROR(energy_score(LogitVector{{1.0, NAN}}), ErrorKind::NonFiniteValue);
}

TEST(Energy, ShiftEquivariant) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    LogitVector f{std::vector<double>(opnp::testing::uniform_size(rng, 1, 10))};
    for (auto& v : f.values) v = opnp::testing::uniform(rng, -20, 20);
    const double c = opnp::testing::uniform(rng, -50, 50);
    LogitVector g = f;
    for (auto& v : g.values) v += c;
    EXPECT_NEAR(energy_score(g), energy_score(f) + c, 1e-6);
  }
}

TEST(Energy, AtLeastMaxLogit) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    LogitVector f{std::vector<double>(5)};
    for (auto& v : f.values) v = opnp::testing::uniform(rng, -5, 5);
    const double top = *std::max_element(f.values.begin(), f.values.end());
    EXPECT_GE(energy_score(f), top);
    EXPECT_LE(energy_score(f), top + std::log(5.0) + 1e-12);
  }
}

TEST(Msp, InUnitIntervalAndValidated) {
  const auto p = softmax(LogitVector{{0.5, 0.1, -2.0}});
  const double s = msp_score(p);
  EXPECT_GT(s, 0.0);
  EXPECT_LE(s, 1.0);
  EXPECT_EQ(s, *std::max_element(p.begin(), p.end()));
  EXPECT_OPNP_ERROR(msp_score(std::vector<double>{0.7, 0.7}), ErrorKind::InvalidArgument);
  EXPECT_OPNP_ERROR(msp_score(std::vector<double>{}), ErrorKind::EmptyInput);
}

TEST(Classify, BoundaryIsInDistribution) {
  static_assert(classify(1.0, 1.0) == Decision::InDistribution);
  static_assert(classify(0.999, 1.0) == Decision::OutOfDistribution);
  EXPECT_EQ(classify(std::nextafter(2.0, 0.0), 2.0), Decision::OutOfDistribution);
}

TEST(ScoreBatch, AgreesWithPerRowPathBitwiseAndAcrossThreadCounts) {
  Rng rng(4);
  const auto head = opnp::testing::random_head(rng, 12, 5);
  const auto x = opnp::testing::random_features(rng, 700, 12);
  const auto one = score_batch(head, x, ScoreKind::Energy, 1.0, 1);
  const auto many = score_batch(head, x, ScoreKind::Energy, 1.0, 4);
  EXPECT_EQ(one.scores(), many.scores());
  for (std::size_t r = 0; r < x.size(); r += 37) EXPECT_EQ(one[r], energy_score(compute_logits(head, x.row(r))));

  const auto msp = score_batch(head, x, ScoreKind::Msp, 2.0);
  EXPECT_EQ(msp.kind(), ScoreKind::Msp);
  for (std::size_t r = 0; r < x.size(); r += 41) {
    EXPECT_EQ(msp[r], msp_score(softmax(compute_logits(head, x.row(r)), 2.0)));
  }
}

TEST(ScoreBatch, EnergyMatchesNaiveReference) {
  Rng rng(5);
  const auto head = opnp::testing::random_head(rng, 8, 4);
  const auto x = opnp::testing::random_features(rng, 50, 8);
  const auto s = score_batch(head, x, ScoreKind::Energy);
  for (std::size_t r = 0; r < x.size(); ++r) {
    EXPECT_NEAR(s[r], opnp::testing::naive_energy_score(opnp::testing::naive_logits(head, x.row(r))), 1e-12);
  }
}

TEST(ScoreBatch, Errors) {
  Rng rng(6);
  const auto head = opnp::testing::random_head(rng, 4, 3);
  EXPECT_OPNP_ERROR(score_batch(head, opnp::testing::random_features(rng, 3, 5), ScoreKind::Energy),
                    ErrorKind::DimensionMismatch);
  EXPECT_OPNP_ERROR(score_batch(head, opnp::testing::random_features(rng, 3, 4), ScoreKind::Msp, 0.0),
                    ErrorKind::NonPositiveTemperature);
}

TEST(Predict, ArgmaxAndAccuracy) {
  // Class j fires on feature j.
  Matrix<Real> w(3, 3, 0.0f);
  for (std::size_t j = 0; j < 3; ++j) w(j, j) = 4.0f;
  ClassifierHead head(std::move(w), {0, 0, 0});
  Matrix<Real> x(3, 3, 0.0f);
  x(0, 2) = 1;
  x(1, 0) = 1;
  x(2, 1) = 1;
  FeatureSet f(std::move(x), std::vector<std::uint32_t>{2, 0, 0});
  const auto pred = predict(head, f);
  EXPECT_EQ(pred.labels, (std::vector<std::uint32_t>{2, 0, 1}));
  EXPECT_NEAR(accuracy(head, f), 2.0 / 3.0, 1e-15);
  EXPECT_OPNP_ERROR(accuracy(head, FeatureSet(Matrix<Real>(1, 3, 0.0f))), ErrorKind::InvalidArgument);
}
