#include <gtest/gtest.h>

#include <numeric>

#include "expect_error.hpp"
#include "support.hpp"

using namespace opnp;
using opnp::testing::Rng;

TEST(Gradient, MatchesFiniteDifferencesOnSmallHead) {
  Rng rng(7);
  const auto head = opnp::testing::random_head(rng, 5, 3);
  const auto x = opnp::testing::random_features(rng, 1, 5);
  const auto g = per_sample_gradient(head, x.row(0));
  const auto fd = toy::finite_diff_gradient(head, x.row(0), 1e-4);
  for (std::size_t c = 0; c < g.weights.size(); ++c) EXPECT_NEAR(g.weights.flat()[c], fd.flat()[c], 1e-5);
}

TEST(Gradient, IsMinusSoftmaxTimesFeature) {
  Rng rng(8);
  const auto head = opnp::testing::random_head(rng, 6, 4);
  const auto x = opnp::testing::random_features(rng, 1, 6);
  const auto p = softmax(LogitVector{opnp::testing::naive_logits(head, x.row(0))});
  const auto g = per_sample_gradient(head, x.row(0));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g.weights(i, j), -p[j] * x.row(0)[i], 1e-15);
  }
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g.bias[j], -p[j], 1e-15);
  // Gradients of one row sum to -h_i because the probabilities sum to one.
  for (std::size_t i = 0; i < 6; ++i) {
    const auto row = g.weights.row(i);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), -x.row(0)[i], 1e-12);
  }
}

TEST(Gradient, ZeroFeatureAndMaskedEntriesGiveZero) {
  Rng rng(9);
  auto head = opnp::testing::random_head(rng, 4, 3);
  const std::vector<Real> zero(4, 0.0f);
  const auto at_zero = per_sample_gradient(head, zero);
  for (double v : at_zero.weights.flat()) EXPECT_EQ(v, 0.0);

  Mask wm(12, 1);
  wm[5] = 0;
  head = head.with_masks(wm, {1, 1, 0, 1});
  const std::vector<Real> ones(4, 1.0f);
  const auto g = per_sample_gradient(head, ones);
  EXPECT_EQ(g.weights.flat()[5], 0.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.weights(2, j), 0.0);
  EXPECT_NE(g.weights(0, 0), 0.0);
}

TEST(Estimate, FullRatioIsMeanAbsoluteGradient) {
  Rng rng(10);
  const auto head = opnp::testing::random_head(rng, 7, 4);
  const auto x = opnp::testing::random_features(rng, 300, 7);
  const auto map = estimate_sensitivity(head, x);
  EXPECT_EQ(map.sample_count(), 300u);
  EXPECT_EQ(map.source_tag(), "random");
  std::vector<double> ref(28, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    const auto f = opnp::testing::naive_logits(head, x.row(r));
    const double lse = opnp::testing::naive_energy_score(f);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 4; ++j) ref[i * 4 + j] += std::exp(f[j] - lse) * std::abs(x.row(r)[i]);
  }
  for (std::size_t c = 0; c < 28; ++c) {
    EXPECT_NEAR(map.values().flat()[c], ref[c] / 300.0, 1e-6 * (1 + ref[c] / 300.0));
    EXPECT_GE(map.values().flat()[c], 0.0f);
  }
}

TEST(Estimate, BitwiseIdenticalForAnyThreadCount) {
  Rng rng(11);
  const auto head = opnp::testing::random_head(rng, 16, 8);
  const auto x = opnp::testing::random_features(rng, 1000, 16);
  const auto base = estimate_sensitivity(head, x, 0.7, 3, 1);
  for (std::size_t t : {2u, 3u, 5u, 16u}) EXPECT_EQ(estimate_sensitivity(head, x, 0.7, 3, t), base) << t;
}

TEST(Estimate, SamplingIsSeededAndSized) {
  Rng rng(12);
  const auto head = opnp::testing::random_head(rng, 5, 3);
  const auto x = opnp::testing::random_features(rng, 401, 5);
  const auto a = estimate_sensitivity(head, x, 0.1, 1);
  EXPECT_EQ(a.sample_count(), 41u);
  EXPECT_EQ(estimate_sensitivity(head, x, 0.1, 1), a);
  EXPECT_NE(estimate_sensitivity(head, x, 0.1, 2).values(), a.values());

  const auto rows = opnp::detail::sample_rows(401, 41, 1);
  ASSERT_EQ(rows.size(), 41u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
  EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
  EXPECT_LT(rows.back(), 401u);

  // The sampled estimate equals the full estimate over exactly those rows.
  const auto sub = x.subset(rows);
  EXPECT_EQ(estimate_sensitivity(head, sub).values(), a.values());
}

TEST(Estimate, SingleRowRatioAndErrors) {
  Rng rng(13);
  const auto head = opnp::testing::random_head(rng, 3, 2);
  const auto x = opnp::testing::random_features(rng, 10, 3);
  EXPECT_EQ(estimate_sensitivity(head, x, 1e-6).sample_count(), 1u);
  EXPECT_OPNP_ERROR(estimate_sensitivity(head, x, 0.0), ErrorKind::InvalidArgument);
  EXPECT_OPNP_ERROR(estimate_sensitivity(head, x, 1.5), ErrorKind::InvalidArgument);
  EXPECT_OPNP_ERROR(estimate_sensitivity(head, opnp::testing::random_features(rng, 10, 4)),
                    ErrorKind::DimensionMismatch);
}

TEST(Estimate, ZeroHeadSplitsEvenlyAcrossClasses) {
  // With a zero head p is uniform, so M_ij = mean_k |h_ki| / K exactly.
  ClassifierHead head(Matrix<Real>(2, 4, 0.0f), {0, 0, 0, 0});
  FeatureSet x(Matrix<Real>(2, 2, std::vector<Real>{1, 0, 3, 2}));
  const auto map = estimate_sensitivity(head, x);
  EXPECT_FLOAT_EQ(map(0, 0), 0.5f);  // (1 + 3) / 2 / 4
  EXPECT_FLOAT_EQ(map(1, 3), 0.25f);  // (0 + 2) / 2 / 4
}

TEST(NeuronSensitivity, StatisticsMatchDirectComputation) {
  const auto map = opnp::testing::map_from(2, 4, {4, 1, 3, 2, 0, 0, 5, 1});
  auto stat = [&](NeuronStatistic s) { return neuron_sensitivity(map, s).values(); };
  EXPECT_EQ(stat(NeuronStatistic::Mean), (std::vector<Real>{2.5f, 1.5f}));
  EXPECT_EQ(stat(NeuronStatistic::Max), (std::vector<Real>{4, 5}));
  EXPECT_EQ(stat(NeuronStatistic::Min), (std::vector<Real>{1, 0}));
  EXPECT_EQ(stat(NeuronStatistic::Median), (std::vector<Real>{2, 0}));  // lower middle
  EXPECT_FLOAT_EQ(stat(NeuronStatistic::L2)[0], std::sqrt(30.0f));
  EXPECT_FLOAT_EQ(stat(NeuronStatistic::Variance)[0], 1.25f);
  EXPECT_FLOAT_EQ(stat(NeuronStatistic::Variance)[1], 4.25f);
  EXPECT_EQ(neuron_sensitivity(map, NeuronStatistic::L2).statistic(), NeuronStatistic::L2);
}

TEST(NeuronSensitivity, OddWidthMedianIsMiddle) {
  const auto map = opnp::testing::map_from(1, 5, {9, 1, 7, 3, 5});
  EXPECT_EQ(neuron_sensitivity(map, NeuronStatistic::Median).values()[0], 5.0f);
}
