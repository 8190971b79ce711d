#include <gtest/gtest.h>

#include <numeric>

#include "expect_error.hpp"
#include "support.hpp"

using namespace opnp;
using opnp::testing::Rng;

namespace {

std::size_t zeros(const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 0)); }

// Every pruned-low value <= every kept value <= every pruned-high value, and
// the low and high pruned sets are disjoint.
void expect_band_property(std::span<const Real> v, const Mask& mask, std::size_t k_low) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    const bool kept = mask[order[r]];
    if (r < k_low) {
      EXPECT_FALSE(kept) << "rank " << r;
    }
  }
  double max_low = -INFINITY, min_kept = INFINITY, max_kept = -INFINITY, min_high = INFINITY;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double x = v[order[r]];
    if (mask[order[r]]) {
      min_kept = std::min(min_kept, x);
      max_kept = std::max(max_kept, x);
    } else if (r < k_low) {
      max_low = std::max(max_low, x);
    } else {
      min_high = std::min(min_high, x);
    }
  }
  EXPECT_LE(max_low, min_kept);
  EXPECT_LE(max_kept, min_high);
}

}  // namespace

TEST(PercentileThreshold, NearestRankOnEachSide) {
  const std::vector<double> v{5, 1, 4, 2, 3, 9, 7, 8, 6, 10};
  EXPECT_EQ(percentile_threshold<double>(v, 20, Side::Low), 2.0);
  EXPECT_EQ(percentile_threshold<double>(v, 25, Side::Low), 3.0);  // ceil(2.5) = 3rd smallest
  EXPECT_EQ(percentile_threshold<double>(v, 10, Side::High), 10.0);
  EXPECT_EQ(percentile_threshold<double>(v, 30, Side::High), 8.0);
  EXPECT_EQ(percentile_threshold<double>(v, 0, Side::Low), -INFINITY);
  EXPECT_EQ(percentile_threshold<double>(v, 0, Side::High), INFINITY);
  EXPECT_EQ(percentile_threshold<double>(v, 100, Side::Low), 10.0);
  EXPECT_OPNP_ERROR(percentile_threshold<double>(v, 101, Side::Low), ErrorKind::InvalidArgument);
  EXPECT_OPNP_ERROR(percentile_threshold<double>(std::vector<double>{}, 10, Side::Low), ErrorKind::EmptyInput);
}

TEST(PruneWeights, CountsFollowCeilFormulasUnderHeavyTies) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto l = opnp::testing::uniform_size(rng, 1, 40), k = opnp::testing::uniform_size(rng, 1, 10);
    const auto head = opnp::testing::random_head(rng, l, k);
    const auto values = opnp::testing::tied_values(rng, l * k, opnp::testing::uniform_size(rng, 1, 4));
    const auto map = opnp::testing::map_from(l, k, values);
    const std::uint64_t p_min = opnp::testing::uniform_size(rng, 0, 6000);
    const std::uint64_t p_max = opnp::testing::uniform_size(rng, 0, 3000);
    const auto k_low = opnp::testing::ceil_count_hundredths(p_min, l * k);
    const auto k_high = opnp::testing::ceil_count_hundredths(p_max, l * k);
    const double r_min = p_min / 100.0, r_max = p_max / 100.0;
    if (p_min + p_max >= 10000 || k_low + k_high >= l * k) {
      EXPECT_OPNP_ERROR(prune_weights(head, map, r_min, r_max), ErrorKind::BandEmpty);
      continue;
    }
    const auto out = prune_weights(head, map, r_min, r_max);
    EXPECT_EQ(zeros(out.mask), k_low + k_high);
    EXPECT_EQ(out.pruned, k_low + k_high);
    expect_band_property(map.values().flat(), out.mask, k_low);
  }
}

TEST(PruneWeights, ThresholdsBracketTheKeptBand) {
  Rng rng(22);
  const auto head = opnp::testing::random_head(rng, 20, 5);
  const auto x = opnp::testing::random_features(rng, 200, 20);
  const auto map = estimate_sensitivity(head, x);
  const auto out = prune_weights(head, map, 30, 10);
  for (std::size_t c = 0; c < out.mask.size(); ++c) {
    const double v = map.values().flat()[c];
    if (out.mask[c]) {
      EXPECT_GE(v, out.omega_min);
      EXPECT_LE(v, out.omega_max);
    } else {
      EXPECT_TRUE(v <= out.omega_min || v >= out.omega_max);
    }
  }
}

TEST(PruneWeights, TiesAtTheCutAreSplitByIndex) {
  const auto head = ClassifierHead(Matrix<Real>(2, 2, 1.0f), {0, 0});
  const auto map = opnp::testing::map_from(2, 2, {1, 1, 1, 1});
  const auto out = prune_weights(head, map, 50, 0);
  EXPECT_EQ(out.mask, (Mask{0, 0, 1, 1}));
  EXPECT_EQ(out.omega_min, 1.0);
}

TEST(PruneNeurons, CountsAndBand) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto l = opnp::testing::uniform_size(rng, 2, 80);
    const auto values = opnp::testing::tied_values(rng, l, 3);
    const NeuronSensitivity o(values, NeuronStatistic::Mean);
    const std::uint64_t p_min = opnp::testing::uniform_size(rng, 0, 5000);
    const std::uint64_t p_max = opnp::testing::uniform_size(rng, 0, 4000);
    const auto k_low = opnp::testing::ceil_count_hundredths(p_min, l);
    const auto k_high = opnp::testing::ceil_count_hundredths(p_max, l);
    if (k_low + k_high >= l) {
      EXPECT_OPNP_ERROR(prune_neurons(o, p_min / 100.0, p_max / 100.0), ErrorKind::BandEmpty);
      continue;
    }
    const auto out = prune_neurons(o, p_min / 100.0, p_max / 100.0);
    EXPECT_EQ(zeros(out.mask), k_low + k_high);
    expect_band_property(values, out.mask, k_low);
  }
}

TEST(Prune, IdentityConfigLeavesScoresBitwiseUnchanged) {
  Rng rng(24);
  const auto head = opnp::testing::random_head(rng, 16, 6);
  const auto x = opnp::testing::random_features(rng, 300, 16);
  const auto map = estimate_sensitivity(head, x);
  const auto outcome = prune(head, map, neuron_sensitivity(map, NeuronStatistic::Mean), PruneConfig{});
  const auto pruned = outcome.apply(head);
  EXPECT_FALSE(pruned.is_pruned());
  EXPECT_EQ(score_batch(pruned, x, ScoreKind::Energy).scores(), score_batch(head, x, ScoreKind::Energy).scores());
  EXPECT_EQ(outcome.weights.omega_min, -INFINITY);
  EXPECT_EQ(outcome.neurons.omega_max, INFINITY);
}

TEST(Prune, ApplyAndsMasksAndKeepsWeights) {
  Rng rng(25);
  const auto head = opnp::testing::random_head(rng, 10, 4);
  const auto x = opnp::testing::random_features(rng, 100, 10);
  const auto map = estimate_sensitivity(head, x);
  const auto o = neuron_sensitivity(map, NeuronStatistic::Max);
  const auto first = prune(head, map, o, PruneConfig{20, 0, 0, 0}).apply(head);
  const auto second = prune(head, map, o, PruneConfig{0, 10, 20, 0}).apply(first);
  EXPECT_EQ(second.weights(), head.weights());
  for (std::size_t c = 0; c < 40; ++c) EXPECT_LE(second.weight_mask()[c], first.weight_mask()[c]);
  EXPECT_EQ(zeros(second.neuron_mask()), 2u);
  EXPECT_OPNP_ERROR(prune(head, map, o, PruneConfig{50, 50, 0, 0}), ErrorKind::BandEmpty);
  EXPECT_OPNP_ERROR(prune(head, map, NeuronSensitivity({1, 2}, NeuronStatistic::Mean), PruneConfig{}),
                    ErrorKind::DimensionMismatch);
}

TEST(Prune, ZeroPercentOnOneSideIsInactive) {
  Rng rng(26);
  const auto head = opnp::testing::random_head(rng, 10, 10);
  const auto map = opnp::testing::map_from(10, 10, opnp::testing::tied_values(rng, 100, 50));
  EXPECT_EQ(prune_weights(head, map, 0, 5).pruned, 5u);
  EXPECT_EQ(prune_weights(head, map, 5, 0).pruned, 5u);
  EXPECT_EQ(prune_weights(head, map, 0.1, 0).pruned, 1u);
}

TEST(Baselines, CountsAndSelectionRules) {
  Rng rng(27);
  const auto head = opnp::testing::random_head(rng, 20, 5);
  const auto x = opnp::testing::random_features(rng, 50, 20);

  const auto rpp = baseline_prune(head, x, BaselineKind::RandomParameter, 10, 4);
  EXPECT_EQ(zeros(rpp.weights.mask), 10u);
  EXPECT_EQ(rpp, baseline_prune(head, x, BaselineKind::RandomParameter, 10, 4));
  EXPECT_NE(rpp.weights.mask, baseline_prune(head, x, BaselineKind::RandomParameter, 10, 5).weights.mask);

  const auto tpp = baseline_prune(head, x, BaselineKind::MagnitudeParameter, 25, 0);
  EXPECT_EQ(zeros(tpp.weights.mask), 25u);
  double max_pruned = 0, min_kept = INFINITY;
  for (std::size_t c = 0; c < 100; ++c) {
    const double a = std::abs(head.weights().flat()[c]);
    if (tpp.weights.mask[c]) {
      min_kept = std::min(min_kept, a);
    } else {
      max_pruned = std::max(max_pruned, a);
    }
  }
  EXPECT_LE(max_pruned, min_kept);
  EXPECT_EQ(zeros(tpp.neurons.mask), 0u);

  const auto rnp = baseline_prune(head, x, BaselineKind::RandomNeuron, 15, 1);
  EXPECT_EQ(zeros(rnp.neurons.mask), 3u);
  EXPECT_EQ(zeros(rnp.weights.mask), 0u);

  const auto tnp = baseline_prune(head, x, BaselineKind::ActivationNeuron, 20, 0);
  EXPECT_EQ(zeros(tnp.neurons.mask), 4u);
  const auto act = mean_abs_activation(x);
  for (std::size_t i = 0; i < 20; ++i) {
    if (tnp.neurons.mask[i]) {
      EXPECT_GE(act[i], tnp.neurons.omega_min);
    } else {
      EXPECT_LE(act[i], tnp.neurons.omega_min);
    }
  }

  EXPECT_OPNP_ERROR(baseline_prune(head, x, BaselineKind::RandomNeuron, 100, 0), ErrorKind::BandEmpty);
  EXPECT_OPNP_ERROR(baseline_prune(head, x, BaselineKind::RandomParameter, 99.9, 0), ErrorKind::BandEmpty);
  EXPECT_OPNP_ERROR(parse_baseline_kind("XYZ"), ErrorKind::InvalidArgument);
  EXPECT_EQ(parse_baseline_kind("TNP"), BaselineKind::ActivationNeuron);
}

TEST(React, ClipAboveMaximumIsIdentity) {
  Rng rng(28);
  const auto x = opnp::testing::random_features(rng, 40, 6);
  const double top = *std::max_element(x.features().flat().begin(), x.features().flat().end());
  EXPECT_EQ(react_clip(x, top), x);
  EXPECT_EQ(react_clip(x, top * 3), x);
  EXPECT_EQ(react_clip(x, INFINITY), x);
  EXPECT_OPNP_ERROR(react_clip(x, NAN), ErrorKind::InvalidArgument);
}

TEST(React, ClipCapsEveryEntry) {
  FeatureSet x(Matrix<Real>(1, 4, std::vector<Real>{0.5f, 1.5f, 3.0f, 0.0f}));
  const auto c = react_clip(x, 1.0);
  EXPECT_EQ(std::vector<Real>(c.row(0).begin(), c.row(0).end()), (std::vector<Real>{0.5f, 1.0f, 1.0f, 0.0f}));
  std::vector<Real> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 1.0f);
  const FeatureSet r(Matrix<Real>(10, 10, ramp));
  EXPECT_EQ(react_threshold(r, 90), 90.0);
  EXPECT_EQ(react_threshold(r, 100), 100.0);
  EXPECT_OPNP_ERROR(react_threshold(r, 0), ErrorKind::InvalidArgument);
}
