#pragma once

// Diagnostics that explain why pruning helps: the logit reduction caused by
// removing low-sensitivity weights, the ID/OOD sensitivity gap on those
// weights, and a first-order flatness proxy.

#include <cmath>
#include <span>
#include <vector>

#include "opnp/core.hpp"
#include "opnp/sensitivity.hpp"

namespace opnp {

/// Delta f_j = sum over pruned (i, j) of M_ij * |W_ij| * h_i.
/// `weight_mask` uses the head convention: 1 = kept, 0 = pruned.
inline std::vector<double> logit_reduction(const ClassifierHead& head, const SensitivityMap& map,
                                           std::span<const std::uint8_t> weight_mask,
                                           std::span<const Real> feature) {
  validate(head, map);
  const std::size_t l = head.inputs();
  const std::size_t k = head.classes();
  require(weight_mask.size() == l * k, ErrorKind::DimensionMismatch,
          "weight mask has " + std::to_string(weight_mask.size()) + " entries, expected " + std::to_string(l * k));
  require(feature.size() == l, ErrorKind::DimensionMismatch,
          "feature has length " + std::to_string(feature.size()) + ", expected " + std::to_string(l));
  std::vector<double> delta(k, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (weight_mask[i * k + j]) continue;
      delta[j] += static_cast<double>(map(i, j)) * std::abs(static_cast<double>(head.weights()(i, j))) *
                  static_cast<double>(feature[i]);
    }
  }
  return delta;
}

/// Mean of logit_reduction over every row of a feature set.
inline std::vector<double> mean_logit_reduction(const ClassifierHead& head, const SensitivityMap& map,
                                                std::span<const std::uint8_t> weight_mask,
                                                const FeatureSet& features) {
  validate(head, features);
  std::vector<double> mean(head.classes(), 0.0);
  for (std::size_t r = 0; r < features.size(); ++r) {
    const auto d = logit_reduction(head, map, weight_mask, features.row(r));
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += d[j];
  }
  for (auto& m : mean) m /= static_cast<double>(features.size());
  return mean;
}

struct SensitivityGap {
  double mean_id = 0;
  double mean_ood = 0;
  double gap = 0;  // mean_ood - mean_id
  std::size_t pruned_count = 0;
};

/// Recomputes sensitivities separately on the ID and OOD sets (with the head
/// as given, so pass the unpruned head) and averages each over the pruned
/// positions of `weight_mask`.
inline SensitivityGap sensitivity_gap(const ClassifierHead& head, std::span<const std::uint8_t> weight_mask,
                                      const FeatureSet& id_features, const FeatureSet& ood_features,
                                      std::size_t threads = 1) {
  require(weight_mask.size() == head.inputs() * head.classes(), ErrorKind::DimensionMismatch,
          "weight mask does not match head shape");
  std::size_t pruned = 0;
  for (auto m : weight_mask) pruned += m == 0;
  require(pruned > 0, ErrorKind::EmptyMask, "weight mask prunes nothing");

  const auto m_id = estimate_sensitivity(head, id_features, 1.0, 0, threads);
  const auto m_ood = estimate_sensitivity(head, ood_features, 1.0, 0, threads);
  SensitivityGap out;
  out.pruned_count = pruned;
  for (std::size_t c = 0; c < weight_mask.size(); ++c) {
    if (weight_mask[c]) continue;
    out.mean_id += m_id.values().flat()[c];
    out.mean_ood += m_ood.values().flat()[c];
  }
  out.mean_id /= static_cast<double>(pruned);
  out.mean_ood /= static_cast<double>(pruned);
  out.gap = out.mean_ood - out.mean_id;
  return out;
}

struct FlatnessReport {
  double radius = 0;
  double proxy = 0;  // radius * max_ij M_ij
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Point estimate of first-order flatness: radius times the largest measured
/// gradient magnitude. Entries with a 0 in `weight_mask` (if given) are
/// treated as removed.
inline FlatnessReport flatness_proxy(const SensitivityMap& map, double radius,
                                     std::span<const std::uint8_t> weight_mask = {}) {
  require(radius > 0 && std::isfinite(radius), ErrorKind::InvalidArgument, "flatness radius must be positive");
  require(weight_mask.empty() || weight_mask.size() == map.values().size(), ErrorKind::DimensionMismatch,
          "weight mask does not match sensitivity map");
  FlatnessReport out{radius, 0, 0, 0};
  double peak = 0;
  bool found = false;
  for (std::size_t i = 0; i < map.inputs(); ++i) {
    for (std::size_t j = 0; j < map.classes(); ++j) {
      if (!weight_mask.empty() && !weight_mask[i * map.classes() + j]) continue;
      const double v = map(i, j);
      if (!found || v > peak) {
        peak = v;
        out.row = i;
        out.col = j;
        found = true;
      }
    }
  }
  out.proxy = radius * peak;
  return out;
}

}  // namespace opnp
