#pragma once

// Mask construction from sensitivities (weights and neurons), the baseline
// pruners used for ablations, and ReAct-style activation clipping.
//
// Percentiles are applied as counts: rho% of n selects ceil(rho/100 * n)
// positions, ranked by a stable sort on (value, index). Values tied with the
// threshold are therefore split deterministically rather than all-or-nothing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "opnp/core.hpp"
#include "opnp/sensitivity.hpp"

namespace opnp {

enum class Side { Low, High };

namespace detail {

template <typename T>
std::vector<std::size_t> stable_order(std::span<const T> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

inline void check_percent(double rho, const std::string& name) {
  require(std::isfinite(rho) && rho >= 0 && rho <= 100, ErrorKind::InvalidArgument,
          name + " must lie in [0, 100], got " + std::to_string(rho));
}

inline void check_band(double rho_min, double rho_max, std::size_t k_low, std::size_t k_high, std::size_t n,
                       const std::string& what) {
  require(rho_min + rho_max < 100, ErrorKind::BandEmpty,
          what + ": rho_min + rho_max = " + std::to_string(rho_min + rho_max) + " leaves nothing to keep");
  require(k_low + k_high < n, ErrorKind::BandEmpty,
          what + ": pruning " + std::to_string(k_low) + " + " + std::to_string(k_high) + " of " +
              std::to_string(n) + " entries leaves nothing to keep");
}

}  // namespace detail

/// Nearest-rank threshold. Low side: the value at ascending rank
/// ceil(rho/100 * n), i.e. the largest pruned value. High side: the
/// ceil(rho/100 * n)-th largest value. rho = 0 returns -inf / +inf.
template <typename T>
double percentile_threshold(std::span<const T> values, double rho, Side side) {
  require(!values.empty(), ErrorKind::EmptyInput, "percentile of an empty vector");
  detail::check_percent(rho, "rho");
  const std::size_t k = percent_count(rho, values.size());
  if (k == 0) {
    return side == Side::Low ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return side == Side::Low ? sorted[k - 1] : sorted[sorted.size() - k];
}

/// Masks the k_low lowest and k_high highest entries by stable rank.
/// Returns 1 = kept, 0 = pruned.
template <typename T>
Mask extreme_mask(std::span<const T> values, std::size_t k_low, std::size_t k_high) {
  Mask keep(values.size(), 1);
  const auto order = detail::stable_order(values);
  for (std::size_t r = 0; r < k_low && r < order.size(); ++r) keep[order[r]] = 0;
  for (std::size_t r = 0; r < k_high && r < order.size(); ++r) keep[order[order.size() - 1 - r]] = 0;
  return keep;
}

struct WeightPruning {
  std::size_t inputs = 0;   // L
  std::size_t classes = 0;  // K
  Mask mask;                // L*K, row-major, 1 = kept
  double omega_min = -std::numeric_limits<double>::infinity();
  double omega_max = std::numeric_limits<double>::infinity();
  std::size_t pruned = 0;

  static WeightPruning identity(std::size_t l, std::size_t k) { return {l, k, Mask(l * k, 1), -INFINITY, INFINITY, 0}; }
  friend bool operator==(const WeightPruning&, const WeightPruning&) = default;
};

struct NeuronPruning {
  Mask mask;  // L, 1 = kept
  double omega_min = -std::numeric_limits<double>::infinity();
  double omega_max = std::numeric_limits<double>::infinity();
  std::size_t pruned = 0;

  static NeuronPruning identity(std::size_t l) { return {Mask(l, 1), -INFINITY, INFINITY, 0}; }
  friend bool operator==(const NeuronPruning&, const NeuronPruning&) = default;
};

/// Weight and neuron masks together. Applying to a head ANDs them with the
/// head's existing masks; the stored weights are never modified.
struct PruneOutcome {
  WeightPruning weights;
  NeuronPruning neurons;

  std::size_t inputs() const noexcept { return weights.inputs; }
  std::size_t classes() const noexcept { return weights.classes; }

  ClassifierHead apply(const ClassifierHead& head) const {
    require(head.inputs() == weights.inputs && head.classes() == weights.classes &&
                neurons.mask.size() == head.inputs(),
            ErrorKind::DimensionMismatch, "prune outcome does not match head shape");
    Mask wm = head.weight_mask();
    Mask nm = head.neuron_mask();
    for (std::size_t c = 0; c < wm.size(); ++c) wm[c] = wm[c] && weights.mask[c];
    for (std::size_t i = 0; i < nm.size(); ++i) nm[i] = nm[i] && neurons.mask[i];
    return head.with_masks(std::move(wm), std::move(nm));
  }

  friend bool operator==(const PruneOutcome&, const PruneOutcome&) = default;
};

inline WeightPruning prune_weights(const ClassifierHead& head, const SensitivityMap& map, double rho_min_w,
                                   double rho_max_w) {
  validate(head, map);
  detail::check_percent(rho_min_w, "rho_min_w");
  detail::check_percent(rho_max_w, "rho_max_w");
  const auto values = map.values().flat();
  const std::size_t n = values.size();
  const std::size_t k_low = percent_count(rho_min_w, n);
  const std::size_t k_high = percent_count(rho_max_w, n);
  detail::check_band(rho_min_w, rho_max_w, k_low, k_high, n, "weight pruning");

  WeightPruning out{head.inputs(), head.classes(), extreme_mask(values, k_low, k_high),
                    percentile_threshold(values, rho_min_w, Side::Low),
                    percentile_threshold(values, rho_max_w, Side::High), k_low + k_high};
  return out;
}

inline NeuronPruning prune_neurons(const NeuronSensitivity& neurons, double rho_min_o, double rho_max_o) {
  detail::check_percent(rho_min_o, "rho_min_o");
  detail::check_percent(rho_max_o, "rho_max_o");
  const std::span<const Real> values(neurons.values());
  const std::size_t n = values.size();
  const std::size_t k_low = percent_count(rho_min_o, n);
  const std::size_t k_high = percent_count(rho_max_o, n);
  detail::check_band(rho_min_o, rho_max_o, k_low, k_high, n, "neuron pruning");

  return NeuronPruning{extreme_mask(values, k_low, k_high), percentile_threshold(values, rho_min_o, Side::Low),
                       percentile_threshold(values, rho_max_o, Side::High), k_low + k_high};
}

/// Full parameter-and-neuron pruning for one configuration.
inline PruneOutcome prune(const ClassifierHead& head, const SensitivityMap& map, const NeuronSensitivity& neurons,
                          const PruneConfig& config) {
  config.validate();
  require(neurons.size() == head.inputs(), ErrorKind::DimensionMismatch,
          "neuron sensitivity has " + std::to_string(neurons.size()) + " entries, head has L=" +
              std::to_string(head.inputs()));
  return {prune_weights(head, map, config.rho_min_w, config.rho_max_w),
          prune_neurons(neurons, config.rho_min_o, config.rho_max_o)};
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineKind { RandomParameter, MagnitudeParameter, RandomNeuron, ActivationNeuron };

constexpr std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::RandomParameter: return "RPP";
    case BaselineKind::MagnitudeParameter: return "TPP";
    case BaselineKind::RandomNeuron: return "RNP";
    case BaselineKind::ActivationNeuron: return "TNP";
  }
  return "RPP";
}

inline BaselineKind parse_baseline_kind(std::string_view name) {
  for (auto k : {BaselineKind::RandomParameter, BaselineKind::MagnitudeParameter, BaselineKind::RandomNeuron,
                 BaselineKind::ActivationNeuron}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::InvalidArgument, "unknown baseline pruner '" + std::string(name) + "'");
}

/// Mean of |h_i| over all rows, per neuron.
inline std::vector<double> mean_abs_activation(const FeatureSet& features) {
  std::vector<double> mean(features.width(), 0.0);
  for (std::size_t r = 0; r < features.size(); ++r) {
    const auto h = features.row(r);
    for (std::size_t i = 0; i < h.size(); ++i) mean[i] += std::abs(static_cast<double>(h[i]));
  }
  for (auto& m : mean) m /= static_cast<double>(features.size());
  return mean;
}

/// Ablation pruners that ignore sensitivity: random or low-magnitude weights,
/// random or low-activation neurons. `features` is only read by TNP.
inline PruneOutcome baseline_prune(const ClassifierHead& head, const FeatureSet& features, BaselineKind kind,
                                   double rho, std::uint64_t seed) {
  require(std::isfinite(rho) && rho >= 0, ErrorKind::InvalidArgument, "rho must be non-negative");
  require(rho < 100, ErrorKind::BandEmpty, "baseline pruning rho must be below 100");
  const std::size_t l = head.inputs();
  const std::size_t k = head.classes();
  PruneOutcome out{WeightPruning::identity(l, k), NeuronPruning::identity(l)};

  auto mask_positions = [](Mask& mask, std::span<const std::size_t> positions) {
    for (auto p : positions) mask[p] = 0;
  };

  switch (kind) {
    case BaselineKind::RandomParameter: {
      const std::size_t count = percent_count(rho, l * k);
      require(count < l * k, ErrorKind::BandEmpty, "RPP would prune every weight");
      mask_positions(out.weights.mask, detail::sample_rows(l * k, count, seed));
      out.weights.pruned = count;
      break;
    }
    case BaselineKind::MagnitudeParameter: {
      const std::size_t count = percent_count(rho, l * k);
      require(count < l * k, ErrorKind::BandEmpty, "TPP would prune every weight");
      std::vector<double> magnitude(l * k);
      for (std::size_t c = 0; c < l * k; ++c) magnitude[c] = std::abs(head.weights().flat()[c]);
      out.weights.mask = extreme_mask(std::span<const double>(magnitude), count, 0);
      out.weights.omega_min = percentile_threshold(std::span<const double>(magnitude), rho, Side::Low);
      out.weights.pruned = count;
      break;
    }
    case BaselineKind::RandomNeuron: {
      const std::size_t count = percent_count(rho, l);
      require(count < l, ErrorKind::BandEmpty, "RNP would prune every neuron");
      mask_positions(out.neurons.mask, detail::sample_rows(l, count, seed));
      out.neurons.pruned = count;
      break;
    }
    case BaselineKind::ActivationNeuron: {
      validate(head, features);
      const std::size_t count = percent_count(rho, l);
      require(count < l, ErrorKind::BandEmpty, "TNP would prune every neuron");
      const auto activation = mean_abs_activation(features);
      out.neurons.mask = extreme_mask(std::span<const double>(activation), count, 0);
      out.neurons.omega_min = percentile_threshold(std::span<const double>(activation), rho, Side::Low);
      out.neurons.pruned = count;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ReAct

/// Caps every activation at `clip_threshold`. +inf is accepted as "no clip".
inline FeatureSet react_clip(const FeatureSet& features, double clip_threshold) {
  require(!std::isnan(clip_threshold) && clip_threshold > -std::numeric_limits<double>::infinity(),
          ErrorKind::InvalidArgument, "clip threshold must be a number or +inf");
  Matrix<Real> clipped = features.features();
  const auto cap = static_cast<double>(clip_threshold);
  for (auto& v : clipped.flat()) {
    if (static_cast<double>(v) > cap) v = static_cast<Real>(cap);
  }
  return FeatureSet(std::move(clipped), features.labels(), features.name());
}

/// Nearest-rank percentile of all activation entries (default 90th), the
/// conventional way to pick the ReAct clip value from training features.
inline double react_threshold(const FeatureSet& features, double percentile = 90.0) {
  require(std::isfinite(percentile) && percentile > 0 && percentile <= 100, ErrorKind::InvalidArgument,
          "react percentile must lie in (0, 100]");
  return percentile_threshold(features.features().flat(), percentile, Side::Low);
}

}  // namespace opnp
