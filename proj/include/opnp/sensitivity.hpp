#pragma once

// Parameter sensitivity of the final affine layer: the mean magnitude of the
// energy gradient with respect to each weight, taken over training features.
//
// For E(x) = -log sum_j exp(f_j(x)) and f_j = b_j + sum_i W_ij h_i the gradient
// is analytic: dE/dW_ij = -p_j h_i with p = softmax(f), and dE/db_j = -p_j.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "opnp/core.hpp"
#include "opnp/parallel.hpp"
#include "opnp/scoring.hpp"

namespace opnp {

struct GradientSample {
  Matrix<double> weights;    // L x K
  std::vector<double> bias;  // K, diagnostic only
};

inline GradientSample per_sample_gradient(const ClassifierHead& head, std::span<const Real> feature) {
  const EffectiveHead effective(head);
  const std::size_t l = head.inputs();
  const std::size_t k = head.classes();
  std::vector<double> logits(k), probs(k);
  effective.logits_into(feature, logits);
  detail::softmax_into(logits, 1.0, probs);

  GradientSample g{Matrix<double>(l, k, 0.0), std::vector<double>(k)};
  for (std::size_t j = 0; j < k; ++j) g.bias[j] = -probs[j];
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (head.active(i, j)) g.weights(i, j) = -probs[j] * static_cast<double>(feature[i]);
    }
  }
  return g;
}

namespace detail {

/// Seeded uniform selection of m row indices without replacement, returned
/// in ascending order.
inline std::vector<std::size_t> sample_rows(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Sum over the given rows of |dE/dW_ij| into `acc` (L x K, 64-bit).
inline void accumulate_gradient_magnitudes(const ClassifierHead& head, const EffectiveHead& effective,
                                           const FeatureSet& features, std::span<const std::size_t> rows,
                                           std::span<double> acc) {
  const std::size_t l = head.inputs();
  const std::size_t k = head.classes();
  std::vector<double> logits(k), probs(k);
  std::vector<double> active(l * k);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < k; ++j) active[i * k + j] = head.active(i, j) ? 1.0 : 0.0;
  }
  for (std::size_t r : rows) {
    const auto h = features.row(r);
    effective.logits_into(h, logits);
    softmax_into(logits, 1.0, probs);
    for (std::size_t i = 0; i < l; ++i) {
      const double mag = std::abs(static_cast<double>(h[i]));
      if (mag == 0) continue;
      double* out = acc.data() + i * k;
      const double* on = active.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) out[j] += on[j] * probs[j] * mag;
    }
  }
}

}  // namespace detail

/// M_ij = (1/m) sum_k |g_ij(x_k)| over m = ceil(sample_ratio * N) rows drawn
/// without replacement (all rows when the ratio is 1).
///
/// Rows are processed in fixed chunks whose partial sums are added in chunk
/// order, so the result is bitwise identical for any worker count.
inline SensitivityMap estimate_sensitivity(const ClassifierHead& head, const FeatureSet& features,
                                           double sample_ratio = 1.0, std::uint64_t seed = 0,
                                           std::size_t threads = 1) {
  require(sample_ratio > 0 && sample_ratio <= 1, ErrorKind::InvalidArgument,
          "sample_ratio must lie in (0, 1], got " + std::to_string(sample_ratio));
  validate(head, features);
  const std::size_t m = std::min(features.size(), ceil_count(sample_ratio, features.size()));
  require(m >= 1, ErrorKind::EmptySelection, "sample ratio selects no rows");
  const auto rows = detail::sample_rows(features.size(), m, seed);

  const EffectiveHead effective(head);
  const std::size_t cells = head.inputs() * head.classes();
  constexpr std::size_t kChunk = 128;
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  const std::size_t workers = std::min(resolve_threads(threads), chunks);

  std::vector<double> total(cells, 0.0);
  std::vector<std::vector<double>> partial(workers, std::vector<double>(cells));
  for (std::size_t wave = 0; wave < chunks; wave += workers) {
    const std::size_t in_wave = std::min(workers, chunks - wave);
    parallel_for(in_wave, workers, [&](std::size_t w) {
      auto& acc = partial[w];
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::size_t begin = (wave + w) * kChunk;
      const std::size_t end = std::min(m, begin + kChunk);
      detail::accumulate_gradient_magnitudes(
          head, effective, features, std::span<const std::size_t>(rows).subspan(begin, end - begin), acc);
    });
    for (std::size_t w = 0; w < in_wave; ++w) {
      for (std::size_t c = 0; c < cells; ++c) total[c] += partial[w][c];
    }
  }

  Matrix<Real> values(head.inputs(), head.classes());
  for (std::size_t c = 0; c < cells; ++c) values.flat()[c] = static_cast<Real>(total[c] / static_cast<double>(m));
  return SensitivityMap(std::move(values), m, features.name());
}

/// Row statistic O_i of the sensitivity map. Median takes the lower-middle
/// element for even K; variance is the population variance.
inline NeuronSensitivity neuron_sensitivity(const SensitivityMap& map, NeuronStatistic statistic) {
  const std::size_t k = map.classes();
  std::vector<Real> out(map.inputs());
  std::vector<double> row(k);
  for (std::size_t i = 0; i < map.inputs(); ++i) {
    for (std::size_t j = 0; j < k; ++j) row[j] = map(i, j);
    double value = 0;
    switch (statistic) {
      case NeuronStatistic::Mean:
        value = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(k);
        break;
      case NeuronStatistic::Max:
        value = *std::max_element(row.begin(), row.end());
        break;
      case NeuronStatistic::Min:
        value = *std::min_element(row.begin(), row.end());
        break;
      case NeuronStatistic::Median: {
        const auto mid = row.begin() + static_cast<std::ptrdiff_t>((k - 1) / 2);
        std::nth_element(row.begin(), mid, row.end());
        value = *mid;
        break;
      }
      case NeuronStatistic::L2: {
        double ss = 0;
        for (double v : row) ss += v * v;
        value = std::sqrt(ss);
        break;
      }
      case NeuronStatistic::Variance: {
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(k);
        double ss = 0;
        for (double v : row) ss += (v - mean) * (v - mean);
        value = ss / static_cast<double>(k);
        break;
      }
    }
    out[i] = static_cast<Real>(value);
  }
  return NeuronSensitivity(std::move(out), statistic);
}

}  // namespace opnp
