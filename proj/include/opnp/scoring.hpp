#pragma once

// Logits, softmax, and the two OOD scores (MSP and energy). All scores follow
// one orientation: larger means more in-distribution.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "opnp/core.hpp"
#include "opnp/parallel.hpp"

namespace opnp {

struct LogitVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const noexcept { return values[j]; }
};

/// Head with both masks folded into a dense 64-bit weight matrix. Every logit
/// in the toolkit goes through this so single-row and batch paths agree bitwise.
class EffectiveHead {
 public:
  explicit EffectiveHead(const ClassifierHead& head)
      : inputs_(head.inputs()), classes_(head.classes()), weights_(inputs_ * classes_), bias_(classes_) {
    for (std::size_t i = 0; i < inputs_; ++i) {
      for (std::size_t j = 0; j < classes_; ++j) weights_[i * classes_ + j] = head.effective_weight(i, j);
    }
    for (std::size_t j = 0; j < classes_; ++j) bias_[j] = head.bias()[j];
  }

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t classes() const noexcept { return classes_; }

  /// out_j = b_j + sum_i W_ij h_i, summed in ascending i.
  void logits_into(std::span<const Real> feature, std::span<double> out) const {
    require(feature.size() == inputs_, ErrorKind::DimensionMismatch,
            "expected feature of length L=" + std::to_string(inputs_) + ", found " +
                std::to_string(feature.size()));
    std::copy(bias_.begin(), bias_.end(), out.begin());
    for (std::size_t i = 0; i < inputs_; ++i) {
      const double h = feature[i];
      const double* w = weights_.data() + i * classes_;
      for (std::size_t j = 0; j < classes_; ++j) out[j] += w[j] * h;
    }
  }

  LogitVector logits(std::span<const Real> feature) const {
    LogitVector f{std::vector<double>(classes_)};
    logits_into(feature, f.values);
    return f;
  }

 private:
  std::size_t inputs_;
  std::size_t classes_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

inline LogitVector compute_logits(const ClassifierHead& head, std::span<const Real> feature) {
  return EffectiveHead(head).logits(feature);
}

namespace detail {

inline double log_sum_exp(std::span<const double> values) {
  require(!values.empty(), ErrorKind::EmptyInput, "log-sum-exp of an empty vector");
  const double peak = *std::max_element(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

inline void softmax_into(std::span<const double> logits, double temperature, std::span<double> out) {
  require(temperature > 0 && std::isfinite(temperature), ErrorKind::NonPositiveTemperature,
          "temperature must be positive, got " + std::to_string(temperature));
  require(!logits.empty(), ErrorKind::EmptyInput, "softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end()) / temperature;
  double sum = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] / temperature - peak);
    sum += out[j];
  }
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] /= sum;
}

}  // namespace detail

inline std::vector<double> softmax(const LogitVector& logits, double temperature = 1.0) {
  std::vector<double> p(logits.size());
  detail::softmax_into(logits.values, temperature, p);
  return p;
}

inline double msp_score(std::span<const double> probs) {
  require(!probs.empty(), ErrorKind::EmptyInput, "msp of an empty probability vector");
  double total = 0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0 && p <= 1, ErrorKind::InvalidArgument, "probability outside [0, 1]");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-6, ErrorKind::InvalidArgument, "probabilities do not sum to 1");
  return *std::max_element(probs.begin(), probs.end());
}

/// log sum_j exp(f_j): the negated free energy, so ID samples score higher.
inline double energy_score(const LogitVector& logits) {
  detail::require_finite(logits.values, "logits");
  return detail::log_sum_exp(logits.values);
}

enum class Decision { InDistribution, OutOfDistribution };

/// Threshold detector: ID iff score >= lambda.
constexpr Decision classify(double score, double lambda) noexcept {
  return score >= lambda ? Decision::InDistribution : Decision::OutOfDistribution;
}

/// Scores every row of `features`. Rows are independent, so the result does
/// not depend on `threads`.
inline ScoreVector score_batch(const ClassifierHead& head, const FeatureSet& features, ScoreKind kind,
                               double temperature = 1.0, std::size_t threads = 1) {
  validate(head, features);
  require(temperature > 0 && std::isfinite(temperature), ErrorKind::NonPositiveTemperature,
          "temperature must be positive");
  const EffectiveHead effective(head);
  const std::size_t n = features.size();
  const std::size_t k = head.classes();
  std::vector<double> scores(n);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<double> logits(k), probs(k);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      effective.logits_into(features.row(r), logits);
      if (kind == ScoreKind::Energy) {
        scores[r] = detail::log_sum_exp(logits);
      } else {
        detail::softmax_into(logits, temperature, probs);
        scores[r] = *std::max_element(probs.begin(), probs.end());
      }
    }
  });
  return ScoreVector(std::move(scores), kind, temperature);
}

/// Argmax prediction and its softmax confidence for every row.
struct Predictions {
  std::vector<std::uint32_t> labels;
  std::vector<double> confidences;
};

inline Predictions predict(const ClassifierHead& head, const FeatureSet& features, double temperature = 1.0) {
  validate(head, features);
  const EffectiveHead effective(head);
  const std::size_t k = head.classes();
  Predictions out;
  out.labels.reserve(features.size());
  out.confidences.reserve(features.size());
  std::vector<double> logits(k), probs(k);
  for (std::size_t r = 0; r < features.size(); ++r) {
    effective.logits_into(features.row(r), logits);
    detail::softmax_into(logits, temperature, probs);
    const auto best = std::max_element(probs.begin(), probs.end());
    out.labels.push_back(static_cast<std::uint32_t>(best - probs.begin()));
    out.confidences.push_back(*best);
  }
  return out;
}

/// Fraction of labelled rows whose argmax matches the label.
inline double accuracy(const ClassifierHead& head, const FeatureSet& features) {
  require(features.has_labels(), ErrorKind::InvalidArgument, "accuracy needs labelled features");
  const auto pred = predict(head, features);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < features.size(); ++r) hits += pred.labels[r] == (*features.labels())[r];
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

}  // namespace opnp
