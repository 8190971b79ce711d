#pragma once

// Shared domain types for the OOD toolkit. Everything here is a value type
// that validates its invariants on construction and is immutable afterwards.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "opnp/error.hpp"

namespace opnp {

using Real = float;
using Mask = std::vector<std::uint8_t>;

/// Dense row-major matrix. Only the operations the toolkit needs.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorKind::LengthMismatch,
            "matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                std::to_string(rows_ * cols_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

template <typename Range>
void require_finite(const Range& values, const std::string& what) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      fail(ErrorKind::NonFiniteValue, what + " entry " + std::to_string(k) + " is not finite");
    }
  }
}

inline Mask all_true(std::size_t n) { return Mask(n, 1); }

}  // namespace detail

/// Number of items selected by a fraction of n, rounded up.
/// Products that land within 1e-9 (relative) of an integer are snapped to it so
/// that e.g. 0.3% of 1000 selects 3 items, not 4.
inline std::size_t ceil_count(double fraction, std::size_t n) {
  const double x = fraction * static_cast<double>(n);
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::size_t>(std::max(0.0, nearest));
  }
  return static_cast<std::size_t>(std::max(0.0, std::ceil(x)));
}

/// Count selected by a percentage in [0, 100].
inline std::size_t percent_count(double percent, std::size_t n) { return ceil_count(percent / 100.0, n); }

// ---------------------------------------------------------------------------

/// N x L penultimate-layer activations, optionally labelled.
class FeatureSet {
 public:
  FeatureSet(Matrix<Real> features, std::optional<std::vector<std::uint32_t>> labels = std::nullopt,
             std::string name = {})
      : features_(std::move(features)), labels_(std::move(labels)), name_(std::move(name)) {
    require(features_.rows() >= 1 && features_.cols() >= 1, ErrorKind::EmptyInput,
            "feature set '" + name_ + "' must have at least one row and one column");
    detail::require_finite(features_.flat(), "feature set '" + name_ + "'");
    if (labels_) {
      require(labels_->size() == features_.rows(), ErrorKind::LengthMismatch,
              "feature set '" + name_ + "' has " + std::to_string(features_.rows()) + " rows but " +
                  std::to_string(labels_->size()) + " labels");
    }
  }

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t width() const noexcept { return features_.cols(); }
  const Matrix<Real>& features() const noexcept { return features_; }
  std::span<const Real> row(std::size_t n) const noexcept { return features_.row(n); }
  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::optional<std::vector<std::uint32_t>>& labels() const noexcept { return labels_; }
  const std::string& name() const noexcept { return name_; }

  FeatureSet subset(std::span<const std::size_t> rows) const {
    Matrix<Real> out(rows.size(), width());
    std::optional<std::vector<std::uint32_t>> out_labels;
    if (labels_) out_labels.emplace();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::ranges::copy(row(rows[k]), out.row(k).begin());
      if (labels_) out_labels->push_back((*labels_)[rows[k]]);
    }
    return FeatureSet(std::move(out), std::move(out_labels), name_);
  }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  Matrix<Real> features_;
  std::optional<std::vector<std::uint32_t>> labels_;
  std::string name_;
};

/// Final affine layer f(h) = W^T h + b with W stored L x K.
/// Pruning never touches W: it lives in the two masks, so the original head
/// is always recoverable via unmasked().
class ClassifierHead {
 public:
  ClassifierHead(Matrix<Real> weights, std::vector<Real> bias)
      : ClassifierHead(std::move(weights), std::move(bias), {}, {}) {}

  ClassifierHead(Matrix<Real> weights, std::vector<Real> bias, Mask weight_mask, Mask neuron_mask,
                 std::vector<std::string> class_names = {})
      : weights_(std::move(weights)),
        bias_(std::move(bias)),
        weight_mask_(std::move(weight_mask)),
        neuron_mask_(std::move(neuron_mask)),
        class_names_(std::move(class_names)) {
    require(weights_.rows() >= 1 && weights_.cols() >= 1, ErrorKind::EmptyInput,
            "head needs L >= 1 and K >= 1");
    require(bias_.size() == weights_.cols(), ErrorKind::LengthMismatch,
            "bias has " + std::to_string(bias_.size()) + " entries, expected K=" +
                std::to_string(weights_.cols()));
    if (weight_mask_.empty()) weight_mask_ = detail::all_true(weights_.size());
    if (neuron_mask_.empty()) neuron_mask_ = detail::all_true(weights_.rows());
    require(weight_mask_.size() == weights_.size(), ErrorKind::LengthMismatch,
            "weight_mask has " + std::to_string(weight_mask_.size()) + " entries, expected L*K=" +
                std::to_string(weights_.size()));
    require(neuron_mask_.size() == weights_.rows(), ErrorKind::LengthMismatch,
            "neuron_mask has " + std::to_string(neuron_mask_.size()) + " entries, expected L=" +
                std::to_string(weights_.rows()));
    for (auto& m : weight_mask_) m = m ? 1 : 0;
    for (auto& m : neuron_mask_) m = m ? 1 : 0;
    require(class_names_.empty() || class_names_.size() == weights_.cols(), ErrorKind::LengthMismatch,
            "class_names must have K entries");
    detail::require_finite(weights_.flat(), "head weights");
    detail::require_finite(bias_, "head bias");
  }

  std::size_t inputs() const noexcept { return weights_.rows(); }   // L
  std::size_t classes() const noexcept { return weights_.cols(); }  // K

  const Matrix<Real>& weights() const noexcept { return weights_; }
  const std::vector<Real>& bias() const noexcept { return bias_; }
  const Mask& weight_mask() const noexcept { return weight_mask_; }
  const Mask& neuron_mask() const noexcept { return neuron_mask_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  bool active(std::size_t i, std::size_t j) const noexcept {
    return neuron_mask_[i] && weight_mask_[i * classes() + j];
  }

  /// W_ij with both masks applied.
  Real effective_weight(std::size_t i, std::size_t j) const noexcept {
    return active(i, j) ? weights_(i, j) : Real{0};
  }

  bool is_pruned() const noexcept {
    return std::ranges::any_of(weight_mask_, [](auto m) { return m == 0; }) ||
           std::ranges::any_of(neuron_mask_, [](auto m) { return m == 0; });
  }

  ClassifierHead with_masks(Mask weight_mask, Mask neuron_mask) const {
    return ClassifierHead(weights_, bias_, std::move(weight_mask), std::move(neuron_mask), class_names_);
  }

  ClassifierHead unmasked() const { return with_masks({}, {}); }

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;

 private:
  Matrix<Real> weights_;
  std::vector<Real> bias_;
  Mask weight_mask_;
  Mask neuron_mask_;
  std::vector<std::string> class_names_;
};

/// Checks that a feature set can be fed through a head.
inline void validate(const ClassifierHead& head, const FeatureSet& features) {
  if (features.width() != head.inputs()) {
    fail(ErrorKind::DimensionMismatch, "expected feature width L=" + std::to_string(head.inputs()) +
                                           ", found " + std::to_string(features.width()) + " in '" +
                                           features.name() + "'");
  }
  detail::require_finite(features.features().flat(), "feature set '" + features.name() + "'");
  if (features.has_labels()) {
    const auto& labels = *features.labels();
    for (std::size_t n = 0; n < labels.size(); ++n) {
      if (labels[n] >= head.classes()) {
        fail(ErrorKind::InvalidArgument, "label " + std::to_string(labels[n]) + " at row " +
                                             std::to_string(n) + " is not below K=" +
                                             std::to_string(head.classes()));
      }
    }
  }
}

/// Mean absolute energy gradient per weight, L x K.
class SensitivityMap {
 public:
  SensitivityMap(Matrix<Real> values, std::size_t sample_count, std::string source_tag = {})
      : values_(std::move(values)), sample_count_(sample_count), source_tag_(std::move(source_tag)) {
    require(!values_.empty(), ErrorKind::EmptyInput, "sensitivity map is empty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const Real v = values_.flat()[k];
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "sensitivity entry " + std::to_string(k));
      if (v < 0) fail(ErrorKind::InvalidArgument, "sensitivity entry " + std::to_string(k) + " is negative");
    }
  }

  std::size_t inputs() const noexcept { return values_.rows(); }
  std::size_t classes() const noexcept { return values_.cols(); }
  const Matrix<Real>& values() const noexcept { return values_; }
  Real operator()(std::size_t i, std::size_t j) const noexcept { return values_(i, j); }
  std::size_t sample_count() const noexcept { return sample_count_; }
  const std::string& source_tag() const noexcept { return source_tag_; }

  friend bool operator==(const SensitivityMap&, const SensitivityMap&) = default;

 private:
  Matrix<Real> values_;
  std::size_t sample_count_;
  std::string source_tag_;
};

inline void validate(const ClassifierHead& head, const SensitivityMap& map) {
  if (map.inputs() != head.inputs() || map.classes() != head.classes()) {
    fail(ErrorKind::DimensionMismatch,
         "sensitivity map is " + std::to_string(map.inputs()) + "x" + std::to_string(map.classes()) +
             ", head is " + std::to_string(head.inputs()) + "x" + std::to_string(head.classes()));
  }
}

enum class NeuronStatistic { Mean, Max, Min, Median, L2, Variance };

inline constexpr NeuronStatistic kAllNeuronStatistics[] = {
    NeuronStatistic::Mean,   NeuronStatistic::Max, NeuronStatistic::Min,
    NeuronStatistic::Median, NeuronStatistic::L2,  NeuronStatistic::Variance};

constexpr std::string_view to_string(NeuronStatistic s) noexcept {
  switch (s) {
    case NeuronStatistic::Mean: return "mean";
    case NeuronStatistic::Max: return "max";
    case NeuronStatistic::Min: return "min";
    case NeuronStatistic::Median: return "median";
    case NeuronStatistic::L2: return "l2";
    case NeuronStatistic::Variance: return "variance";
  }
  return "mean";
}

inline NeuronStatistic parse_neuron_statistic(std::string_view name) {
  for (auto s : kAllNeuronStatistics) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorKind::UnknownStatistic, "unknown neuron statistic '" + std::string(name) + "'");
}

/// Per-neuron row statistic of a SensitivityMap.
class NeuronSensitivity {
 public:
  NeuronSensitivity(std::vector<Real> values, NeuronStatistic statistic)
      : values_(std::move(values)), statistic_(statistic) {
    require(!values_.empty(), ErrorKind::EmptyInput, "neuron sensitivity is empty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) fail(ErrorKind::NonFiniteValue, "neuron sensitivity entry " + std::to_string(k));
      if (values_[k] < 0) fail(ErrorKind::InvalidArgument, "neuron sensitivity entry " + std::to_string(k) + " is negative");
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<Real>& values() const noexcept { return values_; }
  NeuronStatistic statistic() const noexcept { return statistic_; }

  friend bool operator==(const NeuronSensitivity&, const NeuronSensitivity&) = default;

 private:
  std::vector<Real> values_;
  NeuronStatistic statistic_;
};

/// Four percentile knobs, in percent. Zero on a side means nothing is pruned there.
struct PruneConfig {
  double rho_min_w = 0;
  double rho_max_w = 0;
  double rho_min_o = 0;
  double rho_max_o = 0;
  NeuronStatistic neuron_statistic = NeuronStatistic::Mean;
  std::uint64_t seed = 0;

  void validate() const {
    auto in_range = [](double v, const char* name) {
      require(std::isfinite(v) && v >= 0 && v <= 100, ErrorKind::InvalidArgument,
              std::string(name) + " must lie in [0, 100]");
    };
    in_range(rho_min_w, "rho_min_w");
    in_range(rho_max_w, "rho_max_w");
    in_range(rho_min_o, "rho_min_o");
    in_range(rho_max_o, "rho_max_o");
    require(rho_min_w + rho_max_w < 100, ErrorKind::BandEmpty, "rho_min_w + rho_max_w must be below 100");
    require(rho_min_o + rho_max_o < 100, ErrorKind::BandEmpty, "rho_min_o + rho_max_o must be below 100");
  }

  bool is_identity() const noexcept {
    return rho_min_w == 0 && rho_max_w == 0 && rho_min_o == 0 && rho_max_o == 0;
  }

  auto tuple() const noexcept { return std::make_tuple(rho_min_w, rho_max_w, rho_min_o, rho_max_o); }

  friend bool operator==(const PruneConfig&, const PruneConfig&) = default;
};

enum class ScoreKind { Msp, Energy };

constexpr std::string_view to_string(ScoreKind k) noexcept { return k == ScoreKind::Msp ? "msp" : "energy"; }

inline ScoreKind parse_score_kind(std::string_view name) {
  if (name == "msp") return ScoreKind::Msp;
  if (name == "energy") return ScoreKind::Energy;
  fail(ErrorKind::InvalidArgument, "unknown score kind '" + std::string(name) + "'");
}

/// Per-row OOD scores; higher means more in-distribution.
class ScoreVector {
 public:
  ScoreVector(std::vector<double> scores, ScoreKind kind, double temperature = 1.0)
      : scores_(std::move(scores)), kind_(kind), temperature_(temperature) {
    require(temperature_ > 0 && std::isfinite(temperature_), ErrorKind::NonPositiveTemperature,
            "temperature must be positive");
    detail::require_finite(scores_, "score vector");
    if (kind_ == ScoreKind::Msp) {
      for (std::size_t n = 0; n < scores_.size(); ++n) {
        require(scores_[n] > 0 && scores_[n] <= 1, ErrorKind::InvalidArgument,
                "msp score " + std::to_string(n) + " outside (0, 1]");
      }
    }
  }

  std::size_t size() const noexcept { return scores_.size(); }
  const std::vector<double>& scores() const noexcept { return scores_; }
  double operator[](std::size_t n) const noexcept { return scores_[n]; }
  ScoreKind kind() const noexcept { return kind_; }
  double temperature() const noexcept { return temperature_; }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> scores_;
  ScoreKind kind_;
  double temperature_;
};

struct Histogram {
  std::vector<double> edges;  // n_bins + 1
  std::vector<std::size_t> counts;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct ReliabilityBin {
  double confidence_mean = 0;
  double accuracy = 0;
  std::size_t count = 0;

  friend bool operator==(const ReliabilityBin&, const ReliabilityBin&) = default;
};

/// Equal-width bins over (0, 1]; bin b covers (b/n, (b+1)/n].
struct ReliabilityBins {
  std::vector<ReliabilityBin> bins;
  double ece = 0;

  std::size_t n_bins() const noexcept { return bins.size(); }
  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    return n;
  }

  friend bool operator==(const ReliabilityBins&, const ReliabilityBins&) = default;
};

/// Separability and calibration summary for one ID/OOD pair. The calibration
/// part is present only when ID correctness is known (labelled ID features).
struct EvalReport {
  double fpr95 = 0;
  double auroc = 0;
  double lambda = 0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  Histogram id_histogram;
  Histogram ood_histogram;
  std::optional<ReliabilityBins> reliability;

  std::optional<double> ece() const noexcept {
    if (!reliability) return std::nullopt;
    return reliability->ece;
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

}  // namespace opnp
