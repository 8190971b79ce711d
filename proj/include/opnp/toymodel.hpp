#pragma once

// Desk-scale stand-in for a pretrained backbone: Gaussian class clusters, a
// one-hidden-layer rectifier network trained with softmax cross-entropy, and
// the finite-difference energy gradient used to check the closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "opnp/core.hpp"

namespace opnp::toy {

enum class OodKind { ShiftedCenters, UniformBox };

struct TaskSpec {
  std::size_t classes = 8;     // K
  std::size_t input_dim = 32;  // D
  double sigma = 0.25;         // within-class noise, per coordinate
  OodKind ood_kind = OodKind::ShiftedCenters;
  double ood_shift = 1.3;      // norm of the shared offset for shifted centers
  double box_half_width = 1.0; // uniform box [-a, a]^D
  std::uint64_t seed = 0;
};

/// Class centers on the unit sphere plus the OOD generator. Shifted-center OOD
/// clusters sit at normalize(center_k + offset).
class ToyTask {
 public:
  explicit ToyTask(const TaskSpec& spec) : spec_(spec) {
    require(spec.classes >= 2, ErrorKind::InvalidSpec, "toy task needs K >= 2");
    require(spec.input_dim >= 2, ErrorKind::InvalidSpec, "toy task needs D >= 2");
    require(spec.sigma >= 0 && std::isfinite(spec.sigma), ErrorKind::InvalidSpec, "sigma must be non-negative");
    require(spec.ood_shift >= 0 && spec.box_half_width > 0, ErrorKind::InvalidSpec, "bad OOD parameters");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t d = spec.input_dim;
    centers_ = Matrix<double>(spec.classes, d, 0.0);
    constexpr int kAttempts = 1000;
    for (std::size_t k = 0; k < spec.classes; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
        auto c = centers_.row(k);
        double norm = 0;
        for (auto& v : c) {
          v = normal(rng);
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : c) v /= norm;
        placed = true;
        for (std::size_t q = 0; q < k && placed; ++q) placed = distance(centers_.row(q), c) > 4 * spec.sigma;
      }
      require(placed, ErrorKind::InvalidSpec, "cannot place separated class centers; reduce sigma or K");
    }
    offset_.resize(d);
    double norm = 0;
    for (auto& v : offset_) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : offset_) v *= spec.ood_shift / norm;

    // Shifted centers go back onto the unit sphere.
    ood_centers_ = Matrix<double>(spec.classes, d, 0.0);
    for (std::size_t k = 0; k < spec.classes; ++k) {
      auto c = ood_centers_.row(k);
      double n2 = 0;
      for (std::size_t q = 0; q < d; ++q) {
        c[q] = centers_(k, q) + offset_[q];
        n2 += c[q] * c[q];
      }
      const double n = std::sqrt(n2);
      require(n > 0, ErrorKind::InvalidSpec, "OOD offset cancels a class center");
      for (auto& v : c) v /= n;
    }
  }

  const TaskSpec& spec() const noexcept { return spec_; }
  const Matrix<double>& centers() const noexcept { return centers_; }
  const std::vector<double>& ood_offset() const noexcept { return offset_; }
  const Matrix<double>& ood_centers() const noexcept { return ood_centers_; }

  /// n_per_class labelled samples per class, class-major order.
  FeatureSet sample_id(std::size_t n_per_class, std::uint64_t seed, std::string name) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec_.sigma > 0 ? spec_.sigma : 1.0);
    const std::size_t d = spec_.input_dim;
    Matrix<Real> x(n_per_class * spec_.classes, d);
    std::vector<std::uint32_t> labels;
    labels.reserve(x.rows());
    for (std::size_t k = 0; k < spec_.classes; ++k) {
      for (std::size_t n = 0; n < n_per_class; ++n) {
        auto row = x.row(labels.size());
        for (std::size_t c = 0; c < d; ++c) {
          row[c] = static_cast<Real>(centers_(k, c) + (spec_.sigma > 0 ? noise(rng) : 0.0));
        }
        labels.push_back(static_cast<std::uint32_t>(k));
      }
    }
    return FeatureSet(std::move(x), std::move(labels), std::move(name));
  }

  FeatureSet sample_ood(std::size_t n, std::uint64_t seed, std::string name) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec_.sigma > 0 ? spec_.sigma : 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, spec_.classes - 1);
    std::uniform_real_distribution<double> box(-spec_.box_half_width, spec_.box_half_width);
    const std::size_t d = spec_.input_dim;
    Matrix<Real> x(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      auto row = x.row(r);
      if (spec_.ood_kind == OodKind::ShiftedCenters) {
        const auto center = ood_centers_.row(pick(rng));
        for (std::size_t c = 0; c < d; ++c) {
          row[c] = static_cast<Real>(center[c] + (spec_.sigma > 0 ? noise(rng) : 0.0));
        }
      } else {
        for (auto& v : row) v = static_cast<Real>(box(rng));
      }
    }
    return FeatureSet(std::move(x), std::nullopt, std::move(name));
  }

 private:
  static double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return std::sqrt(s);
  }

  TaskSpec spec_;
  Matrix<double> centers_;
  std::vector<double> offset_;
  Matrix<double> ood_centers_;
};

/// Raw-input splits of one toy task. Every split draws from its own seed.
struct TaskData {
  FeatureSet train;
  FeatureSet val_id;
  FeatureSet val_ood;
  FeatureSet test_id;
  FeatureSet test_ood;
};

inline TaskData generate_task(const ToyTask& task, std::size_t n_train_per_class, std::size_t n_test_per_class,
                              std::size_t n_ood, std::uint64_t seed) {
  require(n_train_per_class >= 1 && n_test_per_class >= 1 && n_ood >= 1, ErrorKind::InvalidSpec,
          "every split needs at least one sample");
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  std::vector<std::uint64_t> seeds(5);
  seq.generate(seeds.begin(), seeds.end());
  return {task.sample_id(n_train_per_class, seeds[0], "train"), task.sample_id(n_test_per_class, seeds[1], "val-id"),
          task.sample_ood(n_ood, seeds[2], "val-ood"), task.sample_id(n_test_per_class, seeds[3], "test-id"),
          task.sample_ood(n_ood, seeds[4], "test-ood")};
}

struct TrainSpec {
  std::size_t hidden = 64;  // H
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

/// x -> relu(x A + c) -> head. The head is the only part the toolkit prunes.
class ToyNetwork {
 public:
  ToyNetwork(Matrix<double> hidden_weights, std::vector<double> hidden_bias, Matrix<double> head_weights,
             std::vector<double> head_bias)
      : a_(std::move(hidden_weights)), c_(std::move(hidden_bias)), w_(std::move(head_weights)), b_(std::move(head_bias)) {}

  std::size_t input_dim() const noexcept { return a_.rows(); }
  std::size_t hidden() const noexcept { return a_.cols(); }
  std::size_t classes() const noexcept { return w_.cols(); }

  void hidden_into(std::span<const Real> x, std::span<double> h) const {
    require(x.size() == input_dim(), ErrorKind::DimensionMismatch, "toy input has the wrong dimension");
    std::copy(c_.begin(), c_.end(), h.begin());
    for (std::size_t d = 0; d < input_dim(); ++d) {
      const double xd = x[d];
      const double* row = a_.row(d).data();
      for (std::size_t u = 0; u < hidden(); ++u) h[u] += xd * row[u];
    }
    for (auto& v : h) v = std::max(0.0, v);
  }

  /// Penultimate (post-rectifier) activations of every row, labels carried over.
  FeatureSet extract_features(const FeatureSet& inputs) const {
    Matrix<Real> out(inputs.size(), hidden());
    std::vector<double> h(hidden());
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      hidden_into(inputs.row(r), h);
      for (std::size_t u = 0; u < hidden(); ++u) out(r, u) = static_cast<Real>(h[u]);
    }
    return FeatureSet(std::move(out), inputs.labels(), inputs.name());
  }

  ClassifierHead head() const {
    Matrix<Real> w(hidden(), classes());
    for (std::size_t c = 0; c < w.size(); ++c) w.flat()[c] = static_cast<Real>(w_.flat()[c]);
    std::vector<Real> b(b_.begin(), b_.end());
    return ClassifierHead(std::move(w), std::move(b));
  }

  /// Mean cross-entropy over labelled inputs.
  double loss(const FeatureSet& inputs) const {
    require(inputs.has_labels(), ErrorKind::InvalidArgument, "loss needs labelled inputs");
    std::vector<double> h(hidden()), f(classes());
    double total = 0;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      forward(inputs.row(r), h, f);
      const double peak = *std::max_element(f.begin(), f.end());
      double z = 0;
      for (double v : f) z += std::exp(v - peak);
      total += peak + std::log(z) - f[(*inputs.labels())[r]];
    }
    return total / static_cast<double>(inputs.size());
  }

  double accuracy(const FeatureSet& inputs) const {
    require(inputs.has_labels(), ErrorKind::InvalidArgument, "accuracy needs labelled inputs");
    std::vector<double> h(hidden()), f(classes());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      forward(inputs.row(r), h, f);
      hits += static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin()) == (*inputs.labels())[r];
    }
    return static_cast<double>(hits) / static_cast<double>(inputs.size());
  }

  void forward(std::span<const Real> x, std::span<double> h, std::span<double> f) const {
    hidden_into(x, h);
    std::copy(b_.begin(), b_.end(), f.begin());
    for (std::size_t u = 0; u < hidden(); ++u) {
      const double* row = w_.row(u).data();
      for (std::size_t k = 0; k < classes(); ++k) f[k] += h[u] * row[k];
    }
  }

  Matrix<double>& hidden_weights() noexcept { return a_; }
  std::vector<double>& hidden_bias() noexcept { return c_; }
  Matrix<double>& head_weights() noexcept { return w_; }
  std::vector<double>& head_bias() noexcept { return b_; }

 private:
  Matrix<double> a_;  // D x H
  std::vector<double> c_;
  Matrix<double> w_;  // H x K
  std::vector<double> b_;
};

inline ToyNetwork init_network(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  require(input_dim >= 1 && hidden >= 1 && classes >= 2, ErrorKind::InvalidSpec, "bad toy network shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> in_init(0.0, std::sqrt(2.0 / static_cast<double>(input_dim)));
  std::normal_distribution<double> out_init(0.0, std::sqrt(1.0 / static_cast<double>(hidden)));
  Matrix<double> a(input_dim, hidden), w(hidden, classes);
  for (auto& v : a.flat()) v = in_init(rng);
  for (auto& v : w.flat()) v = out_init(rng);
  return ToyNetwork(std::move(a), std::vector<double>(hidden, 0.0), std::move(w), std::vector<double>(classes, 0.0));
}

/// Mini-batch SGD with momentum on softmax cross-entropy. Deterministic given
/// the seed; 0 epochs returns the initialization.
inline ToyNetwork train_toy(const FeatureSet& train, std::size_t classes, const TrainSpec& spec) {
  require(train.has_labels(), ErrorKind::InvalidArgument, "training inputs must be labelled");
  require(spec.batch_size >= 1 && spec.learning_rate > 0, ErrorKind::InvalidSpec, "bad training hyperparameters");
  for (auto y : *train.labels()) require(y < classes, ErrorKind::InvalidArgument, "training label out of range");

  ToyNetwork net = init_network(train.width(), spec.hidden, classes, spec.seed);
  const std::size_t d = net.input_dim(), hd = net.hidden(), k = net.classes();
  auto& a = net.hidden_weights();
  auto& c = net.hidden_bias();
  auto& w = net.head_weights();
  auto& b = net.head_bias();

  Matrix<double> ga(d, hd), gw(hd, k), va(d, hd, 0.0), vw(hd, k, 0.0);
  std::vector<double> gc(hd), gb(k), vc(hd, 0.0), vb(k, 0.0);
  std::vector<double> h(hd), f(k), dh(hd);

  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
      const std::size_t end = std::min(order.size(), start + spec.batch_size);
      std::fill(ga.flat().begin(), ga.flat().end(), 0.0);
      std::fill(gw.flat().begin(), gw.flat().end(), 0.0);
      std::fill(gc.begin(), gc.end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t n = start; n < end; ++n) {
        const auto x = train.row(order[n]);
        const auto y = (*train.labels())[order[n]];
        net.forward(x, h, f);
        const double peak = *std::max_element(f.begin(), f.end());
        double z = 0;
        for (auto& v : f) z += (v = std::exp(v - peak));
        for (auto& v : f) v /= z;
        f[y] -= 1.0;  // dLoss/dlogits
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t u = 0; u < hd; ++u) {
          if (h[u] <= 0) continue;
          for (std::size_t j = 0; j < k; ++j) {
            gw(u, j) += h[u] * f[j];
            dh[u] += w(u, j) * f[j];
          }
        }
        for (std::size_t j = 0; j < k; ++j) gb[j] += f[j];
        for (std::size_t u = 0; u < hd; ++u) {
          if (h[u] <= 0) continue;
          gc[u] += dh[u];
          for (std::size_t q = 0; q < d; ++q) ga(q, u) += x[q] * dh[u];
        }
      }
      const double scale = spec.learning_rate / static_cast<double>(end - start);
      auto step = [&](std::span<double> param, std::span<const double> grad, std::span<double> vel) {
        for (std::size_t p = 0; p < param.size(); ++p) {
          vel[p] = spec.momentum * vel[p] - scale * grad[p];
          param[p] += vel[p];
        }
      };
      step(a.flat(), ga.flat(), va.flat());
      step(c, gc, vc);
      step(w.flat(), gw.flat(), vw.flat());
      step(b, gb, vb);
    }
    for (double v : w.flat()) {
      if (!std::isfinite(v)) fail(ErrorKind::DivergedTraining, "training diverged in epoch " + std::to_string(epoch));
    }
  }
  return net;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

namespace detail {

/// E = -log sum_j exp(f_j), evaluated directly from a 64-bit weight copy.
inline double energy_of(const std::vector<double>& w, const std::vector<double>& bias,
                        const ClassifierHead& head, std::span<const Real> feature) {
  const std::size_t l = head.inputs(), k = head.classes();
  std::vector<double> f(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = bias[j];
    for (std::size_t i = 0; i < l; ++i) {
      if (head.active(i, j)) s += w[i * k + j] * static_cast<double>(feature[i]);
    }
    f[j] = s;
  }
  const double peak = *std::max_element(f.begin(), f.end());
  double z = 0;
  for (double v : f) z += std::exp(v - peak);
  return -(peak + std::log(z));
}

}  // namespace detail

/// Central differences (E(W_ij + delta) - E(W_ij - delta)) / (2 delta) for
/// every weight, in 64-bit arithmetic.
inline Matrix<double> finite_diff_gradient(const ClassifierHead& head, std::span<const Real> feature,
                                           double delta = 1e-4) {
  require(delta > 0, ErrorKind::InvalidArgument, "finite-difference step must be positive");
  require(feature.size() == head.inputs(), ErrorKind::DimensionMismatch, "feature length differs from L");
  const std::size_t l = head.inputs(), k = head.classes();
  std::vector<double> w(head.weights().flat().begin(), head.weights().flat().end());
  std::vector<double> bias(head.bias().begin(), head.bias().end());
  Matrix<double> g(l, k, 0.0);
  for (std::size_t c = 0; c < l * k; ++c) {
    const double orig = w[c];
    w[c] = orig + delta;
    const double up = detail::energy_of(w, bias, head, feature);
    w[c] = orig - delta;
    const double down = detail::energy_of(w, bias, head, feature);
    w[c] = orig;
    g.flat()[c] = (up - down) / (2 * delta);
  }
  return g;
}

// ---------------------------------------------------------------------------
// End-to-end fixture

struct BenchmarkSpec {
  TaskSpec task;
  TrainSpec train;
  std::size_t n_train = 4000;  // total over classes
  std::size_t n_test = 1000;   // per population (ID and OOD), for both val and test
};

struct Benchmark {
  ToyNetwork network;
  ClassifierHead head;
  FeatureSet train;  // penultimate features
  FeatureSet val_id;
  FeatureSet val_ood;
  FeatureSet test_id;
  FeatureSet test_ood;
};

/// Generates the task, trains the network, and extracts penultimate features
/// for every split. Fully determined by the two seeds in `spec`.
inline Benchmark make_benchmark(const BenchmarkSpec& spec) {
  const ToyTask task(spec.task);
  const std::size_t k = spec.task.classes;
  const std::size_t train_per_class = std::max<std::size_t>(1, spec.n_train / k);
  const std::size_t test_per_class = std::max<std::size_t>(1, spec.n_test / k);
  const auto data = generate_task(task, train_per_class, test_per_class, spec.n_test, spec.task.seed + 1);
  ToyNetwork net = train_toy(data.train, k, spec.train);
  ClassifierHead head = net.head();
  auto train = net.extract_features(data.train);
  auto val_id = net.extract_features(data.val_id);
  auto val_ood = net.extract_features(data.val_ood);
  auto test_id = net.extract_features(data.test_id);
  auto test_ood = net.extract_features(data.test_ood);
  return {std::move(net), std::move(head), std::move(train), std::move(val_id), std::move(val_ood),
          std::move(test_id), std::move(test_ood)};
}

}  // namespace opnp::toy
