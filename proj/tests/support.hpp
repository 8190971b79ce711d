#pragma once

// Random fixtures and brute-force reference implementations shared by the
// unit tests and the acceptance runner. The references are deliberately
// naive: quadratic loops, integer arithmetic where possible, no shared code
// with the library beyond the domain types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "opnp/opnp.hpp"

namespace opnp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline ClassifierHead random_head(Rng& rng, std::size_t l, std::size_t k, double scale = 1.0) {
  Matrix<Real> w(l, k);
  for (auto& v : w.flat()) v = static_cast<Real>(uniform(rng, -scale, scale));
  std::vector<Real> b(k);
  for (auto& v : b) v = static_cast<Real>(uniform(rng, -scale, scale));
  return ClassifierHead(std::move(w), std::move(b));
}

/// Nonnegative features (as after a rectifier); about a quarter of entries are 0.
inline FeatureSet random_features(Rng& rng, std::size_t n, std::size_t l, std::optional<std::size_t> classes = {},
                                  std::string name = "random") {
  Matrix<Real> x(n, l);
  for (auto& v : x.flat()) v = uniform(rng, 0, 1) < 0.25 ? 0.0f : static_cast<Real>(uniform(rng, 0, 2));
  std::optional<std::vector<std::uint32_t>> labels;
  if (classes) {
    labels.emplace(n);
    for (auto& y : *labels) y = static_cast<std::uint32_t>(uniform_size(rng, 0, *classes - 1));
  }
  return FeatureSet(std::move(x), std::move(labels), std::move(name));
}

/// Values drawn from a handful of levels so that ties are everywhere.
inline std::vector<Real> tied_values(Rng& rng, std::size_t n, std::size_t levels) {
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(uniform_size(rng, 0, levels - 1)) * 0.125f;
  return v;
}

inline std::vector<double> random_scores(Rng& rng, std::size_t n, double shift, bool coarse) {
  std::normal_distribution<double> normal(shift, 1.0);
  std::vector<double> s(n);
  for (auto& v : s) v = coarse ? std::round(normal(rng) * 2) / 2 : normal(rng);
  return s;
}

inline SensitivityMap map_from(std::size_t l, std::size_t k, std::vector<Real> values) {
  return SensitivityMap(Matrix<Real>(l, k, std::move(values)), 1, "fixture");
}

// ---------------------------------------------------------------------------
// References

inline std::vector<double> naive_logits(const ClassifierHead& head, std::span<const Real> h) {
  std::vector<double> f(head.classes());
  for (std::size_t j = 0; j < head.classes(); ++j) {
    double s = head.bias()[j];
    for (std::size_t i = 0; i < head.inputs(); ++i) {
      if (head.neuron_mask()[i] && head.weight_mask()[i * head.classes() + j]) {
        s += static_cast<double>(head.weights()(i, j)) * static_cast<double>(h[i]);
      }
    }
    f[j] = s;
  }
  return f;
}

inline double naive_energy_score(const std::vector<double>& f) {
  double z = 0;
  const double m = *std::max_element(f.begin(), f.end());
  for (double v : f) z += std::exp(v - m);
  return m + std::log(z);
}

/// Mann-Whitney over all pairs, ties counted as one half.
inline double pairwise_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  std::uint64_t twice = 0;
  for (double a : id)
    for (double b : ood) twice += a > b ? 2 : (a == b ? 1 : 0);
  return static_cast<double>(twice) / (2.0 * static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

struct ScanResult {
  double fpr;
  double lambda;
};

/// Tries every distinct ID score as a threshold and keeps the largest one
/// that still accepts at least `tpr` of the ID scores.
inline ScanResult threshold_scan(const std::vector<double>& id, const std::vector<double>& ood, double tpr) {
  std::set<double> candidates(id.begin(), id.end());
  double best = -INFINITY;
  for (double t : candidates) {
    std::size_t accepted = 0;
    for (double s : id) accepted += s >= t;
    if (static_cast<double>(accepted) / static_cast<double>(id.size()) >= tpr) best = std::max(best, t);
  }
  std::size_t fp = 0;
  for (double s : ood) fp += s >= best;
  return {static_cast<double>(fp) / static_cast<double>(ood.size()), best};
}

/// ceil(p * n / 10000) for a percentage given in hundredths (p = 1234 means 12.34%).
inline std::size_t ceil_count_hundredths(std::uint64_t p, std::uint64_t n) { return (p * n + 9999) / 10000; }

inline double naive_ece(const std::vector<double>& conf, const std::vector<std::uint8_t>& correct, std::size_t bins) {
  double total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(bins);
    const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    double cs = 0, hs = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < conf.size(); ++r) {
      const bool in = b == 0 ? conf[r] <= hi : (conf[r] > lo && conf[r] <= hi);
      if (!in) continue;
      cs += conf[r];
      hs += correct[r];
      ++n;
    }
    if (n) total += static_cast<double>(n) / static_cast<double>(conf.size()) * std::abs(hs / n - cs / n);
  }
  return total;
}

// ---------------------------------------------------------------------------

/// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("opnp-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace opnp::testing
