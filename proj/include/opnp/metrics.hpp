#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "opnp/core.hpp"

namespace opnp {

struct FprAtTpr {
  double fpr = 0;
  double lambda = 0;
};

/// False-positive rate on OOD at the operating point that accepts at least
/// `tpr` of the ID scores. lambda is the largest threshold with
/// |{id >= lambda}| / n_id >= tpr, which is always an observed ID score.
inline FprAtTpr fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr = 0.95) {
  require(!id_scores.empty() && !ood_scores.empty(), ErrorKind::EmptyInput, "fpr_at_tpr needs both score lists");
  require(tpr > 0 && tpr <= 1, ErrorKind::InvalidArgument, "tpr must lie in (0, 1]");
  std::vector<double> id(id_scores.begin(), id_scores.end());
  std::sort(id.begin(), id.end(), std::greater<>());
  const std::size_t n = id.size();
  const auto accepts = [&](std::size_t count) { return static_cast<double>(count) / static_cast<double>(n) >= tpr; };

  // Smallest accepted count k; the k-th largest ID score is then the threshold.
  std::size_t k = std::clamp<std::size_t>(ceil_count(tpr, n), 1, n);
  while (k > 1 && accepts(k - 1)) --k;
  while (k < n && !accepts(k)) ++k;
  const double lambda = id[k - 1];

  std::size_t false_pos = 0;
  for (double s : ood_scores) false_pos += s >= lambda;
  return {static_cast<double>(false_pos) / static_cast<double>(ood_scores.size()), lambda};
}

/// Area under the ROC curve, equal to the Mann-Whitney statistic with ties
/// counted as one half. Computed by midranks in O(n log n).
inline double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require(!id_scores.empty() && !ood_scores.empty(), ErrorKind::EmptyInput, "auroc needs both score lists");
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.push_back({s, true});
  for (double s : ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Twice the pairwise win count stays an exact integer: each (id, ood) pair
  // contributes 2 for a win and 1 for a tie.
  std::uint64_t twice_wins = 0;
  std::uint64_t ood_below = 0;
  for (std::size_t begin = 0; begin < all.size();) {
    std::size_t end = begin;
    std::uint64_t id_in_group = 0, ood_in_group = 0;
    while (end < all.size() && all[end].score == all[begin].score) {
      (all[end].is_id ? id_in_group : ood_in_group) += 1;
      ++end;
    }
    twice_wins += id_in_group * (2 * ood_below + ood_in_group);
    ood_below += ood_in_group;
    begin = end;
  }
  const std::uint64_t twice_pairs = 2 * static_cast<std::uint64_t>(id_scores.size()) * ood_scores.size();
  // Evaluate the smaller side and complement, so that auroc(a, b) + auroc(b, a)
  // is exactly 1 in floating point.
  if (2 * twice_wins <= twice_pairs) return static_cast<double>(twice_wins) / static_cast<double>(twice_pairs);
  return 1.0 - static_cast<double>(twice_pairs - twice_wins) / static_cast<double>(twice_pairs);
}

/// Expected calibration error over equal-width bins on (0, 1].
inline ReliabilityBins ece(std::span<const double> confidences, std::span<const std::uint8_t> correct,
                           std::size_t n_bins = 15) {
  require(confidences.size() == correct.size(), ErrorKind::LengthMismatch,
          "ece: " + std::to_string(confidences.size()) + " confidences vs " + std::to_string(correct.size()) +
              " correctness flags");
  require(n_bins >= 1, ErrorKind::InvalidArgument, "ece needs at least one bin");
  require(!confidences.empty(), ErrorKind::EmptyInput, "ece of an empty sample");

  std::vector<double> conf_sum(n_bins, 0.0), hit_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t n = 0; n < confidences.size(); ++n) {
    const double c = confidences[n];
    require(std::isfinite(c) && c > 0 && c <= 1, ErrorKind::InvalidArgument,
            "confidence " + std::to_string(n) + " outside (0, 1]");
    // Bin b covers (b/n_bins, (b+1)/n_bins].
    auto b = static_cast<std::size_t>(std::ceil(c * static_cast<double>(n_bins)));
    b = std::clamp<std::size_t>(b, 1, n_bins) - 1;
    conf_sum[b] += c;
    hit_sum[b] += correct[n] ? 1.0 : 0.0;
    ++count[b];
  }

  ReliabilityBins out;
  out.bins.resize(n_bins);
  const auto total = static_cast<double>(confidences.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = out.bins[b];
    bin.count = count[b];
    if (count[b] == 0) continue;
    bin.confidence_mean = conf_sum[b] / static_cast<double>(count[b]);
    bin.accuracy = hit_sum[b] / static_cast<double>(count[b]);
    out.ece += (static_cast<double>(count[b]) / total) * std::abs(bin.accuracy - bin.confidence_mean);
  }
  out.ece = std::clamp(out.ece, 0.0, 1.0);
  return out;
}

/// Equal-width histogram over [low, high); out-of-range values are counted
/// in the first or last bin.
inline Histogram score_histogram(std::span<const double> scores, std::size_t n_bins, double low, double high) {
  require(n_bins >= 1, ErrorKind::InvalidArgument, "histogram needs at least one bin");
  require(std::isfinite(low) && std::isfinite(high) && low < high, ErrorKind::InvalidRange,
          "histogram range must be finite with low < high");
  Histogram h;
  h.edges.resize(n_bins + 1);
  const double width = (high - low) / static_cast<double>(n_bins);
  for (std::size_t b = 0; b <= n_bins; ++b) h.edges[b] = low + width * static_cast<double>(b);
  h.edges.back() = high;
  h.counts.assign(n_bins, 0);
  for (double s : scores) {
    std::size_t b = 0;
    if (s >= high) {
      b = n_bins - 1;
    } else if (s > low) {
      b = std::min(n_bins - 1, static_cast<std::size_t>((s - low) / width));
    }
    ++h.counts[b];
  }
  return h;
}

/// Joint range covering both populations, padded when all scores coincide.
inline std::pair<double, double> joint_range(std::span<const double> a, std::span<const double> b) {
  double lo = INFINITY, hi = -INFINITY;
  for (double s : a) lo = std::min(lo, s), hi = std::max(hi, s);
  for (double s : b) lo = std::min(lo, s), hi = std::max(hi, s);
  require(std::isfinite(lo) && std::isfinite(hi), ErrorKind::EmptyInput, "no scores to bin");
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  } else {
    hi = std::nextafter(hi, INFINITY);
  }
  return {lo, hi};
}

struct Calibration {
  std::vector<double> confidences;
  std::vector<std::uint8_t> correct;
};

struct ReportOptions {
  double tpr = 0.95;
  std::size_t histogram_bins = 50;
  std::size_t ece_bins = 15;
};

/// Assembles the full report for one ID/OOD score pair. Both histograms share
/// the joint score range so they can be overlaid directly.
inline EvalReport make_report(std::span<const double> id_scores, std::span<const double> ood_scores,
                              const std::optional<Calibration>& calibration = std::nullopt,
                              const ReportOptions& options = {}) {
  EvalReport report;
  const auto op = fpr_at_tpr(id_scores, ood_scores, options.tpr);
  report.fpr95 = op.fpr;
  report.lambda = op.lambda;
  report.auroc = auroc(id_scores, ood_scores);
  report.n_id = id_scores.size();
  report.n_ood = ood_scores.size();
  const auto [lo, hi] = joint_range(id_scores, ood_scores);
  report.id_histogram = score_histogram(id_scores, options.histogram_bins, lo, hi);
  report.ood_histogram = score_histogram(ood_scores, options.histogram_bins, lo, hi);
  if (calibration) report.reliability = ece(calibration->confidences, calibration->correct, options.ece_bins);
  return report;
}

}  // namespace opnp
