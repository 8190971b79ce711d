#pragma once

// Grid search over the four pruning percentages on a validation ID/OOD pair.
// Sensitivities are computed once (on training features) and reused for every
// grid point.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "opnp/core.hpp"
#include "opnp/metrics.hpp"
#include "opnp/parallel.hpp"
#include "opnp/pruning.hpp"
#include "opnp/scoring.hpp"

namespace opnp {

enum class Objective { Auroc, Fpr95 };

constexpr std::string_view to_string(Objective o) noexcept { return o == Objective::Auroc ? "auroc" : "fpr95"; }

inline Objective parse_objective(std::string_view name) {
  if (name == "auroc") return Objective::Auroc;
  if (name == "fpr95") return Objective::Fpr95;
  fail(ErrorKind::InvalidArgument, "unknown objective '" + std::string(name) + "'");
}

struct SweepGrid {
  std::vector<double> rho_min_w;
  std::vector<double> rho_max_w;
  std::vector<double> rho_min_o;
  std::vector<double> rho_max_o;
  Objective objective = Objective::Auroc;
  NeuronStatistic neuron_statistic = NeuronStatistic::Mean;

  /// Default sweep percentages.
  static SweepGrid standard() {
    return {{0, 5, 10, 20, 30, 40, 50, 60},
            {0, 0.1, 0.3, 0.5, 1, 3, 5},
            {0, 5, 10, 20, 30, 40, 50},
            {0, 0.5, 1, 5, 10, 20, 30, 40, 50}};
  }

  void validate() const {
    auto check = [](const std::vector<double>& list, const char* name) {
      require(!list.empty(), ErrorKind::InvalidArgument, std::string("grid list ") + name + " is empty");
      for (double v : list) {
        require(std::isfinite(v) && v >= 0 && v < 100, ErrorKind::InvalidArgument,
                std::string("grid list ") + name + " has a value outside [0, 100)");
      }
    };
    check(rho_min_w, "rho_min_w");
    check(rho_max_w, "rho_max_w");
    check(rho_min_o, "rho_min_o");
    check(rho_max_o, "rho_max_o");
  }

  std::size_t cross_product_size() const noexcept {
    return rho_min_w.size() * rho_max_w.size() * rho_min_o.size() * rho_max_o.size();
  }

  friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

struct SweepRow {
  PruneConfig config;
  double auroc = 0;
  double fpr95 = 0;
  double lambda = 0;
  std::size_t pruned_weights = 0;
  std::size_t pruned_neurons = 0;
};

struct SkippedConfig {
  PruneConfig config;
  std::string reason;
};

struct SweepResult {
  PruneConfig best;
  EvalReport best_report;
  std::vector<SweepRow> table;  // ranked, best first
  std::vector<SkippedConfig> skipped;
};

namespace detail {

inline Calibration calibration_of(const ClassifierHead& head, const FeatureSet& labelled) {
  const auto pred = predict(head, labelled);
  Calibration cal{pred.confidences, {}};
  cal.correct.reserve(labelled.size());
  for (std::size_t r = 0; r < labelled.size(); ++r) cal.correct.push_back(pred.labels[r] == (*labelled.labels())[r]);
  return cal;
}

/// True if `a` ranks strictly ahead of `b`.
inline bool ranks_before(const SweepRow& a, const SweepRow& b, Objective objective) {
  if (objective == Objective::Auroc) {
    if (a.auroc != b.auroc) return a.auroc > b.auroc;
    if (a.fpr95 != b.fpr95) return a.fpr95 < b.fpr95;
  } else {
    if (a.fpr95 != b.fpr95) return a.fpr95 < b.fpr95;
    if (a.auroc != b.auroc) return a.auroc > b.auroc;
  }
  return a.config.tuple() < b.config.tuple();
}

}  // namespace detail

/// Prunes with one configuration and evaluates energy scores on the
/// validation pair. Calibration is included when val_id carries labels.
inline EvalReport evaluate_config(const ClassifierHead& head, const SensitivityMap& map,
                                  const NeuronSensitivity& neurons, const PruneConfig& config,
                                  const FeatureSet& val_id, const FeatureSet& val_ood,
                                  const ReportOptions& options = {}) {
  const ClassifierHead pruned = prune(head, map, neurons, config).apply(head);
  const auto id_scores = score_batch(pruned, val_id, ScoreKind::Energy);
  const auto ood_scores = score_batch(pruned, val_ood, ScoreKind::Energy);
  std::optional<Calibration> cal;
  if (val_id.has_labels()) cal = detail::calibration_of(pruned, val_id);
  return make_report(id_scores.scores(), ood_scores.scores(), cal, options);
}

/// Exhaustive search over the grid's cross product. Pairs whose kept band
/// would be empty are skipped and reported. The ranked table is sorted by the
/// objective, then the other metric, then the smallest rho tuple, so it does
/// not depend on enumeration or completion order.
inline SweepResult grid_search(const ClassifierHead& head, const SensitivityMap& map,
                               const NeuronSensitivity& neurons, const SweepGrid& grid, const FeatureSet& val_id,
                               const FeatureSet& val_ood, std::size_t threads = 1,
                               const ReportOptions& options = {}) {
  grid.validate();
  validate(head, map);
  validate(head, val_id);
  validate(head, val_ood);

  std::vector<PruneConfig> configs;
  SweepResult result;
  for (double a : grid.rho_min_w)
    for (double b : grid.rho_max_w)
      for (double c : grid.rho_min_o)
        for (double d : grid.rho_max_o) {
          PruneConfig cfg{a, b, c, d, grid.neuron_statistic, 0};
          try {
            cfg.validate();
            configs.push_back(cfg);
          } catch (const Error& e) {
            result.skipped.push_back({cfg, e.what()});
          }
        }

  std::vector<std::optional<SweepRow>> rows(configs.size());
  std::vector<std::string> failures(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t n) {
    const auto& cfg = configs[n];
    try {
      const auto outcome = prune(head, map, neurons, cfg);
      const ClassifierHead pruned = outcome.apply(head);
      const auto id_scores = score_batch(pruned, val_id, ScoreKind::Energy);
      const auto ood_scores = score_batch(pruned, val_ood, ScoreKind::Energy);
      const auto op = fpr_at_tpr(id_scores.scores(), ood_scores.scores(), options.tpr);
      rows[n] = SweepRow{cfg, auroc(id_scores.scores(), ood_scores.scores()), op.fpr, op.lambda,
                         outcome.weights.pruned, outcome.neurons.pruned};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BandEmpty) throw;
      failures[n] = e.what();
    }
  });

  for (std::size_t n = 0; n < configs.size(); ++n) {
    if (rows[n]) {
      result.table.push_back(*rows[n]);
    } else {
      result.skipped.push_back({configs[n], failures[n]});
    }
  }
  require(!result.table.empty(), ErrorKind::NoValidConfig, "every grid configuration was skipped");
  std::sort(result.table.begin(), result.table.end(),
            [&](const SweepRow& a, const SweepRow& b) { return detail::ranks_before(a, b, grid.objective); });
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const SkippedConfig& a, const SkippedConfig& b) { return a.config.tuple() < b.config.tuple(); });

  result.best = result.table.front().config;
  result.best_report = evaluate_config(head, map, neurons, result.best, val_id, val_ood, options);
  return result;
}

}  // namespace opnp
