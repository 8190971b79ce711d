// opnp command-line front end. Every subcommand reads and writes io-module
// files; progress goes to stderr.
//
// Exit codes: 0 ok, 1 usage error, 2 data or validation error, 3 internal.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "opnp/opnp.hpp"

namespace fs = std::filesystem;
using opnp::io::Json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void note(const std::string& msg) { std::cerr << "opnp: " << msg << "\n"; }

std::size_t threads = 1;

struct RhoFlags {
  double min_w = 0, max_w = 0, min_o = 0, max_o = 0;
  std::string neuron_stat = "mean";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--rho-min-w", min_w, "percent of lowest-sensitivity weights to prune");
    cmd->add_option("--rho-max-w", max_w, "percent of highest-sensitivity weights to prune");
    cmd->add_option("--rho-min-o", min_o, "percent of lowest-sensitivity neurons to prune");
    cmd->add_option("--rho-max-o", max_o, "percent of highest-sensitivity neurons to prune");
    cmd->add_option("--neuron-stat", neuron_stat, "neuron statistic: mean|max|min|median|l2|variance");
  }

  opnp::PruneConfig config() const {
    return {min_w, max_w, min_o, max_o, opnp::parse_neuron_statistic(neuron_stat), 0};
  }
};

Json pruning_summary(const opnp::PruneOutcome& outcome) {
  auto doc = opnp::io::to_json(outcome);
  doc.erase("weight_mask");
  doc.erase("neuron_mask");
  return doc;
}

void report_counts(const opnp::PruneOutcome& outcome) {
  const auto& w = outcome.weights;
  const auto& n = outcome.neurons;
  note("pruned " + std::to_string(w.pruned) + " of " + std::to_string(w.mask.size()) +
       " weights (omega_min_w=" + opnp::io::detail::format_real(w.omega_min) +
       ", omega_max_w=" + opnp::io::detail::format_real(w.omega_max) + "), " + std::to_string(n.pruned) + " of " +
       std::to_string(n.mask.size()) + " neurons (omega_min_o=" + opnp::io::detail::format_real(n.omega_min) +
       ", omega_max_o=" + opnp::io::detail::format_real(n.omega_max) + ")");
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string features, head, out;
  double ratio = 1.0;
  std::uint64_t seed = 0;
};

void run_estimate(const EstimateArgs& a) {
  const auto head = opnp::io::read_head(a.head);
  const auto features = opnp::io::read_features(a.features);
  auto map = opnp::estimate_sensitivity(head, features, a.ratio, a.seed, threads);
  note("sensitivity from " + std::to_string(map.sample_count()) + " of " + std::to_string(features.size()) + " rows");
  opnp::io::write_sensitivity(a.out, opnp::io::make_bundle(std::move(map)));
}

struct PruneArgs {
  std::string sens, head, out, features, baseline;
  RhoFlags rho;
  double baseline_rho = 0;
  std::uint64_t seed = 0;
  std::optional<double> react_percentile;
};

void run_prune(const PruneArgs& a, const CLI::App& cmd) {
  const auto head = opnp::io::read_head(a.head);
  const bool any_rho = cmd.count("--rho-min-w") + cmd.count("--rho-max-w") + cmd.count("--rho-min-o") +
                           cmd.count("--rho-max-o") + cmd.count("--neuron-stat") > 0;
  opnp::PruneOutcome outcome{opnp::WeightPruning::identity(head.inputs(), head.classes()),
                             opnp::NeuronPruning::identity(head.inputs())};
  Json pruning;
  if (!a.baseline.empty()) {
    if (any_rho || !a.sens.empty()) throw UsageError("--baseline excludes --sens and the sensitivity rho flags");
    const auto kind = opnp::parse_baseline_kind(a.baseline);
    if (kind == opnp::BaselineKind::ActivationNeuron && a.features.empty()) {
      throw UsageError("--baseline TNP needs --features");
    }
    const auto features = a.features.empty() ? std::optional<opnp::FeatureSet>{}
                                             : std::optional(opnp::io::read_features(a.features));
    const auto& probe = features ? *features : opnp::FeatureSet(opnp::Matrix<opnp::Real>(1, head.inputs(), 0.0f));
    outcome = opnp::baseline_prune(head, probe, kind, a.baseline_rho, a.seed);
    pruning = pruning_summary(outcome);
    pruning["method"] = std::string(opnp::to_string(kind));
    pruning["rho"] = a.baseline_rho;
    pruning["seed"] = a.seed;
  } else {
    if (a.sens.empty()) throw UsageError("prune needs --sens (or --baseline)");
    if (cmd.count("--rho")) throw UsageError("--rho applies only to --baseline");
    const auto bundle = opnp::io::read_sensitivity(a.sens);
    const auto config = a.rho.config();
    outcome = opnp::prune(head, bundle.map, bundle.neuron(config.neuron_statistic), config);
    pruning = pruning_summary(outcome);
    pruning["method"] = "OPNP";
    pruning["config"] = opnp::io::to_json(config);
  }
  report_counts(outcome);

  auto doc = opnp::io::to_json(outcome.apply(head));
  doc["pruning"] = std::move(pruning);
  if (a.react_percentile) {
    if (a.features.empty()) throw UsageError("--react-percentile needs --features");
    const double c = opnp::react_threshold(opnp::io::read_features(a.features), *a.react_percentile);
    note("react clip threshold " + opnp::io::detail::format_real(c));
    doc["react_threshold"] = c;
  }
  opnp::io::write_json(a.out, doc);
}

struct ScoreArgs {
  std::string features, head, out, kind = "energy";
  double temperature = 1.0;
  std::optional<double> react_threshold;
};

/// Loads a head document and applies its ReAct threshold (or the override)
/// to `features`.
std::pair<opnp::ClassifierHead, opnp::FeatureSet> load_scoring_inputs(const std::string& head_path,
                                                                     const std::string& features_path,
                                                                     std::optional<double> clip) {
  const auto doc = opnp::io::read_json(head_path);
  auto head = opnp::io::head_from_json(doc);
  auto features = opnp::io::read_features(features_path);
  if (!clip && doc.contains("react_threshold")) clip = opnp::io::detail::get_number(doc, "react_threshold");
  if (clip) features = opnp::react_clip(features, *clip);
  return {std::move(head), std::move(features)};
}

void run_score(const ScoreArgs& a) {
  const auto [head, features] = load_scoring_inputs(a.head, a.features, a.react_threshold);
  const auto scores =
      opnp::score_batch(head, features, opnp::parse_score_kind(a.kind), a.temperature, threads);
  note("scored " + std::to_string(scores.size()) + " rows");
  opnp::io::write_scores(a.out, scores);
}

struct EvalArgs {
  std::string id, ood, out, head, id_features;
  std::size_t bins = 50, ece_bins = 15;
  double tpr = 0.95;
};

void run_eval(const EvalArgs& a) {
  if (a.head.empty() != a.id_features.empty()) throw UsageError("--head and --id-features go together");
  const auto id = opnp::io::read_scores(a.id);
  const auto ood = opnp::io::read_scores(a.ood);
  std::optional<opnp::Calibration> cal;
  if (!a.head.empty()) {
    const auto [head, features] = load_scoring_inputs(a.head, a.id_features, std::nullopt);
    if (!features.has_labels()) throw opnp::Error(opnp::ErrorKind::InvalidArgument, "--id-features has no labels");
    if (features.size() != id.size()) {
      throw opnp::Error(opnp::ErrorKind::LengthMismatch, "--id-features rows differ from the ID score count");
    }
    cal = opnp::detail::calibration_of(head, features);
  }
  const auto report = opnp::make_report(id.scores(), ood.scores(), cal, {a.tpr, a.bins, a.ece_bins});
  note("auroc=" + opnp::io::detail::format_real(report.auroc) + " fpr95=" + opnp::io::detail::format_real(report.fpr95));
  opnp::io::write_report(a.out, report);
}

struct SweepArgs {
  std::string train, head, val_id, val_ood, grid, out, table, objective;
  double ratio = 1.0;
  std::uint64_t seed = 0;
};

void run_sweep(const SweepArgs& a) {
  const auto head = opnp::io::read_head(a.head);
  auto grid = opnp::io::read_grid(a.grid);
  if (!a.objective.empty()) grid.objective = opnp::parse_objective(a.objective);
  const auto train = opnp::io::read_features(a.train);
  const auto val_id = opnp::io::read_features(a.val_id);
  const auto val_ood = opnp::io::read_features(a.val_ood);

  const auto map = opnp::estimate_sensitivity(head, train, a.ratio, a.seed, threads);
  const auto neurons = opnp::neuron_sensitivity(map, grid.neuron_statistic);
  note("sweeping " + std::to_string(grid.cross_product_size()) + " configurations");
  const auto result = opnp::grid_search(head, map, neurons, grid, val_id, val_ood, threads);

  Json doc;
  doc["grid"] = opnp::io::to_json(grid);
  doc["best"] = opnp::io::to_json(result.best);
  doc["best_report"] = opnp::io::to_json(result.best_report);
  doc["evaluated"] = result.table.size();
  Json skipped = Json::array();
  for (const auto& s : result.skipped) skipped.push_back({{"config", opnp::io::to_json(s.config)}, {"reason", s.reason}});
  doc["skipped"] = std::move(skipped);
  opnp::io::write_json(a.out, doc);

  const fs::path table = a.table.empty() ? fs::path(a.out).replace_extension(".tsv") : fs::path(a.table);
  opnp::io::write_file(table, opnp::io::encode_sweep_table(result));
  const auto& b = result.best;
  const auto pct = opnp::io::detail::format_real;
  note("best (" + pct(b.rho_min_w) + ", " + pct(b.rho_max_w) + ", " + pct(b.rho_min_o) + ", " + pct(b.rho_max_o) + ") " + std::string(to_string(grid.objective)) +
       "=" + opnp::io::detail::format_real(grid.objective == opnp::Objective::Auroc ? result.table.front().auroc
                                                                                      : result.table.front().fpr95) +
       "; table in " + table.string());
}

struct DiagnoseArgs {
  std::string head, sens, id, ood, out;
  bool mask_from_prune = false;
  double rho_min_w = 20, radius = 1e-3;
  std::size_t bins = 50;
};

void run_diagnose(const DiagnoseArgs& a, const CLI::App& cmd) {
  if (a.mask_from_prune && cmd.count("--rho-min-w")) throw UsageError("--mask-from-prune excludes --rho-min-w");
  const auto given = opnp::io::read_head(a.head);
  const auto bundle = opnp::io::read_sensitivity(a.sens);
  const auto id = opnp::io::read_features(a.id);
  const auto ood = opnp::io::read_features(a.ood);

  // The diagnostics always measure against the unpruned head; the mask is
  // either the one stored in the head (weights or whole neurons removed) or a
  // fresh low-sensitivity cut.
  const auto base = given.unmasked();
  opnp::Mask mask(base.inputs() * base.classes(), 1);
  if (a.mask_from_prune) {
    for (std::size_t i = 0; i < base.inputs(); ++i)
      for (std::size_t j = 0; j < base.classes(); ++j) mask[i * base.classes() + j] = given.active(i, j);
  } else {
    mask = opnp::prune_weights(base, bundle.map, a.rho_min_w, 0).mask;
  }
  const auto pruned_count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 0));

  Json doc;
  doc["pruned_weights"] = pruned_count;
  doc["logit_reduction"] = {{"id", opnp::mean_logit_reduction(base, bundle.map, mask, id)},
                            {"ood", opnp::mean_logit_reduction(base, bundle.map, mask, ood)}};
  if (pruned_count > 0) {
    const auto gap = opnp::sensitivity_gap(base, mask, id, ood, threads);
    doc["sensitivity_gap"] = {{"mean_id", gap.mean_id}, {"mean_ood", gap.mean_ood}, {"gap", gap.gap}};
    note("sensitivity gap " + opnp::io::detail::format_real(gap.gap));
  } else {
    doc["sensitivity_gap"] = nullptr;
  }
  const auto before = opnp::flatness_proxy(bundle.map, a.radius);
  const auto after = opnp::flatness_proxy(bundle.map, a.radius, mask);
  auto flat_json = [](const opnp::FlatnessReport& f) {
    return Json{{"radius", f.radius}, {"proxy", f.proxy}, {"row", f.row}, {"col", f.col}};
  };
  doc["flatness"] = {{"unpruned", flat_json(before)}, {"pruned", flat_json(after)}};

  const auto pruned_head = base.with_masks(mask, opnp::Mask(base.inputs(), 1));
  auto report_for = [&](const opnp::ClassifierHead& h) {
    const auto s_id = opnp::score_batch(h, id, opnp::ScoreKind::Energy, 1.0, threads);
    const auto s_ood = opnp::score_batch(h, ood, opnp::ScoreKind::Energy, 1.0, threads);
    std::optional<opnp::Calibration> cal;
    if (id.has_labels()) cal = opnp::detail::calibration_of(h, id);
    return opnp::io::to_json(opnp::make_report(s_id.scores(), s_ood.scores(), cal, {0.95, a.bins, 15}));
  };
  doc["scores"] = {{"unpruned", report_for(base)}, {"pruned", report_for(pruned_head)}};
  opnp::io::write_json(a.out, doc);
}

struct ToyArgs {
  std::size_t classes = 8, dim = 32, hidden = 64, n_train = 4000, n_test = 1000, epochs = 30;
  std::uint64_t seed = 0;
  double sigma = 0.25, ood_shift = 1.3;
  std::string ood_kind = "shifted", out_dir;
};

void run_toy(const ToyArgs& a) {
  opnp::toy::BenchmarkSpec spec;
  spec.task.classes = a.classes;
  spec.task.input_dim = a.dim;
  spec.task.sigma = a.sigma;
  spec.task.ood_shift = a.ood_shift;
  spec.task.seed = a.seed;
  if (a.ood_kind == "shifted") {
    spec.task.ood_kind = opnp::toy::OodKind::ShiftedCenters;
  } else if (a.ood_kind == "box") {
    spec.task.ood_kind = opnp::toy::OodKind::UniformBox;
  } else {
    throw UsageError("--ood-kind must be shifted or box");
  }
  spec.train.hidden = a.hidden;
  spec.train.epochs = a.epochs;
  spec.train.seed = a.seed;
  spec.n_train = a.n_train;
  spec.n_test = a.n_test;

  note("training toy network");
  const auto bm = opnp::toy::make_benchmark(spec);
  const double acc = opnp::accuracy(bm.head, bm.test_id);
  note("ID test accuracy " + opnp::io::detail::format_real(acc));

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  opnp::io::write_head(dir / "head.json", bm.head);
  opnp::io::write_features(dir / "train.opnf", bm.train);
  opnp::io::write_features(dir / "val-id.opnf", bm.val_id);
  opnp::io::write_features(dir / "val-ood.opnf", bm.val_ood);
  opnp::io::write_features(dir / "test-id.opnf", bm.test_id);
  opnp::io::write_features(dir / "test-ood.opnf", bm.test_ood);
  opnp::io::write_json(dir / "manifest.json",
                       {{"classes", a.classes},
                        {"dim", a.dim},
                        {"hidden", a.hidden},
                        {"n_train", a.n_train},
                        {"n_test", a.n_test},
                        {"epochs", a.epochs},
                        {"sigma", a.sigma},
                        {"ood_kind", a.ood_kind},
                        {"ood_shift", a.ood_shift},
                        {"seed", a.seed},
                        {"test_accuracy", acc}});
}

struct RunArgs {
  std::string train, head, id, ood, out_dir, kind = "energy";
  RhoFlags rho;
  double ratio = 1.0, temperature = 1.0;
  std::uint64_t seed = 0;
};

void run_opnp(const RunArgs& a) {
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const auto head = opnp::io::read_head(a.head);
  const auto train = opnp::io::read_features(a.train);
  const auto id = opnp::io::read_features(a.id);
  const auto ood = opnp::io::read_features(a.ood);
  const auto config = a.rho.config();
  config.validate();

  auto bundle = opnp::io::make_bundle(opnp::estimate_sensitivity(head, train, a.ratio, a.seed, threads));
  opnp::io::write_sensitivity(dir / "sensitivity.json", bundle);

  const auto outcome = opnp::prune(head, bundle.map, bundle.neuron(config.neuron_statistic), config);
  report_counts(outcome);
  const auto pruned = outcome.apply(head);
  auto doc = opnp::io::to_json(pruned);
  doc["pruning"] = pruning_summary(outcome);
  doc["pruning"]["method"] = "OPNP";
  doc["pruning"]["config"] = opnp::io::to_json(config);
  opnp::io::write_json(dir / "pruned-head.json", doc);

  const auto kind = opnp::parse_score_kind(a.kind);
  const auto s_id = opnp::score_batch(pruned, id, kind, a.temperature, threads);
  const auto s_ood = opnp::score_batch(pruned, ood, kind, a.temperature, threads);
  opnp::io::write_scores(dir / "id.scores", s_id);
  opnp::io::write_scores(dir / "ood.scores", s_ood);
  std::optional<opnp::Calibration> cal;
  if (id.has_labels()) cal = opnp::detail::calibration_of(pruned, id);
  const auto report = opnp::make_report(s_id.scores(), s_ood.scores(), cal);
  opnp::io::write_report(dir / "report.json", report);
  note("auroc=" + opnp::io::detail::format_real(report.auroc) + " fpr95=" + opnp::io::detail::format_real(report.fpr95));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc OOD detection by sensitivity-guided pruning of a classifier head"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "estimate weight and neuron sensitivities");
  c_est->add_option("--features", est.features, "training features (OPNF)")->required();
  c_est->add_option("--head", est.head, "head document")->required();
  c_est->add_option("--out", est.out, "sensitivity document to write")->required();
  c_est->add_option("--sample-ratio", est.ratio, "fraction of rows to use (0, 1]");
  c_est->add_option("--seed", est.seed, "row sampling seed");

  PruneArgs pr;
  auto* c_pr = app.add_subcommand("prune", "prune a head by sensitivity or a baseline rule");
  c_pr->add_option("--head", pr.head, "head document")->required();
  c_pr->add_option("--out", pr.out, "pruned head document to write")->required();
  c_pr->add_option("--sens", pr.sens, "sensitivity document");
  pr.rho.add_to(c_pr);
  c_pr->add_option("--baseline", pr.baseline, "RPP|TPP|RNP|TNP");
  c_pr->add_option("--rho", pr.baseline_rho, "baseline pruning percent");
  c_pr->add_option("--seed", pr.seed, "seed for RPP and RNP");
  c_pr->add_option("--features", pr.features, "features for TNP and --react-percentile");
  c_pr->add_option("--react-percentile", pr.react_percentile, "store a ReAct clip at this activation percentile");

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "score features with a head");
  c_sc->add_option("--features", sc.features, "features (OPNF)")->required();
  c_sc->add_option("--head", sc.head, "head document")->required();
  c_sc->add_option("--out", sc.out, "score file to write")->required();
  c_sc->add_option("--score", sc.kind, "energy|msp");
  c_sc->add_option("--temperature", sc.temperature, "softmax temperature (msp only)");
  c_sc->add_option("--react-threshold", sc.react_threshold, "clip activations at this value");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "FPR95, AUROC, histograms and ECE");
  c_ev->add_option("--id", ev.id, "ID score file")->required();
  c_ev->add_option("--ood", ev.ood, "OOD score file")->required();
  c_ev->add_option("--out", ev.out, "report document to write")->required();
  c_ev->add_option("--bins", ev.bins, "histogram bins");
  c_ev->add_option("--ece-bins", ev.ece_bins, "calibration bins");
  c_ev->add_option("--tpr", ev.tpr, "target true positive rate");
  c_ev->add_option("--head", ev.head, "head used for the ID scores (enables ECE)");
  c_ev->add_option("--id-features", ev.id_features, "labelled ID features behind the ID scores (enables ECE)");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "grid search over the pruning percentages");
  c_sw->add_option("--train", sw.train, "training features for sensitivity")->required();
  c_sw->add_option("--head", sw.head, "head document")->required();
  c_sw->add_option("--val-id", sw.val_id, "validation ID features")->required();
  c_sw->add_option("--val-ood", sw.val_ood, "validation OOD features")->required();
  c_sw->add_option("--grid", sw.grid, "grid document")->required();
  c_sw->add_option("--out", sw.out, "result document to write")->required();
  c_sw->add_option("--objective", sw.objective, "auroc|fpr95 (overrides the grid document)");
  c_sw->add_option("--table", sw.table, "ranked table (default: --out with .tsv)");
  c_sw->add_option("--sample-ratio", sw.ratio, "fraction of training rows for sensitivity");
  c_sw->add_option("--seed", sw.seed, "row sampling seed");

  DiagnoseArgs dg;
  auto* c_dg = app.add_subcommand("diagnose", "logit reduction, sensitivity gap, flatness, score histograms");
  c_dg->add_option("--head", dg.head, "head document (pruned or not)")->required();
  c_dg->add_option("--sens", dg.sens, "sensitivity document")->required();
  c_dg->add_option("--id", dg.id, "ID features")->required();
  c_dg->add_option("--ood", dg.ood, "OOD features")->required();
  c_dg->add_option("--out", dg.out, "diagnostics document to write")->required();
  c_dg->add_flag("--mask-from-prune", dg.mask_from_prune, "use the masks stored in --head");
  c_dg->add_option("--rho-min-w", dg.rho_min_w, "otherwise prune this percent of low-sensitivity weights");
  c_dg->add_option("--radius", dg.radius, "flatness radius");
  c_dg->add_option("--bins", dg.bins, "histogram bins");

  ToyArgs ty;
  auto* c_ty = app.add_subcommand("toy", "generate and train the synthetic benchmark");
  c_ty->add_option("--classes", ty.classes, "K");
  c_ty->add_option("--dim", ty.dim, "input dimension");
  c_ty->add_option("--hidden", ty.hidden, "penultimate width L");
  c_ty->add_option("--n-train", ty.n_train, "training rows");
  c_ty->add_option("--n-test", ty.n_test, "rows per validation/test split");
  c_ty->add_option("--epochs", ty.epochs, "training epochs");
  c_ty->add_option("--sigma", ty.sigma, "within-class noise");
  c_ty->add_option("--ood-kind", ty.ood_kind, "shifted|box");
  c_ty->add_option("--ood-shift", ty.ood_shift, "offset norm for shifted OOD centers");
  c_ty->add_option("--seed", ty.seed, "seed");
  c_ty->add_option("--out-dir", ty.out_dir, "directory for the fixture files")->required();

  RunArgs rn;
  auto* c_rn = app.add_subcommand("run-opnp", "estimate, prune, score and evaluate in one go");
  c_rn->add_option("--train", rn.train, "training features")->required();
  c_rn->add_option("--head", rn.head, "head document")->required();
  c_rn->add_option("--id", rn.id, "ID features to score")->required();
  c_rn->add_option("--ood", rn.ood, "OOD features to score")->required();
  c_rn->add_option("--out-dir", rn.out_dir, "output directory")->required();
  rn.rho.add_to(c_rn);
  c_rn->add_option("--sample-ratio", rn.ratio, "fraction of training rows for sensitivity");
  c_rn->add_option("--seed", rn.seed, "row sampling seed");
  c_rn->add_option("--score", rn.kind, "energy|msp");
  c_rn->add_option("--temperature", rn.temperature, "softmax temperature (msp only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    threads = opnp::resolve_threads(threads);
    if (c_est->parsed()) run_estimate(est);
    if (c_pr->parsed()) run_prune(pr, *c_pr);
    if (c_sc->parsed()) run_score(sc);
    if (c_ev->parsed()) run_eval(ev);
    if (c_sw->parsed()) run_sweep(sw);
    if (c_dg->parsed()) run_diagnose(dg, *c_dg);
    if (c_ty->parsed()) run_toy(ty);
    if (c_rn->parsed()) run_opnp(rn);
  } catch (const UsageError& e) {
    std::cerr << "opnp: usage: " << e.what() << "\n";
    return 1;
  } catch (const opnp::Error& e) {
    std::cerr << "opnp: " << e.what() << "\n";
    return e.kind() == opnp::ErrorKind::BandEmpty ? 1 : 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "opnp: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "opnp: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
