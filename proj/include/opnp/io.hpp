#pragma once

// File formats.
//
// Features use OPNF, a minimal little-endian binary layout:
//
//   offset  size  field
//        0     4  magic "OPNF"
//        4     4  version (u32) = 1
//        8     4  dtype (u32), 1 = IEEE-754 binary32
//       12     8  rows (u64)
//       20     8  cols (u64)
//       28     4  label_flag (u32), 0 = none, 1 = labels follow the data
//       32        rows*cols binary32 values, row-major
//                 [rows u32 labels if label_flag = 1]
//
// Everything else (heads, sensitivities, masks, grids, reports) is JSON with
// numbers written at round-trip precision. Score vectors and sweep tables are
// tab-separated text.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "opnp/core.hpp"
#include "opnp/pruning.hpp"
#include "opnp/sweep.hpp"

namespace opnp::io {

using Json = nlohmann::json;

inline constexpr std::array<char, 4> kFeatureMagic = {'O', 'P', 'N', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 1;
inline constexpr std::size_t kFeatureHeaderSize = 32;

// ---------------------------------------------------------------------------
// Raw file helpers

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoFailure, "write to '" + path.string() + "' failed");
}

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits = static_cast<U>(bits >> 8);
  }
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    value |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in[offset + b])) << (8 * b));
  }
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// OPNF features

inline std::string encode_features(const FeatureSet& features) {
  std::string out;
  const std::size_t rows = features.size();
  const std::size_t cols = features.width();
  out.reserve(kFeatureHeaderSize + rows * cols * 4 + (features.has_labels() ? rows * 4 : 0));
  out.append(kFeatureMagic.data(), kFeatureMagic.size());
  detail::put_le<std::uint32_t>(out, kFeatureVersion);
  detail::put_le<std::uint32_t>(out, kDtypeFloat32);
  detail::put_le<std::uint64_t>(out, rows);
  detail::put_le<std::uint64_t>(out, cols);
  detail::put_le<std::uint32_t>(out, features.has_labels() ? 1u : 0u);
  for (Real v : features.features().flat()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (features.has_labels()) {
    for (auto label : *features.labels()) detail::put_le<std::uint32_t>(out, label);
  }
  return out;
}

inline FeatureSet decode_features(std::string_view bytes, std::string name = {}) {
  require(bytes.size() >= 4, ErrorKind::TruncatedFile, "file is " + std::to_string(bytes.size()) + " bytes, shorter than the magic");
  require(std::memcmp(bytes.data(), kFeatureMagic.data(), 4) == 0, ErrorKind::BadMagic,
          "offset 0: expected magic \"OPNF\"");
  require(bytes.size() >= kFeatureHeaderSize, ErrorKind::TruncatedFile,
          "file is " + std::to_string(bytes.size()) + " bytes, header needs " + std::to_string(kFeatureHeaderSize));
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  require(version == kFeatureVersion, ErrorKind::UnsupportedVersion,
          "offset 4: version " + std::to_string(version) + " is not supported");
  const auto dtype = detail::get_le<std::uint32_t>(bytes, 8);
  require(dtype == kDtypeFloat32, ErrorKind::UnsupportedDtype, "offset 8: dtype " + std::to_string(dtype) + " is not supported");
  const auto rows = detail::get_le<std::uint64_t>(bytes, 12);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 20);
  const auto label_flag = detail::get_le<std::uint32_t>(bytes, 28);
  require(label_flag <= 1, ErrorKind::SchemaError, "offset 28: label_flag must be 0 or 1");
  require(rows >= 1 && cols >= 1, ErrorKind::SchemaError, "offset 12: rows and cols must be positive");

  // Guard the size arithmetic against absurd headers before allocating.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 8;
  require(rows <= limit / cols, ErrorKind::SizeMismatch, "offset 12: rows*cols overflows");
  const std::uint64_t cells = rows * cols;
  const std::uint64_t expected = kFeatureHeaderSize + cells * 4 + (label_flag ? rows * 4 : 0);
  require(bytes.size() >= expected, ErrorKind::TruncatedFile,
          "file is " + std::to_string(bytes.size()) + " bytes, header declares " + std::to_string(expected));
  require(bytes.size() == expected, ErrorKind::SizeMismatch,
          "file is " + std::to_string(bytes.size()) + " bytes, header declares " + std::to_string(expected));

  std::vector<Real> data(cells);
  for (std::uint64_t c = 0; c < cells; ++c) {
    data[c] = std::bit_cast<Real>(detail::get_le<std::uint32_t>(bytes, kFeatureHeaderSize + 4 * c));
    if (!std::isfinite(data[c])) {
      fail(ErrorKind::NonFiniteValue, "offset " + std::to_string(kFeatureHeaderSize + 4 * c) + ": non-finite value");
    }
  }
  std::optional<std::vector<std::uint32_t>> labels;
  if (label_flag) {
    labels.emplace(rows);
    const std::size_t base = kFeatureHeaderSize + cells * 4;
    for (std::uint64_t r = 0; r < rows; ++r) (*labels)[r] = detail::get_le<std::uint32_t>(bytes, base + 4 * r);
  }
  return FeatureSet(Matrix<Real>(rows, cols, std::move(data)), std::move(labels), std::move(name));
}

inline void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  write_file(path, encode_features(features));
}

inline FeatureSet read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.stem().string());
}

// ---------------------------------------------------------------------------
// JSON field access with typed errors

namespace detail {

inline const Json& field(const Json& doc, const char* name) {
  require(doc.is_object(), ErrorKind::SchemaError, "document is not a JSON object");
  const auto it = doc.find(name);
  require(it != doc.end(), ErrorKind::SchemaError, std::string("missing field \"") + name + "\"");
  return *it;
}

inline std::size_t get_size(const Json& doc, const char* name) {
  const auto& v = field(doc, name);
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0), ErrorKind::SchemaError,
          std::string("field \"") + name + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

inline double get_number(const Json& doc, const char* name) {
  const auto& v = field(doc, name);
  require(v.is_number(), ErrorKind::SchemaError, std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

inline std::string get_string(const Json& doc, const char* name) {
  const auto& v = field(doc, name);
  require(v.is_string(), ErrorKind::SchemaError, std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> get_numbers(const Json& doc, const char* name, std::optional<std::size_t> expected = std::nullopt) {
  const auto& v = field(doc, name);
  require(v.is_array(), ErrorKind::SchemaError, std::string("field \"") + name + "\" must be an array");
  if (expected) {
    require(v.size() == *expected, ErrorKind::LengthMismatch,
            std::string("field \"") + name + "\" has " + std::to_string(v.size()) + " entries, expected " +
                std::to_string(*expected));
  }
  std::vector<T> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    require(v[k].is_number(), ErrorKind::SchemaError,
            std::string("field \"") + name + "\" entry " + std::to_string(k) + " is not a number");
    out.push_back(v[k].get<T>());
  }
  return out;
}

inline Mask get_mask(const Json& doc, const char* name, std::size_t expected) {
  const auto& v = field(doc, name);
  require(v.is_array(), ErrorKind::SchemaError, std::string("field \"") + name + "\" must be an array");
  require(v.size() == expected, ErrorKind::LengthMismatch,
          std::string("field \"") + name + "\" has " + std::to_string(v.size()) + " entries, expected " +
              std::to_string(expected));
  Mask out(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    const auto& e = v[k];
    if (e.is_boolean()) {
      out[k] = e.get<bool>() ? 1 : 0;
    } else if (e.is_number_integer() && (e.get<std::int64_t>() == 0 || e.get<std::int64_t>() == 1)) {
      out[k] = static_cast<std::uint8_t>(e.get<std::int64_t>());
    } else {
      fail(ErrorKind::SchemaError, std::string("field \"") + name + "\" entry " + std::to_string(k) + " is not 0/1");
    }
  }
  return out;
}

inline Json mask_json(const Mask& mask) {
  Json arr = Json::array();
  for (auto m : mask) arr.push_back(m ? 1 : 0);
  return arr;
}

/// +-inf thresholds are written as null and restored by side.
inline Json threshold_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double threshold_from(const Json& doc, const char* name, double if_null) {
  const auto& v = field(doc, name);
  if (v.is_null()) return if_null;
  require(v.is_number(), ErrorKind::SchemaError, std::string("field \"") + name + "\" must be a number or null");
  return v.get<double>();
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::SchemaError, what + " is not valid JSON: " + e.what());
  }
}

template <typename T>
std::vector<double> widen(std::span<const T> values) {
  return {values.begin(), values.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classifier head

inline Json to_json(const ClassifierHead& head) {
  Json doc;
  doc["L"] = head.inputs();
  doc["K"] = head.classes();
  doc["W"] = detail::widen(head.weights().flat());
  doc["b"] = detail::widen(std::span<const Real>(head.bias()));
  doc["weight_mask"] = detail::mask_json(head.weight_mask());
  doc["neuron_mask"] = detail::mask_json(head.neuron_mask());
  if (!head.class_names().empty()) doc["class_names"] = head.class_names();
  return doc;
}

inline ClassifierHead head_from_json(const Json& doc) {
  const std::size_t l = detail::get_size(doc, "L");
  const std::size_t k = detail::get_size(doc, "K");
  require(l >= 1 && k >= 1, ErrorKind::SchemaError, "fields \"L\" and \"K\" must be positive");
  auto w = detail::get_numbers<Real>(doc, "W", l * k);
  auto b = detail::get_numbers<Real>(doc, "b", k);
  Mask wm = doc.contains("weight_mask") ? detail::get_mask(doc, "weight_mask", l * k) : Mask{};
  Mask nm = doc.contains("neuron_mask") ? detail::get_mask(doc, "neuron_mask", l) : Mask{};
  std::vector<std::string> names;
  if (doc.contains("class_names")) {
    const auto& v = doc["class_names"];
    require(v.is_array() && v.size() == k, ErrorKind::LengthMismatch, "field \"class_names\" must list K names");
    for (const auto& n : v) {
      require(n.is_string(), ErrorKind::SchemaError, "field \"class_names\" must contain strings");
      names.push_back(n.get<std::string>());
    }
  }
  return ClassifierHead(Matrix<Real>(l, k, std::move(w)), std::move(b), std::move(wm), std::move(nm), std::move(names));
}

inline void write_head(const std::filesystem::path& path, const ClassifierHead& head) {
  write_file(path, to_json(head).dump(1) + "\n");
}

inline ClassifierHead read_head(const std::filesystem::path& path) {
  return head_from_json(detail::parse_json(read_file(path), "head document '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Sensitivities

inline Json to_json(const SensitivityMap& map) {
  Json doc;
  doc["L"] = map.inputs();
  doc["K"] = map.classes();
  doc["sample_count"] = map.sample_count();
  doc["source_tag"] = map.source_tag();
  doc["values"] = detail::widen(map.values().flat());
  return doc;
}

inline SensitivityMap sensitivity_from_json(const Json& doc) {
  const std::size_t l = detail::get_size(doc, "L");
  const std::size_t k = detail::get_size(doc, "K");
  require(l >= 1 && k >= 1, ErrorKind::SchemaError, "fields \"L\" and \"K\" must be positive");
  auto values = detail::get_numbers<Real>(doc, "values", l * k);
  return SensitivityMap(Matrix<Real>(l, k, std::move(values)), detail::get_size(doc, "sample_count"),
                        doc.contains("source_tag") ? detail::get_string(doc, "source_tag") : std::string{});
}

inline Json to_json(const NeuronSensitivity& neurons) {
  Json doc;
  doc["L"] = neurons.size();
  doc["statistic"] = std::string(to_string(neurons.statistic()));
  doc["values"] = detail::widen(std::span<const Real>(neurons.values()));
  return doc;
}

inline NeuronSensitivity neuron_sensitivity_from_json(const Json& doc) {
  const std::size_t l = detail::get_size(doc, "L");
  require(l >= 1, ErrorKind::SchemaError, "field \"L\" must be positive");
  const auto statistic = parse_neuron_statistic(detail::get_string(doc, "statistic"));
  return NeuronSensitivity(detail::get_numbers<Real>(doc, "values", l), statistic);
}

/// The estimate command's output: the weight map plus every neuron statistic.
struct SensitivityBundle {
  SensitivityMap map;
  std::vector<NeuronSensitivity> neurons;

  const NeuronSensitivity& neuron(NeuronStatistic s) const {
    for (const auto& n : neurons) {
      if (n.statistic() == s) return n;
    }
    fail(ErrorKind::SchemaError, "sensitivity document has no \"" + std::string(to_string(s)) + "\" neuron statistic");
  }
};

inline SensitivityBundle make_bundle(SensitivityMap map) {
  std::vector<NeuronSensitivity> neurons;
  for (auto s : kAllNeuronStatistics) neurons.push_back(neuron_sensitivity(map, s));
  return {std::move(map), std::move(neurons)};
}

inline Json to_json(const SensitivityBundle& bundle) {
  Json doc = to_json(bundle.map);
  Json stats = Json::object();
  for (const auto& n : bundle.neurons) stats[std::string(to_string(n.statistic()))] = to_json(n);
  doc["neuron_sensitivity"] = std::move(stats);
  return doc;
}

inline SensitivityBundle bundle_from_json(const Json& doc) {
  SensitivityBundle bundle{sensitivity_from_json(doc), {}};
  if (doc.contains("neuron_sensitivity")) {
    const auto& stats = doc["neuron_sensitivity"];
    require(stats.is_object(), ErrorKind::SchemaError, "field \"neuron_sensitivity\" must be an object");
    for (const auto& [name, sub] : stats.items()) {
      auto n = neuron_sensitivity_from_json(sub);
      require(n.size() == bundle.map.inputs(), ErrorKind::LengthMismatch, "neuron statistic \"" + name + "\" length differs from L");
      require(to_string(n.statistic()) == name, ErrorKind::SchemaError, "neuron statistic key \"" + name + "\" mislabelled");
      bundle.neurons.push_back(std::move(n));
    }
  } else {
    // Map-only document: derive the statistics.
    bundle = make_bundle(bundle.map);
  }
  return bundle;
}

inline void write_sensitivity(const std::filesystem::path& path, const SensitivityBundle& bundle) {
  write_file(path, to_json(bundle).dump(1) + "\n");
}

inline SensitivityBundle read_sensitivity(const std::filesystem::path& path) {
  return bundle_from_json(detail::parse_json(read_file(path), "sensitivity document '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Prune outcome

inline Json to_json(const PruneOutcome& outcome) {
  Json doc;
  doc["L"] = outcome.inputs();
  doc["K"] = outcome.classes();
  doc["weight_mask"] = detail::mask_json(outcome.weights.mask);
  doc["neuron_mask"] = detail::mask_json(outcome.neurons.mask);
  doc["thresholds"] = {{"omega_min_w", detail::threshold_json(outcome.weights.omega_min)},
                       {"omega_max_w", detail::threshold_json(outcome.weights.omega_max)},
                       {"omega_min_o", detail::threshold_json(outcome.neurons.omega_min)},
                       {"omega_max_o", detail::threshold_json(outcome.neurons.omega_max)}};
  doc["pruned_weights"] = outcome.weights.pruned;
  doc["pruned_neurons"] = outcome.neurons.pruned;
  return doc;
}

inline PruneOutcome prune_outcome_from_json(const Json& doc) {
  const std::size_t l = detail::get_size(doc, "L");
  const std::size_t k = detail::get_size(doc, "K");
  require(l >= 1 && k >= 1, ErrorKind::SchemaError, "fields \"L\" and \"K\" must be positive");
  PruneOutcome out{WeightPruning::identity(l, k), NeuronPruning::identity(l)};
  out.weights.mask = detail::get_mask(doc, "weight_mask", l * k);
  out.neurons.mask = detail::get_mask(doc, "neuron_mask", l);
  const auto& t = detail::field(doc, "thresholds");
  constexpr double inf = std::numeric_limits<double>::infinity();
  out.weights.omega_min = detail::threshold_from(t, "omega_min_w", -inf);
  out.weights.omega_max = detail::threshold_from(t, "omega_max_w", inf);
  out.neurons.omega_min = detail::threshold_from(t, "omega_min_o", -inf);
  out.neurons.omega_max = detail::threshold_from(t, "omega_max_o", inf);
  out.weights.pruned = detail::get_size(doc, "pruned_weights");
  out.neurons.pruned = detail::get_size(doc, "pruned_neurons");
  const auto zeros = [](const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 0)); };
  require(zeros(out.weights.mask) == out.weights.pruned, ErrorKind::SchemaError,
          "field \"pruned_weights\" disagrees with weight_mask");
  require(zeros(out.neurons.mask) == out.neurons.pruned, ErrorKind::SchemaError,
          "field \"pruned_neurons\" disagrees with neuron_mask");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep grid

inline Json to_json(const SweepGrid& grid) {
  return {{"rho_min_w", grid.rho_min_w},
          {"rho_max_w", grid.rho_max_w},
          {"rho_min_o", grid.rho_min_o},
          {"rho_max_o", grid.rho_max_o},
          {"objective", std::string(to_string(grid.objective))},
          {"neuron_statistic", std::string(to_string(grid.neuron_statistic))}};
}

inline SweepGrid grid_from_json(const Json& doc) {
  SweepGrid grid;
  grid.rho_min_w = detail::get_numbers<double>(doc, "rho_min_w");
  grid.rho_max_w = detail::get_numbers<double>(doc, "rho_max_w");
  grid.rho_min_o = detail::get_numbers<double>(doc, "rho_min_o");
  grid.rho_max_o = detail::get_numbers<double>(doc, "rho_max_o");
  if (doc.contains("objective")) grid.objective = parse_objective(detail::get_string(doc, "objective"));
  if (doc.contains("neuron_statistic")) {
    grid.neuron_statistic = parse_neuron_statistic(detail::get_string(doc, "neuron_statistic"));
  }
  try {
    grid.validate();
  } catch (const Error& e) {
    fail(ErrorKind::SchemaError, e.what());
  }
  return grid;
}

inline SweepGrid read_grid(const std::filesystem::path& path) {
  return grid_from_json(detail::parse_json(read_file(path), "grid document '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Evaluation report

inline Json to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

inline Histogram histogram_from_json(const Json& doc) {
  Histogram h{detail::get_numbers<double>(doc, "edges"), detail::get_numbers<std::size_t>(doc, "counts")};
  require(h.counts.size() >= 1 && h.edges.size() == h.counts.size() + 1, ErrorKind::SchemaError,
          "histogram needs counts and one more edge than counts");
  return h;
}

inline Json to_json(const EvalReport& report) {
  Json doc;
  doc["fpr95"] = report.fpr95;
  doc["auroc"] = report.auroc;
  doc["lambda"] = report.lambda;
  doc["n_id"] = report.n_id;
  doc["n_ood"] = report.n_ood;
  doc["histogram"] = {{"id", to_json(report.id_histogram)}, {"ood", to_json(report.ood_histogram)}};
  if (report.reliability) {
    doc["ece"] = report.reliability->ece;
    Json bins = Json::array();
    for (const auto& b : report.reliability->bins) {
      bins.push_back({{"confidence_mean", b.confidence_mean}, {"accuracy", b.accuracy}, {"count", b.count}});
    }
    doc["reliability_bins"] = std::move(bins);
  } else {
    doc["ece"] = nullptr;
    doc["reliability_bins"] = nullptr;
  }
  return doc;
}

inline EvalReport report_from_json(const Json& doc) {
  EvalReport r;
  r.fpr95 = detail::get_number(doc, "fpr95");
  r.auroc = detail::get_number(doc, "auroc");
  r.lambda = detail::get_number(doc, "lambda");
  r.n_id = detail::get_size(doc, "n_id");
  r.n_ood = detail::get_size(doc, "n_ood");
  require(r.fpr95 >= 0 && r.fpr95 <= 1, ErrorKind::SchemaError, "field \"fpr95\" outside [0, 1]");
  require(r.auroc >= 0 && r.auroc <= 1, ErrorKind::SchemaError, "field \"auroc\" outside [0, 1]");
  const auto& hist = detail::field(doc, "histogram");
  r.id_histogram = histogram_from_json(detail::field(hist, "id"));
  r.ood_histogram = histogram_from_json(detail::field(hist, "ood"));
  const auto sum = [](const Histogram& h) { return std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}); };
  require(sum(r.id_histogram) == r.n_id, ErrorKind::SchemaError, "ID histogram counts do not sum to n_id");
  require(sum(r.ood_histogram) == r.n_ood, ErrorKind::SchemaError, "OOD histogram counts do not sum to n_ood");

  const auto& bins = detail::field(doc, "reliability_bins");
  if (!bins.is_null()) {
    require(bins.is_array() && !bins.empty(), ErrorKind::SchemaError, "field \"reliability_bins\" must be a non-empty array");
    ReliabilityBins rel;
    rel.ece = detail::get_number(doc, "ece");
    require(rel.ece >= 0 && rel.ece <= 1, ErrorKind::SchemaError, "field \"ece\" outside [0, 1]");
    for (const auto& b : bins) {
      rel.bins.push_back({detail::get_number(b, "confidence_mean"), detail::get_number(b, "accuracy"),
                          detail::get_size(b, "count")});
    }
    require(rel.total() == r.n_id, ErrorKind::SchemaError, "reliability bin counts do not sum to n_id");
    r.reliability = std::move(rel);
  }
  return r;
}

inline void write_report(const std::filesystem::path& path, const EvalReport& report) {
  write_file(path, to_json(report).dump(1) + "\n");
}

inline EvalReport read_report(const std::filesystem::path& path) {
  return report_from_json(detail::parse_json(read_file(path), "report document '" + path.string() + "'"));
}

// ---------------------------------------------------------------------------
// Delimited text: score vectors and sweep tables

namespace detail {

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

}  // namespace detail

/// "# kind=<k> temperature=<t>" then one "index<TAB>score" line per row.
inline std::string encode_scores(const ScoreVector& scores) {
  std::string out = "# kind=" + std::string(to_string(scores.kind())) +
                    " temperature=" + detail::format_real(scores.temperature()) + "\n";
  for (std::size_t n = 0; n < scores.size(); ++n) {
    out += std::to_string(n) + "\t" + detail::format_real(scores[n]) + "\n";
  }
  return out;
}

inline ScoreVector decode_scores(std::string_view text) {
  ScoreKind kind = ScoreKind::Energy;
  double temperature = 1.0;
  std::vector<double> scores;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string token;
      while (meta >> token) {
        if (token.rfind("kind=", 0) == 0) kind = parse_score_kind(token.substr(5));
        if (token.rfind("temperature=", 0) == 0) {
          try {
            temperature = std::stod(token.substr(12));
          } catch (const std::exception&) {
            fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": bad temperature");
          }
        }
      }
      continue;
    }
    std::istringstream row(line);
    std::size_t index = 0;
    std::string value;
    if (!(row >> index >> value) || index != scores.size()) {
      fail(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": expected \"" +
                                       std::to_string(scores.size()) + "<TAB>score\"");
    }
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == value.size(), ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": bad score value");
    scores.push_back(v);
  }
  require(!scores.empty(), ErrorKind::SchemaError, "score file has no rows");
  return ScoreVector(std::move(scores), kind, temperature);
}

inline void write_scores(const std::filesystem::path& path, const ScoreVector& scores) {
  write_file(path, encode_scores(scores));
}

inline ScoreVector read_scores(const std::filesystem::path& path) { return decode_scores(read_file(path)); }

inline std::string encode_sweep_table(const SweepResult& result) {
  std::string out = "rank\trho_min_w\trho_max_w\trho_min_o\trho_max_o\tauroc\tfpr95\tlambda\tpruned_weights\tpruned_neurons\n";
  for (std::size_t r = 0; r < result.table.size(); ++r) {
    const auto& row = result.table[r];
    out += std::to_string(r + 1) + "\t" + detail::format_real(row.config.rho_min_w) + "\t" +
           detail::format_real(row.config.rho_max_w) + "\t" + detail::format_real(row.config.rho_min_o) + "\t" +
           detail::format_real(row.config.rho_max_o) + "\t" + detail::format_real(row.auroc) + "\t" +
           detail::format_real(row.fpr95) + "\t" + detail::format_real(row.lambda) + "\t" +
           std::to_string(row.pruned_weights) + "\t" + std::to_string(row.pruned_neurons) + "\n";
  }
  return out;
}

inline Json to_json(const PruneConfig& c) {
  return {{"rho_min_w", c.rho_min_w},
          {"rho_max_w", c.rho_max_w},
          {"rho_min_o", c.rho_min_o},
          {"rho_max_o", c.rho_max_o},
          {"neuron_statistic", std::string(to_string(c.neuron_statistic))}};
}

inline PruneConfig prune_config_from_json(const Json& doc) {
  PruneConfig c;
  c.rho_min_w = detail::get_number(doc, "rho_min_w");
  c.rho_max_w = detail::get_number(doc, "rho_max_w");
  c.rho_min_o = detail::get_number(doc, "rho_min_o");
  c.rho_max_o = detail::get_number(doc, "rho_max_o");
  if (doc.contains("neuron_statistic")) c.neuron_statistic = parse_neuron_statistic(detail::get_string(doc, "neuron_statistic"));
  return c;
}

// ---------------------------------------------------------------------------
// Generic documents

inline Json read_json(const std::filesystem::path& path) {
  return detail::parse_json(read_file(path), "document '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const Json& doc) { write_file(path, doc.dump(1) + "\n"); }

}  // namespace opnp::io
