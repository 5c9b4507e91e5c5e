#pragma once

// Batch experiment driver behind the command-line tool.
//
// A configuration is a plain-text document of `key = value` lines (`#` starts a
// comment). Unknown or repeated keys are rejected. Recognised keys:
//
//   task        factorize | unfold | cluster-eval | gen-manifold | convert
//   input       tensor (TNSR/CSV/IDX images) or point-cloud CSV path
//   labels      label file (CSV column or IDX labels) for cluster-eval
//   method      hyperntf | ntf | ntd | hosvd | hypergraph-le | graph-le | lle
//   rank        CP rank J, and the default Tucker rank per mode
//   ranks       comma-separated Tucker ranks, one per mode
//   lambda      hypergraph penalty weight (>= 0)
//   knn         neighbours per hyperedge / graph node
//   max_iter, tol_obj, tol_rse, seed, runs
//   output      output directory (output file for convert)
//   kind        manifold: punctured_sphere | gaussian | twin_peaks | toroidal_helix
//   samples     manifold point count
//   noise       manifold noise standard deviation
//   dim         embedding dimension
//   clusters    k-means cluster count (default: number of distinct labels)
//   limit       IDX items to keep
//   weights     unit | heat
//   strict_z    true: unit coefficient on the hypergraph terms of the Z update
//   abs_tol     true: tol_obj is an absolute objective change
//   safeguard   false: accept every U step even when it raises the objective

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperntf/embedding.hpp"
#include "hyperntf/evaluation.hpp"
#include "hyperntf/factorization.hpp"

namespace hyperntf {

enum class Task { Factorize, Unfold, ClusterEval, GenManifold, Convert };

Task parse_task(const std::string& name);
std::string to_string(Task task);

using ConfigMap = std::map<std::string, std::string>;

/// Every key accepted in a configuration document, in report order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines. Throws ConfigError on unknown/duplicate keys or bad syntax.
ConfigMap parse_config_document(std::string_view text);

struct ExperimentConfig {
  Task task = Task::Factorize;
  std::string input;
  std::string labels;
  std::string method;
  Index rank = 0;
  std::vector<Index> ranks;
  double lambda = 0.0;
  Index knn = 0;  ///< 0: method/manifold default
  Index max_iter = 500;
  double tol_obj = 1e-6;
  double tol_rse = 1e-4;
  std::uint64_t seed = 0;
  Index runs = 10;
  std::string output;
  std::string kind;
  Index samples = 1000;
  double noise = 0.0;
  Index dim = 2;
  Index clusters = 0;  ///< 0: number of distinct labels
  Index limit = 0;     ///< 0: every item
  WeightScheme weights = WeightScheme::Unit;
  bool strict_z = false;
  bool abs_tol = false;
  bool safeguard = true;

  /// The document this config was built from, for echoing into the report.
  ConfigMap source;

  SolverConfig solver() const;
};

/// Validates every field for the task before any computation happens.
ExperimentConfig make_config(const ConfigMap& values);

/// Key/value report written in config_keys() order followed by result keys.
struct RunReport {
  std::map<std::string, std::string> values;
  double wall_seconds = 0.0;  ///< not serialised; reports stay byte-identical across runs
  std::vector<std::filesystem::path> artifacts;

  /// Documented key order of report.txt.
  static const std::vector<std::string>& key_order();
  std::string render() const;
};

struct Artifacts {
  std::optional<DenseMatrix> z;
  std::optional<SolveTrace> trace;
  std::optional<DenseMatrix> embedding;
  std::optional<DenseMatrix> points;
  std::optional<DenseVector> color;
};

/// Writes report.txt, z.csv, trace.csv, embedding.csv and points.csv (those
/// present) into `out_dir` atomically. Returns the written paths.
std::vector<std::filesystem::path> save_outputs(RunReport& report, const Artifacts& artifacts,
                                                const std::filesystem::path& out_dir);

/// Runs one experiment and writes its outputs. Nothing is written when it fails.
RunReport run_experiment(const ExperimentConfig& config);

}  // namespace hyperntf
