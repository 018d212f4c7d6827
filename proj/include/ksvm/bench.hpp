#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksvm/dataset.hpp"
#include "ksvm/metrics.hpp"
#include "ksvm/model_io.hpp"

namespace ksvm {

/// Invalid command-line usage (exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BenchReport {
  static constexpr int kSchemaVersion = 1;

  std::string dataset;
  Index n = 0;
  Index d = 0;
  double C = 0.0;
  double gamma = 0.0;
  std::string solver;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Solver wall-clock time only, millisecond resolution.
  double train_seconds = 0.0;
  std::optional<double> error_pct;
  std::optional<double> one_minus_auc_pct;
  Index basis_or_sv_count = 0;
  std::optional<double> speedup;
  std::optional<std::string> baseline;

  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

nlohmann::json to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);

std::string csv_header();
std::string to_csv_row(const BenchReport& report);

double round_to_millis(double seconds);

enum class Metric { error, auc };
Metric metric_from_string(const std::string& name);

/// Decision values of a binary model (score of the positive class).
Vector binary_scores(const OvoModel& model, const Matrix& points, int threads = 1);

/// Applies the model's stored scaling and evaluates. AUC requires a binary
/// model (UsageError otherwise); error_pct is always reported.
EvalReport evaluate(const ModelFile& file, const Dataset& raw_test, Metric metric, int threads = 1);

struct TrainRequest {
  std::string train_path;
  std::optional<std::string> test_path;
  std::optional<Index> dimension;
  SolverOptions options;
  bool scale = false;
  bool ovo_parallel = false;
  int threads = 1;
};

struct TrainOutcome {
  ModelFile model;
  BenchReport report;
};

/// Loads, optionally scales, trains (one-vs-one when needed) and evaluates.
/// Only the trainer calls are timed. `trainer` overrides the solver.
TrainOutcome run_training(const TrainRequest& request, const BinaryTrainer& trainer = {});

struct BenchRequest {
  std::string train_path;
  std::string test_path;
  std::optional<Index> dimension;
  std::vector<SolverKind> solvers;
  SolverOptions options;
  int repeats = 1;
  bool scale = false;
  int threads = 1;
  Metric metric = Metric::error;
};

struct BenchAggregate {
  std::string solver;
  int runs = 0;
  double mean_train_seconds = 0.0;
  double std_train_seconds = 0.0;
  std::optional<double> mean_error_pct;
  std::optional<double> std_error_pct;
  std::optional<double> mean_one_minus_auc_pct;
  double speedup = 1.0;
};

struct BenchOutcome {
  std::vector<BenchReport> runs;
  std::vector<BenchAggregate> aggregates;
};

/// Runs every solver on the same data; spsvm is repeated with seeds
/// seed, seed+1, ... The first solver is the speedup baseline.
BenchOutcome run_bench(const BenchRequest& request);

nlohmann::json to_json(const BenchAggregate& aggregate);
nlohmann::json to_json(const BenchOutcome& outcome);

}  // namespace ksvm
