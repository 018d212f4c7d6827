#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksvm/dataset.hpp"
#include "ksvm/kernel.hpp"
#include "ksvm/smo.hpp"
#include "ksvm/spsvm.hpp"

namespace ksvm {

struct EvalReport {
  double error_pct = 0.0;
  std::optional<double> one_minus_auc_pct;
  Index n_test = 0;
};

/// 100 * (#mismatches) / n. Throws on empty or mismatched inputs.
double error_rate(std::span<const int> predictions, std::span<const int> truth);

/// 100 * (1 - AUC), AUC being the Mann-Whitney statistic with half credit
/// for ties. `truth` holds +1 / -1.
double one_minus_auc(std::span<const double> scores, std::span<const int> truth);

enum class SolverKind { smo, spsvm, newton };

std::string to_string(SolverKind kind);
SolverKind solver_from_string(const std::string& name);

struct SolverOptions {
  SolverKind kind = SolverKind::spsvm;
  KernelSpec kernel;
  SmoConfig smo;
  SpSvmConfig spsvm;
  NewtonConfig newton;

  /// Sets C and the worker count on every solver config.
  void set_C(double C);
  void set_threads(int threads);
};

/// One trained binary problem.
struct TrainedPair {
  KernelExpansion expansion;
  /// Support vectors (dual) or basis vectors (sparse primal).
  Index count = 0;
};

using BinaryTrainer = std::function<TrainedPair(const BinaryView&)>;

BinaryTrainer make_trainer(const SolverOptions& options);

struct PairModel {
  int positive = 0;
  int negative = 0;
  KernelExpansion expansion;
  Index count = 0;
  double seconds = 0.0;
};

/// k(k-1)/2 pairwise binary models. The higher class id of each pair is the
/// positive class.
struct OvoModel {
  std::vector<int> class_ids;
  std::vector<PairModel> pairs;

  Index dimension() const;
  /// Majority vote; ties go to the lowest class id.
  int predict(const Eigen::Ref<const Vector>& x) const;
  std::vector<int> predict_all(const Matrix& points, int threads = 1) const;
  /// Sum of per-pair solver time.
  double train_seconds() const;
  Index total_count() const;
};

/// Trains every class pair, timing each trainer call on a monotonic clock;
/// building the pair's view is not timed. With `parallel_pairs`, pairs run concurrently
/// (each on its own solver state); the result does not depend on it.
OvoModel ovo_train(const Dataset& ds, const BinaryTrainer& trainer, bool parallel_pairs = false);
OvoModel ovo_train(const Dataset& ds, const SolverOptions& options, bool parallel_pairs = false);

int ovo_predict(const OvoModel& model, const Eigen::Ref<const Vector>& x);

}  // namespace ksvm
