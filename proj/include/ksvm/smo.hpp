#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ksvm/dataset.hpp"
#include "ksvm/kernel.hpp"

namespace ksvm {

struct SmoConfig {
  double C = 1.0;
  /// Stop once the maximal violating pair gap is at most tol.
  double tol = 1e-3;
  std::int64_t max_iter = 10'000'000;
  double cache_mb = 1000.0;
  std::int64_t gradient_refresh = 1'000'000;
  int threads = 1;

  void validate() const;
};

struct DualModel {
  Vector alpha;
  double b = 0.0;
  std::vector<Index> support_indices;
  KernelSpec spec;
  double C = 1.0;
  bool converged = false;
  std::int64_t iterations = 0;
  /// Gap of the maximal violating pair at exit.
  double max_violation = 0.0;
};

/// Observer called after every pair update with (iteration, alpha).
using SmoObserver = std::function<void(std::int64_t, const Vector&)>;

/// Pair-wise dual decomposition with maximal-violating-pair selection and an
/// LRU cache of kernel rows. Throws ArgumentError for a one-class view.
DualModel smo_train(const BinaryView& view, const KernelSpec& spec, const SmoConfig& cfg,
                    const SmoObserver& observer = {});

/// -1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j) + sum_i a_i. Throws when alpha is
/// outside [0, C]^n (pass C = +inf to skip the upper bound).
double dual_objective(const BinaryView& view, const KernelSpec& spec, const Vector& alpha,
                      double C = std::numeric_limits<double>::infinity());

/// Largest m(alpha) - M(alpha) gap, with gradients recomputed from scratch.
double kkt_violation(const BinaryView& view, const KernelSpec& spec, const Vector& alpha, double C);

/// sum_{i in SV} alpha_i y_i k(x_i, x) + b.
double dual_predict(const DualModel& model, const BinaryView& train_view, const Eigen::Ref<const Vector>& x);

/// Self-contained decision function keeping only the support vectors.
KernelExpansion to_expansion(const DualModel& model, const BinaryView& train_view);

}  // namespace ksvm
