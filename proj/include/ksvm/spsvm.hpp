#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ksvm/dataset.hpp"
#include "ksvm/kernel.hpp"

namespace ksvm {

/// Damped Newton settings shared by the sparse and the full primal solver.
struct NewtonConfig {
  double C = 1.0;
  /// Stop when ||gradient||_inf <= tol * C * n.
  double tol = 1e-5;
  int max_iter = 50;
  int max_halvings = 30;
  int threads = 1;
  /// When false the bias stays at its current value.
  bool fit_bias = true;

  void validate() const;
};

struct SpSvmConfig {
  double C = 1.0;
  /// Stop when |change in training error| / (basis vectors added) < epsilon.
  double epsilon = 5e-6;
  Index candidate_size = 59;
  Index batch_size = 50;
  /// Effective cap is min(n, max_basis).
  Index max_basis = 2000;
  double newton_tol = 1e-5;
  int newton_max_iter = 50;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  NewtonConfig newton() const { return {C, newton_tol, newton_max_iter, 30, threads, true}; }
};

struct SparsePrimalModel {
  std::vector<Index> basis;
  Matrix basis_vectors;
  Vector beta;
  double b = 0.0;
  KernelSpec spec;
  double C = 1.0;
};

struct TraceRecord {
  Index basis_size = 0;
  double objective = 0.0;
  /// Fraction of misclassified training points.
  double training_error = 0.0;
  double seconds = 0.0;
  int newton_iterations = 0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  /// Largest number of kernel values held at once.
  Index peak_kernel_values = 0;
  std::string stop_reason;
};

struct NewtonStats {
  int iterations = 0;
  double gradient_norm = 0.0;
  /// Objective at entry followed by the value after each accepted step.
  std::vector<double> objectives;
  bool converged = false;
};

/// Candidate evaluation for adding one basis vector at coefficient zero.
struct CandidateScore {
  Index index = -1;
  double gradient = 0.0;
  double curvature = 0.0;
  double score = 0.0;
};

struct GrowResult {
  Index added = 0;
  bool exhausted = false;
};

/// Working state of the sparse primal problem
///   min 1/2 beta' K_JJ beta + C/2 sum_i max(0, 1 - y_i (beta' k_Ji + b))^2.
/// Keeps the n x |J| kernel columns of the basis and the outputs
/// o_i = beta' k_Ji + b for every training point.
class SparsePrimalState {
 public:
  SparsePrimalState(Matrix points, Vector y, KernelSpec spec, double C, int threads = 1);

  Index n() const { return points_.rows(); }
  Index basis_size() const { return static_cast<Index>(basis_.size()); }
  const std::vector<Index>& basis() const { return basis_; }
  bool in_basis(Index i) const { return in_basis_[static_cast<std::size_t>(i)] != 0; }
  const Vector& beta() const { return beta_; }
  double bias() const { return b_; }
  const Vector& outputs() const { return outputs_; }
  const Vector& y() const { return y_; }
  const Matrix& points() const { return points_; }
  double C() const { return C_; }

  /// Kernel columns k(x_i, x_j) for i in [0, n), j in J.
  auto basis_kernel() const { return kernel_.leftCols(basis_size()); }
  /// K_JJ gathered from the stored columns.
  Matrix basis_gram() const;

  /// Appends index j with coefficient `coefficient`, updating outputs by a
  /// rank-one product.
  void add_basis(Index j, double coefficient = 0.0);
  /// Replaces (beta, b) and recomputes all outputs.
  void set_coefficients(const Vector& beta, double b);
  void recompute_outputs();

  double objective() const;
  /// Recomputes the objective from scratch with an explicit double loop over
  /// the basis (no cached outputs).
  double objective_from_scratch() const;
  /// Gradient with respect to (beta, b); the last entry is the bias.
  Vector gradient() const;
  /// Generalized Hessian at the current active set, (|J|+1) square.
  Matrix hessian() const;
  double training_error() const;
  std::vector<Index> active_set() const;

  NewtonStats newton_reoptimize(const NewtonConfig& cfg);

  /// Candidate scores g^2 / (2h) from a one-dimensional Newton model.
  std::vector<CandidateScore> score_candidates(std::span<const Index> candidates) const;
  /// Up to `count` indices outside J, uniformly without replacement.
  std::vector<Index> sample_candidates(Index count, std::mt19937_64& rng);
  GrowResult select_and_grow(const SpSvmConfig& cfg, Index max_basis, std::mt19937_64& rng);

  Index peak_kernel_values() const { return peak_kernel_values_; }

  SparsePrimalModel model() const;

 private:
  void reserve_columns(Index columns);
  void note_kernel_values(Index transient) const;

  Matrix points_;
  Vector y_;
  KernelSpec spec_;
  double C_;
  int threads_;

  std::vector<Index> basis_;
  std::vector<char> in_basis_;
  std::vector<Index> pool_;
  Matrix kernel_;
  Vector beta_;
  double b_ = 0.0;
  Vector outputs_;

  mutable Index peak_kernel_values_ = 0;
};

struct SpSvmResult {
  SparsePrimalModel model;
  SolverTrace trace;
};

/// Alternates greedy basis growth and Newton reoptimization until the
/// training-error stopping rule, the basis cap, or exhaustion of candidates.
SpSvmResult spsvm_train(const BinaryView& view, const KernelSpec& spec, const SpSvmConfig& cfg);

/// Squared-hinge primal Newton over the full kernel matrix (J = all points).
SparsePrimalModel primal_newton_train(const BinaryView& view, const KernelSpec& spec, const NewtonConfig& cfg);

/// sum_{j in J} beta_j k(x_j, x) + b.
double sp_predict(const SparsePrimalModel& model, const Eigen::Ref<const Vector>& x);

KernelExpansion to_expansion(const SparsePrimalModel& model);

}  // namespace ksvm
