#include "ksvm/spsvm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ksvm/parallel.hpp"

namespace ksvm {

void NewtonConfig::validate() const {
  if (!(C > 0.0)) throw ArgumentError("newton: C must be positive");
  if (!(tol >= 0.0)) throw ArgumentError("newton: tol must be non-negative");
  if (max_iter < 1) throw ArgumentError("newton: max_iter must be >= 1");
  if (max_halvings < 0) throw ArgumentError("newton: max_halvings must be >= 0");
}

void SpSvmConfig::validate() const {
  if (!(C > 0.0)) throw ArgumentError("spsvm: C must be positive");
  if (!(epsilon >= 0.0)) throw ArgumentError("spsvm: epsilon must be non-negative");
  if (candidate_size < 1) throw ArgumentError("spsvm: candidate_size must be >= 1");
  if (batch_size < 1) throw ArgumentError("spsvm: batch_size must be >= 1");
  if (max_basis < batch_size) throw ArgumentError("spsvm: max_basis must be >= batch_size");
  newton().validate();
}

namespace {

// Column panels of the Hessian product. The panel layout is fixed so the
// arithmetic of every entry is the same for any number of threads.
constexpr Index kPanelWidth = 64;

double squared_hinge_sum(const Vector& y, const Vector& outputs) {
  double loss = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double margin = 1.0 - y(i) * outputs(i);
    if (margin > 0.0) loss += margin * margin;
  }
  return loss;
}

/// Dynamic scheduling over independent work items.
template <typename Fn>
void for_each_item(Index count, int threads, Fn&& fn) {
  std::atomic<Index> next{0};
  parallel_for(std::min<Index>(threads, count), threads, [&](Index, Index) {
    for (Index item = next++; item < count; item = next++) fn(item);
  });
}

}  // namespace

SparsePrimalState::SparsePrimalState(Matrix points, Vector y, KernelSpec spec, double C, int threads)
    : points_(std::move(points)), y_(std::move(y)), spec_(spec), C_(C), threads_(std::max(threads, 1)) {
  spec_.validate();
  if (points_.rows() != y_.size()) throw ArgumentError("spsvm: targets do not match points");
  if (!(C_ > 0.0)) throw ArgumentError("spsvm: C must be positive");
  for (Index i = 0; i < y_.size(); ++i) {
    if (y_(i) != 1.0 && y_(i) != -1.0) throw ArgumentError("spsvm: targets must be +-1");
  }
  in_basis_.assign(static_cast<std::size_t>(n()), 0);
  pool_.resize(static_cast<std::size_t>(n()));
  std::iota(pool_.begin(), pool_.end(), Index{0});
  outputs_ = Vector::Zero(n());
}

void SparsePrimalState::note_kernel_values(Index transient) const {
  peak_kernel_values_ = std::max(peak_kernel_values_, kernel_.size() + transient);
}

void SparsePrimalState::reserve_columns(Index columns) {
  if (kernel_.cols() >= columns) return;
  const Index capacity = std::min(n(), std::max({columns, 2 * kernel_.cols(), Index{16}}));
  Matrix grown(n(), capacity);
  note_kernel_values(grown.size());
  grown.leftCols(basis_size()) = kernel_.leftCols(basis_size());
  kernel_.swap(grown);
}

Matrix SparsePrimalState::basis_gram() const {
  const Index m = basis_size();
  Matrix gram(m, m);
  for (Index c = 0; c < m; ++c) {
    for (Index r = 0; r < m; ++r) gram(r, c) = kernel_(basis_[static_cast<std::size_t>(r)], c);
  }
  return gram;
}

void SparsePrimalState::add_basis(Index j, double coefficient) {
  if (j < 0 || j >= n()) throw ArgumentError("spsvm: basis index out of range");
  if (in_basis(j)) throw ArgumentError("spsvm: index " + std::to_string(j) + " already in the basis");
  const Index m = basis_size();
  reserve_columns(m + 1);
  kernel_.col(m) = kernel_against_all(points_, points_.row(j).transpose(), spec_, threads_);
  basis_.push_back(j);
  in_basis_[static_cast<std::size_t>(j)] = 1;
  pool_.erase(std::find(pool_.begin(), pool_.end(), j));
  beta_.conservativeResize(m + 1);
  beta_(m) = coefficient;
  if (coefficient != 0.0) outputs_ += coefficient * kernel_.col(m);
  note_kernel_values(0);
}

void SparsePrimalState::set_coefficients(const Vector& beta, double b) {
  if (beta.size() != basis_size()) throw ArgumentError("spsvm: coefficient count does not match basis");
  beta_ = beta;
  b_ = b;
  recompute_outputs();
}

void SparsePrimalState::recompute_outputs() {
  outputs_ = Vector::Constant(n(), b_);
  if (basis_size() > 0) outputs_.noalias() += basis_kernel() * beta_;
}

namespace {

/// Objective with the quadratic term read off consistent outputs:
/// beta' K_JJ beta = sum_j beta_j (o_j - b).
double objective_at(const std::vector<Index>& basis, const Vector& y, double C, const Vector& beta, double b,
                    const Vector& outputs) {
  double quadratic = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    quadratic += beta(static_cast<Index>(k)) * (outputs(basis[k]) - b);
  }
  return 0.5 * quadratic + 0.5 * C * squared_hinge_sum(y, outputs);
}

}  // namespace

double SparsePrimalState::objective() const {
#ifndef NDEBUG
  if (n() * basis_size() <= 250'000) {
    const double fresh = objective_from_scratch();
    const double cached = objective_at(basis_, y_, C_, beta_, b_, outputs_);
    if (std::abs(fresh - cached) > 1e-8 * std::max(1.0, std::abs(fresh))) {
      throw SolverError("spsvm: stale output cache");
    }
  }
#endif
  return objective_at(basis_, y_, C_, beta_, b_, outputs_);
}

double SparsePrimalState::objective_from_scratch() const {
  const Index m = basis_size();
  double quadratic = 0.0;
  for (Index r = 0; r < m; ++r) {
    for (Index c = 0; c < m; ++c) {
      quadratic += beta_(r) * beta_(c) *
                   rbf(points_.row(basis_[static_cast<std::size_t>(r)]), points_.row(basis_[static_cast<std::size_t>(c)]),
                       spec_.gamma);
    }
  }
  double loss = 0.0;
  for (Index i = 0; i < n(); ++i) {
    double o = b_;
    for (Index c = 0; c < m; ++c) {
      o += beta_(c) * rbf(points_.row(basis_[static_cast<std::size_t>(c)]), points_.row(i), spec_.gamma);
    }
    const double margin = 1.0 - y_(i) * o;
    if (margin > 0.0) loss += margin * margin;
  }
  return 0.5 * quadratic + 0.5 * C_ * loss;
}

std::vector<Index> SparsePrimalState::active_set() const {
  std::vector<Index> active;
  for (Index i = 0; i < n(); ++i) {
    if (y_(i) * outputs_(i) < 1.0) active.push_back(i);
  }
  return active;
}

Vector SparsePrimalState::gradient() const {
  const Index m = basis_size();
  Vector residual = Vector::Zero(n());
  for (Index i = 0; i < n(); ++i) {
    if (y_(i) * outputs_(i) < 1.0) residual(i) = outputs_(i) - y_(i);
  }
  Vector grad(m + 1);
  if (m > 0) {
    grad.head(m).noalias() = basis_gram() * beta_;
    grad.head(m).noalias() += C_ * (basis_kernel().transpose() * residual);
  }
  grad(m) = C_ * residual.sum();
  return grad;
}

Matrix SparsePrimalState::hessian() const {
  const Index m = basis_size();
  const std::vector<Index> active = active_set();
  const Index a = static_cast<Index>(active.size());

  Matrix active_kernel(a, m);
  note_kernel_values(active_kernel.size() + m * m);
  for (Index c = 0; c < m; ++c) {
    for (Index r = 0; r < a; ++r) active_kernel(r, c) = kernel_(active[static_cast<std::size_t>(r)], c);
  }

  Matrix hessian = Matrix::Zero(m + 1, m + 1);
  hessian.topLeftCorner(m, m) = basis_gram();
  const Index panels = (m + kPanelWidth - 1) / kPanelWidth;
  for_each_item(panels, threads_, [&](Index p) {
    const Index c0 = p * kPanelWidth;
    const Index width = std::min(kPanelWidth, m - c0);
    hessian.block(c0, c0, m - c0, width).noalias() +=
        C_ * (active_kernel.middleCols(c0, m - c0).transpose() * active_kernel.middleCols(c0, width));
  });
  hessian.topLeftCorner(m, m).triangularView<Eigen::StrictlyUpper>() =
      hessian.topLeftCorner(m, m).transpose().triangularView<Eigen::StrictlyUpper>();
  if (m > 0) {
    const Vector column = C_ * active_kernel.colwise().sum().transpose();
    hessian.col(m).head(m) = column;
    hessian.row(m).head(m) = column.transpose();
  }
  hessian(m, m) = C_ * static_cast<double>(a);
  return hessian;
}

double SparsePrimalState::training_error() const {
  Index wrong = 0;
  for (Index i = 0; i < n(); ++i) {
    const double predicted = outputs_(i) >= 0.0 ? 1.0 : -1.0;
    if (predicted != y_(i)) ++wrong;
  }
  return n() == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(n());
}

NewtonStats SparsePrimalState::newton_reoptimize(const NewtonConfig& cfg) {
  cfg.validate();
  const Index m = basis_size();
  NewtonStats stats;
  double current = objective();
  stats.objectives.push_back(current);
  const double threshold = cfg.tol * C_ * static_cast<double>(std::max<Index>(n(), 1));

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Vector grad = cfg.fit_bias ? gradient() : Vector(gradient().head(m));
    stats.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (stats.gradient_norm <= threshold) {
      stats.converged = true;
      break;
    }

    Matrix hessian = this->hessian();
    if (!cfg.fit_bias) hessian.conservativeResize(m, m);
    const Index size = hessian.rows();
    Eigen::LLT<Matrix> llt(hessian);
    if (llt.info() != Eigen::Success) {
      const double trace = m > 0 ? hessian.topLeftCorner(m, m).trace() / static_cast<double>(m) : 1.0;
      double lambda = 1e-8 * trace;
      int attempt = 0;
      for (; attempt <= 8; ++attempt, lambda *= 2.0) {
        llt.compute(hessian + lambda * Matrix::Identity(size, size));
        if (llt.info() == Eigen::Success) break;
      }
      if (attempt > 8) throw SolverError("spsvm: Hessian is singular after regularization");
    }
    const Vector step = llt.solve(-grad);
    const Vector beta_step = step.head(m);
    const double bias_step = cfg.fit_bias ? step(m) : 0.0;
    Vector output_step = Vector::Constant(n(), bias_step);
    if (m > 0) output_step.noalias() += basis_kernel() * beta_step;

    double t = 1.0;
    bool accepted = false;
    Vector trial_beta;
    Vector trial_outputs;
    double trial_objective = current;
    for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
      trial_beta = beta_ + t * beta_step;
      trial_outputs = outputs_ + t * output_step;
      trial_objective = objective_at(basis_, y_, C_, trial_beta, b_ + t * bias_step, trial_outputs);
      if (trial_objective <= current) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    beta_.swap(trial_beta);
    outputs_.swap(trial_outputs);
    b_ += t * bias_step;
    ++stats.iterations;
    const bool stalled = trial_objective == current;
    current = trial_objective;
    stats.objectives.push_back(current);
    if (stalled) break;
  }
  recompute_outputs();
  if (!stats.converged) {
    const Vector grad = gradient();
    stats.gradient_norm = cfg.fit_bias ? grad.lpNorm<Eigen::Infinity>() : grad.head(m).lpNorm<Eigen::Infinity>();
    stats.converged = stats.gradient_norm <= threshold;
  }
  return stats;
}

std::vector<CandidateScore> SparsePrimalState::score_candidates(std::span<const Index> candidates) const {
  const std::vector<Index> active = active_set();
  const Index a = static_cast<Index>(active.size());
  Matrix active_points(a, points_.cols());
  Vector residual(a);
  for (Index k = 0; k < points_.cols(); ++k) {
    for (Index r = 0; r < a; ++r) active_points(r, k) = points_(active[static_cast<std::size_t>(r)], k);
  }
  for (Index r = 0; r < a; ++r) {
    const Index i = active[static_cast<std::size_t>(r)];
    residual(r) = outputs_(i) - y_(i);
  }
  const Index count = static_cast<Index>(candidates.size());
  Matrix queries(count, points_.cols());
  for (Index s = 0; s < count; ++s) {
    const Index c = candidates[static_cast<std::size_t>(s)];
    if (c < 0 || c >= n()) throw ArgumentError("spsvm: candidate index out of range");
    if (in_basis(c)) throw ArgumentError("spsvm: candidate already in the basis");
    queries.row(s) = points_.row(c);
  }
  Matrix candidate_kernel;
  rbf_block(active_points, queries, spec_.gamma, candidate_kernel, threads_);
  note_kernel_values(candidate_kernel.size());

  std::vector<CandidateScore> scores(candidates.size());
  for (Index s = 0; s < count; ++s) {
    const Index c = candidates[static_cast<std::size_t>(s)];
    double gradient = outputs_(c) - b_;
    double curvature = rbf(queries.row(s), queries.row(s), spec_.gamma);
    if (a > 0) {
      gradient += C_ * residual.dot(candidate_kernel.col(s));
      curvature += C_ * candidate_kernel.col(s).squaredNorm();
    }
    scores[static_cast<std::size_t>(s)] = {c, gradient, curvature, gradient * gradient / (2.0 * curvature)};
  }
  return scores;
}

std::vector<Index> SparsePrimalState::sample_candidates(Index count, std::mt19937_64& rng) {
  const Index available = static_cast<Index>(pool_.size());
  const Index k = std::min(count, available);
  for (Index s = 0; s < k; ++s) {
    std::uniform_int_distribution<Index> pick(s, available - 1);
    std::swap(pool_[static_cast<std::size_t>(s)], pool_[static_cast<std::size_t>(pick(rng))]);
  }
  return {pool_.begin(), pool_.begin() + k};
}

GrowResult SparsePrimalState::select_and_grow(const SpSvmConfig& cfg, Index max_basis, std::mt19937_64& rng) {
  GrowResult result;
  while (result.added < cfg.batch_size && basis_size() < max_basis) {
    const std::vector<Index> candidates = sample_candidates(cfg.candidate_size, rng);
    if (candidates.empty()) {
      result.exhausted = true;
      break;
    }
    const std::vector<CandidateScore> scores = score_candidates(candidates);
    const CandidateScore best = *std::max_element(scores.begin(), scores.end(), [](const auto& l, const auto& r) {
      return l.score < r.score || (l.score == r.score && l.index > r.index);
    });

    add_basis(best.index, 0.0);
    ++result.added;

    // One-dimensional Newton step on the new coefficient, halved until the
    // objective does not increase.
    if (best.curvature > 0.0 && best.gradient != 0.0) {
      const Index m = basis_size() - 1;
      const double before = objective_at(basis_, y_, C_, beta_, b_, outputs_);
      double step = -best.gradient / best.curvature;
      for (int h = 0; h <= 30; ++h, step *= 0.5) {
        Vector trial_beta = beta_;
        trial_beta(m) = step;
        Vector trial_outputs = outputs_ + step * kernel_.col(m);
        if (objective_at(basis_, y_, C_, trial_beta, b_, trial_outputs) <= before) {
          beta_.swap(trial_beta);
          outputs_.swap(trial_outputs);
          break;
        }
      }
    }
  }
  if (pool_.empty()) result.exhausted = true;
  return result;
}

SparsePrimalModel SparsePrimalState::model() const {
  SparsePrimalModel model;
  model.basis = basis_;
  model.basis_vectors.resize(basis_size(), points_.cols());
  for (Index k = 0; k < basis_size(); ++k) model.basis_vectors.row(k) = points_.row(basis_[static_cast<std::size_t>(k)]);
  model.beta = beta_;
  model.b = b_;
  model.spec = spec_;
  model.C = C_;
  return model;
}

namespace {

void require_two_classes(const BinaryView& view) {
  if (view.size() == 0) throw ArgumentError("spsvm: empty view");
  const Vector& y = view.y();
  if ((y.array() > 0).all() || (y.array() < 0).all()) throw ArgumentError("spsvm: both classes must be present");
}

}  // namespace

SpSvmResult spsvm_train(const BinaryView& view, const KernelSpec& spec, const SpSvmConfig& cfg) {
  cfg.validate();
  spec.validate();
  require_two_classes(view);
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  SparsePrimalState state(view.features(), view.y(), spec, cfg.C, cfg.threads);
  const Index max_basis = std::min(state.n(), cfg.max_basis);
  const NewtonConfig newton = cfg.newton();
  std::mt19937_64 rng(cfg.seed);
  SolverTrace trace;

  auto record = [&](const NewtonStats& stats) {
    trace.records.push_back({state.basis_size(), state.objective(), state.training_error(),
                             std::chrono::duration<double>(Clock::now() - start).count(), stats.iterations});
  };

  // J empty: only the bias is fitted.
  record(state.newton_reoptimize(newton));
  double previous_error = state.training_error();

  while (true) {
    const GrowResult grow = state.select_and_grow(cfg, max_basis, rng);
    if (grow.added == 0) {
      trace.stop_reason = "exhausted";
      break;
    }
    record(state.newton_reoptimize(newton));
    const double error = state.training_error();
    if (std::abs(error - previous_error) / static_cast<double>(grow.added) < cfg.epsilon) {
      trace.stop_reason = "epsilon";
      break;
    }
    previous_error = error;
    if (state.basis_size() >= max_basis) {
      trace.stop_reason = "max_basis";
      break;
    }
    if (grow.exhausted) {
      trace.stop_reason = "exhausted";
      break;
    }
  }
  trace.peak_kernel_values = state.peak_kernel_values();
  return {state.model(), std::move(trace)};
}

SparsePrimalModel primal_newton_train(const BinaryView& view, const KernelSpec& spec, const NewtonConfig& cfg) {
  cfg.validate();
  spec.validate();
  require_two_classes(view);
  SparsePrimalState state(view.features(), view.y(), spec, cfg.C, cfg.threads);
  for (Index i = 0; i < state.n(); ++i) state.add_basis(i);
  state.newton_reoptimize(cfg);
  return state.model();
}

double sp_predict(const SparsePrimalModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.basis_vectors.cols()) {
    throw ArgumentError("sp_predict: point has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(model.basis_vectors.cols()));
  }
  if (model.basis_vectors.rows() == 0) return model.b;
  Vector k(model.basis_vectors.rows());
  rbf_column(model.basis_vectors, x, model.spec.gamma, k);
  return model.beta.dot(k) + model.b;
}

KernelExpansion to_expansion(const SparsePrimalModel& model) {
  return {model.spec, model.basis_vectors, model.beta, model.b};
}

}  // namespace ksvm
