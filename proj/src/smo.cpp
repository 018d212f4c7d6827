#include "ksvm/smo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <memory>
#include <unordered_map>

namespace ksvm {

void SmoConfig::validate() const {
  if (!(C > 0.0)) throw ArgumentError("smo: C must be positive");
  if (!(tol > 0.0)) throw ArgumentError("smo: tol must be positive");
  if (max_iter < 1) throw ArgumentError("smo: max_iter must be >= 1");
  if (!(cache_mb >= 0.0)) throw ArgumentError("smo: cache_mb must be non-negative");
  if (gradient_refresh < 1) throw ArgumentError("smo: gradient_refresh must be >= 1");
}

namespace {

constexpr double kTau = 1e-12;

/// Least-recently-used cache of full kernel rows.
class RowCache {
 public:
  RowCache(const Matrix& points, const KernelSpec& spec, double budget_mb, int threads)
      : points_(points),
        spec_(spec),
        threads_(threads),
        capacity_(std::max<std::size_t>(
            2, static_cast<std::size_t>(budget_mb * 1024.0 * 1024.0 /
                                        (static_cast<double>(std::max<Index>(points.rows(), 1)) * sizeof(double))))) {}

  std::shared_ptr<const Vector> row(Index i) {
    if (auto hit = index_.find(i); hit != index_.end()) {
      lru_.splice(lru_.begin(), lru_, hit->second);
      return hit->second->second;
    }
    auto values = std::make_shared<const Vector>(kernel_against_all(points_, points_.row(i).transpose(), spec_, threads_));
    lru_.emplace_front(i, values);
    index_[i] = lru_.begin();
    if (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    return values;
  }

 private:
  using Node = std::pair<Index, std::shared_ptr<const Vector>>;
  const Matrix& points_;
  KernelSpec spec_;
  int threads_;
  std::size_t capacity_;
  std::list<Node> lru_;
  std::unordered_map<Index, std::list<Node>::iterator> index_;
};

bool in_up(double y, double a, double C) { return y > 0 ? a < C : a > 0; }
bool in_low(double y, double a, double C) { return y > 0 ? a > 0 : a < C; }

/// Gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij, from scratch.
Vector full_gradient(const Matrix& points, const Vector& y, const Vector& alpha, const KernelSpec& spec, int threads) {
  Vector grad = Vector::Constant(y.size(), -1.0);
  for (Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) == 0.0) continue;
    const Vector k = kernel_against_all(points, points.row(j).transpose(), spec, threads);
    grad.array() += alpha(j) * y(j) * y.array() * k.array();
  }
  return grad;
}

struct Pair {
  Index i = -1;
  Index j = -1;
  double gap = 0.0;
};

Pair select_pair(const Vector& y, const Vector& alpha, const Vector& grad, double C) {
  double g_max = -std::numeric_limits<double>::infinity();
  double g_min = std::numeric_limits<double>::infinity();
  Pair pair;
  for (Index t = 0; t < y.size(); ++t) {
    const double v = -y(t) * grad(t);
    if (in_up(y(t), alpha(t), C) && v > g_max) {
      g_max = v;
      pair.i = t;
    }
    if (in_low(y(t), alpha(t), C) && v < g_min) {
      g_min = v;
      pair.j = t;
    }
  }
  pair.gap = (pair.i < 0 || pair.j < 0) ? 0.0 : g_max - g_min;
  return pair;
}

double compute_bias(const Vector& y, const Vector& alpha, const Vector& grad, double C) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  Index free = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double yg = y(i) * grad(i);
    if (alpha(i) >= C) {
      if (y(i) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha(i) <= 0.0) {
      if (y(i) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  const double r = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  return -r;
}

}  // namespace

DualModel smo_train(const BinaryView& view, const KernelSpec& spec, const SmoConfig& cfg,
                    const SmoObserver& observer) {
  spec.validate();
  cfg.validate();
  const Vector& y = view.y();
  const Index n = view.size();
  if (n == 0) throw ArgumentError("smo: empty view");
  if ((y.array() > 0).all() || (y.array() < 0).all()) throw ArgumentError("smo: both classes must be present");

  const Matrix points = view.features();
  const double C = cfg.C;
  RowCache cache(points, spec, cfg.cache_mb, cfg.threads);

  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);
  DualModel model;
  model.spec = spec;
  model.C = C;

  std::int64_t iter = 0;
  Pair pair = select_pair(y, alpha, grad, C);
  while (pair.gap > cfg.tol && iter < cfg.max_iter) {
    const Index i = pair.i;
    const Index j = pair.j;
    const auto row_i = cache.row(i);
    const auto row_j = cache.row(j);
    const double k_ii = (*row_i)(i);
    const double k_jj = (*row_j)(j);
    const double k_ij = (*row_i)(j);
    const double old_ai = alpha(i);
    const double old_aj = alpha(j);
    double quad = k_ii + k_jj - 2.0 * k_ij;
    if (quad <= 0.0) quad = kTau;

    double& ai = alpha(i);
    double& aj = alpha(j);
    if (y(i) != y(j)) {
      // a_i - a_j is invariant.
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      // a_i + a_j is invariant.
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }

    const double d_ai = ai - old_ai;
    const double d_aj = aj - old_aj;
    grad.array() += y.array() * (y(i) * d_ai * row_i->array() + y(j) * d_aj * row_j->array());

    ++iter;
    if (iter % cfg.gradient_refresh == 0) grad = full_gradient(points, y, alpha, spec, cfg.threads);
    if (observer) observer(iter, alpha);
    pair = select_pair(y, alpha, grad, C);
  }

  model.converged = pair.gap <= cfg.tol;
  model.iterations = iter;
  model.max_violation = pair.gap;
  model.b = compute_bias(y, alpha, grad, C);
  for (Index i = 0; i < n; ++i) {
    if (alpha(i) > 0.0) model.support_indices.push_back(i);
  }
  model.alpha = std::move(alpha);
  return model;
}

double dual_objective(const BinaryView& view, const KernelSpec& spec, const Vector& alpha, double C) {
  spec.validate();
  const Index n = view.size();
  if (alpha.size() != n) throw ArgumentError("dual_objective: alpha has wrong length");
  if ((alpha.array() < 0.0).any() || (alpha.array() > C).any()) {
    throw ArgumentError("dual_objective: alpha outside the feasible box");
  }
  const Matrix points = view.features();
  const Vector& y = view.y();
  double quadratic = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (alpha(i) == 0.0) continue;
    const Vector k = kernel_against_all(points, points.row(i).transpose(), spec);
    quadratic += alpha(i) * y(i) * (alpha.array() * y.array() * k.array()).sum();
  }
  return -0.5 * quadratic + alpha.sum();
}

double kkt_violation(const BinaryView& view, const KernelSpec& spec, const Vector& alpha, double C) {
  const Vector grad = full_gradient(view.features(), view.y(), alpha, spec, 1);
  return select_pair(view.y(), alpha, grad, C).gap;
}

double dual_predict(const DualModel& model, const BinaryView& train_view, const Eigen::Ref<const Vector>& x) {
  const Dataset& ds = train_view.dataset();
  if (x.size() != ds.d()) {
    throw ArgumentError("dual_predict: point has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(ds.d()));
  }
  double value = model.b;
  for (Index s : model.support_indices) {
    const Index row = train_view.rows()[static_cast<std::size_t>(s)];
    value += model.alpha(s) * train_view.y()(s) * rbf(ds.row(row).transpose(), x, model.spec.gamma);
  }
  return value;
}

KernelExpansion to_expansion(const DualModel& model, const BinaryView& train_view) {
  const Dataset& ds = train_view.dataset();
  KernelExpansion expansion;
  expansion.spec = model.spec;
  expansion.b = model.b;
  expansion.vectors.resize(static_cast<Index>(model.support_indices.size()), ds.d());
  expansion.coef.resize(static_cast<Index>(model.support_indices.size()));
  for (std::size_t k = 0; k < model.support_indices.size(); ++k) {
    const Index s = model.support_indices[k];
    expansion.vectors.row(static_cast<Index>(k)) = ds.row(train_view.rows()[static_cast<std::size_t>(s)]);
    expansion.coef(static_cast<Index>(k)) = model.alpha(s) * train_view.y()(s);
  }
  return expansion;
}

}  // namespace ksvm
