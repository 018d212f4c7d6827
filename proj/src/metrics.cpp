#include "ksvm/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "ksvm/parallel.hpp"

namespace ksvm {

double error_rate(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw ArgumentError("error_rate: length mismatch");
  if (truth.empty()) throw ArgumentError("error_rate: empty input");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predictions[i] != truth[i];
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double one_minus_auc(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw ArgumentError("one_minus_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks of the positives.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) ++end;
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      const int label = truth[order[k]];
      if (label != 1 && label != -1) throw ArgumentError("one_minus_auc: labels must be +1 or -1");
      if (label == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    start = end;
  }
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) throw ArgumentError("one_minus_auc: both classes must be present");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  const double auc = u / (p * static_cast<double>(negatives));
  return 100.0 * (1.0 - auc);
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::smo:
      return "smo";
    case SolverKind::spsvm:
      return "spsvm";
    case SolverKind::newton:
      return "newton";
  }
  return "unknown";
}

SolverKind solver_from_string(const std::string& name) {
  if (name == "smo") return SolverKind::smo;
  if (name == "spsvm") return SolverKind::spsvm;
  if (name == "newton") return SolverKind::newton;
  throw ArgumentError("unknown solver '" + name + "'");
}

void SolverOptions::set_C(double C) {
  smo.C = C;
  spsvm.C = C;
  newton.C = C;
}

void SolverOptions::set_threads(int threads) {
  smo.threads = threads;
  spsvm.threads = threads;
  newton.threads = threads;
}

BinaryTrainer make_trainer(const SolverOptions& options) {
  return [options](const BinaryView& view) {
    TrainedPair pair;
    switch (options.kind) {
      case SolverKind::smo: {
        const DualModel model = smo_train(view, options.kernel, options.smo);
        pair.count = static_cast<Index>(model.support_indices.size());
        pair.expansion = to_expansion(model, view);
        break;
      }
      case SolverKind::spsvm: {
        const SpSvmResult result = spsvm_train(view, options.kernel, options.spsvm);
        pair.count = static_cast<Index>(result.model.basis.size());
        pair.expansion = to_expansion(result.model);
        break;
      }
      case SolverKind::newton: {
        const SparsePrimalModel model = primal_newton_train(view, options.kernel, options.newton);
        pair.count = static_cast<Index>(model.basis.size());
        pair.expansion = to_expansion(model);
        break;
      }
    }
    return pair;
  };
}

Index OvoModel::dimension() const { return pairs.empty() ? 0 : pairs.front().expansion.dimension(); }

int OvoModel::predict(const Eigen::Ref<const Vector>& x) const {
  if (class_ids.empty()) throw ArgumentError("ovo: empty model");
  std::vector<int> votes(class_ids.size(), 0);
  auto slot = [&](int id) {
    return static_cast<std::size_t>(std::lower_bound(class_ids.begin(), class_ids.end(), id) - class_ids.begin());
  };
  for (const PairModel& pair : pairs) {
    const int winner = pair.expansion.decision(x) >= 0.0 ? pair.positive : pair.negative;
    ++votes[slot(winner)];
  }
  // max_element keeps the first maximum, i.e. the lowest class id.
  return class_ids[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
}

std::vector<int> OvoModel::predict_all(const Matrix& points, int threads) const {
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  parallel_for(points.rows(), threads, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) out[static_cast<std::size_t>(i)] = predict(points.row(i).transpose());
  });
  return out;
}

double OvoModel::train_seconds() const {
  double total = 0.0;
  for (const PairModel& pair : pairs) total += pair.seconds;
  return total;
}

Index OvoModel::total_count() const {
  Index total = 0;
  for (const PairModel& pair : pairs) total += pair.count;
  return total;
}

OvoModel ovo_train(const Dataset& ds, const BinaryTrainer& trainer, bool parallel_pairs) {
  const std::vector<int>& ids = ds.class_ids();
  if (ids.size() < 2) throw ArgumentError("ovo: at least two classes are required");
  OvoModel model;
  model.class_ids = ids;
  for (std::size_t lo = 0; lo < ids.size(); ++lo) {
    for (std::size_t hi = lo + 1; hi < ids.size(); ++hi) {
      model.pairs.push_back({ids[hi], ids[lo], {}, 0, 0.0});
    }
  }
  const Index count = static_cast<Index>(model.pairs.size());
  auto train_one = [&](Index p) {
    PairModel& pair = model.pairs[static_cast<std::size_t>(p)];
    const BinaryView view(ds, pair.positive, pair.negative);
    const auto start = std::chrono::steady_clock::now();
    TrainedPair trained = trainer(view);
    pair.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    pair.expansion = std::move(trained.expansion);
    pair.count = trained.count;
  };
  if (parallel_pairs) {
    parallel_for(count, static_cast<int>(count), [&](Index begin, Index end) {
      for (Index p = begin; p < end; ++p) train_one(p);
    });
  } else {
    for (Index p = 0; p < count; ++p) train_one(p);
  }
  return model;
}

OvoModel ovo_train(const Dataset& ds, const SolverOptions& options, bool parallel_pairs) {
  return ovo_train(ds, make_trainer(options), parallel_pairs);
}

int ovo_predict(const OvoModel& model, const Eigen::Ref<const Vector>& x) { return model.predict(x); }

}  // namespace ksvm
