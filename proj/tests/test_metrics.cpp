#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "ksvm/metrics.hpp"
#include "support/fixtures.hpp"

using namespace ksvm;

namespace {

/// A pair model whose decision is the constant `value`.
PairModel constant_pair(int positive, int negative, double value) {
  PairModel pair;
  pair.positive = positive;
  pair.negative = negative;
  pair.expansion.vectors.resize(0, 1);
  pair.expansion.coef.resize(0);
  pair.expansion.b = value;
  return pair;
}

/// Brute-force 100 (1 - AUC) over all positive/negative pairs.
double auc_by_pairs(const std::vector<double>& scores, const std::vector<int>& truth) {
  double credit = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[i] != 1 || truth[j] != -1) continue;
      pairs += 1.0;
      credit += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return 100.0 * (1.0 - credit / pairs);
}

}  // namespace

TEST_CASE("error rate") {
  const std::vector<int> truth{1, -1, 1, 1};
  CHECK(error_rate(truth, truth) == 0.0);
  const std::vector<int> flipped{-1, 1, -1, -1};
  CHECK(error_rate(flipped, truth) == 100.0);

  std::vector<int> t20(20, 1), p20(20, 1);
  p20[2] = p20[7] = p20[19] = -1;
  CHECK(error_rate(p20, t20) == 15.0);

  CHECK_THROWS_AS(error_rate(std::vector<int>{1}, truth), ArgumentError);
  CHECK_THROWS_AS(error_rate(std::vector<int>{}, std::vector<int>{}), ArgumentError);
}

TEST_CASE("error rate of signs equals 100 minus accuracy") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> predicted, truth;
    int correct = 0;
    for (int i = 0; i < 37; ++i) {
      predicted.push_back(g(rng) >= 0.0 ? 1 : -1);
      truth.push_back(g(rng) >= 0.0 ? 1 : -1);
      correct += predicted.back() == truth.back();
    }
    const double e = error_rate(predicted, truth);
    CHECK(e >= 0.0);
    CHECK(e == doctest::Approx(100.0 - 100.0 * correct / 37.0));
  }
}

TEST_CASE("one minus auc") {
  const std::vector<int> truth{1, -1, 1, -1};
  CHECK(one_minus_auc(std::vector<double>{0.9, 0.4, 0.35, 0.1}, truth) == doctest::Approx(25.0));
  CHECK(one_minus_auc(std::vector<double>{4, 1, 3, 2}, truth) == 0.0);
  CHECK(one_minus_auc(std::vector<double>{1, 4, 2, 3}, truth) == 100.0);
  CHECK(one_minus_auc(std::vector<double>{1, 1, 1, 1}, truth) == 50.0);
  CHECK_THROWS_AS(one_minus_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), ArgumentError);
  CHECK_THROWS_AS(one_minus_auc(std::vector<double>{1, 2}, std::vector<int>{1, 0}), ArgumentError);
  CHECK_THROWS_AS(one_minus_auc(std::vector<double>{1}, truth), ArgumentError);
}

TEST_CASE("one minus auc: rank form equals pair enumeration and ignores monotone maps") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> scores;
    std::vector<int> truth;
    for (int i = 0; i < 25; ++i) {
      truth.push_back(i % 3 == 0 ? 1 : -1);
      // Coarse values force many ties.
      scores.push_back(0.5 * coarse(rng) + (truth.back() > 0 ? 0.3 : 0.0));
    }
    const double reference = auc_by_pairs(scores, truth);
    CHECK(one_minus_auc(scores, truth) == doctest::Approx(reference).epsilon(1e-12));
    std::vector<double> mapped;
    for (double s : scores) mapped.push_back(std::exp(3.0 * s) - 7.0);
    CHECK(one_minus_auc(mapped, truth) == doctest::Approx(reference).epsilon(1e-12));
  }
}

TEST_CASE("solver names") {
  for (SolverKind k : {SolverKind::smo, SolverKind::spsvm, SolverKind::newton}) {
    CHECK(solver_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(solver_from_string("liblinear"), ArgumentError);
}

TEST_CASE("ovo voting") {
  OvoModel model;
  model.class_ids = {5, 7, 9};
  SUBCASE("unanimous tournament") {
    // 5 beats 7, 5 beats 9, 7 beats 9; the higher id is the positive class.
    model.pairs = {constant_pair(7, 5, -1.0), constant_pair(9, 5, -1.0), constant_pair(9, 7, -1.0)};
    CHECK(ovo_predict(model, Vector::Zero(1)) == 5);
  }
  SUBCASE("cyclic tie goes to the lowest id") {
    model.pairs = {constant_pair(7, 5, -1.0), constant_pair(9, 5, 1.0), constant_pair(9, 7, -1.0)};
    CHECK(ovo_predict(model, Vector::Zero(1)) == 5);
  }
  SUBCASE("pair order does not matter") {
    model.pairs = {constant_pair(7, 5, 1.0), constant_pair(9, 5, -1.0), constant_pair(9, 7, -1.0)};
    const int first = ovo_predict(model, Vector::Zero(1));
    std::reverse(model.pairs.begin(), model.pairs.end());
    CHECK(ovo_predict(model, Vector::Zero(1)) == first);
    CHECK(first == 7);
  }
}

TEST_CASE("ovo training: pair structure") {
  std::mt19937_64 rng(5);
  SUBCASE("two classes give one binary model") {
    const Dataset ds = testing::two_blobs(40, 2, 1.5, rng);
    SolverOptions options;
    options.kind = SolverKind::smo;
    options.kernel.gamma = 0.5;
    const OvoModel model = ovo_train(ds, options);
    REQUIRE(model.pairs.size() == 1u);
    CHECK(model.pairs[0].positive == 2);
    CHECK(model.pairs[0].negative == 1);
    const KernelExpansion& f = model.pairs[0].expansion;
    for (Index i = 0; i < ds.n(); ++i) {
      const int expected = f.decision(ds.row(i).transpose()) >= 0.0 ? 2 : 1;
      CHECK(model.predict(ds.row(i).transpose()) == expected);
    }
  }
  SUBCASE("ten classes give 45 distinct pairs and deterministic votes") {
    const Dataset ds = testing::gaussian_classes(10, 12, 3, rng);
    SolverOptions options;
    options.kind = SolverKind::spsvm;
    options.kernel.gamma = 0.5;
    options.spsvm.batch_size = 5;
    options.spsvm.max_basis = 10;
    const OvoModel serial = ovo_train(ds, options, false);
    const OvoModel parallel = ovo_train(ds, options, true);
    CHECK(serial.pairs.size() == 45u);
    std::set<std::pair<int, int>> distinct;
    for (const auto& p : serial.pairs) {
      CHECK(p.positive > p.negative);
      distinct.insert({p.positive, p.negative});
    }
    CHECK(distinct.size() == 45u);
    for (std::size_t k = 0; k < serial.pairs.size(); ++k) {
      CHECK(serial.pairs[k].expansion.coef == parallel.pairs[k].expansion.coef);
      CHECK(serial.pairs[k].expansion.b == parallel.pairs[k].expansion.b);
    }
    const std::vector<int> a = serial.predict_all(ds.features(), 1);
    CHECK(a == parallel.predict_all(ds.features(), 4));
    CHECK(error_rate(a, ds.labels()) < 5.0);
  }
  SUBCASE("one class is rejected") {
    const Dataset ds(Matrix::Zero(3, 1), {4, 4, 4});
    CHECK_THROWS_AS(ovo_train(ds, SolverOptions{}), ArgumentError);
  }
}

TEST_CASE("ovo training: per-pair times are summed") {
  std::mt19937_64 rng(6);
  const Dataset ds = testing::gaussian_classes(4, 5, 2, rng);
  int calls = 0;
  const BinaryTrainer fake = [&](const BinaryView& view) {
    ++calls;
    TrainedPair pair;
    pair.expansion.vectors = Matrix::Zero(0, view.dataset().d());
    pair.expansion.coef.resize(0);
    pair.count = 2;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return pair;
  };
  const OvoModel model = ovo_train(ds, fake);
  CHECK(calls == 6);
  double sum = 0.0;
  for (const auto& p : model.pairs) {
    CHECK(p.seconds >= 0.02);
    sum += p.seconds;
  }
  CHECK(model.train_seconds() == sum);
  CHECK(model.train_seconds() < 1.0);
  CHECK(model.total_count() == 12);
  CHECK(model.dimension() == 2);
}
