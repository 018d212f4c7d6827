#include <doctest.h>

#include <cmath>
#include <random>

#include "ksvm/smo.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ksvm;

namespace {

Dataset two_points() {
  Matrix x(2, 2);
  x << 0.5, -0.25, -0.5, 0.25;
  return {x, {1, -1}};
}

}  // namespace

TEST_CASE("dual objective: closed forms") {
  const Dataset ds = two_points();
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 0.1};
  CHECK(dual_objective(view, spec, Vector::Zero(2)) == 0.0);

  Vector single(2);
  single << 0.7, 0.0;
  CHECK(dual_objective(view, spec, single) == doctest::Approx(-0.5 * 0.49 + 0.7));

  Vector bad(2);
  bad << -0.1, 0.0;
  CHECK_THROWS_AS(dual_objective(view, spec, bad), ArgumentError);
  bad << 2.0, 0.0;
  CHECK_THROWS_AS(dual_objective(view, spec, bad, 1.0), ArgumentError);
  CHECK_THROWS_AS(dual_objective(view, spec, Vector::Zero(3)), ArgumentError);
}

TEST_CASE("dual objective: one point maximized over the box") {
  // The single-variable problem -a^2/2 + a on [0, 1] peaks at the clipped
  // optimum a = 1.
  Matrix x(2, 1);
  x << 0.0, 50.0;
  const Dataset ds(x, {1, -1});
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 1.0};
  double best_a = -1.0;
  double best = -1e300;
  for (int s = 0; s <= 1000; ++s) {
    Vector alpha = Vector::Zero(2);
    alpha(0) = s / 1000.0;
    const double v = dual_objective(view, spec, alpha, 1.0);
    if (v > best) {
      best = v;
      best_a = alpha(0);
    }
  }
  CHECK(best_a == 1.0);
  CHECK(best == doctest::Approx(0.5));
}

TEST_CASE("dual objective matches a double loop") {
  std::mt19937_64 rng(2);
  const Dataset ds = testing::random_binary(20, 3, rng);
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 1.3};
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector alpha(20);
    for (Index i = 0; i < 20; ++i) alpha(i) = u(rng);
    double quadratic = 0.0;
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        quadratic += alpha(i) * alpha(j) * view.y()(i) * view.y()(j) * rbf(ds.row(i), ds.row(j), 1.3);
      }
    }
    CHECK(dual_objective(view, spec, alpha, 2.0) == doctest::Approx(alpha.sum() - 0.5 * quadratic).epsilon(1e-12));
  }
}

TEST_CASE("smo: two mirrored points match a fine grid") {
  const Dataset ds = two_points();
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 0.1};
  SmoConfig cfg;
  cfg.C = 10.0;
  cfg.tol = 1e-9;
  const DualModel model = smo_train(view, spec, cfg);

  // Feasibility forces a_1 = a_2 = a; scan a over [0, C].
  double best_a = 0.0;
  double best = -1e300;
  for (int s = 0; s <= 1'000'000; ++s) {
    const double a = cfg.C * s / 1'000'000.0;
    Vector alpha = Vector::Constant(2, a);
    const double k = rbf(ds.row(0), ds.row(1), 0.1);
    const double v = 2.0 * a - a * a * (1.0 - k);
    if (v > best) {
      best = v;
      best_a = a;
    }
  }
  CHECK(model.alpha(0) == doctest::Approx(best_a).epsilon(1e-3));
  CHECK(model.alpha(1) == doctest::Approx(best_a).epsilon(1e-3));
  const double k = rbf(ds.row(0), ds.row(1), 0.1);
  CHECK(model.alpha(0) == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-6));
  CHECK(model.converged);
  // Symmetric data puts the boundary through the origin.
  CHECK(model.b == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("smo: agrees with an independent QP solver") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<Index> size(4, 40);
  std::uniform_real_distribution<double> log_c(-1.0, 1.0);
  std::uniform_real_distribution<double> gamma(0.2, 5.0);
  for (int trial = 0; trial < 15; ++trial) {
    const Dataset ds = testing::random_binary(size(rng), 2, rng);
    const BinaryView view(ds, 1, -1);
    const KernelSpec spec{KernelFamily::rbf, gamma(rng)};
    SmoConfig cfg;
    cfg.C = std::pow(10.0, log_c(rng));
    const DualModel model = smo_train(view, spec, cfg);
    const double reference = oracle::dual_optimum(view.features(), view.y(), spec.gamma, cfg.C);
    CHECK(dual_objective(view, spec, model.alpha, cfg.C) == doctest::Approx(reference).epsilon(1e-3));
    CHECK(kkt_violation(view, spec, model.alpha, cfg.C) <= cfg.tol);
  }
}

TEST_CASE("smo: invariants hold after every update") {
  std::mt19937_64 rng(43);
  const Dataset ds = testing::random_binary(60, 3, rng);
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 4.0};
  SmoConfig cfg;
  cfg.C = 2.5;
  cfg.tol = 1e-6;
  double previous = 0.0;
  std::int64_t calls = 0;
  bool box_ok = true;
  bool monotone = true;
  bool balanced = true;
  const DualModel model = smo_train(view, spec, cfg, [&](std::int64_t, const Vector& alpha) {
    ++calls;
    box_ok = box_ok && (alpha.array() >= 0.0).all() && (alpha.array() <= cfg.C).all();
    balanced = balanced && std::abs(alpha.dot(view.y())) <= 1e-12 * cfg.C * 60;
    const double v = dual_objective(view, spec, alpha, cfg.C);
    monotone = monotone && v >= previous - 1e-12 * std::max(1.0, std::abs(v));
    previous = v;
  });
  CHECK(calls == model.iterations);
  CHECK(box_ok);
  CHECK(monotone);
  CHECK(balanced);
  CHECK(model.converged);
  CHECK(kkt_violation(view, spec, model.alpha, cfg.C) <= cfg.tol);
  CHECK(model.max_violation <= cfg.tol);
  for (Index s : model.support_indices) CHECK(model.alpha(s) > 0.0);
  CHECK(static_cast<Index>(model.support_indices.size()) == (model.alpha.array() > 0.0).count());
}

TEST_CASE("smo: cache size does not change the result") {
  std::mt19937_64 rng(47);
  const Dataset ds = testing::random_binary(200, 4, rng);
  const BinaryView view(ds, 1, -1);
  const KernelSpec spec{KernelFamily::rbf, 3.0};
  SmoConfig large;
  large.C = 5.0;
  SmoConfig tiny = large;
  // Room for only the two rows of the current pair.
  tiny.cache_mb = 0.0;
  SmoConfig refreshing = large;
  refreshing.gradient_refresh = 1;
  const DualModel a = smo_train(view, spec, large);
  const DualModel b = smo_train(view, spec, tiny);
  const DualModel c = smo_train(view, spec, refreshing);
  CHECK(a.alpha == b.alpha);
  CHECK(a.b == b.b);
  CHECK(a.iterations == b.iterations);
  CHECK((a.alpha - c.alpha).lpNorm<Eigen::Infinity>() <= 1e-8);
  SmoConfig threaded = large;
  threaded.threads = 4;
  CHECK(smo_train(view, spec, threaded).alpha == a.alpha);
}

TEST_CASE("smo: iteration cap flags an unconverged model") {
  std::mt19937_64 rng(53);
  const Dataset ds = testing::random_binary(50, 2, rng);
  const BinaryView view(ds, 1, -1);
  SmoConfig cfg;
  cfg.max_iter = 1;
  const DualModel model = smo_train(view, {KernelFamily::rbf, 1.0}, cfg);
  CHECK_FALSE(model.converged);
  CHECK(model.iterations == 1);
  CHECK(model.max_violation > cfg.tol);
}

TEST_CASE("smo: argument errors") {
  Matrix x(2, 1);
  x << 0, 1;
  const Dataset one_class(x, {1, 1});
  const Dataset with_other(x, {1, 2});
  const BinaryView view(with_other, 2, 1);
  CHECK_THROWS_AS(smo_train(BinaryView(one_class, 1, 1), {}, {}), ArgumentError);
  SmoConfig bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(smo_train(view, {}, bad), ArgumentError);
  bad = {};
  bad.tol = 0.0;
  CHECK_THROWS_AS(smo_train(view, {}, bad), ArgumentError);
}

TEST_CASE("dual predict") {
  std::mt19937_64 rng(59);
  const Dataset ds = testing::two_blobs(40, 2, 1.0, rng);
  const BinaryView view(ds, 2, 1);
  const KernelSpec spec{KernelFamily::rbf, 0.5};
  const DualModel model = smo_train(view, spec, {});

  DualModel empty = model;
  empty.support_indices.clear();
  CHECK(dual_predict(empty, view, ds.row(0).transpose()) == empty.b);

  DualModel lone = model;
  lone.support_indices = {model.support_indices.front()};
  const Index s = lone.support_indices.front();
  const Vector xs = ds.row(view.rows()[static_cast<std::size_t>(s)]).transpose();
  CHECK(dual_predict(lone, view, xs) == doctest::Approx(model.alpha(s) * view.y()(s) + model.b));

  const KernelExpansion f = to_expansion(model, view);
  const Vector batch = f.decisions(ds.features(), 3);
  for (Index i = 0; i < ds.n(); ++i) {
    CHECK(batch(i) == doctest::Approx(dual_predict(model, view, ds.row(i).transpose())).epsilon(1e-12));
  }
  CHECK_THROWS_AS(dual_predict(model, view, Vector::Zero(3)), ArgumentError);
}
