#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ksvm/dataset.hpp"
#include "support/fixtures.hpp"

using namespace ksvm;

namespace {

Dataset parse(const std::string& text, ParseOptions options = {}) {
  std::istringstream in(text);
  return parse_libsvm(in, options);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("parse: single line with gaps") {
  const Dataset ds = parse("+1 1:0.5 3:1.0\n");
  CHECK(ds.n() == 1);
  CHECK(ds.d() == 3);
  const Sample s = ds.sample(0);
  CHECK(s.label == 1);
  CHECK(s.features(0) == 0.5);
  CHECK(s.features(1) == 0.0);
  CHECK(s.features(2) == 1.0);
}

TEST_CASE("parse: row without features takes d from other lines") {
  const Dataset ds = parse("-1\n1 3:2\n");
  CHECK(ds.d() == 3);
  CHECK(ds.sample(0).label == -1);
  CHECK(ds.sample(0).features.isZero());
}

TEST_CASE("parse: two-line file") {
  const Dataset ds = parse("1 2:2\n0 1:1");
  CHECK(ds.n() == 2);
  CHECK(ds.d() == 2);
  CHECK(ds.class_ids() == std::vector<int>{0, 1});
  CHECK(ds.labels() == std::vector<int>{1, 0});
}

TEST_CASE("parse: comments and blank lines are skipped, line numbers still count") {
  const Dataset ds = parse("# header\n\n2 1:1\n# more\n3 2:1\n");
  CHECK(ds.n() == 2);
  CHECK(error_line("# c\n\n1 1:1\n1 2:x\n") == 4);
}

TEST_CASE("parse: errors name the line") {
  CHECK(error_line("1 1:1\n1 1:2 junk\n") == 2);
  CHECK(error_line("1 2:1 1:1\n") == 1);
  CHECK(error_line("1 1:1 1:2\n") == 1);
  CHECK(error_line("1 0:1\n") == 1);
  CHECK(error_line("1 -3:1\n") == 1);
  CHECK(error_line("1.5 1:1\n") == 1);
  CHECK(error_line("abc 1:1\n") == 1);
  CHECK(error_line("1 1:nan\n") == 1);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("# only a comment\n\n"), ParseError);
}

TEST_CASE("parse: forced dimension") {
  const Dataset ds = parse("1 2:1\n", ParseOptions{5});
  CHECK(ds.d() == 5);
  CHECK_THROWS_AS(parse("1 6:1\n", ParseOptions{5}), ParseError);
}

TEST_CASE("load: missing file is a parse error") {
  CHECK_THROWS_AS(load_libsvm("/nonexistent/file.libsvm"), ParseError);
}

TEST_CASE("round trip: write then parse is feature-exact") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<Index> size(1, 40);
    const Index n = size(rng);
    const Index d = size(rng);
    Matrix x = testing::uniform_points(n, d, rng, -1e3, 1e3);
    std::bernoulli_distribution sparse(0.6);
    for (Index i = 0; i < x.size(); ++i) {
      if (sparse(rng)) x.data()[i] = 0.0;
    }
    // Pin the last column so the inferred dimension is d.
    x(0, d - 1) = 1.0 / 3.0;
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> label(-3, 3);
    for (auto& l : labels) l = label(rng);
    const Dataset original(x, labels);

    std::ostringstream out;
    write_libsvm(out, original);
    const Dataset back = parse(out.str());
    CHECK(back == original);
  }
}

TEST_CASE("scale: endpoints, constant column, unclamped test data") {
  Matrix x(3, 2);
  x << 2, 3, 4, 3, 6, 3;
  const Dataset scaled = fit_scale(Dataset(x, {0, 1, 0}));
  REQUIRE(scaled.scaling().has_value());
  CHECK(scaled.features()(0, 0) == 0.0);
  CHECK(scaled.features()(1, 0) == 0.5);
  CHECK(scaled.features()(2, 0) == 1.0);
  CHECK(scaled.features().col(1).isZero());

  Matrix t(1, 2);
  t << 8, 5;
  const Dataset test = apply_scale(Dataset(t, {0}), *scaled.scaling());
  CHECK(test.features()(0, 0) == 1.5);
  CHECK(test.features()(0, 1) == 0.0);
  CHECK_THROWS_AS(fit_scale(Dataset()), ArgumentError);
}

TEST_CASE("scale: training data always lands in [0, 1]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset ds(testing::uniform_points(30, 6, rng, -50, 50), std::vector<int>(30, 1));
    const Dataset scaled = fit_scale(ds);
    CHECK(scaled.features().minCoeff() >= 0.0);
    CHECK(scaled.features().maxCoeff() <= 1.0);
  }
}

TEST_CASE("subsample: identity, determinism, bounds") {
  std::mt19937_64 rng(3);
  const Dataset ds = testing::random_binary(50, 3, rng);
  CHECK(subsample(ds, ds.n(), 9) == ds);
  CHECK(subsample(ds, 1, 42) == subsample(ds, 1, 42));
  CHECK(subsample(ds, 20, 5) == subsample(ds, 20, 5));
  CHECK_THROWS_AS(subsample(ds, ds.n() + 1, 1), ArgumentError);
  CHECK_THROWS_AS(subsample(ds, 0, 1), ArgumentError);

  // Relative order is kept: the first feature tags the original row.
  Matrix tagged(50, 1);
  for (Index i = 0; i < 50; ++i) tagged(i, 0) = static_cast<double>(i);
  const Dataset picked = subsample(Dataset(tagged, std::vector<int>(50, 0)), 17, 8);
  CHECK(std::is_sorted(picked.features().data(), picked.features().data() + picked.n()));
  std::set<double> distinct(picked.features().data(), picked.features().data() + picked.n());
  CHECK(distinct.size() == 17u);
}

TEST_CASE("subsample: class ratio matches a direct simulation") {
  const Index n = 10000;
  Matrix x = Matrix::Zero(n, 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < n / 2 ? 0 : 1;
  const Dataset ds(x, labels);

  auto fraction = [](const std::vector<int>& picked) {
    return static_cast<double>(std::count(picked.begin(), picked.end(), 1)) / static_cast<double>(picked.size());
  };
  std::vector<double> ours;
  std::vector<double> direct;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ours.push_back(fraction(subsample(ds, n / 2, seed).labels()));
    // Independent draw: shuffle everything and keep the first half.
    std::vector<int> shuffled = labels;
    std::mt19937 other(static_cast<unsigned>(seed) + 1000u);
    std::shuffle(shuffled.begin(), shuffled.end(), other);
    shuffled.resize(static_cast<std::size_t>(n / 2));
    direct.push_back(fraction(shuffled));
  }
  auto spread = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size() - 1);
    return std::pair{mean, std::sqrt(var)};
  };
  for (double f : ours) CHECK(std::abs(f - 0.5) < 0.05);
  const auto [mean_ours, sd_ours] = spread(ours);
  const auto [mean_direct, sd_direct] = spread(direct);
  CHECK(std::abs(mean_ours - mean_direct) < 0.005);
  CHECK(sd_ours < 2.0 * sd_direct);
  CHECK(sd_ours > 0.5 * sd_direct);
}

TEST_CASE("binary view") {
  SUBCASE("two classes cover every row") {
    const Dataset ds = parse("1 1:1\n-1 1:2\n1 1:3\n");
    const BinaryView view(ds, 1, -1);
    CHECK(view.size() == 3);
    CHECK(view.y()(0) == 1.0);
    CHECK(view.y()(1) == -1.0);
  }
  SUBCASE("three classes, one excluded") {
    const Dataset ds = parse("0 1:1\n1 1:2\n2 1:3\n1 1:4\n");
    const BinaryView view(ds, 1, 2);
    CHECK(view.rows() == std::vector<Index>{1, 2, 3});
    CHECK(view.y()(0) == 1.0);
    CHECK(view.y()(1) == -1.0);
    CHECK(view.features()(2, 0) == 4.0);
  }
  SUBCASE("ten classes give 45 distinct pairs") {
    std::mt19937_64 rng(1);
    const Dataset ds = testing::gaussian_classes(10, 3, 2, rng);
    std::set<std::vector<Index>> seen;
    int pairs = 0;
    for (std::size_t a = 0; a < ds.class_ids().size(); ++a) {
      for (std::size_t b = a + 1; b < ds.class_ids().size(); ++b) {
        const BinaryView view(ds, ds.class_ids()[b], ds.class_ids()[a]);
        CHECK(view.size() == 6);
        seen.insert(view.rows());
        ++pairs;
      }
    }
    CHECK(pairs == 45);
    CHECK(seen.size() == 45u);
  }
  SUBCASE("unknown or repeated class") {
    const Dataset ds = parse("0 1:1\n1 1:2\n");
    CHECK_THROWS_AS(BinaryView(ds, 0, 7), ArgumentError);
    CHECK_THROWS_AS(BinaryView(ds, 1, 1), ArgumentError);
  }
}
