#include "ksvm/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string_view>

namespace ksvm {

Dataset::Dataset(Matrix features, std::vector<int> labels, std::optional<Scaling> scaling)
    : features_(std::move(features)), labels_(std::move(labels)), scaling_(std::move(scaling)) {
  if (static_cast<Index>(labels_.size()) != features_.rows()) {
    throw ArgumentError("dataset: " + std::to_string(labels_.size()) + " labels for " +
                        std::to_string(features_.rows()) + " rows");
  }
  if (scaling_ && (scaling_->min.size() != d() || scaling_->max.size() != d())) {
    throw ArgumentError("dataset: scaling dimensionality mismatch");
  }
  std::set<int> ids(labels_.begin(), labels_.end());
  class_ids_.assign(ids.begin(), ids.end());
}

Sample Dataset::sample(Index i) const {
  if (i < 0 || i >= n()) throw ArgumentError("dataset: row index out of range");
  return {features_.row(i).transpose(), labels_[static_cast<std::size_t>(i)]};
}

Dataset Dataset::select(std::span<const Index> rows) const {
  Matrix features(static_cast<Index>(rows.size()), d());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    if (i < 0 || i >= n()) throw ArgumentError("dataset: row index out of range");
    features.row(static_cast<Index>(r)) = features_.row(i);
    labels.push_back(labels_[static_cast<std::size_t>(i)]);
  }
  return Dataset(std::move(features), std::move(labels), scaling_);
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.features_.rows() == b.features_.rows() && a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_ && a.labels_ == b.labels_;
}

namespace {

struct Entry {
  Index index;
  double value;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t start = 0;
  while (start < rest.size() && is_space(rest[start])) ++start;
  std::size_t end = start;
  while (end < rest.size() && !is_space(rest[end])) ++end;
  std::string_view token = rest.substr(start, end - start);
  rest.remove_prefix(end);
  return token;
}

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_index(std::string_view text, long long& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& options) {
  std::vector<std::vector<Entry>> rows;
  std::vector<int> labels;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.front() == '#') continue;
    std::string_view rest(line);
    const std::string_view label_token = next_token(rest);
    if (label_token.empty()) continue;

    double label_value = 0.0;
    if (!parse_double(label_token, label_value) || label_value != std::trunc(label_value) ||
        std::abs(label_value) > 1e9) {
      throw ParseError("malformed label '" + std::string(label_token) + "'", line_no);
    }
    std::vector<Entry> entries;
    long long previous = 0;
    for (std::string_view token = next_token(rest); !token.empty(); token = next_token(rest)) {
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("malformed token '" + std::string(token) + "'", line_no);
      }
      long long index = 0;
      double value = 0.0;
      if (!parse_index(token.substr(0, colon), index) || !parse_double(token.substr(colon + 1), value)) {
        throw ParseError("malformed token '" + std::string(token) + "'", line_no);
      }
      if (index < 1) throw ParseError("feature index must be >= 1", line_no);
      if (index <= previous) throw ParseError("feature indices must be strictly increasing", line_no);
      if (options.dimension && index > *options.dimension) {
        throw ParseError("feature index " + std::to_string(index) + " exceeds dimension " +
                             std::to_string(*options.dimension),
                         line_no);
      }
      previous = index;
      entries.push_back({static_cast<Index>(index - 1), value});
    }
    max_index = std::max<Index>(max_index, static_cast<Index>(previous));
    rows.push_back(std::move(entries));
    labels.push_back(static_cast<int>(label_value));
  }
  if (in.bad()) throw ParseError("read failure", line_no);
  if (rows.empty()) throw ParseError("no samples", line_no);

  const Index d = options.dimension.value_or(max_index);
  Matrix features = Matrix::Zero(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const Entry& e : rows[i]) features(static_cast<Index>(i), e.index) = e.value;
  }
  return Dataset(std::move(features), std::move(labels));
}

Dataset load_libsvm(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_libsvm(in, options);
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
  std::array<char, 64> buffer{};
  for (Index i = 0; i < ds.n(); ++i) {
    out << ds.labels()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < ds.d(); ++j) {
      const double v = ds.features()(i, j);
      if (v == 0.0) continue;
      const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), v);
      out << ' ' << (j + 1) << ':' << std::string_view(buffer.data(), static_cast<std::size_t>(end - buffer.data()));
    }
    out << '\n';
  }
}

Dataset fit_scale(const Dataset& train) {
  if (train.empty()) throw ArgumentError("fit_scale: empty training set");
  Scaling scaling{train.features().colwise().minCoeff().transpose(),
                  train.features().colwise().maxCoeff().transpose()};
  return apply_scale(train, scaling);
}

Dataset apply_scale(const Dataset& ds, const Scaling& scaling) {
  if (scaling.min.size() != ds.d() || scaling.max.size() != ds.d()) {
    throw ArgumentError("apply_scale: scaling has " + std::to_string(scaling.min.size()) +
                        " dimensions, dataset has " + std::to_string(ds.d()));
  }
  Matrix scaled(ds.n(), ds.d());
  for (Index j = 0; j < ds.d(); ++j) {
    const double lo = scaling.min(j);
    const double range = scaling.max(j) - lo;
    if (range > 0.0) {
      scaled.col(j) = (ds.features().col(j).array() - lo) / range;
    } else {
      scaled.col(j).setZero();
    }
  }
  return Dataset(std::move(scaled), ds.labels(), scaling);
}

Dataset subsample(const Dataset& ds, Index m, std::uint64_t seed) {
  if (m <= 0 || m > ds.n()) {
    throw ArgumentError("subsample: m=" + std::to_string(m) + " outside (0, " + std::to_string(ds.n()) + "]");
  }
  std::vector<Index> order(static_cast<std::size_t>(ds.n()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first m slots become the sample.
  for (Index k = 0; k < m; ++k) {
    std::uniform_int_distribution<Index> pick(k, ds.n() - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }
  order.resize(static_cast<std::size_t>(m));
  std::sort(order.begin(), order.end());
  return ds.select(order);
}

BinaryView::BinaryView(const Dataset& ds, int positive_class, int negative_class)
    : dataset_(&ds), positive_(positive_class), negative_(negative_class) {
  const auto& ids = ds.class_ids();
  for (int c : {positive_class, negative_class}) {
    if (!std::binary_search(ids.begin(), ids.end(), c)) {
      throw ArgumentError("binary_view: class " + std::to_string(c) + " not present");
    }
  }
  if (positive_class == negative_class) throw ArgumentError("binary_view: classes must differ");
  std::vector<double> targets;
  for (Index i = 0; i < ds.n(); ++i) {
    const int label = ds.labels()[static_cast<std::size_t>(i)];
    if (label == positive_class || label == negative_class) {
      rows_.push_back(i);
      targets.push_back(label == positive_class ? 1.0 : -1.0);
    }
  }
  y_ = Eigen::Map<const Vector>(targets.data(), static_cast<Index>(targets.size()));
}

Matrix BinaryView::features() const {
  Matrix out(size(), dataset_->d());
  for (Index r = 0; r < size(); ++r) out.row(r) = dataset_->row(rows_[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace ksvm
