#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksvm/types.hpp"

namespace ksvm {

struct Sample {
  Vector features;
  int label = 0;
};

/// Per-dimension (min, max) of the training data.
struct Scaling {
  Vector min;
  Vector max;
};

/// Labeled points with dense features, immutable after construction.
class Dataset {
 public:
  Dataset() = default;
  /// `features` holds one point per row. Throws ArgumentError when the label
  /// count does not match.
  Dataset(Matrix features, std::vector<int> labels, std::optional<Scaling> scaling = std::nullopt);

  Index n() const { return features_.rows(); }
  Index d() const { return features_.cols(); }
  bool empty() const { return n() == 0; }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  /// Sorted distinct labels.
  const std::vector<int>& class_ids() const { return class_ids_; }
  const std::optional<Scaling>& scaling() const { return scaling_; }

  auto row(Index i) const { return features_.row(i); }
  Sample sample(Index i) const;

  /// Rows in the given order.
  Dataset select(std::span<const Index> rows) const;

  friend bool operator==(const Dataset&, const Dataset&);

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<int> class_ids_;
  std::optional<Scaling> scaling_;
};

struct ParseOptions {
  /// Forces the dimensionality; indices above it are a parse error.
  std::optional<Index> dimension;
};

/// Reads LibSVM text ("label idx:val ..."), 1-based strictly increasing
/// indices, '#' comment lines. Errors carry the offending line number.
Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {});
Dataset load_libsvm(const std::string& path, const ParseOptions& options = {});

/// Writes the sparse text form; zero entries are omitted and values use the
/// shortest representation that parses back to the same double.
void write_libsvm(std::ostream& out, const Dataset& ds);

/// Min/max per dimension from `train`, applied to `train` itself.
Dataset fit_scale(const Dataset& train);
/// (v - min) / (max - min), 0 for constant dimensions. Not clamped.
Dataset apply_scale(const Dataset& ds, const Scaling& scaling);

/// m rows drawn uniformly without replacement, original order kept.
Dataset subsample(const Dataset& ds, Index m, std::uint64_t seed);

/// Rows of two classes with targets in {-1, +1}.
class BinaryView {
 public:
  BinaryView(const Dataset& ds, int positive_class, int negative_class);

  const Dataset& dataset() const { return *dataset_; }
  const std::vector<Index>& rows() const { return rows_; }
  const Vector& y() const { return y_; }
  Index size() const { return static_cast<Index>(rows_.size()); }
  int positive_class() const { return positive_; }
  int negative_class() const { return negative_; }

  /// Copies the view's features into a dense matrix, one row per point.
  Matrix features() const;

 private:
  const Dataset* dataset_;
  std::vector<Index> rows_;
  Vector y_;
  int positive_;
  int negative_;
};

}  // namespace ksvm
