#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ksvm/dataset.hpp"
#include "ksvm/types.hpp"

namespace ksvm {

enum class KernelFamily { rbf };

struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double gamma = 1.0;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw ArgumentError("kernel: gamma must be positive, got " + std::to_string(gamma));
    }
  }
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// exp(-gamma * ||x - z||^2). The squared distance is accumulated in one
/// left-to-right pass over the dimensions; every block routine below
/// reproduces this value bit for bit.
template <typename DerivedX, typename DerivedZ>
typename DerivedX::Scalar rbf(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z,
                              typename DerivedX::Scalar gamma) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != z.size()) {
    throw ArgumentError("rbf: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(z.size()) + ")");
  }
  Scalar sq = 0;
  for (Index k = 0; k < x.size(); ++k) {
    const Scalar diff = x(k) - z(k);
    sq += diff * diff;
  }
  return std::exp(-gamma * sq);
}

/// out(i) = rbf(points.row(i), z) for every row of `points`. Vectorized across
/// points; each entry keeps the scalar accumulation order.
void rbf_column(const Matrix& points, const Eigen::Ref<const Vector>& z, double gamma, Eigen::Ref<Vector> out);

/// Same as rbf_column restricted to the point range [begin, end).
void rbf_column(const Matrix& points, const Eigen::Ref<const Vector>& z, double gamma, Index begin, Index end,
                Eigen::Ref<Vector> out);

/// out(i, c) = rbf(points.row(i), queries.row(c)). Points are processed in
/// cache-sized tiles shared by all queries; tiles are the unit of parallel
/// work and every entry keeps the scalar accumulation order.
void rbf_block(const Matrix& points, const Matrix& queries, double gamma, Matrix& out, int threads = 1);

/// Dense |rows| x |cols| block of kernel values.
struct KernelBlock {
  std::vector<Index> rows;
  std::vector<Index> cols;
  RowMatrix values;
};

/// Point tiles are the unit of parallel work; the result does not depend on
/// `threads`. Throws ArgumentError on out-of-range indices.
KernelBlock kernel_block(const Matrix& points, std::span<const Index> rows, std::span<const Index> cols,
                         const KernelSpec& spec, int threads = 1);
KernelBlock kernel_block(const Dataset& ds, std::span<const Index> rows, std::span<const Index> cols,
                         const KernelSpec& spec, int threads = 1);

Vector kernel_row(const Matrix& points, Index row, std::span<const Index> cols, const KernelSpec& spec,
                  int threads = 1);
Vector kernel_row(const Dataset& ds, Index row, std::span<const Index> cols, const KernelSpec& spec,
                  int threads = 1);

/// Kernel values between `z` and every row of `points`, split across
/// `threads` workers by point ranges.
Vector kernel_against_all(const Matrix& points, const Eigen::Ref<const Vector>& z, const KernelSpec& spec,
                          int threads = 1);

/// A trained binary decision function sum_k coef_k k(v_k, x) + b, independent
/// of the training data.
struct KernelExpansion {
  KernelSpec spec;
  Matrix vectors;
  Vector coef;
  double b = 0.0;

  Index dimension() const { return vectors.cols(); }
  double decision(const Eigen::Ref<const Vector>& x) const;
  /// One decision value per row of `points`.
  Vector decisions(const Matrix& points, int threads = 1) const;
};

}  // namespace ksvm
