#include "ksvm/kernel.hpp"

#include <cstring>

#include "ksvm/parallel.hpp"

namespace ksvm {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::rbf:
      return "rbf";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "rbf") return KernelFamily::rbf;
  throw ArgumentError("unknown kernel family '" + name + "'");
}

void rbf_column(const Matrix& points, const Eigen::Ref<const Vector>& z, double gamma, Index begin, Index end,
                Eigen::Ref<Vector> out) {
  if (z.size() != points.cols()) {
    throw ArgumentError("rbf: dimension mismatch (" + std::to_string(points.cols()) + " vs " +
                        std::to_string(z.size()) + ")");
  }
  const Index count = end - begin;
  double* acc = out.data() + begin;
  std::fill(acc, acc + count, 0.0);
  for (Index k = 0; k < points.cols(); ++k) {
    const double* col = points.col(k).data() + begin;
    const double zk = z(k);
    for (Index i = 0; i < count; ++i) {
      const double diff = col[i] - zk;
      acc[i] += diff * diff;
    }
  }
  for (Index i = 0; i < count; ++i) acc[i] = std::exp(-gamma * acc[i]);
}

void rbf_column(const Matrix& points, const Eigen::Ref<const Vector>& z, double gamma, Eigen::Ref<Vector> out) {
  if (out.size() != points.rows()) throw ArgumentError("rbf_column: output size mismatch");
  rbf_column(points, z, gamma, 0, points.rows(), out);
}

namespace {

// Register block: kBlockPoints consecutive points against kBlockQueries
// queries, accumulated over the dimensions in order. Each lane performs the
// same subtract, square, add sequence as the scalar kernel.
using Lanes = double __attribute__((vector_size(64)));
constexpr Index kLaneWidth = sizeof(Lanes) / sizeof(double);
constexpr Index kLaneGroups = 2;
constexpr Index kBlockPoints = kLaneWidth * kLaneGroups;
constexpr Index kBlockQueries = 4;

void squared_distance_block(const Matrix& points, const Matrix& queries, Index p0, Index q0, Matrix& out) {
  Lanes acc[kBlockQueries][kLaneGroups] = {};
  const double* base = points.data() + p0;
  const double* query_base = queries.data() + q0;
  for (Index k = 0; k < points.cols(); ++k) {
    Lanes x[kLaneGroups];
    for (Index v = 0; v < kLaneGroups; ++v) std::memcpy(&x[v], base + k * points.rows() + v * kLaneWidth, sizeof(Lanes));
    for (Index q = 0; q < kBlockQueries; ++q) {
      const double zk = query_base[k * queries.rows() + q];
      for (Index v = 0; v < kLaneGroups; ++v) {
        const Lanes diff = x[v] - zk;
        acc[q][v] += diff * diff;
      }
    }
  }
  for (Index q = 0; q < kBlockQueries; ++q) {
    double* dst = out.col(q0 + q).data() + p0;
    for (Index v = 0; v < kLaneGroups; ++v) std::memcpy(dst + v * kLaneWidth, &acc[q][v], sizeof(Lanes));
  }
}

void squared_distance_tail(const Matrix& points, const Matrix& queries, Index p0, Index p1, Index q0, Index q1,
                           Matrix& out) {
  for (Index q = q0; q < q1; ++q) {
    double* acc = out.col(q).data();
    for (Index i = p0; i < p1; ++i) acc[i] = 0.0;
    for (Index k = 0; k < points.cols(); ++k) {
      const double* col = points.col(k).data();
      const double zk = queries(q, k);
      for (Index i = p0; i < p1; ++i) {
        const double diff = col[i] - zk;
        acc[i] += diff * diff;
      }
    }
  }
}

}  // namespace

void rbf_block(const Matrix& points, const Matrix& queries, double gamma, Matrix& out, int threads) {
  if (queries.cols() != points.cols()) {
    throw ArgumentError("rbf: dimension mismatch (" + std::to_string(points.cols()) + " vs " +
                        std::to_string(queries.cols()) + ")");
  }
  out.resize(points.rows(), queries.rows());
  const Index full_points = points.rows() / kBlockPoints * kBlockPoints;
  const Index full_queries = queries.rows() / kBlockQueries * kBlockQueries;
  const Index tiles = (points.rows() + kBlockPoints - 1) / kBlockPoints;
  parallel_for(tiles, threads, [&](Index first, Index last) {
    for (Index t = first; t < last; ++t) {
      const Index p0 = t * kBlockPoints;
      if (p0 < full_points) {
        for (Index q0 = 0; q0 < full_queries; q0 += kBlockQueries) {
          squared_distance_block(points, queries, p0, q0, out);
        }
        squared_distance_tail(points, queries, p0, p0 + kBlockPoints, full_queries, queries.rows(), out);
      } else {
        squared_distance_tail(points, queries, p0, points.rows(), 0, queries.rows(), out);
      }
      const Index p1 = std::min(p0 + kBlockPoints, points.rows());
      for (Index q = 0; q < queries.rows(); ++q) {
        double* dst = out.col(q).data();
        for (Index i = p0; i < p1; ++i) dst[i] = std::exp(-gamma * dst[i]);
      }
    }
  });
}

namespace {

void check_indices(std::span<const Index> indices, Index n, const char* what) {
  for (Index i : indices) {
    if (i < 0 || i >= n) {
      throw ArgumentError(std::string("kernel: ") + what + " index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(n) + ")");
    }
  }
}

Matrix gather_rows(const Matrix& points, std::span<const Index> indices) {
  Matrix out(static_cast<Index>(indices.size()), points.cols());
  for (Index k = 0; k < points.cols(); ++k) {
    for (std::size_t r = 0; r < indices.size(); ++r) out(static_cast<Index>(r), k) = points(indices[r], k);
  }
  return out;
}

}  // namespace

KernelBlock kernel_block(const Matrix& points, std::span<const Index> rows, std::span<const Index> cols,
                         const KernelSpec& spec, int threads) {
  spec.validate();
  check_indices(rows, points.rows(), "row");
  check_indices(cols, points.rows(), "column");
  KernelBlock block{{rows.begin(), rows.end()}, {cols.begin(), cols.end()}, {}};
  block.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  if (rows.empty() || cols.empty()) return block;

  const Matrix col_points = gather_rows(points, cols);
  const Matrix row_points = gather_rows(points, rows);
  Matrix transposed;
  rbf_block(col_points, row_points, spec.gamma, transposed, threads);
  block.values = transposed.transpose();
  return block;
}

KernelBlock kernel_block(const Dataset& ds, std::span<const Index> rows, std::span<const Index> cols,
                         const KernelSpec& spec, int threads) {
  return kernel_block(ds.features(), rows, cols, spec, threads);
}

Vector kernel_row(const Matrix& points, Index row, std::span<const Index> cols, const KernelSpec& spec,
                  int threads) {
  spec.validate();
  const Index rows[] = {row};
  check_indices(rows, points.rows(), "row");
  check_indices(cols, points.rows(), "column");
  Vector out(static_cast<Index>(cols.size()));
  if (cols.empty()) return out;
  const Matrix col_points = gather_rows(points, cols);
  const Vector z = points.row(row).transpose();
  parallel_for(out.size(), threads,
               [&](Index begin, Index end) { rbf_column(col_points, z, spec.gamma, begin, end, out); });
  return out;
}

Vector kernel_row(const Dataset& ds, Index row, std::span<const Index> cols, const KernelSpec& spec,
                  int threads) {
  return kernel_row(ds.features(), row, cols, spec, threads);
}

Vector kernel_against_all(const Matrix& points, const Eigen::Ref<const Vector>& z, const KernelSpec& spec,
                          int threads) {
  Vector out(points.rows());
  if (z.size() != points.cols()) {
    throw ArgumentError("kernel: dimension mismatch (" + std::to_string(points.cols()) + " vs " +
                        std::to_string(z.size()) + ")");
  }
  parallel_for(out.size(), threads,
               [&](Index begin, Index end) { rbf_column(points, z, spec.gamma, begin, end, out); });
  return out;
}

double KernelExpansion::decision(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dimension()) {
    throw ArgumentError("decision: point has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(dimension()));
  }
  if (vectors.rows() == 0) return b;
  Vector k(vectors.rows());
  rbf_column(vectors, x, spec.gamma, k);
  return coef.dot(k) + b;
}

Vector KernelExpansion::decisions(const Matrix& points, int threads) const {
  if (points.cols() != dimension()) {
    throw ArgumentError("decision: points have " + std::to_string(points.cols()) + " features, model expects " +
                        std::to_string(dimension()));
  }
  Vector out(points.rows());
  parallel_for(points.rows(), threads, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) out(i) = decision(points.row(i).transpose());
  });
  return out;
}

}  // namespace ksvm
