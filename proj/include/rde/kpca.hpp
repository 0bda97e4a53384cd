#pragma once

#include "rde/error.hpp"
#include "rde/gaussian.hpp"
#include "rde/parallel.hpp"

#include <Eigen/Core>
#include <lapacke.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace rde {

enum class KernelKind { rbf, linear };

struct KernelConfig {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0; // rbf width, k(x, y) = exp(-gamma * |x - y|^2); unused for linear
};

/// Kernel PCA state needed to project new points: the retained training rows,
/// the centering statistics of their kernel matrix and the leading eigenpairs.
struct KpcaModel {
  Matrix train_vectors;   // M x D
  KernelConfig kernel;
  Index requested_p = 0;
  Vector eigenvalues;     // p eigenvalues of the centered kernel matrix, non-increasing
  Matrix coefficients;    // M x p, column k scaled so eigenvalues[k] * |column k|^2 == 1
  Vector center_row_means;
  double center_total_mean = 0.0;

  Index p() const noexcept { return eigenvalues.size(); }
  Index input_dim() const noexcept { return train_vectors.cols(); }
};

struct CenteredKernel {
  Matrix centered;
  Vector row_means;
  double total_mean = 0.0;
};

inline void validate(const KernelConfig& config)
{
  if (config.kind == KernelKind::rbf && !(std::isfinite(config.gamma) && config.gamma > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "rbf gamma must be finite and positive, got " + std::to_string(config.gamma));
  }
}

inline double kernel_eval(const KernelConfig& config, const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y)
{
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "kernel arguments have lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  }
  if (config.kind == KernelKind::linear) {
    return x.dot(y);
  }
  return std::exp(-config.gamma * (x - y).squaredNorm());
}

/// Kernel values between every row of rows and the vector z.
inline Vector kernel_column(const KernelConfig& config, const Matrix& rows, const Eigen::Ref<const Vector>& z)
{
  if (config.kind == KernelKind::linear) {
    return rows * z;
  }
  return (-config.gamma * (rows.rowwise() - z.transpose()).rowwise().squaredNorm().array()).exp().matrix();
}

inline Matrix kernel_matrix(const KernelConfig& config, const Matrix& rows)
{
  const Index m = rows.rows();
  Matrix gram(m, m);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t ui) {
    const auto i = static_cast<Index>(ui);
    for (Index j = 0; j <= i; ++j) {
      gram(i, j) = config.kind == KernelKind::linear
                       ? rows.row(i).dot(rows.row(j))
                       : std::exp(-config.gamma * (rows.row(i) - rows.row(j)).squaredNorm());
    }
  });
  return gram.selfadjointView<Eigen::Lower>();
}

/// Double centering K' = K - 1K - K1 + 1K1 with 1 the M x M matrix of 1/M.
inline CenteredKernel center_kernel(const Matrix& kernel)
{
  if (!detail::is_symmetric(kernel)) {
    throw Error(ErrorKind::NonSymmetric, "kernel matrix is not symmetric");
  }
  CenteredKernel out;
  out.row_means = kernel.rowwise().mean();
  out.total_mean = out.row_means.mean();
  out.centered = kernel;
  out.centered.colwise() -= out.row_means;
  out.centered.rowwise() -= out.row_means.transpose();
  out.centered.array() += out.total_mean;
  return out;
}

namespace detail {

struct Eigenpairs {
  Vector values;  // non-increasing
  Matrix vectors; // unit columns
};

/// Leading `count` eigenpairs of a symmetric matrix via LAPACK dsyevr.
inline Eigenpairs leading_eigenpairs(Matrix symmetric, Index count)
{
  const auto n = static_cast<lapack_int>(symmetric.rows());
  const auto k = static_cast<lapack_int>(count);
  Vector values(n);
  Matrix vectors(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(k, 1)));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, symmetric.data(), n, 0.0, 0.0, n - k + 1, n, 0.0, &found,
                     values.data(), vectors.data(), n, support.data());
  if (info != 0) {
    throw Error(ErrorKind::InsufficientRank, "symmetric eigensolver failed (info " + std::to_string(info) + ")");
  }
  // dsyevr returns ascending order
  Eigenpairs out;
  out.values = values.head(found).reverse();
  out.vectors = vectors.leftCols(found).rowwise().reverse();
  return out;
}

} // namespace detail

inline KpcaModel fit_kpca(const Matrix& features, const KernelConfig& kernel, Index p)
{
  validate(kernel);
  const Index m = features.rows();
  if (p < 1 || p > m) {
    throw Error(ErrorKind::InvalidArgument,
                "need 1 <= p <= rows, got p=" + std::to_string(p) + " with " + std::to_string(m) + " rows");
  }
  if (features.cols() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "features have zero columns");
  }
  detail::require_finite(features, "features");

  CenteredKernel centered = center_kernel(kernel_matrix(kernel, features));
  detail::Eigenpairs pairs = detail::leading_eigenpairs(std::move(centered.centered), p);

  const double top = pairs.values.size() > 0 ? pairs.values(0) : 0.0;
  if (!(top > 0.0)) {
    throw Error(ErrorKind::InsufficientRank, "centered kernel matrix has no positive eigenvalues");
  }
  // eigenvalues at rounding-noise level relative to the largest are numerically zero
  const double cutoff = top * static_cast<double>(m) * std::numeric_limits<double>::epsilon();
  Index kept = 0;
  while (kept < pairs.values.size() && pairs.values(kept) > cutoff) {
    ++kept;
  }

  KpcaModel model;
  model.train_vectors = features;
  model.kernel = kernel;
  model.requested_p = p;
  model.eigenvalues = pairs.values.head(kept);
  model.coefficients.resize(m, kept);
  for (Index k = 0; k < kept; ++k) {
    Vector column = pairs.vectors.col(k);
    Index pivot = 0;
    column.cwiseAbs().maxCoeff(&pivot);
    if (column(pivot) < 0.0) {
      column = -column;
    }
    model.coefficients.col(k) = column / std::sqrt(model.eigenvalues(k));
  }
  model.center_row_means = std::move(centered.row_means);
  model.center_total_mean = centered.total_mean;
  return model;
}

inline Vector transform(const KpcaModel& model, const Eigen::Ref<const Vector>& z)
{
  if (z.size() != model.input_dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "vector has length " + std::to_string(z.size()) + ", expected " + std::to_string(model.input_dim()));
  }
  Vector column = kernel_column(model.kernel, model.train_vectors, z);
  const double column_mean = column.mean();
  column.array() += model.center_total_mean - column_mean;
  column -= model.center_row_means;
  return model.coefficients.transpose() * column;
}

/// Row-by-row transform; row i of the result is bit-identical to transform(model, rows.row(i)).
inline Matrix transform_rows(const KpcaModel& model, const Matrix& rows)
{
  if (rows.cols() != model.input_dim() && rows.rows() > 0) {
    throw Error(ErrorKind::DimensionMismatch,
                "rows have width " + std::to_string(rows.cols()) + ", expected " + std::to_string(model.input_dim()));
  }
  Matrix out(rows.rows(), model.p());
  parallel_for(static_cast<std::size_t>(rows.rows()), [&](std::size_t i) {
    const auto r = static_cast<Index>(i);
    out.row(r) = transform(model, rows.row(r).transpose()).transpose();
  });
  return out;
}

} // namespace rde
