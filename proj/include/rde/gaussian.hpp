#pragma once

#include "rde/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace rde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class CovarianceNormalization {
  unbiased,           // 1/(N-1)
  maximum_likelihood, // 1/N
};

/// Multivariate normal N(mean, covariance) with a cached Cholesky factor of
/// covariance + jitter*I. Immutable once built by make_gaussian.
struct GaussianParams {
  Vector mean;
  Matrix covariance;
  Matrix chol_lower;
  double log_det = 0.0;
  double jitter = 0.0;

  Index dim() const noexcept { return mean.size(); }
};

struct SpectrumReport {
  std::vector<double> eigenvalues; // non-increasing
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double condition_number = 0.0;      // +inf when lambda_min <= 0
  double condition_bound_scale = 0.0; // 1 / lambda_min, +inf when lambda_min <= 0
  std::size_t n_tiny = 0;             // eigenvalues below tiny_eigenvalue_ratio * lambda_max
};

inline constexpr std::array<double, 8> jitter_ladder = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
inline constexpr double symmetry_tolerance = 1e-10;
inline constexpr double tiny_eigenvalue_ratio = 1e-12;

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_symmetric(const Matrix& m)
{
  if (m.rows() != m.cols()) {
    return false;
  }
  const double scale = std::max(1.0, max_abs(m));
  return max_abs(m - m.transpose()) <= symmetry_tolerance * scale;
}

inline void require_finite(const Matrix& m, const char* what)
{
  if (!m.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " contains non-finite entries");
  }
}

inline void require_length(const GaussianParams& params, Index n)
{
  if (n != params.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "vector has length " + std::to_string(n) + ", expected " + std::to_string(params.dim()));
  }
}

} // namespace detail

/// Factorizes covariance, escalating the diagonal jitter along jitter_ladder until
/// the Cholesky factorization succeeds.
inline GaussianParams make_gaussian(Vector mean, Matrix covariance)
{
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be square with the same dimension as the mean");
  }
  if (!detail::is_symmetric(covariance)) {
    throw Error(ErrorKind::NonSymmetric, "covariance is not symmetric");
  }
  detail::require_finite(covariance, "covariance");

  const Index dim = mean.size();
  for (double jitter : jitter_ladder) {
    Matrix shifted = covariance;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
      continue;
    }
    Matrix lower = llt.matrixL();
    const auto diag = lower.diagonal().array();
    if (!(diag > 0.0).all() || !diag.allFinite()) {
      continue;
    }
    const double log_det = 2.0 * diag.log().sum();
    if (!std::isfinite(log_det)) {
      continue;
    }
    GaussianParams params;
    params.mean = std::move(mean);
    params.covariance = std::move(covariance);
    params.chol_lower = std::move(lower);
    params.log_det = log_det;
    params.jitter = jitter;
    return params;
  }
  throw Error(ErrorKind::SingularCovariance, "Cholesky factorization failed at jitter " +
                                                 std::to_string(jitter_ladder.back()) + " (dimension " +
                                                 std::to_string(dim) + ")");
}

/// Sample covariance of already centered rows, exactly symmetric.
inline Matrix scatter_matrix(const Matrix& centered)
{
  const Index dim = centered.cols();
  Matrix scatter = Matrix::Zero(dim, dim);
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  return scatter.selfadjointView<Eigen::Lower>();
}

inline GaussianParams fit_mle(const Matrix& features,
                              CovarianceNormalization normalization = CovarianceNormalization::unbiased)
{
  const Index n = features.rows();
  if (n < 2) {
    throw Error(ErrorKind::InsufficientData, "need at least 2 samples, got " + std::to_string(n));
  }
  detail::require_finite(features, "features");

  Vector mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - mean.transpose();
  const double denom = normalization == CovarianceNormalization::unbiased ? static_cast<double>(n - 1)
                                                                          : static_cast<double>(n);
  Matrix covariance = scatter_matrix(centered) / denom;
  return make_gaussian(std::move(mean), std::move(covariance));
}

/// Rows given as separate vectors; rejects ragged input.
inline Matrix to_matrix(std::span<const std::vector<double>> rows)
{
  if (rows.empty()) {
    return Matrix(0, 0);
  }
  const auto cols = rows.front().size();
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw Error(ErrorKind::DimensionMismatch, "row " + std::to_string(i) + " has length " +
                                                    std::to_string(rows[i].size()) + ", expected " +
                                                    std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return out;
}

inline double mahalanobis_sq(const GaussianParams& params, const Eigen::Ref<const Vector>& z)
{
  detail::require_length(params, z.size());
  const Vector whitened = params.chol_lower.triangularView<Eigen::Lower>().solve(z - params.mean);
  return whitened.squaredNorm();
}

/// Squared distances of every row of features; one triangular solve for all rows.
inline Vector mahalanobis_sq_rows(const GaussianParams& params, const Matrix& features)
{
  if (features.cols() != params.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "feature width " + std::to_string(features.cols()) +
                                                  " does not match dimension " + std::to_string(params.dim()));
  }
  Matrix centered = (features.rowwise() - params.mean.transpose()).transpose();
  params.chol_lower.triangularView<Eigen::Lower>().solveInPlace(centered);
  return centered.colwise().squaredNorm().transpose();
}

inline double log_density(const GaussianParams& params, const Eigen::Ref<const Vector>& z)
{
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -static_cast<double>(params.dim()) * half_log_2pi - 0.5 * params.log_det -
         0.5 * mahalanobis_sq(params, z);
}

inline double differential_entropy(const GaussianParams& params)
{
  const double p = static_cast<double>(params.dim());
  return 0.5 * p * (std::log(2.0 * std::numbers::pi) + 1.0) + 0.5 * params.log_det;
}

inline SpectrumReport spectrum_diagnostics(const Matrix& covariance)
{
  if (!detail::is_symmetric(covariance)) {
    throw Error(ErrorKind::NonSymmetric, "covariance is not symmetric");
  }
  detail::require_finite(covariance, "covariance");

  SpectrumReport report;
  if (covariance.rows() == 0) {
    throw Error(ErrorKind::EmptyInput, "empty covariance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance, Eigen::EigenvaluesOnly);
  const Vector& ascending = solver.eigenvalues();
  report.eigenvalues.assign(ascending.data(), ascending.data() + ascending.size());
  std::reverse(report.eigenvalues.begin(), report.eigenvalues.end());

  report.lambda_max = report.eigenvalues.front();
  report.lambda_min = report.eigenvalues.back();
  constexpr double inf = std::numeric_limits<double>::infinity();
  report.condition_number = report.lambda_min > 0.0 ? report.lambda_max / report.lambda_min : inf;
  report.condition_bound_scale = report.lambda_min > 0.0 ? 1.0 / report.lambda_min : inf;
  report.n_tiny = static_cast<std::size_t>(
      std::count_if(report.eigenvalues.begin(), report.eigenvalues.end(),
                    [&](double v) { return v < tiny_eigenvalue_ratio * report.lambda_max; }));
  return report;
}

} // namespace rde
