#pragma once

// Test-only reference computations. Nothing here calls into the code paths it is
// used to check: densities go through explicit inverses, AUC through pair
// counting, MCD through subset enumeration, PCA through the covariance matrix.

#include "rde/gaussian.hpp"
#include "rde/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace rde::testing {

/// Standard normal draws by Box-Muller on the portable uniform helper, so fixtures
/// are identical across standard libraries.
class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double operator()()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform_real(rng_);
    } while (u1 <= 0.0);
    const double u2 = uniform_real(rng_);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  Matrix matrix(Index rows, Index cols)
  {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        m(r, c) = (*this)();
      }
    }
    return m;
  }

  double uniform() { return uniform_real(rng_); }
  Rng& rng() { return rng_; }

private:
  Rng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Rows drawn from N(mean, cov) via a dense Cholesky factor.
inline Matrix sample_gaussian(NormalSource& normal, const Vector& mean, const Matrix& cov, Index n)
{
  const Matrix factor = Eigen::LLT<Matrix>(cov).matrixL();
  Matrix z = normal.matrix(n, mean.size());
  return (z * factor.transpose()).rowwise() + mean.transpose();
}

inline Matrix random_orthogonal(NormalSource& normal, Index dim)
{
  Eigen::HouseholderQR<Matrix> qr(normal.matrix(dim, dim));
  return qr.householderQ() * Matrix::Identity(dim, dim);
}

/// Symmetric positive definite matrix with eigenvalues log-spaced between 1 and 1/condition.
inline Matrix random_spd(NormalSource& normal, Index dim, double condition)
{
  const Matrix q = random_orthogonal(normal, dim);
  Vector spectrum(dim);
  for (Index i = 0; i < dim; ++i) {
    const double t = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
    spectrum(i) = std::pow(condition, -t);
  }
  Matrix spd = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (spd + spd.transpose());
}

inline double log_density_dense(const Vector& mean, const Matrix& cov, const Vector& z)
{
  const Matrix inverse = cov.inverse();
  const Vector d = z - mean;
  const double quad = d.dot(inverse * d);
  return -0.5 * static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi) -
         0.5 * std::log(cov.determinant()) - 0.5 * quad;
}

inline double auc_pairwise(std::span<const double> clean, std::span<const double> adv)
{
  double total = 0.0;
  for (double a : adv) {
    for (double c : clean) {
      total += a < c ? 1.0 : (a == c ? 0.5 : 0.0);
    }
  }
  return total / (static_cast<double>(clean.size()) * static_cast<double>(adv.size()));
}

/// Log-determinant of the 1/h covariance of every h-subset; returns the minimum.
inline double exhaustive_mcd_log_det(const Matrix& x, Index h)
{
  const Index n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::fill(chosen.begin(), chosen.begin() + h, true);
  // iterate all combinations through prev_permutation of the selection mask
  do {
    Vector mean = Vector::Zero(x.cols());
    for (Index i = 0; i < n; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) mean += x.row(i).transpose();
    }
    mean /= static_cast<double>(h);
    Matrix cov = Matrix::Zero(x.cols(), x.cols());
    for (Index i = 0; i < n; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) {
        const Vector d = x.row(i).transpose() - mean;
        cov += d * d.transpose();
      }
    }
    cov /= static_cast<double>(h);
    best = std::min(best, std::log(cov.determinant()));
  } while (std::prev_permutation(chosen.begin(), chosen.end()));
  return best;
}

/// Principal component scores of mean-centered data via the covariance eigendecomposition.
inline Matrix pca_scores(const Matrix& x, Index p)
{
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(centered.transpose() * centered);
  const Matrix axes = solver.eigenvectors().rowwise().reverse().leftCols(p);
  return centered * axes;
}

/// Largest absolute difference after aligning each column's sign.
inline double max_diff_up_to_sign(const Matrix& a, const Matrix& b)
{
  double worst = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double same = (a.col(k) - b.col(k)).cwiseAbs().maxCoeff();
    const double flipped = (a.col(k) + b.col(k)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(same, flipped));
  }
  return worst;
}

inline double condition_number(const Matrix& symmetric)
{
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff() / solver.eigenvalues().minCoeff();
}

inline Matrix sample_covariance(const Matrix& x)
{
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

} // namespace rde::testing
