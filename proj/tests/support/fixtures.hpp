#pragma once

#include "rde/detector.hpp"
#include "support/oracles.hpp"

#include <vector>

namespace rde::testing {

/// Two Gaussian classes with distinct random covariances. Adversarial rows are
/// clean test rows pushed 3 standard deviations (measured on the training data)
/// along one fixed random unit direction; they keep their source class as the
/// predicted label.
struct SeparationData {
  Matrix train;
  std::vector<ClassLabel> train_labels;
  Matrix clean;
  std::vector<ClassLabel> clean_labels;
  Matrix adv;
  std::vector<ClassLabel> adv_labels;
};

struct SeparationSpec {
  Index dim = 20;
  Index train_per_class = 2000;
  Index test_per_class = 500;
  double contamination = 0.0; // fraction of training rows per class replaced by gross outliers
  double shift_sigmas = 3.0;
  double condition = 1e8;     // per-class covariance condition number
  double outlier_scale = 1.0; // outliers ~ class mean + outlier_scale * N(0, I)
  std::uint64_t seed = 2024;
};

inline SeparationData make_separation_data(const SeparationSpec& spec)
{
  NormalSource normal(spec.seed);
  const Index d = spec.dim;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (int k = 0; k < 2; ++k) {
    Vector mu = Vector::Zero(d);
    mu(0) = k == 0 ? -2.0 : 2.0;
    means.push_back(mu);
    covs.push_back(random_spd(normal, d, spec.condition));
  }
  Vector direction = normal.matrix(d, 1).col(0);
  direction.normalize();

  SeparationData out;
  const Index n_train = 2 * spec.train_per_class;
  const Index n_test = 2 * spec.test_per_class;
  out.train.resize(n_train, d);
  out.clean.resize(n_test, d);
  for (int k = 0; k < 2; ++k) {
    out.train.middleRows(k * spec.train_per_class, spec.train_per_class) =
        sample_gaussian(normal, means[k], covs[k], spec.train_per_class);
    out.clean.middleRows(k * spec.test_per_class, spec.test_per_class) =
        sample_gaussian(normal, means[k], covs[k], spec.test_per_class);
    for (Index i = 0; i < spec.train_per_class; ++i) out.train_labels.push_back(k);
    for (Index i = 0; i < spec.test_per_class; ++i) out.clean_labels.push_back(k);
  }

  // sigma along the attack direction, from the clean training rows
  const Vector along = out.train * direction;
  const double sigma = std::sqrt((along.array() - along.mean()).square().sum() / static_cast<double>(n_train - 1));
  out.adv = out.clean.rowwise() + (spec.shift_sigmas * sigma * direction).transpose();
  out.adv_labels = out.clean_labels;

  // gross outliers: isotropic and wide around the class mean
  const auto n_bad = static_cast<Index>(spec.contamination * static_cast<double>(spec.train_per_class));
  for (int k = 0; k < 2; ++k) {
    for (Index i = 0; i < n_bad; ++i) {
      out.train.row(k * spec.train_per_class + i) =
          (means[k] + spec.outlier_scale * normal.matrix(d, 1).col(0)).transpose();
    }
  }
  return out;
}

} // namespace rde::testing
