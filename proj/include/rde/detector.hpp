#pragma once

#include "rde/error.hpp"
#include "rde/gaussian.hpp"
#include "rde/kpca.hpp"
#include "rde/mcd.hpp"
#include "rde/parallel.hpp"
#include "rde/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rde {

using ClassLabel = std::int64_t;

enum class Variant {
  rde,           // kPCA projection, per-class MCD
  rde_minus_mcd, // kPCA projection, per-class MLE
  mle,           // per-class MLE on raw features
};

constexpr std::string_view to_string(Variant v) noexcept
{
  switch (v) {
    case Variant::rde: return "rde";
    case Variant::rde_minus_mcd: return "rde_minus_mcd";
    case Variant::mle: return "mle";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view name)
{
  if (name == "rde") return Variant::rde;
  if (name == "rde_minus_mcd" || name == "rde-mcd") return Variant::rde_minus_mcd;
  if (name == "mle") return Variant::mle;
  throw Error(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

struct DetectorConfig {
  Variant variant = Variant::rde;
  Index p = 100;
  KernelKind kernel = KernelKind::rbf;
  std::optional<double> gamma;            // nullopt: 1 / input dimension, resolved at fit time
  McdConfig mcd;                          // mcd.seed is replaced by a per-class seed derived from `seed`
  Index train_subsample_cap = 8000;
  bool stratified_subsample = false;
  CovarianceNormalization normalization = CovarianceNormalization::unbiased; // MLE fits only
  std::uint64_t seed = 0;
};

/// Per-class fit details kept for logging; not persisted.
struct ClassFitInfo {
  Index h = 0;
  Index n_csteps = 0;
  bool exact_fit = false;
  double jitter = 0.0;
};

struct RdeModel {
  DetectorConfig config;
  Index input_dim = 0;
  std::optional<KpcaModel> kpca; // empty for the mle variant
  std::map<ClassLabel, GaussianParams> class_params;
  std::map<ClassLabel, Index> class_counts;
  std::map<ClassLabel, ClassFitInfo> fit_info;
  double fit_seconds = 0.0;

  Index score_dim() const noexcept { return kpca ? kpca->p() : input_dim; }
};

namespace detail {

inline std::map<ClassLabel, std::vector<Index>> rows_by_class(std::span<const ClassLabel> labels)
{
  std::map<ClassLabel, std::vector<Index>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows[labels[i]].push_back(static_cast<Index>(i));
  }
  return rows;
}

inline void validate_training(const Matrix& features, std::span<const ClassLabel> labels, const DetectorConfig& config)
{
  if (config.p < 1) {
    throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
  }
  if (config.train_subsample_cap < config.p) {
    throw Error(ErrorKind::InvalidArgument, "train_subsample_cap must be at least p");
  }
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(labels.size()) + " labels for " +
                                                  std::to_string(features.rows()) + " feature rows");
  }
  if (features.rows() == 0 || features.cols() == 0) {
    throw Error(ErrorKind::EmptyInput, "no training features");
  }
  require_finite(features, "training features");
  const Index minimum = config.variant == Variant::mle ? 2 : config.p + 2;
  for (const auto& [label, rows] : rows_by_class(labels)) {
    if (static_cast<Index>(rows.size()) < minimum) {
      throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(label) + " has " +
                                                std::to_string(rows.size()) + " samples, needs at least " +
                                                std::to_string(minimum));
    }
  }
}

/// Rows used to fit the kernel PCA: all of them under the cap, otherwise a seeded
/// uniform (or per-class proportional) sample without replacement.
inline std::vector<Index> kpca_rows(std::span<const ClassLabel> labels, const DetectorConfig& config)
{
  const auto n = labels.size();
  const auto cap = static_cast<std::size_t>(config.train_subsample_cap);
  std::vector<Index> rows;
  Rng rng(mix_seed(config.seed, 0));
  if (n <= cap) {
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
  }
  if (!config.stratified_subsample) {
    for (std::size_t r : sample_without_replacement(n, cap, rng)) {
      rows.push_back(static_cast<Index>(r));
    }
    return rows;
  }
  const auto groups = rows_by_class(labels);
  std::size_t assigned = 0;
  std::vector<std::size_t> quota;
  for (const auto& [label, members] : groups) {
    quota.push_back(members.size() * cap / n);
    assigned += quota.back();
  }
  // leftover slots go to classes in label order
  for (std::size_t k = 0; assigned < cap; k = (k + 1) % quota.size()) {
    auto it = std::next(groups.begin(), static_cast<std::ptrdiff_t>(k));
    if (quota[k] < it->second.size()) {
      ++quota[k];
      ++assigned;
    }
  }
  std::size_t k = 0;
  for (const auto& [label, members] : groups) {
    for (std::size_t pick : sample_without_replacement(members.size(), quota[k++], rng)) {
      rows.push_back(members[pick]);
    }
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline KernelConfig resolve_kernel(const DetectorConfig& config, Index input_dim)
{
  KernelConfig kernel;
  kernel.kind = config.kernel;
  kernel.gamma = config.gamma.value_or(1.0 / static_cast<double>(input_dim));
  return kernel;
}

} // namespace detail

/// Kernel PCA stage of the detector, fitted on the (subsampled) pooled training rows.
inline KpcaModel fit_projection(const Matrix& features, std::span<const ClassLabel> labels,
                                const DetectorConfig& config)
{
  detail::validate_training(features, labels, config);
  const std::vector<Index> rows = detail::kpca_rows(labels, config);
  return fit_kpca(gather_rows(features, rows), detail::resolve_kernel(config, features.cols()), config.p);
}

/// Per-class density fit on top of an already fitted projection (ignored for mle).
/// Lets several variants share one kernel PCA fit.
inline RdeModel fit_with_projection(const Matrix& features, std::span<const ClassLabel> labels,
                                    const DetectorConfig& config, std::optional<KpcaModel> projection)
{
  const auto start = std::chrono::steady_clock::now();
  detail::validate_training(features, labels, config);

  RdeModel model;
  model.config = config;
  model.input_dim = features.cols();
  Matrix projected;
  if (config.variant == Variant::mle) {
    projected = features;
  } else {
    if (!projection) {
      throw Error(ErrorKind::InvalidArgument, "kPCA variants need a fitted projection");
    }
    if (projection->input_dim() != features.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "projection was fitted on a different feature width");
    }
    model.kpca = std::move(projection);
    model.config.kernel = model.kpca->kernel.kind;
    model.config.gamma = model.kpca->kernel.gamma;
    projected = transform_rows(*model.kpca, features);
  }

  for (const auto& [label, rows] : detail::rows_by_class(labels)) {
    const Matrix class_rows = gather_rows(projected, rows);
    model.class_counts[label] = static_cast<Index>(rows.size());
    ClassFitInfo info;
    try {
      if (config.variant == Variant::rde) {
        McdConfig mcd = config.mcd;
        mcd.seed = mix_seed(config.seed, 1 + static_cast<std::uint64_t>(label));
        McdFit fit = fast_mcd(class_rows, mcd);
        info.h = fit.h;
        info.n_csteps = fit.n_csteps_run;
        info.exact_fit = fit.exact_fit;
        model.class_params.emplace(label, std::move(fit.final_params));
      } else {
        model.class_params.emplace(label, fit_mle(class_rows, config.normalization));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "class " + std::to_string(label) + ": " + e.what());
    }
    info.jitter = model.class_params.at(label).jitter;
    model.fit_info.emplace(label, info);
  }
  model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

inline RdeModel fit(const Matrix& features, std::span<const ClassLabel> labels, const DetectorConfig& config)
{
  const auto start = std::chrono::steady_clock::now();
  std::optional<KpcaModel> projection;
  if (config.variant != Variant::mle) {
    projection = fit_projection(features, labels, config);
  }
  RdeModel model = fit_with_projection(features, labels, config, std::move(projection));
  model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

/// Class-conditional log-likelihood of one feature vector under its predicted label.
inline double score_one(const RdeModel& model, const Eigen::Ref<const Vector>& z, ClassLabel predicted)
{
  const auto it = model.class_params.find(predicted);
  if (it == model.class_params.end()) {
    throw Error(ErrorKind::UnknownClass, "predicted label " + std::to_string(predicted) + " not in model");
  }
  if (z.size() != model.input_dim) {
    throw Error(ErrorKind::DimensionMismatch, "feature vector has length " + std::to_string(z.size()) +
                                                  ", model expects " + std::to_string(model.input_dim));
  }
  if (model.kpca) {
    return log_density(it->second, transform(*model.kpca, z));
  }
  return log_density(it->second, z);
}

/// Higher is more typical; adversarial inputs are expected in the low tail.
inline Vector score(const RdeModel& model, const Matrix& features, std::span<const ClassLabel> predicted)
{
  if (static_cast<Index>(predicted.size()) != features.rows()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(predicted.size()) + " labels for " +
                                                  std::to_string(features.rows()) + " feature rows");
  }
  if (features.rows() > 0 && features.cols() != model.input_dim) {
    throw Error(ErrorKind::DimensionMismatch, "features have width " + std::to_string(features.cols()) +
                                                  ", model expects " + std::to_string(model.input_dim));
  }
  for (ClassLabel label : predicted) {
    if (!model.class_params.contains(label)) {
      throw Error(ErrorKind::UnknownClass, "predicted label " + std::to_string(label) + " not in model");
    }
  }
  Vector scores(features.rows());
  parallel_for(static_cast<std::size_t>(features.rows()), [&](std::size_t i) {
    const auto r = static_cast<Index>(i);
    scores(r) = score_one(model, features.row(r).transpose(), predicted[i]);
  });
  return scores;
}

/// flag[i] = scores[i] < threshold
inline std::vector<bool> detect(std::span<const double> scores, double threshold)
{
  std::vector<bool> flags(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    flags[i] = scores[i] < threshold;
  }
  return flags;
}

} // namespace rde
