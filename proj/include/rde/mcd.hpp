#pragma once

#include "rde/error.hpp"
#include "rde/gaussian.hpp"
#include "rde/parallel.hpp"
#include "rde/random.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace rde {

struct McdConfig {
  std::optional<Index> h;          // support size; nullopt resolves to ceil((N+P+1)/2)
  Index n_initial_subsets = 500;
  Index n_cstep_short = 2;
  Index n_finalists = 10;
  Index max_csteps = 100;
  std::uint64_t seed = 0;
  bool apply_correction = true;
  bool apply_reweighting = true;
  // Above this many rows the candidate search runs on disjoint subsets of at most
  // 300 rows and a merged set of at most 1500 rows before refining on all data.
  // 0 disables the nested search.
  Index nested_threshold = 600;
};

struct McdFit {
  std::vector<bool> support_mask; // exactly h entries set
  GaussianParams raw_params;      // 1/h normalized fit on the support
  GaussianParams final_params;    // after consistency correction and reweighting
  double raw_log_det = 0.0;
  Index h = 0;
  Index n_csteps_run = 0;
  bool exact_fit = false;         // support covariance is singular (points on a hyperplane)
  double correction_factor = 1.0;
  Index n_reweighted = 0;         // rows used by the reweighting step, 0 if not applied
};

struct CStepResult {
  std::vector<Index> support; // ascending row indices
  GaussianParams params;
};

/// Integer support size ceil((n + p + 1) / 2), clamped to [p + 1, n].
inline Index resolve_h(Index n, Index p)
{
  if (n <= p + 1) {
    throw Error(ErrorKind::InsufficientData,
                "MCD needs more than p+1=" + std::to_string(p + 1) + " rows, got " + std::to_string(n));
  }
  const Index h = (n + p + 2) / 2;
  return std::clamp(h, p + 1, n);
}

inline Matrix gather_rows(const Matrix& features, std::span<const Index> rows)
{
  Matrix out(static_cast<Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = features.row(rows[i]);
  }
  return out;
}

/// Maximum likelihood (1/n) Gaussian fit on a subset of rows.
inline GaussianParams fit_subset(const Matrix& features, std::span<const Index> rows)
{
  return fit_mle(gather_rows(features, rows), CovarianceNormalization::maximum_likelihood);
}

/// Indices of the h smallest distances, ties broken by lower index, returned ascending.
inline std::vector<Index> smallest_h(const Vector& distances, Index h)
{
  std::vector<Index> order(static_cast<std::size_t>(distances.size()));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    return distances(a) < distances(b) || (distances(a) == distances(b) && a < b);
  };
  std::nth_element(order.begin(), order.begin() + (h - 1), order.end(), less);
  order.resize(static_cast<std::size_t>(h));
  std::sort(order.begin(), order.end());
  return order;
}

/// One concentration step: refit on the h rows closest to the current estimate.
inline CStepResult c_step(const Matrix& features, const GaussianParams& current, Index h)
{
  if (h < features.cols() + 1 || h > features.rows()) {
    throw Error(ErrorKind::InvalidArgument, "C-step support size " + std::to_string(h) + " outside [p+1, n]");
  }
  CStepResult out;
  out.support = smallest_h(mahalanobis_sq_rows(current, features), h);
  out.params = fit_subset(features, out.support);
  return out;
}

namespace detail {

struct McdCandidate {
  std::vector<Index> support;
  GaussianParams params;
  Index steps = 0;
};

/// Lowest log_det first, ties by candidate position.
inline std::vector<McdCandidate> keep_best(std::vector<McdCandidate> candidates, Index count)
{
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].params.log_det < candidates[b].params.log_det;
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(count)));
  std::vector<McdCandidate> kept;
  kept.reserve(order.size());
  for (std::size_t i : order) {
    kept.push_back(std::move(candidates[i]));
  }
  return kept;
}

/// Up to max_steps C-steps; stops when the support repeats. A determinant
/// increase can only come from rounding and is never accepted.
inline void concentrate(const Matrix& features, McdCandidate& candidate, Index h, Index max_steps)
{
  for (Index step = 0; step < max_steps; ++step) {
    CStepResult next = c_step(features, candidate.params, h);
    if (next.support == candidate.support) {
      return;
    }
    if (!candidate.support.empty() && next.params.log_det > candidate.params.log_det) {
      return;
    }
    ++candidate.steps;
    candidate.support = std::move(next.support);
    candidate.params = std::move(next.params);
  }
}

inline std::vector<McdCandidate> random_starts(const Matrix& features, Index count, Index h, Index short_steps,
                                               Rng& rng)
{
  const Index n = features.rows();
  const Index p = features.cols();
  std::vector<std::vector<Index>> seeds(static_cast<std::size_t>(count));
  for (auto& seed_rows : seeds) {
    for (std::size_t row : sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(p + 1), rng)) {
      seed_rows.push_back(static_cast<Index>(row));
    }
  }
  std::vector<McdCandidate> candidates(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    McdCandidate& candidate = candidates[i];
    candidate.params = fit_subset(features, seeds[i]);
    concentrate(features, candidate, h, short_steps);
  });
  return candidates;
}

/// Refits every candidate's parameters on a different row set.
inline std::vector<McdCandidate> restart_on(const Matrix& features, std::vector<McdCandidate> starts, Index h,
                                            Index steps)
{
  parallel_for(starts.size(), [&](std::size_t i) {
    starts[i].support.clear();
    concentrate(features, starts[i], h, steps);
  });
  return starts;
}

inline Index scaled_support(Index rows, Index h, Index n, Index p)
{
  const auto scaled = static_cast<Index>(std::ceil(static_cast<double>(rows) * static_cast<double>(h) /
                                                   static_cast<double>(n)));
  return std::clamp(scaled, p + 1, rows);
}

inline double median(std::vector<double> values)
{
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline bool is_exact_fit(const GaussianParams& params)
{
  if (params.jitter > 0.0) {
    return true;
  }
  const SpectrumReport spectrum = spectrum_diagnostics(params.covariance);
  return spectrum.lambda_min <= tiny_eigenvalue_ratio * spectrum.lambda_max;
}

inline void validate(const McdConfig& config)
{
  if (config.n_initial_subsets < 1 || config.n_cstep_short < 1 || config.n_finalists < 1 || config.max_csteps < 1) {
    throw Error(ErrorKind::InvalidArgument, "MCD iteration budgets must be positive");
  }
  if (config.n_finalists > config.n_initial_subsets) {
    throw Error(ErrorKind::InvalidArgument, "n_finalists exceeds n_initial_subsets");
  }
}

} // namespace detail

inline McdFit fast_mcd(const Matrix& features, const McdConfig& config = {})
{
  detail::validate(config);
  const Index n = features.rows();
  const Index p = features.cols();
  if (n <= p + 1) {
    throw Error(ErrorKind::InsufficientData,
                "MCD needs more than p+1=" + std::to_string(p + 1) + " rows, got " + std::to_string(n));
  }
  detail::require_finite(features, "features");

  Index h = 0;
  if (config.h) {
    h = *config.h;
    if (h < p + 1 || h > n) {
      throw Error(ErrorKind::InvalidArgument, "h=" + std::to_string(h) + " outside [p+1, n] = [" +
                                                  std::to_string(p + 1) + ", " + std::to_string(n) + "]");
    }
  } else {
    h = resolve_h(n, p);
  }

  detail::McdCandidate best;
  if (h == n) {
    best.support.resize(static_cast<std::size_t>(n));
    std::iota(best.support.begin(), best.support.end(), Index{0});
    best.params = fit_subset(features, best.support);
  } else {
    Rng rng(config.seed);
    std::vector<detail::McdCandidate> finalists;
    constexpr Index subset_rows = 300;
    constexpr Index max_subsets = 5;
    const Index n_subsets = std::clamp<Index>(n / subset_rows, 1, max_subsets);
    const Index merged_rows = std::min(n, n_subsets * subset_rows);
    // each subset must still hold comfortably more than p+1 rows
    const bool nested = config.nested_threshold > 0 && n > config.nested_threshold &&
                        merged_rows / n_subsets > 2 * (p + 1);
    if (nested) {
      const std::vector<std::size_t> perm = permutation(static_cast<std::size_t>(n), rng);
      std::vector<Index> merged(perm.begin(), perm.begin() + merged_rows);
      const Index per_subset_starts = std::max<Index>(1, config.n_initial_subsets / n_subsets);

      std::vector<detail::McdCandidate> pooled;
      for (Index s = 0; s < n_subsets; ++s) {
        const Index begin = s * merged_rows / n_subsets;
        const Index end = (s + 1) * merged_rows / n_subsets;
        std::vector<Index> rows(merged.begin() + begin, merged.begin() + end);
        std::sort(rows.begin(), rows.end());
        const Matrix part = gather_rows(features, rows);
        const Index part_h = detail::scaled_support(part.rows(), h, n, p);
        auto found = detail::keep_best(
            detail::random_starts(part, per_subset_starts, part_h, config.n_cstep_short, rng), config.n_finalists);
        std::move(found.begin(), found.end(), std::back_inserter(pooled));
      }
      std::sort(merged.begin(), merged.end());
      const Matrix merged_set = gather_rows(features, merged);
      const Index merged_h = detail::scaled_support(merged_set.rows(), h, n, p);
      finalists = detail::keep_best(detail::restart_on(merged_set, std::move(pooled), merged_h, config.n_cstep_short),
                                    config.n_finalists);
      finalists = detail::restart_on(features, std::move(finalists), h, config.max_csteps);
    } else {
      finalists = detail::keep_best(
          detail::random_starts(features, config.n_initial_subsets, h, config.n_cstep_short, rng),
          config.n_finalists);
      parallel_for(finalists.size(), [&](std::size_t i) {
        detail::concentrate(features, finalists[i], h, config.max_csteps);
      });
    }
    best = std::move(detail::keep_best(std::move(finalists), 1).front());
  }

  McdFit fit;
  fit.h = h;
  fit.support_mask.assign(static_cast<std::size_t>(n), false);
  for (Index row : best.support) {
    fit.support_mask[static_cast<std::size_t>(row)] = true;
  }
  fit.raw_log_det = best.params.log_det;
  fit.n_csteps_run = best.steps;
  fit.raw_params = std::move(best.params);
  fit.exact_fit = detail::is_exact_fit(fit.raw_params);
  fit.final_params = fit.raw_params;

  if (fit.exact_fit || (!config.apply_correction && !config.apply_reweighting)) {
    return fit;
  }

  const boost::math::chi_squared chi2(static_cast<double>(p));
  Vector distances = mahalanobis_sq_rows(fit.raw_params, features);
  GaussianParams corrected = fit.raw_params;
  if (config.apply_correction) {
    const double factor =
        detail::median(std::vector<double>(distances.data(), distances.data() + distances.size())) /
        boost::math::quantile(chi2, 0.5);
    if (factor > 0.0 && std::isfinite(factor)) {
      fit.correction_factor = factor;
      corrected = make_gaussian(fit.raw_params.mean, fit.raw_params.covariance * factor);
      distances /= factor;
    }
  }
  fit.final_params = corrected;

  if (config.apply_reweighting) {
    const double cutoff = boost::math::quantile(chi2, 0.975);
    std::vector<Index> inliers;
    for (Index i = 0; i < n; ++i) {
      if (distances(i) <= cutoff) {
        inliers.push_back(i);
      }
    }
    if (static_cast<Index>(inliers.size()) >= p + 1) {
      fit.final_params = fit_subset(features, inliers);
      fit.n_reweighted = static_cast<Index>(inliers.size());
    }
  }
  return fit;
}

} // namespace rde
