#pragma once

#include "rde/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

// Adversarial inputs are the positive class and are flagged when their score is
// LOW: a sample is flagged by threshold t iff score < t.
namespace rde {

struct RocCurve {
  // Thresholds on the novelty score (-score), non-increasing; point j flags every
  // sample with -score >= thresholds[j]. The first entry is +inf.
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

struct DetectionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

struct DetectionReport {
  double target_fpr = 0.0;
  double auc = 0.0;
  double threshold = 0.0;
  double realized_fpr = 0.0;
  double tpr_at_fpr = 0.0;
  double precision_at_fpr = 0.0;
  double f1_at_fpr = 0.0;
  DetectionCounts counts;
};

namespace detail {

inline void require_scores(std::span<const double> scores, const char* what)
{
  if (scores.empty()) {
    throw Error(ErrorKind::EmptyInput, std::string(what) + " scores are empty");
  }
  for (double s : scores) {
    if (std::isnan(s)) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + " scores contain NaN");
    }
  }
}

inline std::vector<double> sorted_copy(std::span<const double> values)
{
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline double safe_ratio(std::int64_t num, std::int64_t den)
{
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

} // namespace detail

/// Mann-Whitney estimate of P(adv < clean) + P(adv == clean) / 2.
inline double auc(std::span<const double> clean_scores, std::span<const double> adv_scores)
{
  detail::require_scores(clean_scores, "clean");
  detail::require_scores(adv_scores, "adversarial");
  const std::vector<double> clean = detail::sorted_copy(clean_scores);
  // twice the pair count keeps the tie halves in integer arithmetic
  std::int64_t doubled = 0;
  for (double a : adv_scores) {
    const auto lower = std::lower_bound(clean.begin(), clean.end(), a);
    const auto upper = std::upper_bound(lower, clean.end(), a);
    doubled += 2 * static_cast<std::int64_t>(clean.end() - upper) + static_cast<std::int64_t>(upper - lower);
  }
  return static_cast<double>(doubled) /
         (2.0 * static_cast<double>(clean.size()) * static_cast<double>(adv_scores.size()));
}

/// Largest t with |{clean < t}| / n <= target_fpr: the lower empirical quantile.
inline double threshold_at_fpr(std::span<const double> clean_scores, double target_fpr)
{
  detail::require_scores(clean_scores, "clean");
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
    throw Error(ErrorKind::InvalidFpr, "target FPR must lie in (0, 1), got " + std::to_string(target_fpr));
  }
  const std::vector<double> clean = detail::sorted_copy(clean_scores);
  const auto n = clean.size();
  auto allowed = static_cast<std::size_t>(std::floor(target_fpr * static_cast<double>(n)));
  // guard the product against rounding in either direction
  while (allowed > 0 && static_cast<double>(allowed) / static_cast<double>(n) > target_fpr) {
    --allowed;
  }
  while (allowed + 1 < n && static_cast<double>(allowed + 1) / static_cast<double>(n) <= target_fpr) {
    ++allowed;
  }
  return clean[std::min(allowed, n - 1)];
}

inline DetectionCounts count_detections(std::span<const double> clean_scores, std::span<const double> adv_scores,
                                        double threshold)
{
  DetectionCounts counts;
  for (double s : adv_scores) {
    (s < threshold ? counts.tp : counts.fn) += 1;
  }
  for (double s : clean_scores) {
    (s < threshold ? counts.fp : counts.tn) += 1;
  }
  return counts;
}

inline DetectionReport evaluate(std::span<const double> clean_scores, std::span<const double> adv_scores,
                                double target_fpr = 0.1)
{
  DetectionReport report;
  report.target_fpr = target_fpr;
  report.threshold = threshold_at_fpr(clean_scores, target_fpr);
  report.auc = auc(clean_scores, adv_scores);
  const DetectionCounts& c = report.counts = count_detections(clean_scores, adv_scores, report.threshold);
  report.tpr_at_fpr = detail::safe_ratio(c.tp, c.tp + c.fn);
  report.realized_fpr = detail::safe_ratio(c.fp, c.fp + c.tn);
  report.precision_at_fpr = detail::safe_ratio(c.tp, c.tp + c.fp);
  report.f1_at_fpr = detail::safe_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return report;
}

inline RocCurve roc_curve(std::span<const double> clean_scores, std::span<const double> adv_scores)
{
  detail::require_scores(clean_scores, "clean");
  detail::require_scores(adv_scores, "adversarial");
  const std::vector<double> clean = detail::sorted_copy(clean_scores);
  const std::vector<double> adv = detail::sorted_copy(adv_scores);
  const auto n_clean = static_cast<double>(clean.size());
  const auto n_adv = static_cast<double>(adv.size());

  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);

  // sweep distinct scores upward; each step flags everything <= the current score
  std::size_t ci = 0;
  std::size_t ai = 0;
  while (ci < clean.size() || ai < adv.size()) {
    const double next = std::min(ci < clean.size() ? clean[ci] : std::numeric_limits<double>::infinity(),
                                 ai < adv.size() ? adv[ai] : std::numeric_limits<double>::infinity());
    while (ci < clean.size() && clean[ci] == next) {
      ++ci;
    }
    while (ai < adv.size() && adv[ai] == next) {
      ++ai;
    }
    curve.thresholds.push_back(-next);
    curve.fpr.push_back(static_cast<double>(ci) / n_clean);
    curve.tpr.push_back(static_cast<double>(ai) / n_adv);
  }

  for (std::size_t k = 1; k < curve.fpr.size(); ++k) {
    curve.auc += 0.5 * (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]);
  }
  return curve;
}

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0; // sample standard deviation / sqrt(n); 0 for a single value
};

inline MeanStdErr mean_std_err(std::span<const double> values)
{
  if (values.empty()) {
    throw Error(ErrorKind::EmptyInput, "no values to aggregate");
  }
  MeanStdErr out;
  const auto n = static_cast<double>(values.size());
  // shifted by the first value so identical inputs reproduce it exactly
  double offset = 0.0;
  for (double v : values) {
    offset += v - values.front();
  }
  out.mean = values.front() + offset / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - out.mean) * (v - out.mean);
    }
    out.std_err = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

} // namespace rde
