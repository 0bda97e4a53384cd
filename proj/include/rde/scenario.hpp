#pragma once

#include "rde/detector.hpp"
#include "rde/error.hpp"
#include "rde/random.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rde {

/// One row of an attack manifest: a test input, its clean prediction and the
/// outcome of attacking it. Row indices point into a companion feature pack.
struct AttackRecord {
  std::string id;
  ClassLabel ground_truth = 0;
  ClassLabel clean_pred = 0;
  bool attack_attempted = false;
  bool attack_success = false;
  std::optional<ClassLabel> adv_pred;
  Index clean_feature_index = 0;
  std::optional<Index> adv_feature_index;

  bool correctly_classified() const noexcept { return clean_pred == ground_truth; }
};

enum class Scenario {
  one,             // disjoint S1 (attacked) and S2 (clean), ratio forced towards target
  two,             // single S; clean = all of S, adversarial = successful attacks in S
  failed_included, // as `one`, failed attempts count as adversarial too
};

inline Scenario parse_scenario(std::string_view name)
{
  if (name == "1" || name == "one") return Scenario::one;
  if (name == "2" || name == "two") return Scenario::two;
  if (name == "failed" || name == "failed_included") return Scenario::failed_included;
  throw Error(ErrorKind::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
}

struct ScenarioConfig {
  Scenario scenario = Scenario::one;
  Index max_adv = 2000;
  double target_ratio = 0.5; // adversarial fraction of the evaluation set
  double val_fraction = 0.3;
  std::uint64_t seed = 0;
};

inline constexpr double ratio_tolerance = 0.15;

enum class Origin { clean, adv_success, adv_failed };

constexpr std::string_view to_string(Origin origin) noexcept
{
  switch (origin) {
    case Origin::clean: return "clean";
    case Origin::adv_success: return "adv_success";
    case Origin::adv_failed: return "adv_failed";
  }
  return "unknown";
}

struct EvalEntry {
  Index row = 0;
  ClassLabel predicted = 0;
  std::string record_id;
  Origin origin = Origin::clean;
};

struct EvalSet {
  std::vector<EvalEntry> clean;
  std::vector<EvalEntry> adv;
};

inline void validate_record(const AttackRecord& r)
{
  auto fail = [&](const std::string& why) { throw Error(ErrorKind::MalformedManifest, "record '" + r.id + "': " + why); };
  if (r.attack_success && !r.attack_attempted) {
    fail("attack_success set without attack_attempted");
  }
  if (r.attack_success && (!r.adv_feature_index || !r.adv_pred)) {
    fail("successful attack without adv_row and adv_pred");
  }
  if (r.attack_attempted && !r.correctly_classified()) {
    fail("attack attempted on a misclassified input");
  }
  if (r.clean_feature_index < 0 || (r.adv_feature_index && *r.adv_feature_index < 0)) {
    fail("negative feature row");
  }
}

inline void validate_records(std::span<const AttackRecord> records)
{
  std::set<std::string> ids;
  std::set<Index> clean_rows;
  for (const AttackRecord& r : records) {
    validate_record(r);
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::MalformedManifest, "duplicate record id '" + r.id + "'");
    }
    clean_rows.insert(r.clean_feature_index);
  }
  for (const AttackRecord& r : records) {
    if (r.adv_feature_index && clean_rows.contains(*r.adv_feature_index)) {
      throw Error(ErrorKind::MalformedManifest,
                  "record '" + r.id + "': adv_row " + std::to_string(*r.adv_feature_index) + " is also a clean_row");
    }
  }
}

/// Seeded shuffle; the first ceil(val_fraction * N) records become validation.
inline std::pair<std::vector<AttackRecord>, std::vector<AttackRecord>>
split_test_val(std::span<const AttackRecord> records, double val_fraction, std::uint64_t seed)
{
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "val_fraction must lie in [0, 1)");
  }
  const auto n = records.size();
  auto n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(n)));
  if (n_val > 0 && static_cast<double>(n_val - 1) / static_cast<double>(n) >= val_fraction) {
    --n_val;
  }
  Rng rng(seed);
  const std::vector<std::size_t> order = permutation(n, rng);
  std::vector<AttackRecord> test;
  std::vector<AttackRecord> val;
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_val ? val : test).push_back(records[order[k]]);
  }
  return {std::move(test), std::move(val)};
}

namespace detail {

inline EvalEntry clean_entry(const AttackRecord& r)
{
  return {r.clean_feature_index, r.clean_pred, r.id, Origin::clean};
}

inline EvalEntry adv_entry(const AttackRecord& r)
{
  // a failed attempt leaves the prediction unchanged when none was exported
  return {*r.adv_feature_index, r.adv_pred.value_or(r.clean_pred), r.id,
          r.attack_success ? Origin::adv_success : Origin::adv_failed};
}

struct SamplingPlan {
  std::vector<std::size_t> order; // seeded permutation of the records
  std::vector<bool> eligible;     // record can contribute an adversarial entry
  std::size_t initial_size = 0;   // max_adv / (success rate * accuracy), clamped to N
};

inline SamplingPlan plan_sampling(std::span<const AttackRecord> records, const ScenarioConfig& config,
                                  bool include_failed)
{
  if (records.empty()) {
    throw Error(ErrorKind::EmptyInput, "no attack records");
  }
  if (config.max_adv < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_adv must be positive");
  }
  if (!(config.target_ratio > 0.0 && config.target_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "target_ratio must lie in (0, 1)");
  }
  validate_records(records);

  SamplingPlan plan;
  std::size_t correct = 0;
  std::size_t attempted = 0;
  std::size_t n_eligible = 0;
  plan.eligible.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const AttackRecord& r = records[i];
    correct += r.correctly_classified() ? 1 : 0;
    attempted += r.attack_attempted ? 1 : 0;
    if (include_failed && r.attack_attempted && !r.attack_success && !r.adv_feature_index) {
      throw Error(ErrorKind::MissingFailedFeatures, "failed attempt '" + r.id + "' has no adv_row");
    }
    plan.eligible[i] = r.attack_success || (include_failed && r.attack_attempted);
    n_eligible += plan.eligible[i] ? 1 : 0;
  }
  if (n_eligible == 0) {
    throw Error(ErrorKind::InsufficientRecords, "no usable adversarial examples (success rate 0)");
  }
  const double success_rate = static_cast<double>(n_eligible) / static_cast<double>(attempted);
  const double accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  const double initial = std::ceil(static_cast<double>(config.max_adv) / (success_rate * accuracy));
  plan.initial_size = static_cast<std::size_t>(std::min(initial, static_cast<double>(records.size())));

  Rng rng(config.seed);
  plan.order = permutation(records.size(), rng);
  return plan;
}

inline std::vector<EvalEntry> adversarial_entries(std::span<const AttackRecord> records, const SamplingPlan& plan,
                                                  std::size_t subset_size, Index max_adv)
{
  std::vector<EvalEntry> adv;
  for (std::size_t k = 0; k < subset_size && static_cast<Index>(adv.size()) < max_adv; ++k) {
    if (plan.eligible[plan.order[k]]) {
      adv.push_back(adv_entry(records[plan.order[k]]));
    }
  }
  return adv;
}

inline EvalSet sample_disjoint(std::span<const AttackRecord> records, const ScenarioConfig& config,
                               bool include_failed)
{
  const SamplingPlan plan = plan_sampling(records, config, include_failed);
  const std::size_t n = records.size();
  const auto cap = static_cast<std::size_t>(config.max_adv);

  // prefix[k] = eligible records among the first k of the permutation
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    prefix[k + 1] = prefix[k] + (plan.eligible[plan.order[k]] ? 1 : 0);
  }

  double best_fraction = 0.0;
  for (std::size_t s1 = plan.initial_size; s1 >= 1; --s1) {
    const std::size_t n_adv = std::min(prefix[s1], cap);
    if (n_adv == 0) {
      break;
    }
    const auto wanted = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_adv) * (1.0 - config.target_ratio) / config.target_ratio));
    const std::size_t n_clean = std::min(wanted, n - s1);
    const double fraction = static_cast<double>(n_adv) / static_cast<double>(n_adv + n_clean);
    if (std::abs(fraction - config.target_ratio) < std::abs(best_fraction - config.target_ratio)) {
      best_fraction = fraction;
    }
    if (std::abs(fraction - config.target_ratio) <= ratio_tolerance) {
      EvalSet set;
      set.adv = adversarial_entries(records, plan, s1, config.max_adv);
      for (std::size_t k = s1; k < s1 + n_clean; ++k) {
        set.clean.push_back(clean_entry(records[plan.order[k]]));
      }
      return set;
    }
  }
  throw Error(ErrorKind::InsufficientRecords,
              "cannot reach adversarial fraction " + std::to_string(config.target_ratio) + " +/- " +
                  std::to_string(ratio_tolerance) + "; best achievable " + std::to_string(best_fraction));
}

} // namespace detail

inline EvalSet sample_scenario1(std::span<const AttackRecord> records, const ScenarioConfig& config)
{
  return detail::sample_disjoint(records, config, false);
}

inline EvalSet sample_failed_included(std::span<const AttackRecord> records, const ScenarioConfig& config)
{
  return detail::sample_disjoint(records, config, true);
}

inline EvalSet sample_scenario2(std::span<const AttackRecord> records, const ScenarioConfig& config)
{
  const detail::SamplingPlan plan = detail::plan_sampling(records, config, false);
  EvalSet set;
  set.adv = detail::adversarial_entries(records, plan, plan.initial_size, config.max_adv);
  for (std::size_t k = 0; k < plan.initial_size; ++k) {
    set.clean.push_back(detail::clean_entry(records[plan.order[k]]));
  }
  return set;
}

inline EvalSet sample(std::span<const AttackRecord> records, const ScenarioConfig& config)
{
  switch (config.scenario) {
    case Scenario::one: return sample_scenario1(records, config);
    case Scenario::two: return sample_scenario2(records, config);
    case Scenario::failed_included: return sample_failed_included(records, config);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown scenario");
}

// Attack manifest: one header row with exactly these columns, comma or tab
// separated, empty field = absent.
inline constexpr std::array<std::string_view, 8> manifest_columns = {
    "id", "ground_truth", "clean_pred", "attack_attempted", "attack_success", "adv_pred", "clean_row", "adv_row"};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delimiter)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == delimiter) {
    fields.emplace_back();
  }
  return fields;
}

inline std::int64_t parse_integer(const std::string& text, std::size_t line_no, std::string_view column)
{
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::MalformedManifest, "line " + std::to_string(line_no) + ", column " +
                                                  std::string(column) + ": expected integer, got '" + text + "'");
  }
  return value;
}

inline bool parse_flag(const std::string& text, std::size_t line_no, std::string_view column)
{
  if (text == "1" || text == "true" || text == "True") return true;
  if (text == "0" || text == "false" || text == "False") return false;
  throw Error(ErrorKind::MalformedManifest, "line " + std::to_string(line_no) + ", column " + std::string(column) +
                                                ": expected 0/1/true/false, got '" + text + "'");
}

} // namespace detail

inline std::vector<AttackRecord> parse_attack_manifest(std::istream& in)
{
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(ErrorKind::MalformedManifest, "attack manifest is empty");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delimiter = header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> columns = detail::split_fields(header, delimiter);
  if (columns.size() != manifest_columns.size() ||
      !std::equal(columns.begin(), columns.end(), manifest_columns.begin())) {
    throw Error(ErrorKind::MalformedManifest,
                "header must be: id,ground_truth,clean_pred,attack_attempted,attack_success,adv_pred,clean_row,adv_row");
  }

  std::vector<AttackRecord> records;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> f = detail::split_fields(line, delimiter);
    if (f.size() != manifest_columns.size()) {
      throw Error(ErrorKind::MalformedManifest, "line " + std::to_string(line_no) + " has " +
                                                    std::to_string(f.size()) + " fields, expected 8");
    }
    AttackRecord r;
    r.id = f[0];
    if (r.id.empty()) {
      throw Error(ErrorKind::MalformedManifest, "line " + std::to_string(line_no) + ": empty id");
    }
    r.ground_truth = detail::parse_integer(f[1], line_no, "ground_truth");
    r.clean_pred = detail::parse_integer(f[2], line_no, "clean_pred");
    r.attack_attempted = detail::parse_flag(f[3], line_no, "attack_attempted");
    r.attack_success = detail::parse_flag(f[4], line_no, "attack_success");
    if (!f[5].empty()) r.adv_pred = detail::parse_integer(f[5], line_no, "adv_pred");
    r.clean_feature_index = detail::parse_integer(f[6], line_no, "clean_row");
    if (!f[7].empty()) r.adv_feature_index = detail::parse_integer(f[7], line_no, "adv_row");
    records.push_back(std::move(r));
  }
  validate_records(records);
  return records;
}

inline std::vector<AttackRecord> read_attack_manifest(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::IoFailure, "cannot open attack manifest '" + path + "'");
  }
  return parse_attack_manifest(in);
}

inline void write_attack_manifest(std::ostream& out, std::span<const AttackRecord> records)
{
  for (std::size_t i = 0; i < manifest_columns.size(); ++i) {
    out << (i ? "," : "") << manifest_columns[i];
  }
  out << '\n';
  for (const AttackRecord& r : records) {
    out << r.id << ',' << r.ground_truth << ',' << r.clean_pred << ',' << (r.attack_attempted ? 1 : 0) << ','
        << (r.attack_success ? 1 : 0) << ',';
    if (r.adv_pred) out << *r.adv_pred;
    out << ',' << r.clean_feature_index << ',';
    if (r.adv_feature_index) out << *r.adv_feature_index;
    out << '\n';
  }
}

} // namespace rde
