// rde: fit, score and evaluate robust-density adversarial detectors on exported
// feature packs.
//
// Exit codes: 0 success, 2 input or validation error, 3 numeric failure.

#include "rde/rde.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_numeric = 3;

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  int verbosity = 0;
};

Globals globals;

void log(int level, const std::string& line)
{
  if (globals.verbosity >= level) {
    std::cerr << line << '\n';
  }
}

std::string join_counts(const std::map<rde::ClassLabel, rde::Index>& values)
{
  std::string out;
  for (const auto& [label, value] : values) {
    out += (out.empty() ? "" : ",") + std::to_string(label) + ':' + std::to_string(value);
  }
  return out;
}

std::vector<rde::ClassLabel> labels_for(const rde::FeatureMatrix& pack, const std::string& labels_path)
{
  if (!labels_path.empty()) {
    auto labels = rde::read_labels(labels_path);
    if (static_cast<rde::Index>(labels.size()) != pack.features.rows()) {
      throw rde::Error(rde::ErrorKind::SizeMismatch, "labels file '" + labels_path + "' has " +
                                                         std::to_string(labels.size()) + " lines for " +
                                                         std::to_string(pack.features.rows()) + " rows");
    }
    return labels;
  }
  if (pack.labels) {
    return *pack.labels;
  }
  throw rde::Error(rde::ErrorKind::MalformedManifest, "no labels: pass --labels or use a pack with a labels file");
}

std::string file_digest(const fs::path& path) { return rde::sha256_hex(rde::read_file(path)); }

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string pack;
  std::string labels;
  std::string output;
  std::string variant = "rde";
  rde::Index p = 100;
  std::string kernel = "rbf";
  std::optional<double> gamma;
  rde::Index subsample_cap = 8000;
  bool stratified = false;
  std::optional<rde::Index> h;
  rde::Index n_initial_subsets = 500;
  bool no_correction = false;
  bool no_reweighting = false;
  std::string normalization = "unbiased";
};

rde::DetectorConfig detector_config(const FitOptions& o)
{
  rde::DetectorConfig c;
  c.variant = rde::parse_variant(o.variant);
  c.p = o.p;
  c.kernel = o.kernel == "linear" ? rde::KernelKind::linear : rde::KernelKind::rbf;
  c.gamma = o.gamma;
  c.train_subsample_cap = o.subsample_cap;
  c.stratified_subsample = o.stratified;
  c.mcd.h = o.h;
  c.mcd.n_initial_subsets = o.n_initial_subsets;
  c.mcd.n_finalists = std::min(c.mcd.n_finalists, o.n_initial_subsets);
  c.mcd.apply_correction = !o.no_correction;
  c.mcd.apply_reweighting = !o.no_reweighting;
  c.normalization = o.normalization == "ml" ? rde::CovarianceNormalization::maximum_likelihood
                                            : rde::CovarianceNormalization::unbiased;
  c.seed = globals.seed;
  return c;
}

void add_fit_flags(CLI::App& cmd, FitOptions& o)
{
  cmd.add_option("--variant", o.variant, "rde, rde_minus_mcd or mle")
      ->check(CLI::IsMember({"rde", "rde_minus_mcd", "rde-mcd", "mle"}))
      ->capture_default_str();
  cmd.add_option("--p", o.p, "retained kernel PCA components")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--kernel", o.kernel)->check(CLI::IsMember({"rbf", "linear"}))->capture_default_str();
  cmd.add_option("--gamma", o.gamma, "rbf width (default 1/D)")->check(CLI::PositiveNumber);
  cmd.add_option("--subsample-cap", o.subsample_cap, "rows used to fit the kernel PCA")->capture_default_str();
  cmd.add_flag("--stratified", o.stratified, "draw the kernel PCA subsample per class");
  cmd.add_option("--support", o.h, "MCD support size h (default ceil((N+P+1)/2))");
  cmd.add_option("--mcd-starts", o.n_initial_subsets, "random initial subsets for FastMCD")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_flag("--no-correction", o.no_correction, "skip the MCD consistency correction");
  cmd.add_flag("--no-reweighting", o.no_reweighting, "skip the MCD reweighting step");
  cmd.add_option("--normalization", o.normalization, "MLE covariance denominator: unbiased (N-1) or ml (N)")
      ->check(CLI::IsMember({"unbiased", "ml"}))
      ->capture_default_str();
}

int run_fit(const FitOptions& o)
{
  const rde::FeatureMatrix pack = rde::read_feature_pack(o.pack);
  const std::vector<rde::ClassLabel> labels = labels_for(pack, o.labels);
  const rde::RdeModel model = rde::fit(pack.features, labels, detector_config(o));
  rde::save_model(model, o.output);

  std::map<rde::ClassLabel, rde::Index> h;
  for (const auto& [label, info] : model.fit_info) h[label] = info.h;
  std::ostringstream line;
  line << "fit variant=" << rde::to_string(model.config.variant) << " rows=" << pack.features.rows()
       << " dim=" << model.input_dim << " classes=" << join_counts(model.class_counts)
       << " effective_p=" << model.score_dim();
  if (model.config.variant == rde::Variant::rde) {
    line << " h=" << join_counts(h);
  }
  if (model.kpca) {
    line << " gamma=" << rde::format_real(model.kpca->kernel.gamma);
  }
  line << " fit_seconds=" << model.fit_seconds;
  std::cerr << line.str() << '\n';
  for (const auto& [label, info] : model.fit_info) {
    log(1, "class " + std::to_string(label) + ": csteps=" + std::to_string(info.n_csteps) +
               " exact_fit=" + (info.exact_fit ? "1" : "0") + " jitter=" + rde::format_real(info.jitter));
  }
  return exit_ok;
}

// ---------------------------------------------------------------- score

struct ScoreOptions {
  std::string model;
  std::string pack;
  std::string labels;
  std::string rows;
  std::string output;
};

int run_score(const ScoreOptions& o)
{
  const rde::RdeModel model = rde::load_model(o.model);
  const rde::FeatureMatrix pack = rde::read_feature_pack(o.pack);

  rde::Matrix features;
  std::vector<rde::ClassLabel> predicted;
  std::string selection_digest;
  if (!o.rows.empty()) {
    const auto rows = rde::read_index_file(o.rows);
    features.resize(static_cast<rde::Index>(rows.size()), pack.features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto [row, label] = rows[i];
      if (row < 0 || row >= pack.features.rows()) {
        throw rde::Error(rde::ErrorKind::SizeMismatch, "row " + std::to_string(row) + " outside pack of " +
                                                           std::to_string(pack.features.rows()) + " rows");
      }
      features.row(static_cast<rde::Index>(i)) = pack.features.row(row);
      predicted.push_back(label);
    }
    selection_digest = file_digest(o.rows);
  } else {
    features = pack.features;
    if (pack.features.rows() > 0) {
      predicted = labels_for(pack, o.labels);
    }
    if (!o.labels.empty()) selection_digest = file_digest(o.labels);
  }

  if (features.rows() == 0) {
    std::cerr << "warning: no rows to score; writing an empty score file\n";
    rde::write_scores(o.output, {});
  } else {
    const rde::Vector scores = rde::score(model, features, predicted);
    rde::write_scores(o.output, std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
  }
  std::cout << "rows=" << features.rows() << '\n'
            << "model_sha256=" << file_digest(o.model) << '\n'
            << "pack_sha256=" << pack.digest << '\n';
  if (!selection_digest.empty()) {
    std::cout << (o.rows.empty() ? "labels_sha256=" : "rows_sha256=") << selection_digest << '\n';
  }
  std::cout << "scores_sha256=" << file_digest(o.output) << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string clean;
  std::string adv;
  double fpr = 0.1;
  std::string roc;
  std::string report;
};

int run_eval(const EvalOptions& o)
{
  const std::vector<double> clean = rde::read_scores(o.clean);
  const std::vector<double> adv = rde::read_scores(o.adv);
  const rde::DetectionReport report = rde::evaluate(clean, adv, o.fpr);
  const std::string text = rde::format_report(report);
  std::cout << text;
  if (!o.report.empty()) {
    rde::write_file_atomic(o.report, text);
  }
  if (!o.roc.empty()) {
    rde::write_roc(o.roc, rde::roc_curve(clean, adv));
  }
  return exit_ok;
}

// ---------------------------------------------------------------- sample

struct SampleOptions {
  std::string manifest;
  std::string scenario = "1";
  rde::Index max_adv = 2000;
  double target_ratio = 0.5;
  double val_fraction = 0.3;
  std::string output;
};

int run_sample(const SampleOptions& o)
{
  const std::vector<rde::AttackRecord> records = rde::read_attack_manifest(o.manifest);
  rde::validate_records(records);
  rde::ScenarioConfig config;
  config.scenario = rde::parse_scenario(o.scenario);
  config.max_adv = o.max_adv;
  config.target_ratio = o.target_ratio;
  config.val_fraction = o.val_fraction;
  config.seed = rde::mix_seed(globals.seed, 1);
  const auto [test, val] = rde::split_test_val(records, o.val_fraction, rde::mix_seed(globals.seed, 0));
  const rde::EvalSet set = rde::sample(test, config);

  rde::write_index_file(o.output + ".clean", set.clean);
  rde::write_index_file(o.output + ".adv", set.adv);
  rde::write_provenance(o.output + ".provenance", set);
  std::string ids;
  for (const auto& r : val) ids += r.id + '\n';
  rde::write_file_atomic(o.output + ".val", ids);

  std::cout << "scenario=" << o.scenario << '\n'
            << "records=" << records.size() << '\n'
            << "test_records=" << test.size() << '\n'
            << "val_records=" << val.size() << '\n'
            << "clean=" << set.clean.size() << '\n'
            << "adv=" << set.adv.size() << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseOptions {
  std::string input;
  std::optional<rde::Index> kpca_p;
  std::optional<double> gamma;
  rde::Index subsample_cap = 8000;
};

void print_spectrum(const std::string& section, rde::Index dim, const rde::SpectrumReport& r)
{
  std::cout << "section=" << section << '\n'
            << "dim=" << dim << '\n'
            << "lambda_max=" << rde::format_real(r.lambda_max) << '\n'
            << "lambda_min=" << rde::format_real(r.lambda_min) << '\n'
            << "condition_number=" << rde::format_real(r.condition_number) << '\n'
            << "condition_bound_scale=" << rde::format_real(r.condition_bound_scale) << '\n'
            << "n_tiny=" << r.n_tiny << '\n';
}

bool is_model_file(const std::string& path)
{
  const std::string bytes = rde::read_file(path);
  return bytes.rfind(std::string(rde::model_magic) + '\n', 0) == 0;
}

int run_diagnose(const DiagnoseOptions& o)
{
  if (is_model_file(o.input)) {
    const rde::RdeModel model = rde::load_model(o.input);
    std::cout << "source=model\n";
    for (const auto& [label, params] : model.class_params) {
      print_spectrum("class." + std::to_string(label), params.dim(), rde::spectrum_diagnostics(params.covariance));
    }
    return exit_ok;
  }
  const rde::FeatureMatrix pack = rde::read_feature_pack(o.input);
  std::cout << "source=pack\n";
  const rde::GaussianParams raw = rde::fit_mle(pack.features);
  print_spectrum("raw", pack.features.cols(), rde::spectrum_diagnostics(raw.covariance));
  if (o.kpca_p) {
    rde::DetectorConfig c;
    c.p = *o.kpca_p;
    c.gamma = o.gamma;
    c.train_subsample_cap = std::max(o.subsample_cap, c.p);
    c.seed = globals.seed;
    const std::vector<rde::ClassLabel> pooled(static_cast<std::size_t>(pack.features.rows()), 0);
    const std::vector<rde::Index> rows = rde::detail::kpca_rows(pooled, c);
    const rde::KpcaModel kpca = rde::fit_kpca(rde::gather_rows(pack.features, rows),
                                              rde::detail::resolve_kernel(c, pack.features.cols()), c.p);
    const rde::GaussianParams projected = rde::fit_mle(rde::transform_rows(kpca, pack.features));
    print_spectrum("kpca", kpca.p(), rde::spectrum_diagnostics(projected.covariance));
  }
  return exit_ok;
}

// ---------------------------------------------------------------- aggregate

struct AggregateOptions {
  std::vector<std::string> reports;
  bool percent = true;
};

std::string plus_minus(const rde::MeanStdErr& m, bool percent)
{
  const double scale = percent ? 100.0 : 1.0;
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, percent ? "%.1f\xC2\xB1%.1f" : "%.4g\xC2\xB1%.2g", m.mean * scale, m.std_err * scale);
  return buffer;
}

std::string aggregate_table(const std::vector<std::vector<std::pair<std::string, double>>>& reports, bool percent)
{
  // keys in the order of the first report; every report must carry them
  std::string out = "metric\tmean\tstd_err\tn\tsummary\n";
  for (const auto& [key, first_value] : reports.front()) {
    std::vector<double> values;
    for (const auto& report : reports) {
      const auto it = std::find_if(report.begin(), report.end(), [&](const auto& kv) { return kv.first == key; });
      if (it == report.end()) {
        throw rde::Error(rde::ErrorKind::MalformedManifest, "report lacks key '" + key + "'");
      }
      values.push_back(it->second);
    }
    const rde::MeanStdErr m = rde::mean_std_err(values);
    const bool rate = key == "auc" || key == "tpr_at_fpr" || key == "f1_at_fpr" || key == "precision_at_fpr" ||
                      key == "realized_fpr" || key == "target_fpr";
    out += key + '\t' + rde::format_real(m.mean) + '\t' + rde::format_real(m.std_err) + '\t' +
           std::to_string(values.size()) + '\t' + plus_minus(m, percent && rate) + '\n';
  }
  return out;
}

int run_aggregate(const AggregateOptions& o)
{
  std::vector<std::vector<std::pair<std::string, double>>> reports;
  for (const std::string& path : o.reports) {
    reports.push_back(rde::parse_report(path));
  }
  std::cout << aggregate_table(reports, o.percent);
  return exit_ok;
}

// ---------------------------------------------------------------- reproduce

struct ReproduceOptions {
  std::string train;
  std::string train_labels;
  std::string test;
  std::string manifest;
  std::string scenario = "1";
  std::vector<std::string> variants = {"rde"};
  int seeds = 3;
  double fpr = 0.1;
  rde::Index max_adv = 2000;
  double val_fraction = 0.3;
  std::string output;
  FitOptions fit;
};

rde::Vector score_entries(const rde::RdeModel& model, const rde::Matrix& features,
                          const std::vector<rde::EvalEntry>& entries)
{
  rde::Matrix rows(static_cast<rde::Index>(entries.size()), features.cols());
  std::vector<rde::ClassLabel> predicted;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].row < 0 || entries[i].row >= features.rows()) {
      throw rde::Error(rde::ErrorKind::SizeMismatch, "manifest row " + std::to_string(entries[i].row) +
                                                         " outside the test pack");
    }
    rows.row(static_cast<rde::Index>(i)) = features.row(entries[i].row);
    predicted.push_back(entries[i].predicted);
  }
  return rde::score(model, rows, predicted);
}

int run_reproduce(const ReproduceOptions& o)
{
  const rde::FeatureMatrix train = rde::read_feature_pack(o.train);
  const std::vector<rde::ClassLabel> labels = labels_for(train, o.train_labels);
  const rde::FeatureMatrix test = rde::read_feature_pack(o.test);
  const std::vector<rde::AttackRecord> records = rde::read_attack_manifest(o.manifest);
  fs::create_directories(o.output);

  std::cout << "cell train=" << fs::path(o.train).filename().string() << " test=" << fs::path(o.test).filename().string()
            << " scenario=" << o.scenario << " seeds=" << o.seeds << " fpr=" << rde::format_real(o.fpr) << '\n';
  for (const std::string& variant_name : o.variants) {
    std::vector<std::vector<std::pair<std::string, double>>> reports;
    for (int k = 0; k < o.seeds; ++k) {
      const std::uint64_t seed = rde::mix_seed(globals.seed, static_cast<std::uint64_t>(k));
      FitOptions fit = o.fit;
      fit.variant = variant_name;
      rde::DetectorConfig config = detector_config(fit);
      config.seed = seed;
      const rde::RdeModel model = rde::fit(train.features, labels, config);

      rde::ScenarioConfig sc;
      sc.scenario = rde::parse_scenario(o.scenario);
      sc.max_adv = o.max_adv;
      sc.val_fraction = o.val_fraction;
      sc.seed = rde::mix_seed(seed, 1);
      const auto [test_records, val_records] = rde::split_test_val(records, o.val_fraction, rde::mix_seed(seed, 0));
      const rde::EvalSet set = rde::sample(test_records, sc);
      const rde::Vector clean = score_entries(model, test.features, set.clean);
      const rde::Vector adv = score_entries(model, test.features, set.adv);
      const rde::DetectionReport report =
          rde::evaluate(std::span<const double>(clean.data(), static_cast<std::size_t>(clean.size())),
                        std::span<const double>(adv.data(), static_cast<std::size_t>(adv.size())), o.fpr);
      const std::string text = rde::format_report(report);
      const fs::path path = fs::path(o.output) / (variant_name + ".seed" + std::to_string(k) + ".report");
      rde::write_file_atomic(path, text);
      reports.push_back(rde::parse_report(path));
      log(1, variant_name + " seed " + std::to_string(k) + ": clean=" + std::to_string(set.clean.size()) +
                 " adv=" + std::to_string(set.adv.size()) + " fit_seconds=" + std::to_string(model.fit_seconds));
    }
    const std::string table = aggregate_table(reports, true);
    rde::write_file_atomic(fs::path(o.output) / (variant_name + ".summary"), table);
    std::cout << "variant=" << variant_name << '\n';
    // the three headline columns in the reporting shape mean±SE (percent)
    std::istringstream rows(table);
    std::string line;
    while (std::getline(rows, line)) {
      if (line.starts_with("auc\t") || line.starts_with("tpr_at_fpr\t") || line.starts_with("f1_at_fpr\t")) {
        std::cout << line.substr(0, line.find('\t')) << '=' << line.substr(line.rfind('\t') + 1) << '\n';
      }
    }
  }
  return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Robust density estimation detector for adversarial inputs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", globals.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--threads", globals.threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_flag("-v,--verbose", globals.verbosity, "more log output on stderr");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a detector on a labeled training pack");
  fit_cmd->add_option("pack", fit.pack, "training feature pack manifest")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--labels", fit.labels, "class label per row (default: the pack's labels)");
  fit_cmd->add_option("-o,--output", fit.output, "model file to write")->required();
  add_fit_flags(*fit_cmd, fit);

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "log-likelihood of each row under its predicted class");
  score_cmd->add_option("model", score.model)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("pack", score.pack)->required()->check(CLI::ExistingFile);
  auto* labels_opt = score_cmd->add_option("--labels", score.labels, "predicted label per pack row");
  score_cmd->add_option("--rows", score.rows, "index file of 'row label' lines selecting rows")->excludes(labels_opt);
  score_cmd->add_option("-o,--output", score.output, "score file to write")->required();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "AUC and TPR/F1 at a fixed FPR");
  eval_cmd->add_option("clean", eval.clean, "scores of clean inputs")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("adv", eval.adv, "scores of adversarial inputs")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--fpr", eval.fpr, "target false positive rate")->capture_default_str();
  eval_cmd->add_option("--roc", eval.roc, "write the ROC curve as 'fpr tpr' lines");
  eval_cmd->add_option("--report", eval.report, "also write the report to this file");

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "assemble clean/adversarial evaluation sets from an attack manifest");
  sample_cmd->add_option("manifest", sample.manifest)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--scenario", sample.scenario, "1, 2 or failed")
      ->check(CLI::IsMember({"1", "2", "failed"}))
      ->capture_default_str();
  sample_cmd->add_option("--max-adv", sample.max_adv)->check(CLI::PositiveNumber)->capture_default_str();
  sample_cmd->add_option("--target-ratio", sample.target_ratio, "adversarial fraction")->capture_default_str();
  sample_cmd->add_option("--val-fraction", sample.val_fraction)->capture_default_str();
  sample_cmd->add_option("-o,--output", sample.output, "prefix for .clean, .adv, .provenance and .val")->required();

  DiagnoseOptions diagnose;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "covariance spectrum of a pack or of each class in a model");
  diagnose_cmd->add_option("input", diagnose.input, "feature pack manifest or model file")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose_cmd->add_option("--kpca-p", diagnose.kpca_p, "also report the spectrum after kernel PCA")
      ->check(CLI::PositiveNumber);
  diagnose_cmd->add_option("--gamma", diagnose.gamma, "rbf width (default 1/D)")->check(CLI::PositiveNumber);
  diagnose_cmd->add_option("--subsample-cap", diagnose.subsample_cap)->capture_default_str();

  AggregateOptions aggregate;
  bool raw_values = false;
  auto* aggregate_cmd = app.add_subcommand("aggregate", "mean and standard error over per-seed reports");
  aggregate_cmd->add_option("reports", aggregate.reports)->required()->check(CLI::ExistingFile);
  aggregate_cmd->add_flag("--raw", raw_values, "summarize rates as plain values instead of percentages");

  ReproduceOptions reproduce;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "fit, sample, score and evaluate over several seeds");
  reproduce_cmd->add_option("--train", reproduce.train)->required()->check(CLI::ExistingFile);
  reproduce_cmd->add_option("--train-labels", reproduce.train_labels);
  reproduce_cmd->add_option("--test", reproduce.test, "pack holding the rows named by the manifest")
      ->required()
      ->check(CLI::ExistingFile);
  reproduce_cmd->add_option("--manifest", reproduce.manifest)->required()->check(CLI::ExistingFile);
  reproduce_cmd->add_option("--scenario", reproduce.scenario)
      ->check(CLI::IsMember({"1", "2", "failed"}))
      ->capture_default_str();
  reproduce_cmd->add_option("--variants", reproduce.variants)
      ->check(CLI::IsMember({"rde", "rde_minus_mcd", "rde-mcd", "mle"}))
      ->capture_default_str();
  reproduce_cmd->add_option("--seeds", reproduce.seeds)->check(CLI::PositiveNumber)->capture_default_str();
  reproduce_cmd->add_option("--fpr", reproduce.fpr)->capture_default_str();
  reproduce_cmd->add_option("--max-adv", reproduce.max_adv)->check(CLI::PositiveNumber)->capture_default_str();
  reproduce_cmd->add_option("--val-fraction", reproduce.val_fraction)->capture_default_str();
  reproduce_cmd->add_option("-o,--output", reproduce.output, "directory for per-seed reports")->required();
  add_fit_flags(*reproduce_cmd, reproduce.fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_input;
  }

  rde::set_thread_count(globals.threads);
  aggregate.percent = !raw_values;
  try {
    if (*fit_cmd) return run_fit(fit);
    if (*score_cmd) return run_score(score);
    if (*eval_cmd) return run_eval(eval);
    if (*sample_cmd) return run_sample(sample);
    if (*diagnose_cmd) return run_diagnose(diagnose);
    if (*aggregate_cmd) return run_aggregate(aggregate);
    if (*reproduce_cmd) return run_reproduce(reproduce);
  } catch (const rde::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rde::is_numeric_failure(e.kind()) ? exit_numeric : exit_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_input;
  }
  return exit_input;
}
