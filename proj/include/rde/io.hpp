#pragma once

#include "rde/detector.hpp"
#include "rde/error.hpp"
#include "rde/metrics.hpp"
#include "rde/scenario.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rde {

namespace fs = std::filesystem;

inline constexpr std::string_view feature_pack_format = "rde-feature-pack";
inline constexpr int feature_pack_version = 1;
inline constexpr std::string_view model_magic = "RDEMODEL";
inline constexpr int model_format_version = 1;

/// Feature vectors as read from a pack; labels are optional.
struct FeatureMatrix {
  Matrix features;
  std::optional<std::vector<ClassLabel>> labels;
  std::vector<ClassLabel> class_labels; // informational class list from the manifest
  std::string creator;
  std::string digest; // SHA-256 of the data file, lowercase hex
};

// ---------------------------------------------------------------- digests

inline std::string to_hex(const unsigned char* bytes, std::size_t n)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = digits[bytes[i] >> 4];
    out[2 * i + 1] = digits[bytes[i] & 0x0f];
  }
  return out;
}

inline std::string sha256_hex(std::string_view bytes)
{
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoFailure, "SHA-256 computation failed");
  }
  return to_hex(digest, length);
}

// ---------------------------------------------------------------- raw files

inline std::string read_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

/// Writes through a sibling temporary file and renames it over `path`, so
/// readers never observe a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes)
{
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::IoFailure, "cannot write '" + tmp.string() + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      throw Error(ErrorKind::IoFailure, "short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::IoFailure, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

// ---------------------------------------------------------------- little endian

template <typename T>
void append_le(std::string& out, T value)
{
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  auto bits = std::bit_cast<Bits>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

template <typename T>
T load_le(const char* bytes)
{
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Bits bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    bits = (bits << 8) | static_cast<unsigned char>(bytes[i]);
  }
  return std::bit_cast<T>(bits);
}

// ---------------------------------------------------------------- text formats

inline std::string format_real(double value)
{
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline double parse_real(const std::string& text, const std::string& where)
{
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw Error(ErrorKind::MalformedManifest, where + ": expected a number, got '" + text + "'");
  }
  return value;
}

inline std::vector<std::string> read_lines(const fs::path& path)
{
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline std::vector<ClassLabel> read_labels(const fs::path& path)
{
  std::vector<ClassLabel> labels;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    labels.push_back(detail::parse_integer(line, ++line_no, path.string()));
  }
  return labels;
}

inline void write_labels(const fs::path& path, std::span<const ClassLabel> labels)
{
  std::string text;
  for (ClassLabel label : labels) {
    text += std::to_string(label);
    text += '\n';
  }
  write_file_atomic(path, text);
}

/// One score per line, 17 significant digits, LF terminated.
inline void write_scores(const fs::path& path, std::span<const double> scores)
{
  std::string text;
  for (double s : scores) {
    text += format_real(s);
    text += '\n';
  }
  write_file_atomic(path, text);
}

inline std::vector<double> read_scores(const fs::path& path)
{
  std::vector<double> scores;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    scores.push_back(parse_real(line, path.string() + ":" + std::to_string(++line_no)));
  }
  return scores;
}

/// Row selection with predicted labels: "row label" per line.
inline void write_index_file(const fs::path& path, std::span<const EvalEntry> entries)
{
  std::string text;
  for (const EvalEntry& e : entries) {
    text += std::to_string(e.row) + ' ' + std::to_string(e.predicted) + '\n';
  }
  write_file_atomic(path, text);
}

inline std::vector<std::pair<Index, ClassLabel>> read_index_file(const fs::path& path)
{
  std::vector<std::pair<Index, ClassLabel>> rows;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    std::istringstream in(line);
    std::string row;
    std::string label;
    std::string extra;
    if (!(in >> row >> label) || (in >> extra)) {
      throw Error(ErrorKind::MalformedManifest, path.string() + ":" + std::to_string(line_no) +
                                                    ": expected 'row label'");
    }
    rows.emplace_back(detail::parse_integer(row, line_no, "row"), detail::parse_integer(label, line_no, "label"));
  }
  return rows;
}

/// Tab separated: set, row, predicted label, record id, origin.
inline void write_provenance(const fs::path& path, const EvalSet& set)
{
  std::string text = "set\trow\tpredicted\tid\torigin\n";
  auto emit = [&](std::string_view name, const std::vector<EvalEntry>& entries) {
    for (const EvalEntry& e : entries) {
      text += std::string(name) + '\t' + std::to_string(e.row) + '\t' + std::to_string(e.predicted) + '\t' +
              e.record_id + '\t' + std::string(to_string(e.origin)) + '\n';
    }
  };
  emit("clean", set.clean);
  emit("adv", set.adv);
  write_file_atomic(path, text);
}

inline std::string format_report(const DetectionReport& r)
{
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += std::string(key) + '=' + value + '\n';
  };
  line("target_fpr", format_real(r.target_fpr));
  line("auc", format_real(r.auc));
  line("tpr_at_fpr", format_real(r.tpr_at_fpr));
  line("f1_at_fpr", format_real(r.f1_at_fpr));
  line("precision_at_fpr", format_real(r.precision_at_fpr));
  line("realized_fpr", format_real(r.realized_fpr));
  line("threshold", format_real(r.threshold));
  line("tp", std::to_string(r.counts.tp));
  line("fp", std::to_string(r.counts.fp));
  line("tn", std::to_string(r.counts.tn));
  line("fn", std::to_string(r.counts.fn));
  return out;
}

/// key=value lines; keys keep their file order.
inline std::vector<std::pair<std::string, double>> parse_report(const fs::path& path)
{
  std::vector<std::pair<std::string, double>> values;
  for (const std::string& line : read_lines(path)) {
    if (line.starts_with('#')) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::MalformedManifest, path.string() + ": expected key=value, got '" + line + "'");
    }
    values.emplace_back(line.substr(0, eq), parse_real(line.substr(eq + 1), path.string()));
  }
  if (values.empty()) {
    throw Error(ErrorKind::EmptyInput, "report '" + path.string() + "' is empty");
  }
  return values;
}

/// "fpr tpr" per line.
inline void write_roc(const fs::path& path, const RocCurve& curve)
{
  std::string text;
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    text += format_real(curve.fpr[i]) + ' ' + format_real(curve.tpr[i]) + '\n';
  }
  write_file_atomic(path, text);
}

// ---------------------------------------------------------------- feature packs
//
// <path>          JSON manifest
// <path>.f32      row-major little-endian float32, n_rows * n_cols * 4 bytes
// <path>.labels   optional, one integer class per line

inline fs::path sibling(const fs::path& path, std::string_view suffix)
{
  fs::path out = path;
  out += std::string(suffix);
  return out;
}

inline void write_feature_pack(const Matrix& features, const std::optional<std::vector<ClassLabel>>& labels,
                               const fs::path& path, const std::string& creator = "rde")
{
  if (!features.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "feature pack entries must be finite");
  }
  if (labels && static_cast<Index>(labels->size()) != features.rows()) {
    throw Error(ErrorKind::SizeMismatch, "label count does not match row count");
  }
  std::string data;
  data.reserve(static_cast<std::size_t>(features.size()) * 4);
  for (Index r = 0; r < features.rows(); ++r) {
    for (Index c = 0; c < features.cols(); ++c) {
      append_le(data, static_cast<float>(features(r, c)));
    }
  }
  const fs::path data_path = sibling(path, ".f32");
  nlohmann::ordered_json manifest;
  manifest["format"] = feature_pack_format;
  manifest["version"] = feature_pack_version;
  manifest["n_rows"] = features.rows();
  manifest["n_cols"] = features.cols();
  manifest["dtype"] = "f32";
  manifest["data_file"] = data_path.filename().string();
  manifest["sha256"] = sha256_hex(data);
  manifest["creator"] = creator;
  write_file_atomic(data_path, data);
  if (labels) {
    const fs::path labels_path = sibling(path, ".labels");
    std::set<ClassLabel> classes(labels->begin(), labels->end());
    manifest["labels_file"] = labels_path.filename().string();
    manifest["class_labels"] = std::vector<ClassLabel>(classes.begin(), classes.end());
    write_labels(labels_path, *labels);
  }
  write_file_atomic(path, manifest.dump(2) + '\n');
}

inline FeatureMatrix read_feature_pack(const fs::path& path)
{
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedManifest, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!manifest.is_object() || !manifest.contains(name)) {
      throw Error(ErrorKind::MalformedManifest, "feature pack manifest lacks field '" + std::string(name) + "'");
    }
    return manifest.at(name);
  };
  auto integer = [&](const char* name) {
    const auto& v = field(name);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw Error(ErrorKind::MalformedManifest, "field '" + std::string(name) + "' must be a non-negative integer");
    }
    return v.get<std::int64_t>();
  };
  auto text = [&](const char* name) {
    const auto& v = field(name);
    if (!v.is_string()) {
      throw Error(ErrorKind::MalformedManifest, "field '" + std::string(name) + "' must be a string");
    }
    return v.get<std::string>();
  };

  if (text("format") != feature_pack_format) {
    throw Error(ErrorKind::MalformedManifest, "field 'format' is not " + std::string(feature_pack_format));
  }
  if (integer("version") != feature_pack_version) {
    throw Error(ErrorKind::VersionMismatch, "field 'version': unsupported feature pack version " +
                                                std::to_string(integer("version")));
  }
  const std::string dtype = text("dtype");
  if (dtype != "f32") {
    throw Error(ErrorKind::UnknownDtype, "field 'dtype': unsupported '" + dtype + "'");
  }
  const auto rows = integer("n_rows");
  const auto cols = integer("n_cols");
  const std::string expected_digest = text("sha256");

  const fs::path base = path.parent_path();
  const std::string data = read_file(base / text("data_file"));
  const auto expected_size = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) * 4;
  if (data.size() != expected_size) {
    throw Error(ErrorKind::SizeMismatch, "field 'n_rows'/'n_cols': data file holds " + std::to_string(data.size()) +
                                             " bytes, manifest implies " + std::to_string(expected_size));
  }
  FeatureMatrix out;
  out.digest = sha256_hex(data);
  if (out.digest != expected_digest) {
    throw Error(ErrorKind::DigestMismatch, "field 'sha256': data file digest " + out.digest +
                                               " does not match manifest " + expected_digest);
  }
  out.features.resize(rows, cols);
  const char* cursor = data.data();
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, cursor += 4) {
      out.features(r, c) = static_cast<double>(load_le<float>(cursor));
    }
  }
  if (manifest.contains("creator") && manifest["creator"].is_string()) {
    out.creator = manifest["creator"].get<std::string>();
  }
  if (manifest.contains("class_labels")) {
    try {
      out.class_labels = manifest["class_labels"].get<std::vector<ClassLabel>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::MalformedManifest, "field 'class_labels' must be a list of integers");
    }
  }
  if (manifest.contains("labels_file")) {
    std::vector<ClassLabel> labels = read_labels(base / text("labels_file"));
    if (static_cast<Index>(labels.size()) != rows) {
      throw Error(ErrorKind::SizeMismatch, "field 'labels_file': " + std::to_string(labels.size()) +
                                               " labels for " + std::to_string(rows) + " rows");
    }
    out.labels = std::move(labels);
  }
  return out;
}

// ---------------------------------------------------------------- model files
//
// line 1: RDEMODEL
// line 2: compact JSON header (version, config, classes, dimensions, section table)
// then the sections back to back as little-endian float64, column-major.

namespace detail {

struct Section {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  std::string bytes;
};

inline Section make_section(std::string name, const Matrix& m)
{
  Section s{std::move(name), m.rows(), m.cols(), {}};
  s.bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.size(); ++i) {
    append_le(s.bytes, m.data()[i]);
  }
  return s;
}

inline Section make_scalar_section(std::string name, std::initializer_list<double> values)
{
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return make_section(std::move(name), v);
}

inline nlohmann::ordered_json config_to_json(const DetectorConfig& c)
{
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(c.variant));
  j["p"] = c.p;
  j["kernel"] = c.kernel == KernelKind::rbf ? "rbf" : "linear";
  j["gamma"] = c.gamma ? nlohmann::ordered_json(*c.gamma) : nlohmann::ordered_json(nullptr);
  j["train_subsample_cap"] = c.train_subsample_cap;
  j["stratified_subsample"] = c.stratified_subsample;
  j["normalization"] = c.normalization == CovarianceNormalization::unbiased ? "unbiased" : "maximum_likelihood";
  j["seed"] = c.seed;
  nlohmann::ordered_json m;
  m["h"] = c.mcd.h ? nlohmann::ordered_json(*c.mcd.h) : nlohmann::ordered_json(nullptr);
  m["n_initial_subsets"] = c.mcd.n_initial_subsets;
  m["n_cstep_short"] = c.mcd.n_cstep_short;
  m["n_finalists"] = c.mcd.n_finalists;
  m["max_csteps"] = c.mcd.max_csteps;
  m["apply_correction"] = c.mcd.apply_correction;
  m["apply_reweighting"] = c.mcd.apply_reweighting;
  m["nested_threshold"] = c.mcd.nested_threshold;
  j["mcd"] = m;
  return j;
}

inline DetectorConfig config_from_json(const nlohmann::json& j)
{
  DetectorConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.p = j.at("p").get<Index>();
  c.kernel = j.at("kernel").get<std::string>() == "linear" ? KernelKind::linear : KernelKind::rbf;
  if (!j.at("gamma").is_null()) c.gamma = j.at("gamma").get<double>();
  c.train_subsample_cap = j.at("train_subsample_cap").get<Index>();
  c.stratified_subsample = j.at("stratified_subsample").get<bool>();
  c.normalization = j.at("normalization").get<std::string>() == "unbiased" ? CovarianceNormalization::unbiased
                                                                            : CovarianceNormalization::maximum_likelihood;
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& m = j.at("mcd");
  if (!m.at("h").is_null()) c.mcd.h = m.at("h").get<Index>();
  c.mcd.n_initial_subsets = m.at("n_initial_subsets").get<Index>();
  c.mcd.n_cstep_short = m.at("n_cstep_short").get<Index>();
  c.mcd.n_finalists = m.at("n_finalists").get<Index>();
  c.mcd.max_csteps = m.at("max_csteps").get<Index>();
  c.mcd.apply_correction = m.at("apply_correction").get<bool>();
  c.mcd.apply_reweighting = m.at("apply_reweighting").get<bool>();
  c.mcd.nested_threshold = m.at("nested_threshold").get<Index>();
  return c;
}

} // namespace detail

inline std::string serialize_model(const RdeModel& model)
{
  std::vector<detail::Section> sections;
  if (model.kpca) {
    const KpcaModel& k = *model.kpca;
    sections.push_back(detail::make_section("kpca.train_vectors", k.train_vectors));
    sections.push_back(detail::make_section("kpca.coefficients", k.coefficients));
    sections.push_back(detail::make_section("kpca.eigenvalues", k.eigenvalues));
    sections.push_back(detail::make_section("kpca.center_row_means", k.center_row_means));
    sections.push_back(detail::make_scalar_section("kpca.scalars", {k.center_total_mean, k.kernel.gamma}));
  }
  for (const auto& [label, g] : model.class_params) {
    const std::string prefix = "class." + std::to_string(label) + ".";
    sections.push_back(detail::make_section(prefix + "mean", g.mean));
    sections.push_back(detail::make_section(prefix + "covariance", g.covariance));
    sections.push_back(detail::make_section(prefix + "chol_lower", g.chol_lower));
    sections.push_back(detail::make_scalar_section(prefix + "scalars", {g.log_det, g.jitter}));
  }

  nlohmann::ordered_json header;
  header["format"] = "rde-model";
  header["version"] = model_format_version;
  header["config"] = detail::config_to_json(model.config);
  header["input_dim"] = model.input_dim;
  header["score_dim"] = model.score_dim();
  header["kpca"] = model.kpca ? nlohmann::ordered_json{{"kernel", model.kpca->kernel.kind == KernelKind::rbf ? "rbf" : "linear"},
                                                       {"requested_p", model.kpca->requested_p},
                                                       {"p", model.kpca->p()}}
                              : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& [label, count] : model.class_counts) {
    classes.push_back({{"label", label}, {"count", count}});
  }
  header["classes"] = classes;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& s : sections) {
    table.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"sha256", sha256_hex(s.bytes)}});
  }
  header["sections"] = table;

  std::string out = std::string(model_magic) + '\n' + header.dump() + '\n';
  for (const auto& s : sections) {
    out += s.bytes;
  }
  return out;
}

inline RdeModel deserialize_model(std::string_view bytes)
{
  const auto first = bytes.find('\n');
  if (first == std::string_view::npos || bytes.substr(0, first) != model_magic) {
    throw Error(ErrorKind::MalformedManifest, "not a model file (missing " + std::string(model_magic) + " magic)");
  }
  const auto second = bytes.find('\n', first + 1);
  if (second == std::string_view::npos) {
    throw Error(ErrorKind::TruncatedSection, "model header is truncated");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(first + 1, second - first - 1));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedManifest, std::string("model header is not valid JSON: ") + e.what());
  }

  try {
    const int version = header.at("version").get<int>();
    if (version != model_format_version) {
      throw Error(ErrorKind::VersionMismatch, "model format version " + std::to_string(version) +
                                                  " is not supported (expected " +
                                                  std::to_string(model_format_version) + ")");
    }

    std::map<std::string, Matrix> sections;
    std::size_t offset = second + 1;
    for (const auto& entry : header.at("sections")) {
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<Index>();
      const auto cols = entry.at("cols").get<Index>();
      const auto length = static_cast<std::size_t>(rows * cols) * 8;
      if (offset + length > bytes.size()) {
        throw Error(ErrorKind::TruncatedSection, "section '" + name + "' is truncated");
      }
      const std::string_view payload = bytes.substr(offset, length);
      if (sha256_hex(payload) != entry.at("sha256").get<std::string>()) {
        throw Error(ErrorKind::DigestMismatch, "section '" + name + "' digest mismatch");
      }
      Matrix m(rows, cols);
      for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = load_le<double>(payload.data() + 8 * i);
      }
      sections.emplace(name, std::move(m));
      offset += length;
    }
    if (offset != bytes.size()) {
      throw Error(ErrorKind::SizeMismatch, "trailing bytes after the last model section");
    }
    auto section = [&](const std::string& name) -> Matrix& {
      auto it = sections.find(name);
      if (it == sections.end()) {
        throw Error(ErrorKind::TruncatedSection, "missing section '" + name + "'");
      }
      return it->second;
    };

    RdeModel model;
    model.config = detail::config_from_json(header.at("config"));
    model.input_dim = header.at("input_dim").get<Index>();
    if (!header.at("kpca").is_null()) {
      KpcaModel k;
      k.train_vectors = std::move(section("kpca.train_vectors"));
      k.coefficients = std::move(section("kpca.coefficients"));
      k.eigenvalues = section("kpca.eigenvalues").col(0);
      k.center_row_means = section("kpca.center_row_means").col(0);
      const Matrix& scalars = section("kpca.scalars");
      k.center_total_mean = scalars(0, 0);
      k.kernel.gamma = scalars(1, 0);
      k.kernel.kind = header["kpca"].at("kernel").get<std::string>() == "linear" ? KernelKind::linear : KernelKind::rbf;
      k.requested_p = header["kpca"].at("requested_p").get<Index>();
      model.kpca = std::move(k);
    }
    for (const auto& entry : header.at("classes")) {
      const auto label = entry.at("label").get<ClassLabel>();
      const std::string prefix = "class." + std::to_string(label) + ".";
      GaussianParams g;
      g.mean = section(prefix + "mean").col(0);
      g.covariance = std::move(section(prefix + "covariance"));
      g.chol_lower = std::move(section(prefix + "chol_lower"));
      const Matrix& scalars = section(prefix + "scalars");
      g.log_det = scalars(0, 0);
      g.jitter = scalars(1, 0);
      model.class_params.emplace(label, std::move(g));
      model.class_counts.emplace(label, entry.at("count").get<Index>());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedManifest, std::string("model header: ") + e.what());
  }
}

inline void save_model(const RdeModel& model, const fs::path& path)
{
  write_file_atomic(path, serialize_model(model));
}

inline RdeModel load_model(const fs::path& path)
{
  return deserialize_model(read_file(path));
}

} // namespace rde
