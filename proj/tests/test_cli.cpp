#include "rde/rde.hpp"
#include "support/cli_runner.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

using rde::ClassLabel;
using rde::Index;
using rde::Matrix;
using rde::testing::NormalSource;
using rde::testing::run_cli;

class CliTest : public ::testing::Test {
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("rde_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string slurp(const std::string& name) const { return rde::read_file(path(name)); }
  std::string err() const { return rde::read_file(path("stderr.txt")); }

  rde::testing::CliResult run(const std::string& args) const { return run_cli(args, path("stderr.txt")); }

  /// Two classes of 150 rows in 6D, labels in the pack.
  void write_train_pack(const std::string& name, std::uint64_t seed = 90) const
  {
    NormalSource normal(seed);
    Matrix x(300, 6);
    x.topRows(150) = normal.matrix(150, 6);
    x.bottomRows(150) = normal.matrix(150, 6).array() + 2.5;
    std::vector<ClassLabel> y;
    for (Index i = 0; i < 300; ++i) y.push_back(i < 150 ? 0 : 1);
    rde::write_feature_pack(x, y, path(name));
  }

  fs::path dir_;
};

TEST_F(CliTest, FitWithDefaultsAndMle)
{
  write_train_pack("train.pack");
  auto r = run("fit --variant rde --p 20 " + path("train.pack") + " -o " + path("model.rdem"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(err().find("classes=0:150,1:150"), std::string::npos);
  EXPECT_NE(err().find("effective_p=20"), std::string::npos);
  EXPECT_NE(err().find("h=0:86,1:86"), std::string::npos);
  const auto model = rde::load_model(path("model.rdem"));
  EXPECT_EQ(model.score_dim(), 20);

  r = run("fit --variant mle " + path("train.pack") + " -o " + path("mle.rdem"));
  ASSERT_EQ(r.code, 0) << err();
  const auto mle = rde::load_model(path("mle.rdem"));
  EXPECT_FALSE(mle.kpca.has_value());
  EXPECT_EQ(mle.class_params.at(0).dim(), 6);
}

TEST_F(CliTest, FitInputErrors)
{
  rde::write_feature_pack(Matrix::Ones(5, 2), std::nullopt, path("nolabels.pack"));
  auto r = run("fit " + path("nolabels.pack") + " -o " + path("m.rdem"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(err().find("MalformedManifest"), std::string::npos);

  write_train_pack("train.pack");
  EXPECT_EQ(run("fit " + path("train.pack") + " -o " + path("m.rdem") + " --no-such-flag").code, 2);
  EXPECT_EQ(run("fit " + path("train.pack") + " --labels " + path("missing.labels") + " -o " + path("m.rdem")).code, 2);
  EXPECT_EQ(run("fit --variant gmm " + path("train.pack") + " -o " + path("m.rdem")).code, 2);
  EXPECT_EQ(run("fit --p 149 " + path("train.pack") + " -o " + path("m.rdem")).code, 2);
  EXPECT_FALSE(fs::exists(path("m.rdem")));
}

TEST_F(CliTest, NumericFailureExitCode)
{
  // constant rows: the centered kernel matrix is zero, so no component survives
  rde::write_feature_pack(Matrix::Constant(40, 3, 1.0), std::vector<ClassLabel>(40, 0), path("flat.pack"));
  const auto r = run("fit --p 5 " + path("flat.pack") + " -o " + path("m.rdem"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(err().find("InsufficientRank"), std::string::npos);
}

TEST_F(CliTest, ScoreEchoesDigestsAndIsDeterministic)
{
  write_train_pack("train.pack");
  ASSERT_EQ(run("fit --p 10 " + path("train.pack") + " -o " + path("m.rdem")).code, 0);
  auto a = run("score " + path("m.rdem") + " " + path("train.pack") + " -o " + path("a.scores"));
  ASSERT_EQ(a.code, 0) << err();
  auto b = run("--threads 3 score " + path("m.rdem") + " " + path("train.pack") + " -o " + path("b.scores"));
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp("a.scores"), slurp("b.scores"));
  EXPECT_NE(a.out.find("rows=300\n"), std::string::npos);
  EXPECT_NE(a.out.find("pack_sha256=" + rde::read_feature_pack(path("train.pack")).digest), std::string::npos);
  EXPECT_NE(a.out.find("model_sha256=" + rde::sha256_hex(slurp("m.rdem"))), std::string::npos);
  EXPECT_NE(a.out.find("scores_sha256=" + rde::sha256_hex(slurp("a.scores"))), std::string::npos);
  EXPECT_EQ(rde::read_scores(path("a.scores")).size(), 300u);
}

TEST_F(CliTest, ScoreErrorsAndEmptyPack)
{
  write_train_pack("train.pack");
  ASSERT_EQ(run("fit --variant mle " + path("train.pack") + " -o " + path("m.rdem")).code, 0);
  rde::write_feature_pack(Matrix::Ones(4, 5), std::vector<ClassLabel>(4, 0), path("narrow.pack"));
  EXPECT_EQ(run("score " + path("m.rdem") + " " + path("narrow.pack") + " -o " + path("s")).code, 2);
  EXPECT_NE(err().find("DimensionMismatch"), std::string::npos);

  rde::write_feature_pack(Matrix::Ones(4, 6), std::vector<ClassLabel>(4, 7), path("unknown.pack"));
  EXPECT_EQ(run("score " + path("m.rdem") + " " + path("unknown.pack") + " -o " + path("s")).code, 2);
  EXPECT_NE(err().find("UnknownClass"), std::string::npos);

  rde::write_feature_pack(Matrix(0, 6), std::nullopt, path("empty.pack"));
  const auto r = run("score " + path("m.rdem") + " " + path("empty.pack") + " -o " + path("empty.scores"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(slurp("empty.scores"), "");
  EXPECT_NE(err().find("warning"), std::string::npos);
}

TEST_F(CliTest, EvalReportAndRoc)
{
  rde::write_scores(path("clean.txt"), std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  rde::write_scores(path("adv.txt"), std::vector<double>{-3, -2, -1});
  const auto r = run("eval " + path("clean.txt") + " " + path("adv.txt") + " --roc " + path("roc.txt") +
                     " --report " + path("report.txt"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(r.out.find("target_fpr=0.10000000000000001\n"), std::string::npos);
  EXPECT_NE(r.out.find("auc=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("tpr_at_fpr=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("tp=3\n"), std::string::npos);
  EXPECT_EQ(slurp("report.txt"), r.out);
  EXPECT_EQ(slurp("roc.txt").substr(0, 4), "0 0\n");

  rde::write_scores(path("none.txt"), {});
  EXPECT_EQ(run("eval " + path("none.txt") + " " + path("adv.txt")).code, 2);
  EXPECT_NE(err().find("EmptyInput"), std::string::npos);
  EXPECT_EQ(run("eval " + path("clean.txt") + " " + path("adv.txt") + " --fpr 1.5").code, 2);
}

std::vector<rde::AttackRecord> manifest_fixture(std::size_t n)
{
  std::vector<rde::AttackRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    rde::AttackRecord r;
    r.id = "t" + std::to_string(i);
    r.ground_truth = static_cast<ClassLabel>(i % 2);
    r.clean_pred = i % 10 == 9 ? 1 - r.ground_truth : r.ground_truth;
    r.clean_feature_index = static_cast<Index>(i);
    if (r.clean_pred == r.ground_truth) {
      r.attack_attempted = true;
      r.attack_success = i % 3 != 0;
      r.adv_feature_index = static_cast<Index>(n + i);
      if (r.attack_success) r.adv_pred = 1 - r.ground_truth;
    }
    records.push_back(r);
  }
  return records;
}

void write_manifest(const std::string& path, const std::vector<rde::AttackRecord>& records)
{
  std::ofstream out(path);
  rde::write_attack_manifest(out, records);
}

std::set<std::string> ids_in(const std::string& provenance, const std::string& set)
{
  std::set<std::string> ids;
  std::istringstream in(provenance);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string s, row, predicted, id, origin;
    fields >> s >> row >> predicted >> id >> origin;
    if (s == set) ids.insert(id);
  }
  return ids;
}

TEST_F(CliTest, SampleScenarios)
{
  write_manifest(path("attacks.csv"), manifest_fixture(400));
  auto r = run("--seed 4 sample " + path("attacks.csv") + " --scenario 1 --max-adv 60 -o " + path("s1"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(r.out.find("val_records=120\n"), std::string::npos);
  const std::string p1 = slurp("s1.provenance");
  const auto adv1 = ids_in(p1, "adv");
  for (const auto& id : ids_in(p1, "clean")) EXPECT_FALSE(adv1.contains(id));
  EXPECT_EQ(adv1.size(), 60u);

  r = run("--seed 4 sample " + path("attacks.csv") + " --scenario 2 --max-adv 60 -o " + path("s2"));
  ASSERT_EQ(r.code, 0) << err();
  const std::string p2 = slurp("s2.provenance");
  const auto clean2 = ids_in(p2, "clean");
  for (const auto& id : ids_in(p2, "adv")) EXPECT_TRUE(clean2.contains(id));

  EXPECT_EQ(run("sample " + path("attacks.csv") + " --scenario 3 -o " + path("s3")).code, 2);

  // index files feed straight into score
  rde::write_feature_pack(NormalSource(3).matrix(800, 6), std::nullopt, path("test.pack"));
  write_train_pack("train.pack");
  ASSERT_EQ(run("fit --variant mle " + path("train.pack") + " -o " + path("m.rdem")).code, 0);
  r = run("score " + path("m.rdem") + " " + path("test.pack") + " --rows " + path("s1.adv") + " -o " + path("adv.scores"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_EQ(rde::read_scores(path("adv.scores")).size(), 60u);
  EXPECT_NE(r.out.find("rows_sha256=" + rde::sha256_hex(slurp("s1.adv"))), std::string::npos);
}

TEST_F(CliTest, DiagnosePackAndModel)
{
  rde::write_feature_pack(NormalSource(8).matrix(5000, 3), std::nullopt, path("iso.pack"));
  auto r = run("diagnose " + path("iso.pack"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(r.out.find("section=raw\n"), std::string::npos);
  const auto at = r.out.find("condition_number=");
  EXPECT_NEAR(std::stod(r.out.substr(at + 17)), 1.0, 0.15);

  // spectrum 1 ... 1e-12 on the diagonal
  Matrix x = NormalSource(9).matrix(400, 4);
  x.col(3) *= 1e-6;
  rde::write_feature_pack(x, std::nullopt, path("ill.pack"));
  r = run("diagnose " + path("ill.pack") + " --kpca-p 50");
  ASSERT_EQ(r.code, 0) << err();
  const auto min_at = r.out.find("lambda_min=");
  const double lambda_min = std::stod(r.out.substr(min_at + 11));
  EXPECT_GT(lambda_min, 1e-13);
  EXPECT_LT(lambda_min, 1e-11);
  EXPECT_NE(r.out.find("section=kpca\n"), std::string::npos);

  write_train_pack("train.pack");
  ASSERT_EQ(run("fit --p 12 " + path("train.pack") + " -o " + path("m.rdem")).code, 0);
  r = run("diagnose " + path("m.rdem"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(r.out.find("source=model\nsection=class.0\ndim=12\n"), std::string::npos);
  EXPECT_NE(r.out.find("section=class.1\n"), std::string::npos);
}

TEST_F(CliTest, Aggregate)
{
  auto write = [&](const std::string& name, double auc) {
    std::ofstream(path(name)) << "auc=" << auc << "\ntp=5\n";
  };
  write("one.report", 0.977);
  auto r = run("aggregate " + path("one.report"));
  ASSERT_EQ(r.code, 0) << err();
  EXPECT_NE(r.out.find("auc\t0.97699999999999998\t0\t1\t97.7\xC2\xB1" "0.0\n"), std::string::npos);

  write("a.report", 0.5);
  write("b.report", 0.5);
  write("c.report", 0.5);
  r = run("aggregate " + path("a.report") + " " + path("b.report") + " " + path("c.report"));
  EXPECT_NE(r.out.find("auc\t0.5\t0\t3\t"), std::string::npos);

  // mean 0.96, sample sd 0.02 * sqrt(2), se 0.02
  write("x.report", 0.94);
  write("y.report", 0.98);
  r = run("aggregate " + path("x.report") + " " + path("y.report"));
  EXPECT_NE(r.out.find("96.0\xC2\xB1" "2.0"), std::string::npos);
  EXPECT_NE(r.out.find("tp\t5\t0\t2\t5\xC2\xB1" "0\n"), std::string::npos);

  std::ofstream(path("bad.report")) << "auc: 1\n";
  EXPECT_EQ(run("aggregate " + path("bad.report")).code, 2);
}

} // namespace
