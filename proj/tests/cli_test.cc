#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "logitdyn/dataset.h"
#include "logitdyn/heads.h"
#include "logitdyn/metrics.h"
#include "test_util.h"

namespace logitdyn {
namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "logitdyn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  std::string Path(const std::string& name) { return (dir_ / name).string(); }
  testing::TempDir dir_;
};

TEST_F(CliTest, SynthWritesDeterministicFiles) {
  auto synth = [&](const std::string& file, const std::string& seed) {
    return Cli({"synth", "--n", "500", "--classes", "10", "--depth", "8",
                "--error-rate", "0.2", "--seed", seed, "--out", Path(file),
                "--quiet"});
  };
  ASSERT_EQ(synth("a.ltrj", "1").code, 0);
  ASSERT_EQ(synth("b.ltrj", "1").code, 0);
  ASSERT_EQ(synth("c.ltrj", "2").code, 0);
  EXPECT_EQ(Slurp(dir_ / "a.ltrj"), Slurp(dir_ / "b.ltrj"));
  EXPECT_NE(Slurp(dir_ / "a.ltrj"), Slurp(dir_ / "c.ltrj"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "a.manifest.json"));
  const auto ds = LoadTrajectories(dir_ / "a.ltrj");
  EXPECT_EQ(ds.size(), 500u);
  EXPECT_EQ(ds.depth(), 8u);
  EXPECT_NEAR(MisclassificationRate(ds), 0.2, 1e-12);
}

TEST_F(CliTest, JsonModePrintsOneDocument) {
  const auto r = Cli({"--json", "synth", "--n", "100", "--out", Path("x.ltrj")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n"], 100);
  EXPECT_EQ(j["format"], "LTRJ");
}

TEST_F(CliTest, QuietSuppressesProgress) {
  EXPECT_TRUE(Cli({"--quiet", "synth", "--n", "50", "--out", Path("q.ltrj")}).out.empty());
  EXPECT_FALSE(Cli({"synth", "--n", "50", "--out", Path("v.ltrj")}).out.empty());
}

TEST_F(CliTest, UsageErrorsExitOne) {
  const auto bogus = Cli({"synth", "--bogus", "1", "--out", Path("a.ltrj")});
  EXPECT_EQ(bogus.code, 1);
  EXPECT_NE(bogus.err.find("Usage"), std::string::npos);
  EXPECT_EQ(Cli({}).code, 1);
  EXPECT_EQ(Cli({"nosuch"}).code, 1);
  EXPECT_EQ(Cli({"synth", "--n", "10"}).code, 1);  // no --out
  EXPECT_EQ(Cli({"synth", "--error-rate", "2", "--out", Path("a.ltrj")}).code, 1);
  EXPECT_EQ(Cli({"eval", "--data", Path("a.ltrj"), "--methods", "nope"}).code, 1);
  EXPECT_EQ(Cli({"--help"}).code, 0);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  std::ofstream(dir_ / "junk.ltrj") << "not a trajectory file";
  EXPECT_EQ(Cli({"inspect", Path("junk.ltrj")}).code, 2);
  EXPECT_EQ(Cli({"inspect", Path("missing.ltrj")}).code, 2);
  const auto r = Cli({"eval", "--data", Path("missing.ltrj")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(CliTest, EvalWritesReport) {
  ASSERT_EQ(Cli({"--quiet", "--seed", "3", "synth", "--n", "800", "--classes", "10",
                 "--depth", "6", "--out", Path("d.ltrj")})
                .code,
            0);
  const auto r = Cli({"--seed", "3", "--out", Path("reports"), "eval", "--data",
                      Path("d.ltrj"), "--methods", "max_logit,logit_dynamics",
                      "--k", "1,3", "--last-l", "1,3", "--probe-epochs", "10",
                      "--run-id", "t"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = dir_ / "reports" / "t";
  for (const char* f : {"report.json", "results.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  auto j = nlohmann::json::parse(Slurp(dir / "report.json"));
  EXPECT_EQ(j["kind"], "in_distribution");
  EXPECT_EQ(j["results"].size(), 2u);
  EXPECT_FALSE(j["delta"]["synthetic"]["value"].is_null());
  EXPECT_NE(r.out.find("delta"), std::string::npos);

  // Same seed, same report apart from the timestamp.
  ASSERT_EQ(Cli({"--quiet", "--seed", "3", "--out", Path("reports"), "eval",
                 "--data", Path("d.ltrj"), "--methods", "max_logit,logit_dynamics",
                 "--k", "1,3", "--last-l", "1,3", "--probe-epochs", "10",
                 "--run-id", "t2", "--jobs", "3"})
                .code,
            0);
  auto j2 = nlohmann::json::parse(Slurp(dir_ / "reports" / "t2" / "report.json"));
  j.erase("generated_at");
  j2.erase("generated_at");
  j.erase("run_id");
  j2.erase("run_id");
  j["config"].erase("run_id");
  j2["config"].erase("run_id");
  EXPECT_EQ(j, j2);
}

TEST_F(CliTest, CrossEvalAndAblateWithDuplicateIds) {
  ASSERT_EQ(Cli({"--quiet", "synth", "--n", "500", "--classes", "10", "--out",
                 Path("a.ltrj")})
                .code,
            0);
  ASSERT_EQ(Cli({"--quiet", "--seed", "1", "synth", "--n", "500", "--classes",
                 "20", "--logit-scale", "3", "--out", Path("b.ltrj")})
                .code,
            0);
  const std::vector<std::string> common{"--data", Path("a.ltrj"), "--data",
                                        Path("b.ltrj"), "--k", "1,3",
                                        "--last-l", "1,3", "--probe-epochs", "5"};
  auto args = std::vector<std::string>{"--quiet", "--out", Path("r"), "cross-eval",
                                       "--methods", "entropy,logit_dynamics"};
  args.insert(args.end(), common.begin(), common.end());
  ASSERT_EQ(Cli(args).code, 0);
  const auto cross = dir_ / "r" / "cross-eval";
  EXPECT_TRUE(std::filesystem::exists(cross / "aucpr_logit_dynamics.svg"));
  EXPECT_TRUE(std::filesystem::exists(cross / "diff_logit_dynamics_minus_entropy.csv"));
  const auto j = nlohmann::json::parse(Slurp(cross / "report.json"));
  EXPECT_EQ(j["matrices"]["logit_dynamics"]["rows"],
            nlohmann::json({"synthetic", "synthetic#2"}));

  args = {"--quiet", "--out", Path("r"), "ablate"};
  args.insert(args.end(), common.begin(), common.end());
  ASSERT_EQ(Cli(args).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "r" / "ablate" / "ablation_difference.svg"));
}

TEST_F(CliTest, HeadsProjectFeaturesProbePipeline) {
  ASSERT_EQ(Cli({"--quiet", "synth", "--hidden", "--n", "400", "--classes", "4",
                 "--layers", "4", "--hidden-dim", "6", "--classifier-noise", "8",
                 "--out", Path("h.lhid")})
                .code,
            0);
  ASSERT_EQ(Cli({"--quiet", "train-heads", "--hidden", Path("h.lhid"), "--last-l",
                 "2", "--epochs", "2", "--out", Path("h.lhed")})
                .code,
            0);
  EXPECT_EQ(ReadHeads(dir_ / "h.lhed").size(), 2u);
  ASSERT_EQ(Cli({"--quiet", "project", "--hidden", Path("h.lhid"), "--heads",
                 Path("h.lhed"), "--out", Path("p.ltrj")})
                .code,
            0);
  EXPECT_EQ(LoadTrajectories(dir_ / "p.ltrj").depth(), 3u);
  ASSERT_EQ(Cli({"--quiet", "features", "--data", Path("p.ltrj"), "--last-l", "2",
                 "--k", "2", "--out", Path("f.csv")})
                .code,
            0);
  std::ifstream csv(dir_ / "f.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("switch_rate"), std::string::npos) << header;
  const auto r = Cli({"--quiet", "train-probe", "--features", Path("f.csv"),
                      "--epochs", "5", "--out", Path("probe.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(Slurp(dir_ / "probe.json"));
  EXPECT_TRUE(j.contains("probe"));
  EXPECT_TRUE(j.contains("test_aucpr"));
  // Mismatched K for the class count is a usage error.
  EXPECT_EQ(Cli({"features", "--data", Path("p.ltrj"), "--k", "9", "--out",
                 Path("g.csv")})
                .code,
            1);
}

TEST_F(CliTest, BaselinesAndInspect) {
  ASSERT_EQ(Cli({"--quiet", "synth", "--n", "200", "--out", Path("a.ltrj")}).code, 0);
  ASSERT_EQ(Cli({"--quiet", "baselines", "--data", Path("a.ltrj"), "--methods",
                 "max_logit,energy", "--out", Path("s.csv")})
                .code,
            0);
  std::ifstream in(dir_ / "s.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 401u);
  EXPECT_EQ(Cli({"baselines", "--data", Path("a.ltrj"), "--methods",
                 "logit_dynamics", "--out", Path("s.csv")})
                .code,
            1);
  const auto r = Cli({"--json", "inspect", Path("a.ltrj")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["errors"], 40);
  EXPECT_TRUE(j["splits"].contains("test"));
}

}  // namespace
}  // namespace logitdyn
