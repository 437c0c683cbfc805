#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fowr_cli.hpp"

using namespace fowr;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two simulated labs over identical psi plus a ground-truth file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("fowr_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    ASSERT_EQ(run({"simulate", "--subjects", "8", "--stimuli", "24", "--reps", "4", "--seed", "7", "--out", p("test.csv"),
                   "--truth", p("truth.csv")})
                  .code,
              0);
    ASSERT_EQ(run({"simulate", "--subjects", "10", "--reps", "1", "--seed", "8", "--psi", p("truth.csv"), "--out",
                   p("lab.csv")})
                  .code,
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string p(const std::string& name) { return (dir_ / name).string(); }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateIsSeedDeterministic) {
  for (const char* name : {"a.csv", "b.csv"})
    ASSERT_EQ(run({"simulate", "--subjects", "4", "--stimuli", "110", "--reps", "4", "--seed", "7", "--out", p(name)}).code, 0);
  EXPECT_EQ(slurp(p("a.csv")), slurp(p("b.csv")));
  ASSERT_EQ(run({"simulate", "--subjects", "4", "--stimuli", "110", "--reps", "4", "--seed", "8", "--out", p("c.csv")}).code, 0);
  EXPECT_NE(slurp(p("a.csv")), slurp(p("c.csv")));
  const auto ds = io::read_ratings(p("a.csv"));
  EXPECT_EQ(ds.records().size(), 4u * 110u * 4u);
}

TEST_F(CliTest, EverySubcommandIsByteDeterministic) {
  const std::vector<std::vector<std::string>> commands{
      {"analyze", "--test", p("test.csv"), "--ground-truth", p("truth.csv"), "--treatments"},
      {"analyze", "--test", p("test.csv"), "--subjects", "3", "--reps", "2", "--trials", "200", "--seed", "5"},
      {"analyze", "--test", p("test.csv"), "--ground-truth", p("truth.csv"), "--subjects", "4", "--reps", "4", "--trials", "100"},
      {"converge", "--test", p("test.csv")},
      {"bias", "--test", p("test.csv"), "--ground-truth", p("truth.csv"), "--trials", "300", "--samples", "3,6,12"},
      {"confusion", "--test", p("test.csv"), "--ref", p("lab.csv")},
      {"confusion", "--test", p("test.csv"), "--ref", p("lab.csv"), "--grid", "--subjects", "4", "--reps", "3", "--trials", "5"},
      {"design", "--grid", FOWR_FIXTURES "/grid_15.json", "--target", "15"},
      {"screen", "--test", p("test.csv")}};
  int k = 0;
  for (auto cmd : commands) {
    std::string reports[3];
    for (int rep = 0; rep < 3; ++rep) {
      auto c = cmd;
      const auto out = p("report_" + std::to_string(k) + "_" + std::to_string(rep) + ".json");
      c.insert(c.end(), {"--out", out, "--threads", rep == 2 ? "3" : "1"});
      const auto r = run(c);
      ASSERT_EQ(r.code, 0) << cmd[0] << ": " << r.err;
      reports[rep] = slurp(out);
    }
    EXPECT_EQ(reports[0], reports[1]) << cmd[0];
    EXPECT_EQ(reports[0], reports[2]) << cmd[0] << " depends on the thread count";
    const auto j = json::parse(reports[0]);
    EXPECT_TRUE(j.contains("seed"));
    EXPECT_EQ(j["config_digest"], cli::hex(fnv1a(j["config"].dump())));
    ++k;
  }
}

TEST_F(CliTest, SubsetStudyMatchesTheLibrary) {
  const auto out = p("subset.json");
  ASSERT_EQ(run({"analyze", "--test", p("test.csv"), "--ground-truth", p("truth.csv"), "--subjects", "3", "--reps", "2",
                 "--trials", "150", "--seed", "11", "--out", out})
                .code,
            0);
  const auto j = json::parse(slurp(out));
  const auto test = io::read_ratings(p("test.csv"));
  const auto gt = io::read_mos_vector(p("truth.csv"));
  SubsetStudyConfig cfg;
  cfg.n_subjects = 3;
  cfg.n_repetitions = 2;
  cfg.n_trials = 150;
  cfg.seed = 11;
  cfg.target = ComparisonTarget::ground_truth;
  const auto r = subset_study(cfg, test, {nullptr, &gt});
  EXPECT_EQ(j["result"]["pcc"]["median"].get<double>(), r.metrics.pcc.median);
  EXPECT_EQ(j["result"]["rmse"]["p95"].get<double>(), r.metrics.rmse.p95);
  EXPECT_EQ(j["result"]["combined_bias"]["stddev"].get<double>(), r.bias.stddev);
  EXPECT_EQ(j["seed"], 11);
}

TEST_F(CliTest, ConfusionMatchesTheLibrary) {
  const auto out = p("conf.json");
  ASSERT_EQ(run({"confusion", "--test", p("test.csv"), "--ref", p("lab.csv"), "--alpha", "0.1", "--out", out}).code, 0);
  const auto j = json::parse(slurp(out));
  const auto r = confusion(io::read_ratings(p("test.csv")), io::read_ratings(p("lab.csv")), 0.1);
  EXPECT_EQ(j["result"]["confusion"][0]["agree"].get<double>(), r.agree);
  EXPECT_EQ(j["result"]["confusion"][0]["disagree"].get<double>(), r.disagree);
}

TEST_F(CliTest, ConvergeEmitsTidySeries) {
  const auto out = p("conv.json");
  ASSERT_EQ(run({"converge", "--test", p("test.csv"), "--out", out}).code, 0);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j["series"].size(), 2u * 3u * 3u * 4u);
  const auto& row = j["series"][0];
  for (const char* key : {"direction", "treatment", "metric", "repetition", "mean", "ci_low", "ci_high"})
    EXPECT_TRUE(row.contains(key)) << key;
}

TEST_F(CliTest, DesignOnTheStoredGrids) {
  auto r = run({"design", "--grid", FOWR_FIXTURES "/grid_15.json", "--target", "15"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "{(3,5),(4,4),(5,3)}");
  r = run({"design", "--grid", FOWR_FIXTURES "/grid_24.json", "--target", "24"});
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "{(5,6),(6,5)}");
  r = run({"design", "--target", "15"});
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "{(4,4)}");
}

TEST_F(CliTest, DesignReadsAConfusionGridReport) {
  const auto out = p("grid_report.json");
  ASSERT_EQ(run({"confusion", "--test", p("test.csv"), "--ref", p("lab.csv"), "--grid", "--subjects", "4", "--reps", "4",
                 "--trials", "5", "--out", out})
                .code,
            0);
  const auto r = run({"design", "--grid", out, "--target", "24", "--format", "json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["result"]["target"], "24");
}

TEST_F(CliTest, ExitCodesAndDiagnostics) {
  auto r = run({"analyze", "--test", p("test.csv"), "--bogus"});
  EXPECT_EQ(r.code, cli::usage);
  r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::usage);
  r = run({});
  EXPECT_EQ(r.code, cli::usage);
  r = run({"analyze", "--test", p("missing.csv"), "--ref", p("lab.csv")});
  EXPECT_EQ(r.code, cli::data);
  EXPECT_NE(r.err.find("cannot open file"), std::string::npos);
  r = run({"design", "--target", "20"});
  EXPECT_EQ(r.code, cli::usage);
  r = run({"bias", "--test", p("test.csv"), "--alpha", "2"});
  EXPECT_EQ(r.code, cli::usage);

  {
    std::ofstream f(p("bad_config.json"));
    f << R"({"name": "x", "catalog": []})";
  }
  r = run({"serve", "--config", p("bad_config.json"), "--log", p("events.jsonl")});
  EXPECT_EQ(r.code, cli::data);
  EXPECT_NE(r.err.find("catalog is empty"), std::string::npos);
  EXPECT_EQ(r.err.find("cannot open file"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, cli::ok);
}

TEST_F(CliTest, DisjointCatalogsFailWithAlignmentDiagnostic) {
  ASSERT_EQ(run({"simulate", "--subjects", "3", "--stimuli", "5", "--reps", "1", "--seed", "1", "--out", p("d1.csv")}).code, 0);
  {
    std::ifstream in(p("d1.csv"));
    std::ofstream out(p("d2.csv"));
    std::string line;
    std::getline(in, line);
    out << line << "\n";
    while (std::getline(in, line)) {
      const auto c = line.find(',');
      out << line.substr(0, c + 1) << "other_" << line.substr(c + 1) << "\n";
    }
  }
  const auto r = run({"analyze", "--test", p("d1.csv"), "--ref", p("d2.csv")});
  EXPECT_EQ(r.code, cli::data);
  EXPECT_NE(r.err.find("share no stimulus"), std::string::npos);
}
