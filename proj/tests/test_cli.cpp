#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nergmm/io.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "synth": {"n_events": 25, "n_stations": 60, "stations_per_event": [5, 10]}
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nergmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  static std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Runs the CLI; stderr lands in err.txt.
  int run(const std::string& args) const {
    const std::string cmd = std::string(NERGMM_CLI) + " " + args + " > " + path("out.txt").string() + " 2> " +
                            path("err.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string err() const { return read(path("err.txt")); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthFitPredictEndToEnd) {
  write("cfg.json", kSmallConfig);
  ASSERT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("s").string()), 0) << err();
  ASSERT_TRUE(fs::exists(path("s/flatfile.csv")));
  ASSERT_TRUE(fs::exists(path("s/cells_truth.csv")));
  ASSERT_EQ(run("fit --flatfile " + path("s/flatfile.csv").string() + " --config " + path("cfg.json").string() +
                " --out " + path("f").string()),
            0)
      << err();
  const std::string report = read(path("f/report.txt"));
  EXPECT_NE(report.find("variance conservation"), std::string::npos);
  write("sc.csv", "scenario_id,mag,rrup,vs30,eqx,eqy,stax,stay\nnear,6,20,400,100,100,110,100\nfar,5,40,300,150,150,180,150\n");
  ASSERT_EQ(run("predict --model " + path("f/model.json").string() + " --scenarios " + path("sc.csv").string() +
                " --out " + path("p").string()),
            0)
      << err();
  const std::string pred = read(path("p/predictions.csv"));
  EXPECT_EQ(pred.rfind("scenario_id,median_lnY", 0), 0u);
  EXPECT_NE(pred.find("\nnear,"), std::string::npos);
  EXPECT_NE(pred.find("\nfar,"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("p/covariance.csv")));
  EXPECT_FALSE(fs::exists(path("p/draws.csv")));

  // Draws are byte-identical for a seed and change with it.
  const std::string common = "predict --model " + path("f/model.json").string() + " --scenarios " +
                             path("sc.csv").string() + " --draws 50 --out ";
  ASSERT_EQ(run(common + path("a").string() + " --seed 11"), 0) << err();
  ASSERT_EQ(run(common + path("b").string() + " --seed 11"), 0) << err();
  ASSERT_EQ(run(common + path("c").string() + " --seed 12"), 0) << err();
  const std::string a = read(path("a/draws.csv"));
  EXPECT_NE(a.find('\n'), std::string::npos);
  EXPECT_EQ(a, read(path("b/draws.csv")));
  EXPECT_NE(a, read(path("c/draws.csv")));
  EXPECT_EQ(read(path("a/predictions.csv")), read(path("c/predictions.csv")));
}

TEST_F(Cli, SynthIsDeterministic) {
  write("cfg.json", kSmallConfig);
  ASSERT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("a").string()), 0) << err();
  ASSERT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("b").string()), 0) << err();
  EXPECT_EQ(read(path("a/flatfile.csv")), read(path("b/flatfile.csv")));
  EXPECT_EQ(read(path("a/truth.csv")), read(path("b/truth.csv")));
}

TEST_F(Cli, NoiselessSynthGivesMedian) {
  write("cfg.json", R"({"model": {"terms": []}, "synth": {"n_events": 5, "n_stations": 20,
    "stations_per_event": [3, 6], "truth": {"tau0": 0, "phi0": 0}}})");
  ASSERT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("s").string()), 0) << err();
  std::ifstream in(path("s/truth.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    ASSERT_EQ(f.size(), 16u);
    EXPECT_EQ(f[9], f[10]) << line;  // y == f_erg
    ++rows;
  }
  EXPECT_GT(rows, 0);
}

TEST_F(Cli, MissingColumnExitsTwoAndNamesIt) {
  write("ff.csv", "eqid,ssn,mag,rrup,eqx,eqy,stax,stay,y\n1,1,5,10,0,0,1,1,0\n");
  EXPECT_EQ(run("fit --flatfile " + path("ff.csv").string() + " --out " + path("f").string()), 2);
  EXPECT_NE(err().find("'vs30'"), std::string::npos) << err();
}

TEST_F(Cli, EmptyFlatfileExitsTwo) {
  write("ff.csv", std::string(nergmm::io::kFlatfileHeader) + "\n");
  EXPECT_EQ(run("fit --flatfile " + path("ff.csv").string() + " --out " + path("f").string()), 2);
  EXPECT_NE(err().find("no data rows"), std::string::npos) << err();
}

TEST_F(Cli, UnknownConfigKeyExitsTwo) {
  write("cfg.json", R"({"synth": {"n_evnts": 3}})");
  EXPECT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("s").string()), 2);
  EXPECT_NE(err().find("'n_evnts'"), std::string::npos) << err();
}

TEST_F(Cli, ParseErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("predict --model x.json"), 2);
  EXPECT_EQ(run("synth --out " + path("s").string() + " --bogus"), 2);
  EXPECT_EQ(run("predict --model a --scenarios b --out c --route sideways"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, OptimizerBudgetExitsThree) {
  write("cfg.json", R"({"synth": {"n_events": 25, "n_stations": 60, "stations_per_event": [5, 10]},
    "ergodic_fit": {"optimizer": {"max_evals": 2}}})");
  ASSERT_EQ(run("synth --config " + path("cfg.json").string() + " --out " + path("s").string()), 0) << err();
  EXPECT_EQ(run("fit --flatfile " + path("s/flatfile.csv").string() + " --config " + path("cfg.json").string() +
                " --out " + path("f").string()),
            3)
      << err();
}

TEST_F(Cli, GridMissingEndpointExitsTwo) {
  write("ff.csv", std::string(nergmm::io::kFlatfileHeader) +
                      "\n1,1,5,10,400,0,0,10,0,-1\n1,2,5,20,400,0,0,20,0,-2\n2,1,6,10,400,900,900,10,0,-1\n"
                      "2,2,6,30,400,900,900,20,0,-1\n");
  EXPECT_EQ(run("fit --flatfile " + path("ff.csv").string() + " --out " + path("f").string()), 2) << err();
}
