#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mlsm/grid_fields.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mlsm_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI from dir_ and returns its exit status; stdout and stderr
  // go to out.txt.
  int Run(const std::string& args, const std::string& env = "") {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + MLSM_CLI_PATH +
                            "' " + args + " > out.txt 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string Read(const fs::path& p) const {
    std::ifstream in(p.is_absolute() ? p : dir_ / p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void Write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpListsExitCodes) {
  EXPECT_EQ(Run("--help"), 0);
  const std::string out = Read("out.txt");
  EXPECT_NE(out.find("Exit codes"), std::string::npos);
  EXPECT_NE(out.find("5  invalid (non-positive) slowness"), std::string::npos);
  EXPECT_NE(out.find("invert"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(Run("invert --no-such-flag"), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("invert --threads 0 --scenario ex1"), 2);
}

TEST_F(Cli, ConfigErrorsExitThree) {
  EXPECT_EQ(Run("invert --scenario nope --n 17"), 3);
  Write("bad.cfg", "scenario = ex1\nepsilonn = 1\n");
  EXPECT_EQ(Run("invert --config bad.cfg"), 3);
  EXPECT_NE(Read("out.txt").find("epsilonn"), std::string::npos);
  Write("neg.cfg", "scenario = ex1\nn = 17\nepsilon = -1\n");
  EXPECT_EQ(Run("invert --config neg.cfg"), 3);
  EXPECT_EQ(Run("evolve --scenario ex1 --n 17"), 3);
}

TEST_F(Cli, IoErrorExitsEight) {
  EXPECT_EQ(Run("invert --config missing.cfg"), 8);
}

TEST_F(Cli, FieldErrorsExitFourAndFive) {
  Write("broken.field", "3 3 0 1 0 1\n1 2 3\n");
  EXPECT_EQ(Run("forward --slowness broken.field --source 0.5,0.5"), 4);
  Write("neg.field", "3 3 0 1 0 1\n1 1 1\n1 -1 1\n1 1 1\n");
  EXPECT_EQ(Run("forward --slowness neg.field --source 0,0"), 5);
}

TEST_F(Cli, ForwardHomogeneousConeAndManifest) {
  Write("one.field", [] {
    const mlsm::Grid2D g = mlsm::MakeGrid(0.0, 1.0, 0.0, 1.0, 21, 21);
    std::ostringstream os;
    mlsm::WriteField(mlsm::ScalarField(g, 1.0), os);
    return os.str();
  }());
  ASSERT_EQ(Run("forward --slowness one.field --source 0,0 --source 1,1 -o run"), 0);
  const mlsm::ScalarField T = mlsm::ReadField((dir_ / "run" / "T_00.field").string());
  const mlsm::Grid2D& g = T.grid();
  EXPECT_EQ(T(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(T(20, 0), 1.0);
  const double diag = T(20, 20);
  EXPECT_GE(diag, std::sqrt(2.0) - 1e-12);
  EXPECT_LE(diag, std::sqrt(2.0) + 0.1);
  EXPECT_EQ(g.nx, 21u);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "T_01.field"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "traces.csv"));
  const std::string manifest = Read(dir_ / "run" / "manifest.txt");
  EXPECT_NE(manifest.find("command = forward"), std::string::npos);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  ASSERT_EQ(Run("forward --scenario ex1 --n 17 --source 0,1", "MLSM_OUTPUT_DIR=envout"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "envout" / "T_00.field"));
  EXPECT_TRUE(fs::exists(dir_ / "envout" / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "envout" / "log.txt"));
}

TEST_F(Cli, ScenarioListAndDumpReplay) {
  ASSERT_EQ(Run("scenario list"), 0);
  const std::string list = Read("out.txt");
  for (const char* id : {"ex1", "ex7", "motion-fig2", "curvature-circles-5k"}) {
    EXPECT_NE(list.find(id), std::string::npos) << id;
  }
  ASSERT_EQ(Run("scenario dump ex5 --n 17 -o ex5.cfg"), 0);
  const std::string cfg = Read("ex5.cfg");
  EXPECT_NE(cfg.find("scenario = ex5"), std::string::npos);
  EXPECT_NE(cfg.find("epsilon"), std::string::npos);
  ASSERT_EQ(Run("invert --config ex5.cfg --iters 3 -o a"), 0);
  ASSERT_EQ(Run("invert --scenario ex5 --n 17 --iters 3 -o b"), 0);
  const std::string ha = Read(dir_ / "a" / "history.csv");
  EXPECT_EQ(ha.substr(0, ha.find('\n')), "iter,E,E_total");
  EXPECT_EQ(ha, Read(dir_ / "b" / "history.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "final_phi.field"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "final_S.field"));
}

TEST_F(Cli, InvertHistoryIndependentOfThreads) {
  ASSERT_EQ(Run("invert --scenario ex1 --n 17 --iters 5 --threads 1 -o t1"), 0);
  ASSERT_EQ(Run("invert --scenario ex1 --n 17 --iters 5 --threads 3 -o t3"), 0);
  const std::string h1 = Read(dir_ / "t1" / "history.csv");
  EXPECT_FALSE(h1.empty());
  EXPECT_EQ(h1, Read(dir_ / "t3" / "history.csv"));
}

TEST_F(Cli, EvolveWritesMetrics) {
  ASSERT_EQ(Run("evolve --scenario motion-fig2 --n 41 --t-final 0.2 -o ev"), 0);
  const std::string m = Read(dir_ / "ev" / "metrics.csv");
  EXPECT_EQ(m.substr(0, m.find('\n')), "t,step,radius_0,radius_1,gap");
  EXPECT_TRUE(fs::exists(dir_ / "ev" / "phi_final.field"));
}

TEST_F(Cli, IlluminationOutputs) {
  ASSERT_EQ(Run("illum --scenario ex1 --n 17 -o il"), 0);
  const mlsm::ScalarField F = mlsm::ReadField((dir_ / "il" / "F.field").string());
  for (double v : F.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_TRUE(fs::exists(dir_ / "il" / "eF.field"));
}
