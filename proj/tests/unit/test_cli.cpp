#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("samdyn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const fs::path o = dir_ / "stdout.txt";
    const fs::path e = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + SAMDYN_CLI_PATH + "\" " + args + " > \"" + o.string() + "\" 2> \"" +
                            e.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ConstantsPrintsFixedPointValues) {
  const auto r = run("constants --lambdas 1,0.5 --eta 0.2 --rho 0.1");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gamma_1,0.025"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mu,0.1"), std::string::npos) << r.out;
}

TEST_F(Cli, ConfigFileAndOverride) {
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "# values\nlambdas = 1,0.5\neta = 0.2\nrho = 0.3\n";
  }
  const auto from_file = run("constants --config \"" + (dir_ / "run.cfg").string() + "\"");
  const auto flags = run("constants --lambdas 1,0.5 --eta 0.2 --rho 0.3");
  EXPECT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(from_file.out, flags.out);
  const auto overridden = run("constants --config \"" + (dir_ / "run.cfg").string() + "\" --rho 0.1");
  const auto direct = run("constants --lambdas 1,0.5 --eta 0.2 --rho 0.1");
  EXPECT_EQ(overridden.out, direct.out);
  EXPECT_NE(overridden.out, from_file.out);
}

TEST_F(Cli, ConfigurationErrorsExitTwo) {
  EXPECT_EQ(run("constants --lambdas 0.5,1").code, 2);
  EXPECT_EQ(run("constants --lambdas 1,0.5 --eta 0.6").code, 2);
  EXPECT_EQ(run("constants --lambdas 1,abc").code, 2);
  EXPECT_EQ(run("bounds --lambdas 1,0.5 --eta 0.2 --rho 0.1 --epsilon 0.5").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  {
    std::ofstream cfg(dir_ / "bad.cfg");
    cfg << "lambdas = 1,0.5\nwibble = 3\n";
  }
  const auto r = run("constants --config \"" + (dir_ / "bad.cfg").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("wibble"), std::string::npos) << r.err;
  EXPECT_EQ(run("cycle --lambdas 1,0.5 --eta 0.2 --rho 0.1 --trials 1 --out /proc/nonexistent/x").code, 2);
}

TEST_F(Cli, DriftExitCodes) {
  EXPECT_EQ(run("drift --loss quartic --lambdas 1,0.5 --eta 0.2 --rho 0.1 --c 0.3 --q4 0.5").code, 0);
  EXPECT_EQ(run("drift --loss quadratic --lambdas 1,0.5 --eta 0.2 --rho 0.1").code, 0);
  // No third-order slack: any higher-order residual exceeds a zero budget.
  EXPECT_EQ(run("drift --loss cubic --lambdas 1,0.5 --eta 0.2 --rho 0.1 --c 0.3").code, 1);
}

TEST_F(Cli, CycleWritesOutputsAndIsReproducible) {
  const std::string a = (dir_ / "a").string();
  const std::string b = (dir_ / "b").string();
  const std::string common = "cycle --lambdas 1,0.5,0.25 --eta 0.4 --rho 0.1 --seed 7 --trials 10 --steps 1500";
  const auto ra = run(common + " --out \"" + a + "\" --save-trajectories");
  const auto rb = run(common + " --out \"" + b + "\" --save-trajectories --workers 3");
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  for (const char* name : {"trials.csv", "summary.txt", "traj_0000.csv", "traj_0009.csv"}) {
    ASSERT_TRUE(fs::exists(fs::path(a) / name)) << name;
    EXPECT_EQ(slurp(fs::path(a) / name), slurp(fs::path(b) / name)) << name;
  }
  EXPECT_EQ(slurp(fs::path(a) / "traj_0000.csv").rfind("t,w_1,w_2,w_3,vnorm,J,delta,s\n", 0), 0u);
}

TEST_F(Cli, PotentialCheckPasses) {
  const auto r = run("potential-check --lambdas 1,0.6,0.2 --eta 0.3 --rho 0.1 --samples 100");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}
