#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CFMM_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string data(const std::string& rel) { return std::string(CFMM_DATA) + "/" + rel; }

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, PlanPrintsStats) {
  const auto r = run("plan " + data("pde/laplace3d.pde") + " --order 4");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("N(p): 35"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("fft shape: 9 9 3"), std::string::npos) << r.out;
}

TEST(Cli, PlanParseErrorNamesTheLine) {
  const auto r = run("plan " + data("pde/broken.pde") + " --order 4");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
}

TEST(Cli, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("plan").status, 2);
  EXPECT_EQ(run("plan /nonexistent.pde --order 3").status, 2);
  EXPECT_EQ(run("m2m-accuracy --config /nonexistent.json").status, 2);
  const auto bad = write_temp("cfmm_bad.json", R"({"kernel": {"name": "laplace2d"}, "radius": 1})");
  const auto r = run("m2m-accuracy --config " + bad);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("radius"), std::string::npos) << r.out;
  EXPECT_EQ(run("fmm-bench --mode sideways -n 100").status, 2);
  EXPECT_EQ(run("fmm-bench --kernel helmholtz2d -n 100").status, 2);
  EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, AccuracyCsvAndCheck) {
  const auto cfg = write_temp("cfmm_acc.json", R"({"kernel": {"name": "laplace2d"}, "orders": [4, 6],
      "radii": [0.01, 0.1], "grid": 6})");
  const auto out = ::testing::TempDir() + "cfmm_acc.csv";
  const auto r = run("m2m-accuracy --config " + cfg + " --output " + out + " --check");
  EXPECT_EQ(r.status, 0) << r.out;
  std::ifstream in(out);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "kernel,p,R,eps_rel");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Cli, FailedCheckExitsThree) {
  // Order 2 cannot reach the 1e-6 accuracy asserted by --check.
  const auto r = run("fmm-bench -k laplace2d -p 2 -n 400 --check");
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_NE(r.out.find("check failed"), std::string::npos);
  EXPECT_EQ(run("fmm-bench -k laplace2d -p 2 -n 400").status, 0);
}

TEST(Cli, OpcountAndKappaRun) {
  const auto op = write_temp("cfmm_op.json", R"({"kernel": {"name": "laplace2d"}, "orders": [8, 12], "ops": ["M2L"]})");
  const auto r = run("opcount --config " + op);
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("laplace2d,M2L,12,compressed+fft,"), std::string::npos) << r.out;
  const auto kc = write_temp("cfmm_k.json", R"({"orders": [4], "kappas": [2.0], "grid": 5})");
  const auto k = run("m2m-kappa --config " + kc);
  EXPECT_EQ(k.status, 0) << k.out;
  EXPECT_NE(k.out.find("kernel,p,kappa,eps_rel,eps_trunc"), std::string::npos);
}
