#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

std::string binary() {
  const char* b = std::getenv("CARNOT_LW_BIN");
  return b ? b : "carnot-lw";
}

// Runs the tool through the shell; `env` is prepended verbatim (e.g. "CARNOT_LW_RNORM=3").
Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + binary() + "' " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "carnot_lw_cli_test";
  fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST(Cli, HelpListsEverySubcommand) {
  auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* c : {"bl-constant", "lw-verify", "nonlinear-lw", "set-lw", "entropy-check", "proof-chain", "radon-norm",
                        "product-combine", "sobolev-check", "iso-check", "suite"}) {
    EXPECT_NE(r.out.find(c), std::string::npos) << c;
    auto sub = run(std::string(c) + " --help");
    EXPECT_EQ(sub.code, 0) << c;
    EXPECT_NE(sub.out.find("Usage"), std::string::npos) << c;
  }
}

TEST(Cli, LwVerifyOnHeisenbergGaussians) {
  auto r = run(R"(lw-verify --group '{"d":0,"n":1,"alpha":[1]}' --preset gauss --res 128)");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("yes"), std::string::npos);
}

TEST(Cli, NonpositiveAlphaIsAUsageError) {
  auto r = run(R"(lw-verify --group '{"d":0,"n":1,"alpha":[-1]}')");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("0 < alpha_1 <= ... <= alpha_n"), std::string::npos) << r.out;
  auto dec = run(R"(set-lw --group '{"d":0,"n":2,"alpha":[2,1]}')");
  EXPECT_EQ(dec.code, 2);
  EXPECT_NE(dec.out.find("decreasing"), std::string::npos);
}

TEST(Cli, OtherUsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("suite nope").code, 2);
  EXPECT_EQ(run("lw-verify --res 1").code, 2);
  EXPECT_EQ(run("lw-verify --group '{not json'").code, 2);
  EXPECT_EQ(run("lw-verify --preset nope --res 16").code, 2);
  EXPECT_EQ(run("lw-verify --r-norm -1 --res 16").code, 2);
  EXPECT_EQ(run("lw-verify --res 16", "CARNOT_LW_RNORM=abc").code, 2);
  EXPECT_EQ(run("product-combine --left h1").code, 2);
}

TEST(Cli, ViolationExitsWithOne) {
  // a Radon norm far below the true one makes the constant too small
  auto r = run("lw-verify --res 32 --r-norm 0.01");
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("NO"), std::string::npos);
}

TEST(Cli, NumericalFailureExitsWithThree) {
  auto r = run(R"(entropy-check --group '{"d":0,"n":1,"alpha":[1e308]}' --res 16)");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("shear"), std::string::npos);
}

TEST(Cli, ProductCombineOfTwoHeisenbergGroups) {
  auto r = run("product-combine --left h1 --right h1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("c-bar: 2/7, 2/7, 2/7, 2/7"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("D-bar = 3/7 D + 3/7 D'"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("6/7 ln|R|"), std::string::npos) << r.out;
  auto line = run("product-combine --left h1 --right line");
  EXPECT_EQ(line.code, 0);
  EXPECT_NE(line.out.find("c-bar: 1/4, 1/2, 1/2"), std::string::npos) << line.out;
  EXPECT_NE(line.out.find("D-bar = 3/4 D"), std::string::npos) << line.out;
  auto custom = run(R"(product-combine --left '{"c":["1/2","1/2","1/2"],"D":0,"Q":3}' --right h1)");
  EXPECT_EQ(custom.code, 0) << custom.out;
}

TEST(Cli, ReportsAreByteIdenticalAcrossRuns) {
  for (const std::string args : {"set-lw --preset random --res 48 --seed 3", "entropy-check --preset bumps --res 32 --seed 5",
                                 "lw-verify --preset bumps --res 48 --seed 2"}) {
    const auto a = scratch("a"), b = scratch("b");
    ASSERT_EQ(run(args + " --out " + a.string()).code, 0) << args;
    ASSERT_EQ(run(args + " --out " + b.string()).code, 0) << args;
    for (const char* ext : {".jsonl", ".csv"}) {
      auto pa = a, pb = b;
      pa += ext;
      pb += ext;
      const auto x = slurp(pa);
      EXPECT_FALSE(x.empty());
      EXPECT_EQ(x, slurp(pb)) << args << ext;
    }
  }
}

TEST(Cli, PersistedReportContents) {
  const auto prefix = scratch("persisted");
  auto r = run("sobolev-check --res 48 --out " + prefix.string());
  ASSERT_EQ(r.code, 0) << r.out;
  auto jp = prefix, cp = prefix;
  jp += ".jsonl";
  cp += ".csv";
  std::istringstream js(slurp(jp));
  std::string line;
  int lines = 0;
  while (std::getline(js, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["metadata"]["seed"], 0);
    EXPECT_EQ(j["metadata"]["command"], "sobolev-check");
    EXPECT_TRUE(j["pass"].get<bool>());
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  const auto csv = slurp(cp);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "name,lhs,rhs,deficit,tolerance,pass,informational");
  EXPECT_FALSE(fs::exists(fs::path(jp.string() + ".tmp")));
}

TEST(Cli, EnvironmentOverridesRadonNorm) {
  const auto prefix = scratch("env");
  ASSERT_EQ(run("lw-verify --res 32 --out " + prefix.string(), "CARNOT_LW_RNORM=3.5").code, 0);
  auto p = prefix;
  p += ".jsonl";
  auto j = nlohmann::json::parse(slurp(p));
  EXPECT_DOUBLE_EQ(j["metadata"]["r_norm"].get<double>(), 3.5);
  // the flag wins over the environment
  ASSERT_EQ(run("lw-verify --res 32 --r-norm 2.5 --out " + prefix.string(), "CARNOT_LW_RNORM=3.5").code, 0);
  j = nlohmann::json::parse(slurp(p));
  EXPECT_DOUBLE_EQ(j["metadata"]["r_norm"].get<double>(), 2.5);
}

TEST(Cli, RemainingSubcommandsRun) {
  for (const std::string args :
       {"bl-constant", "bl-constant --datum pair-deletion:2", "nonlinear-lw --res 48", "set-lw --preset ball --res 48",
        "entropy-check --res 48", "proof-chain --res 12", "radon-norm --families disks gauss --resolutions 128", "radon-norm --family disks,gauss --res 96",
        "iso-check --res 48 --width 0.3", "suite products"}) {
    auto r = run(args);
    EXPECT_EQ(r.code, 0) << args << "\n" << r.out;
  }
  auto bl = run("bl-constant --datum nope");
  EXPECT_EQ(bl.code, 2);
}

TEST(Cli, AnalyticDensityPresetsAndGridFiles) {
  for (const char* p : {"uniform-box", "gaussian", "product", "triangle"}) {
    auto r = run(std::string("entropy-check --res 32 --preset ") + p + " --width 0.5");
    EXPECT_EQ(r.code, 0) << p << "\n" << r.out;
  }
  EXPECT_EQ(run("entropy-check --res 32 --width 0").code, 2);

  // a Gaussian density written as a text grid
  const auto path = scratch("density.txt");
  {
    std::ofstream os(path);
    const int n = 16;
    os << "3 -1 -1 -1 1 1 1 " << n << ' ' << n << ' ' << n << '\n';
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          auto c = [n](int m) { return -1.0 + (m + 0.5) * 2.0 / n; };
          os << std::exp(-8.0 * (c(i) * c(i) + c(j) * c(j) + c(k) * c(k))) << ' ';
        }
  }
  auto r = run("entropy-check --input " + path.string());
  EXPECT_EQ(r.code, 0) << r.out;
  auto wrong = run(R"(entropy-check --group '{"d":1,"n":1,"alpha":[1]}' --input )" + path.string());
  EXPECT_EQ(wrong.code, 2) << wrong.out;
  EXPECT_NE(wrong.out.find("dimension"), std::string::npos);
  // not a 0/1 raster
  EXPECT_EQ(run("set-lw --input " + path.string()).code, 2);
  EXPECT_EQ(run("entropy-check --input /nonexistent/grid").code, 2);
}
