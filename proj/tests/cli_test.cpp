#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = ECSIM_CLI_PATH;
const std::string kQuick = std::string(ECSIM_CONFIG_DIR) + "/quick.cfg";

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ecsim_cli_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int exit_code;
  std::string stderr_text;
};

Outcome run(const std::string& args) {
  const std::string err = temp_path("stderr.txt");
  const std::string cmd = kCli + " " + args + " >/dev/null 2>" + err;
  const int status = std::system(cmd.c_str());
  Outcome o{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  std::remove(err.c_str());
  return o;
}

}  // namespace

TEST(Cli, BaselineWritesCsv) {
  const std::string out = temp_path("baseline.csv");
  std::remove(out.c_str());
  const auto r = run("baseline --config " + kQuick + " --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("theta,p_n,p_o,sa_delay,replicates,virality,mean_final_gc,std_final_gc\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3);
  std::remove(out.c_str());
}

TEST(Cli, EvaluateMissingCheckpointNamesPath) {
  const std::string ckpt = temp_path("missing.ckpt");
  std::remove(ckpt.c_str());
  const auto r = run("evaluate --config " + kQuick + " --checkpoint " + ckpt);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.stderr_text.find(ckpt), std::string::npos) << r.stderr_text;
  EXPECT_EQ(std::count(r.stderr_text.begin(), r.stderr_text.end(), '\n'), 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  EXPECT_EQ(run("baseline --no-such-flag").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("baseline --jobs zero").exit_code, 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const auto r = run("baseline --config " + temp_path("absent.cfg"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.stderr_text.rfind("error: ", 0), 0u);
}

TEST(Cli, SweepOutputIndependentOfJobs) {
  const std::string a = temp_path("jobs1.csv"), b = temp_path("jobs8.csv");
  ASSERT_EQ(run("sweep --config " + kQuick + " --seed 42 --jobs 1 --out " + a).exit_code, 0);
  ASSERT_EQ(run("sweep --config " + kQuick + " --seed 42 --jobs 8 --out " + b).exit_code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST(Cli, TrainEvaluatePlotPipeline) {
  const std::string ckpt = temp_path("agent.ckpt"), base = temp_path("p_base.csv"),
                    sa = temp_path("p_sa.csv"), svg = temp_path("p.svg");
  ASSERT_EQ(run("train --config " + kQuick + " --checkpoint " + ckpt).exit_code, 0);
  ASSERT_EQ(run("baseline --config " + kQuick + " --out " + base).exit_code, 0);
  const auto e = run("evaluate --config " + kQuick + " --checkpoint " + ckpt + " --out " + sa);
  ASSERT_EQ(e.exit_code, 0) << e.stderr_text;
  EXPECT_NE(slurp(sa).find(",5,10,"), std::string::npos);
  ASSERT_EQ(run("plot " + base + " " + sa + " --out " + svg).exit_code, 0);
  const std::string text = slurp(svg);
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("class=\"reference\""), std::string::npos);
  for (const auto& p : {ckpt, base, sa, svg}) std::remove(p.c_str());
}

TEST(Cli, PlotOfEmptyCsvFailsWithoutOutput) {
  const std::string csv = temp_path("empty.csv"), svg = temp_path("empty.svg");
  std::ofstream(csv).close();
  std::remove(svg.c_str());
  EXPECT_EQ(run("plot " + csv + " --out " + svg).exit_code, 1);
  EXPECT_FALSE(std::filesystem::exists(svg));
  std::remove(csv.c_str());
}
