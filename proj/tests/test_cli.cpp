#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
};

Outcome run(std::string const& args) {
  std::string const cmd = std::string(ILMS_CLI_PATH) + " " + args + " 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
  int const status = pclose(pipe.release());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path write_config(std::string const& name, std::string const& text) {
  auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Cli, ModesPrintsCsv) {
  auto r = run("modes --mu 0.1 --lambda 1,0.5 --nodes 10,40");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "m,mu_lambda,n_nodes,magnitude");
  EXPECT_NE(r.out.find("1,1.0000000000000001e-01,10,3.486784401"), std::string::npos) << r.out;
}

TEST(Cli, RunWritesRequestedFormats) {
  auto cfg = write_config("ilms_cli_run.json",
                          R"({"dimension": 2, "iterations": 50, "trials": 3,
                              "nodes": [{"step_size": 0.05}, {"step_size": 0.05}]})");
  auto out = fs::temp_directory_path() / "ilms_cli_run_out";
  fs::remove_all(out);
  auto r = run("run --config " + cfg.string() + " --out " + out.string() +
               " --format csv --trials 4 --seed 99 --parallelism 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(out / "learning_curve.csv"));
  EXPECT_FALSE(fs::exists(out / "learning_curve.json"));
  std::ifstream meta(out / "run_meta.json");
  auto doc = nlohmann::json::parse(meta);
  EXPECT_EQ(doc["seed"], 99u);
  EXPECT_EQ(doc["spec"]["trials"], 4);
  EXPECT_EQ(doc["spec"]["iterations"], 50);
}

TEST(Cli, CheckReportsStability) {
  auto stable = write_config("ilms_cli_stable.json", R"({"dimension": 2, "nodes": [{"step_size": 0.5}]})");
  auto r = run("check --config " + stable.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("stable=true"), std::string::npos) << r.out;

  auto unstable = write_config("ilms_cli_unstable.json", R"({"dimension": 2, "nodes": [{"step_size": 2.5}]})");
  r = run("check --config " + unstable.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("stable=false"), std::string::npos);
}

TEST(Cli, InvalidConfigFails) {
  auto bad = write_config("ilms_cli_bad.json", R"({"dimension": 2, "nodes": [{"step_size": -1}]})");
  EXPECT_EQ(run("check --config " + bad.string()).code, 2);
}

TEST(Cli, PresetModes) {
  auto out = fs::temp_directory_path() / "ilms_cli_fig3";
  fs::remove_all(out);
  auto r = run("preset fig3_modes --out " + out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(out / "modes.csv"));
  std::ifstream meta(out / "run_meta.json");
  EXPECT_EQ(nlohmann::json::parse(meta)["preset"], "fig3_modes");
  EXPECT_NE(run("preset nope --out " + out.string()).code, 0);
}
