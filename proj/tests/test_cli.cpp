#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using testing_support::fresh_dir;
using testing_support::problem_path;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "turnpike");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = turnpike::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST(CliValidate, ExitCodes) {
  EXPECT_EQ(run_cli({"validate", problem_path("cfg1.json")}).code, 0);
  const auto bad = run_cli({"validate", problem_path("r12_mismatch.json")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("R21"), std::string::npos);
  EXPECT_EQ(run_cli({"validate", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(CliRiccati, Cfg1Table) {
  const auto dir = fresh_dir("cli_riccati");
  const auto r = run_cli({"riccati", problem_path("cfg1.json"), "--T", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir / "riccati.csv"));
  ASSERT_EQ(rows.size(), 1002u);
  const auto header = fields(rows[0]);
  EXPECT_EQ(header.front(), "t");
  EXPECT_EQ(header[1], "P_0_0");
  EXPECT_EQ(header[header.size() - 2], "m1");
  EXPECT_EQ(header.back(), "m2");
  const auto first = fields(rows[1]);
  EXPECT_EQ(std::stod(first[0]), 0.0);
  EXPECT_NEAR(std::stod(first[1]), 0.4323323584, 1e-9);
  EXPECT_EQ(std::stod(fields(rows.back())[1]), 0.0);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "riccati");
  EXPECT_EQ(manifest["input_sha256"].get<std::string>().size(), 64u);
  EXPECT_EQ(manifest["parameters"]["T"], 1.0);
}

TEST(CliRiccati, Cfg0AllZero) {
  const auto dir = fresh_dir("cli_riccati0");
  ASSERT_EQ(run_cli({"riccati", problem_path("cfg0.json"), "--T", "2", "--out", dir.string()}).code,
            0);
  const auto rows = lines(slurp(dir / "riccati.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(fields(rows[i])[1], "0");
}

TEST(CliRiccati, RegularityBreachExitsOne) {
  const auto dir = fresh_dir("cli_breach");
  const auto r = run_cli(
      {"riccati", problem_path("cfg1_flipped_r22.json"), "--T", "1", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("regularity breach at t=1"), std::string::npos);
}

TEST(CliRiccati, BadOptionValue) {
  EXPECT_EQ(run_cli({"riccati", problem_path("cfg1.json"), "--step", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"riccati", problem_path("cfg1.json"), "--T", "abc"}).code, 2);
}

TEST(CliAre, Cfg1AndUnstable) {
  const auto dir = fresh_dir("cli_are");
  const auto r = run_cli({"are", problem_path("cfg1.json"), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir / "are.csv");
  EXPECT_NE(text.find("P_0_0,0.5"), std::string::npos) << text;
  EXPECT_FALSE(std::filesystem::exists(dir / "samples_x.csv"));

  const auto bad = run_cli({"are", problem_path("cfg3.json"), "--out", fresh_dir("cli_are3").string()});
  EXPECT_EQ(bad.code, 1);
}

TEST(CliAre, SampleBanks) {
  const auto dir = fresh_dir("cli_are_samples");
  ASSERT_EQ(run_cli({"are", problem_path("cfg2.json"), "--samples", "64", "--out", dir.string()})
                .code,
            0);
  const auto xs = lines(slurp(dir / "samples_x.csv"));
  const auto us = lines(slurp(dir / "samples_u.csv"));
  EXPECT_EQ(xs.size(), 65u);
  EXPECT_EQ(us.size(), 65u);
  EXPECT_EQ(xs[0], "x_0");
  EXPECT_EQ(us[0], "u_0,u_1");
}

TEST(CliTurnpike, Cfg2PassesAndIsDeterministic) {
  const auto a = fresh_dir("cli_tp_a");
  const auto b = fresh_dir("cli_tp_b");
  const std::vector<std::string> base{"turnpike", problem_path("cfg2.json"), "--x", "0",
                                      "--T",      "5,10",                    "--seed", "3"};
  auto with_out = [&](const std::filesystem::path& d) {
    auto args = base;
    args.push_back("--out");
    args.push_back(d.string());
    return args;
  };
  const auto ra = run_cli(with_out(a));
  ASSERT_EQ(ra.code, 0) << ra.out << ra.err;
  EXPECT_NE(ra.out.find("verdict: pass"), std::string::npos);
  ASSERT_EQ(run_cli(with_out(b)).code, 0);
  for (const char* f : {"summary.csv", "report_x0_T5.csv", "report_x0_T10.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

  const auto summary = lines(slurp(a / "summary.csv"));
  ASSERT_EQ(summary.size(), 3u);
  EXPECT_EQ(fields(summary[0]).back(), "verdict");
  EXPECT_EQ(fields(summary[1]).back(), "pass");
}

TEST(CliTurnpike, BadStateDimension) {
  const auto r = run_cli({"turnpike", problem_path("cfg2.json"), "--x", "1:2", "--out",
                          fresh_dir("cli_tp_bad").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(CliSimulate, EmptyBank) {
  const auto dir = fresh_dir("cli_sim0");
  const auto r = run_cli({"simulate", problem_path("cfg2.json"), "--paths", "0", "--T", "1",
                          "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(dir / "paths.csv")).size(), 1u);
  EXPECT_EQ(lines(slurp(dir / "moments.csv")).size(), 1002u);
}

TEST(CliSimulate, PathsAndMoments) {
  const auto dir = fresh_dir("cli_sim");
  const auto r = run_cli({"simulate", problem_path("cfg2.json"), "--paths", "10", "--T", "2",
                          "--x", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir / "paths.csv"));
  ASSERT_EQ(rows.size(), 51u);
  EXPECT_EQ(rows[0], "path,t,x_0");
  EXPECT_EQ(rows[1], "0,0,1");
  const auto moments = lines(slurp(dir / "moments.csv"));
  EXPECT_EQ(fields(moments[1])[1], "1");
}
