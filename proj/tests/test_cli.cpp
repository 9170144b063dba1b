#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "latbin/data_io.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(LATBIN_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

latbin::RecordTable parse(const std::string& csv) {
  std::istringstream in(csv);
  return latbin::read_records_csv(in);
}

std::string cell(const latbin::RecordTable& t, std::size_t row, const std::string& col) {
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    if (t.columns[j] == col) return std::get<std::string>(t.rows.at(row)[j]);
  return "<missing column " + col + ">";
}

// value of a fit output row by name
std::string fit_value(const latbin::RecordTable& t, const std::string& name, const std::string& col = "estimate") {
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (cell(t, i, "name") == name) return cell(t, i, col);
  return "<missing row " + name + ">";
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Cli, FitAutoSelectsPoissonOnJejunal) {
  const auto r = run("fit --builtin jejunal --model auto");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto t = parse(r.out);
  EXPECT_EQ(fit_value(t, "model"), "poisson");
  EXPECT_EQ(fit_value(t, "reject_poisson"), "false");
  EXPECT_NEAR(std::stod(fit_value(t, "beta0")), 6.705, 0.005);
  EXPECT_NEAR(std::stod(fit_value(t, "beta1")), -1.124, 0.005);
  EXPECT_NEAR(std::stod(fit_value(t, "mu")), 196.2, 0.5);
  EXPECT_NEAR(std::stod(fit_value(t, "beta1", "std_error")), 0.063, 0.063 * 0.02);
  EXPECT_FALSE(fit_value(t, "mu", "ci_lower").empty());
}

TEST(Cli, FitFullWarnsAboutFlatAlpha) {
  const auto r = run("fit --builtin jejunal --model full");
  EXPECT_EQ(r.status, 0);
  const auto t = parse(r.out);
  EXPECT_EQ(fit_value(t, "alpha_flat"), "true");
  EXPECT_EQ(fit_value(t, "alpha", "std_error"), "");
  EXPECT_NE(r.out.find("warning"), std::string::npos);
  const auto merged = run("fit --builtin jejunal --model full -o /dev/null", true);
  EXPECT_NE(merged.out.find("warning: likelihood is flat in alpha"), std::string::npos);
}

TEST(Cli, FitMissingFileIsIoError) {
  const auto r = run("fit --input /no/such/file.csv", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("/no/such/file.csv"), std::string::npos);
}

TEST(Cli, FitFromFile) {
  const auto path = temp_path("latbin_cli_fit.csv");
  latbin::write_records(path, latbin::dose_count_table(latbin::jejunal_records()));
  const auto a = run("fit --model poisson --input " + path);
  const auto b = run("fit --model poisson --builtin jejunal");
  std::remove(path.c_str());
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, MalformedInputReportsLine) {
  const auto path = temp_path("latbin_cli_bad.csv");
  std::ofstream(path) << "dose,count\n6.25,76\n6.5,oops\n";
  const auto r = run("fit --input " + path, true);
  std::remove(path.c_str());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
}

TEST(Cli, NonConvergenceExitsTwo) {
  const auto path = temp_path("latbin_cli_zero.csv");
  std::ofstream(path) << "dose,count\n1,0\n2,0\n3,0\n";
  const auto r = run("fit --model poisson --input " + path, true);
  std::remove(path.c_str());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("boundary"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("frobnicate").status, 1);
  EXPECT_EQ(run("fit --model bogus --builtin jejunal").status, 1);
  EXPECT_EQ(run("fit").status, 1);
  EXPECT_EQ(run("fit --builtin nope").status, 1);
  EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, TestSubcommand) {
  const auto r = run("test --builtin jejunal");
  ASSERT_EQ(r.status, 0);
  const auto t = parse(r.out);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(cell(t, 0, "selected_model"), "poisson");
  EXPECT_GT(std::stod(cell(t, 0, "p_value")), 0.05);
}

TEST(Cli, EfficiencyTableShapeAndDeterminism) {
  const auto a = run("efficiency");
  const auto b = run("efficiency");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto t = parse(a.out);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"setting", "beta1", "mu", "alpha", "rho", "gamma", "rho_gamma"}));
  ASSERT_EQ(t.rows.size(), 16u);
  EXPECT_NEAR(std::stod(cell(t, 0, "rho")), 0.706, 5e-4);
  EXPECT_NEAR(std::stod(cell(t, 0, "gamma")), 0.837, 5e-4);
}

TEST(Cli, EfficiencyCustomSettings) {
  const auto path = temp_path("latbin_cli_settings.csv");
  std::ofstream(path) << "setting,design,beta1,mu,alpha\n42,X1,1,100,25\n";
  const auto r = run("efficiency --settings " + path);
  std::remove(path.c_str());
  ASSERT_EQ(r.status, 0);
  const auto t = parse(r.out);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(cell(t, 0, "setting"), "42");
  EXPECT_NEAR(std::stod(cell(t, 0, "rho_gamma")), 0.591, 5e-4);
}

TEST(Cli, StructuredOutput) {
  const auto r = run("efficiency --setting 14 --format structured --full-precision");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["setting"], 14);
  EXPECT_NEAR(j["rho"].get<double>(), 0.786, 5e-4);
}

TEST(Cli, CurvesCrossCheckAndMonotone) {
  const auto r = run("curves --full-precision");
  ASSERT_EQ(r.status, 0);
  const auto t = parse(r.out);
  const auto eff = parse(run("efficiency --setting 1 --full-precision").out);
  double first_gamma = -1, last_gamma = -1, prev_sd_mu = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (cell(t, i, "curve") == "gamma_vs_alpha" && cell(t, i, "panel") == "1") {
      const double g = std::stod(cell(t, i, "gamma"));
      if (first_gamma < 0) first_gamma = g;
      last_gamma = g;
    }
    if (cell(t, i, "curve") == "sd_vs_mu" && cell(t, i, "panel") == "1") {
      const double s = std::stod(cell(t, i, "sd_mu"));
      EXPECT_GE(s, prev_sd_mu);
      prev_sd_mu = s;
    }
  }
  EXPECT_GE(last_gamma, first_gamma);
  const auto eff5 = parse(run("efficiency --setting 5 --full-precision").out);
  int matched = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (cell(t, i, "curve") != "gamma_vs_alpha" || cell(t, i, "panel") != "1") continue;
    const double a = std::stod(cell(t, i, "alpha"));
    if (a == 25.0) {
      EXPECT_EQ(cell(t, i, "gamma"), cell(eff, 0, "gamma"));
      ++matched;
    }
    if (a == 49.0) {
      EXPECT_EQ(cell(t, i, "gamma"), cell(eff5, 0, "gamma"));
      ++matched;
    }
  }
  EXPECT_EQ(matched, 2);
}

TEST(Cli, SimulateEchoesSeedAndIsThreadInvariant) {
  const auto a = run("simulate --setting 1 --samples 20 --seed 42 --threads 1");
  const auto b = run("simulate --setting 1 --samples 20 --seed 42 --threads 3");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto t = parse(a.out);
  EXPECT_EQ(cell(t, 0, "seed"), "42");
  EXPECT_EQ(cell(t, 0, "n_samples"), "20");
  const auto d = parse(run("simulate --setting 1 --samples 2").out);
  EXPECT_EQ(cell(d, 0, "seed"), "0");
}

TEST(Cli, SimulateSingleSample) {
  const auto r = run("simulate --setting 16 --samples 1");
  ASSERT_EQ(r.status, 0);
  const auto c = cell(parse(r.out), 0, "coverage");
  EXPECT_TRUE(c == "0" || c == "1") << c;
}

TEST(Cli, SimulateBadSetting) {
  EXPECT_EQ(run("simulate --setting 99 --samples 1").status, 1);
  EXPECT_EQ(run("simulate --samples 0").status, 1);
}
