#include "hermite_lab/lab.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hlab_lab_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig small_config() {
  return config_from_json(nlohmann::json::parse(R"({
    "d": 2, "lambdas": [20, 30, 42, 56], "pq": [[2, 4], [1, "inf"], [1.5, 3]],
    "masks": [{"kind": "global"}, {"kind": "ball", "radius": 0.5}],
    "witnesses": ["single_line"], "restarts": 2, "max_iter": 30, "seed": 5})"));
}

}  // namespace

TEST(Lab, FitRecoversKnownSlopeWithCalibratedErrors) {
  // y = 3 x^{-0.3} e^{noise}: the slope is unbiased and about 95% of 2-sigma intervals cover it
  std::mt19937_64 rng(51);
  std::normal_distribution<double> G(0, 0.02);
  const double s = -0.3;
  int covered = 0;
  const int trials = 2000;
  double mean = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::pair<double, double>> xy;
    for (double x : {50.0, 100.0, 200.0, 400.0, 800.0, 1600.0}) xy.emplace_back(x, 3 * std::pow(x, s) * std::exp(G(rng)));
    auto f = fit_loglog(xy);
    mean += f.slope / trials;
    // t quantile for 4 degrees of freedom
    if (std::abs(f.slope - s) <= 2.776 * f.stderr_) ++covered;
  }
  EXPECT_NEAR(mean, s, 1e-3);
  EXPECT_NEAR(covered / double(trials), 0.95, 0.02);
}

TEST(Lab, FitExactPowerLaw) {
  std::vector<std::pair<double, double>> xy;
  for (double x : {2.0, 4.0, 8.0, 16.0}) xy.emplace_back(x, 0.7 * std::pow(x, 1.25));
  auto f = fit_loglog(xy);
  EXPECT_NEAR(f.slope, 1.25, 1e-13);
  EXPECT_NEAR(std::exp(f.intercept), 0.7, 1e-12);
  EXPECT_FALSE(f.outlier);
}

TEST(Lab, FitFlagsOutlierAndRejectsBadInput) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 1; i <= 12; ++i) xy.emplace_back(i, std::pow(i, 0.5) * (1 + 1e-3 * ((i * 7) % 5 - 2)));
  xy[6].second *= 3;
  EXPECT_TRUE(fit_loglog(xy).outlier);
  EXPECT_THROW(fit_loglog({{1, 1}, {2, 2}, {3, 3}}), std::invalid_argument);
  EXPECT_THROW(fit_loglog({{1, 1}, {2, 2}, {3, -3}, {4, 4}}), std::invalid_argument);
  EXPECT_THROW(fit_loglog({{2, 1}, {2, 2}, {2, 3}, {2, 4}}), std::invalid_argument);
}

TEST(Lab, Judge) {
  FitReport r;
  r.slope = -0.12;
  EXPECT_EQ(judge(r, -0.1, 0.05).verdict, Verdict::PASS);
  EXPECT_EQ(judge(r, -0.2, 0.05).verdict, Verdict::FAIL);
  EXPECT_EQ(judge(r, -0.2, 0.05, true).verdict, Verdict::REPORT_ONLY);
  EXPECT_EQ(judge(r, std::nan(""), 0.05).verdict, Verdict::REPORT_ONLY);
}

TEST(Lab, ConfigValidation) {
  auto bad = [](const char* s) { return [s] { config_from_json(nlohmann::json::parse(s)); }; };
  EXPECT_THROW(bad(R"({"d": 2, "lambdas": [21]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "lambdas": [22, 20]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 4})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "lambdas": [400], "masks": [{"kind": "annulus"}], "mus": [0.5]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "lambdas": [400], "masks": [{"kind": "annulus"}], "mus": [0.01]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "masks": [{"kind": "disc"}]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "pq": [[0.5, 2]]})")(), std::invalid_argument);
  EXPECT_THROW(bad(R"({"d": 2, "method": "magic"})")(), std::invalid_argument);
  EXPECT_NO_THROW(bad(R"({"d": 2, "lambdas": [400], "masks": [{"kind": "annulus", "sigma": "-"}], "mus": [0.25, 0.125]})")());
}

TEST(Lab, ConfigJsonRoundTripAndHash) {
  auto c = small_config();
  auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  back.seed = 6;
  EXPECT_NE(config_hash(back), config_hash(c));
  EXPECT_TRUE(std::isinf(c.pq_list[1].q));
}

TEST(Lab, DerivedSeeds) {
  EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  auto cells = enumerate_cells(small_config());
  EXPECT_EQ(cells.size(), 2u * 4u * 3u);
  for (auto& s : cells) EXPECT_EQ(s.seed, derive_seed(5, s.index));
}

TEST(Lab, TheoryJoin) {
  Tolerances tol;
  auto g = theory_for("global", "power", 2, 4, 2, "lambda", tol);
  EXPECT_DOUBLE_EQ(g.value, global_two_q_exponent(4, 2));
  EXPECT_FALSE(g.report_only);
  auto r1 = theory_for("global", "rank_one", 2, kInf, 1, "lambda", tol);
  EXPECT_NEAR(r1.value, -1.0 / 12, 1e-15);
  auto a = theory_for("annulus++", "svd", 2, 2, 2, "mu", tol);
  EXPECT_NEAR(a.value, 0.5, 1e-15);
  EXPECT_TRUE(theory_for("annulus+-", "svd", 2, 2, 2, "mu", tol).report_only);
  auto w = theory_for("ball_r0.5", "witness:single_line", 2, 4, 2, "lambda", tol);
  EXPECT_NEAR(w.value, -0.125, 1e-15);
  EXPECT_FALSE(w.report_only);
  EXPECT_DOUBLE_EQ(w.tolerance, 0.07);
  // floor equals beta at (2, inf) but not at (2, 4)
  EXPECT_FALSE(theory_for("ball_r0.5", "witness:cube_sum", 2, kInf, 2, "lambda", tol).report_only);
  EXPECT_TRUE(theory_for("ball_r0.5", "witness:cube_sum", 2, 4, 2, "lambda", tol).report_only);
  EXPECT_DOUBLE_EQ(theory_for("annulus++", "witness:annulus_cube", 1.25, 6, 2, "lambda", tol).tolerance, 0.1);
}

TEST(Lab, SweepCsvRoundTrip) {
  SweepResult r;
  CellOutput o;
  SweepRow row;
  row.cell = 3;
  row.lambda = 42;
  row.q = kInf;
  row.mask = "ball_r0.5";
  row.method = "exact_endpoint";
  row.value = 0.123456789;
  row.status = "error: bad, \"quoted\"";
  o.rows.push_back(row);
  r.outputs.push_back(o);
  auto back = parse_sweep_csv(sweep_csv(r));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].status, row.status);
  EXPECT_EQ(back[0].value, row.value);
  EXPECT_TRUE(std::isinf(back[0].q));
  EXPECT_THROW(parse_sweep_csv("a,b\r\n"), std::runtime_error);
}

TEST(Lab, SweepIsDeterministicAcrossThreadCounts) {
  auto c = small_config();
  auto a = sweep_csv(run_sweep(c, 1)), b = sweep_csv(run_sweep(c, 2));
  EXPECT_EQ(a, b);
  auto rows = parse_sweep_csv(a);
  std::size_t ok = 0;
  for (auto& r : rows) ok += r.status.rfind("ok", 0) == 0;
  EXPECT_GT(ok, rows.size() / 2);
}

TEST(Lab, SweepFitReportPipeline) {
  auto dir = scratch("pipe");
  auto c = small_config();
  cmd_sweep(c, dir, 1);
  for (auto f : {"sweep.csv", "timings.csv", "estimates.jsonl", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  auto man = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(man.at("config_hash"), config_hash(c));
  EXPECT_EQ(man.at("files")[0].at("checksum"), file_checksum(dir / "sweep.csv"));
  auto rep = cmd_report(c.d, c.tolerances, parse_sweep_csv(read_file(dir / "sweep.csv")), dir);
  EXPECT_FALSE(rep.fits.empty());
  for (auto f : {"verdicts.csv", "fits.json", "slope_vs_theory.dat", "region_diagram.dat"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  fs::remove_all(dir);
}

TEST(Lab, EmptyReportWarns) {
  auto dir = scratch("empty");
  auto rep = cmd_report(2, Tolerances{}, {}, dir);
  EXPECT_TRUE(rep.fits.empty());
  ASSERT_FALSE(rep.warnings.empty());
  EXPECT_NE(rep.warnings[0].find("empty"), std::string::npos);
  EXPECT_EQ(csv_parse(read_file(dir / "verdicts.csv")).size(), 1u);
  fs::remove_all(dir);
}

TEST(Lab, FitSweepSkipsFailedCellsAndWarnsOnShortSeries) {
  std::vector<SweepRow> rows;
  for (double lam : {20.0, 30.0, 42.0, 56.0, 72.0}) {
    SweepRow r;
    r.lambda = lam;
    r.mask = "global";
    r.method = "nonlinear_power";
    r.q = 4;
    r.value = std::pow(lam, -1.0 / 12);
    rows.push_back(r);
  }
  rows[4].status = "error: boom";
  rows.push_back(rows[0]);
  rows.back().q = 6;
  std::vector<std::string> warn;
  auto fits = fit_sweep(rows, 2, Tolerances{}, &warn);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_EQ(fits[0].fit.points.size(), 4u);
  EXPECT_NEAR(fits[0].fit.slope, -1.0 / 12, 1e-12);
  EXPECT_EQ(fits[0].fit.verdict, Verdict::PASS);
  EXPECT_EQ(warn.size(), 1u);
}
