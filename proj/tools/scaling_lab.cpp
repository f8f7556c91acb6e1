// scaling_lab: verify | sweep | fit | report
#include "hermite_lab/acceptance.hpp"
#include "hermite_lab/lab.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace hlab;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = 1;
  int dim = 0;
};

ExperimentConfig load_config(const Common& o) {
  nlohmann::json j = o.config.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(o.config));
  if (o.dim) j["d"] = o.dim;
  if (o.seed_set) j["seed"] = o.seed;
  if (!o.out.empty()) j["output_dir"] = o.out;
  return config_from_json(j);
}

// config recorded by a previous sweep in the same directory
ExperimentConfig config_from_dir(const fs::path& dir, const Common& o) {
  if (!o.config.empty()) return load_config(o);
  auto m = dir / "manifest.json";
  if (!fs::exists(m)) {
    ExperimentConfig c;
    if (o.dim) c.d = o.dim;
    return c;
  }
  auto j = nlohmann::json::parse(read_file(m)).at("config");
  if (o.dim) j["d"] = o.dim;
  return config_from_json(j);
}

std::vector<SweepRow> load_rows(const fs::path& dir) {
  auto p = dir / "sweep.csv";
  if (!fs::exists(p)) return {};
  return parse_sweep_csv(read_file(p));
}

int cmd_verify(const Common& o, double corrupt) {
  std::uint64_t seed = o.seed_set ? o.seed : 2024;
  auto checks = acceptance::identity_suite(seed, corrupt);
  nlohmann::json rep = nlohmann::json::array();
  bool ok = true;
  for (auto& c : checks) {
    rep.push_back(acceptance::to_json(c));
    ok = ok && c.pass();
  }
  // kernel fields from each oracle on a small grid, written and read back
  const double lam = 30;
  const double L = std::sqrt(lam) + 1;
  GridSpec g = make_grid(Box::cube(2, -L, L), 12, RuleKind::midpoint);
  std::vector<KernelOracle> oracles{direct_oracle(lam, 2), window_reconstruction_oracle(lam, 2), spectral_window_sum_oracle(lam, 2)};
  std::vector<KernelField> fields;
  for (auto& orc : oracles) fields.push_back(sample_kernel_field(orc, g, g));
  double scale = fields[0].values.cwiseAbs().maxCoeff();
  nlohmann::json kf = nlohmann::json::array();
  fs::path dir = o.out.empty() ? fs::path() : fs::path(o.out);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    double err = (fields[i].values - fields[0].values).cwiseAbs().maxCoeff() / scale;
    bool pass = err <= 1e-3;
    nlohmann::json e{{"label", fields[i].label}, {"method", fields[i].method}, {"max_rel_error_vs_direct", err}, {"pass", pass}};
    if (!dir.empty()) {
      fs::path base = dir / ("kernel_" + std::to_string(i));
      write_kernel_field(base, fields[i]);
      auto back = read_kernel_field(base);
      bool same = back.values == fields[i].values;
      e["file"] = base.filename().string() + ".bin";
      e["round_trip"] = same;
      pass = pass && same;
    }
    ok = ok && pass;
    kf.push_back(e);
  }
  nlohmann::json j{{"identities", rep}, {"kernel_fields", kf}, {"seed", seed}, {"corrupt_critical_angle", corrupt}, {"pass", ok}};
  std::cout << j.dump(2) << "\n";
  if (!dir.empty()) write_file(dir / "verify.json", j.dump(2) + "\n");
  if (!ok) std::cerr << "verify: identity suite FAILED\n";
  return ok ? 0 : 1;
}

int cmd_sweep_run(const Common& o) {
  ExperimentConfig c = load_config(o);
  fs::path dir = c.output_dir;
  auto r = cmd_sweep(c, dir, o.threads);
  std::size_t bad = 0, rows = 0;
  for (auto& out : r.outputs)
    for (auto& row : out.rows) {
      ++rows;
      if (row.status.rfind("ok", 0) != 0) ++bad;
    }
  std::cout << "sweep: " << r.cells.size() << " cells, " << rows << " rows, " << bad << " not ok -> " << (dir / "sweep.csv").string()
            << "\n";
  return 0;
}

int cmd_fit_run(const Common& o) {
  fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  ExperimentConfig c = config_from_dir(dir, o);
  auto rows = load_rows(dir);
  std::vector<std::string> warn;
  if (rows.empty()) warn.push_back("no sweep results in " + dir.string());
  auto fits = fit_sweep(rows, c.d, c.tolerances, &warn);
  fs::create_directories(dir);
  write_file(dir / "fits.csv", fits_csv(fits));
  nlohmann::json fj = nlohmann::json::array();
  for (auto& f : fits) fj.push_back(to_json(f));
  write_file(dir / "fits.json", fj.dump(2) + "\n");
  for (auto& w : warn) std::cerr << "warning: " << w << "\n";
  for (auto& f : fits) std::cout << describe(f.fit) << "\n";
  return 0;
}

int cmd_report_run(const Common& o) {
  fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  ExperimentConfig c = config_from_dir(dir, o);
  auto rows = load_rows(dir);
  auto rep = cmd_report(c.d, c.tolerances, rows, dir);
  for (auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::size_t pass = 0, fail = 0, info = 0;
  for (auto& f : rep.fits) {
    if (f.fit.verdict == Verdict::PASS) ++pass;
    else if (f.fit.verdict == Verdict::FAIL) ++fail;
    else ++info;
  }
  std::cout << rep.table;
  std::cout << "verdicts: " << pass << " PASS, " << fail << " FAIL, " << info << " REPORT_ONLY\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaling experiments for Hermite spectral projections"};
  app.require_subcommand(1);
  Common o;
  double corrupt = 0.0;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "experiment config (JSON)");
    s->add_option("--seed", o.seed, "experiment seed")->each([&](const std::string&) { o.seed_set = true; });
    s->add_option("--out", o.out, "output directory");
    s->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--dim", o.dim, "dimension d")->check(CLI::Range(1, 3));
  };
  auto* verify = app.add_subcommand("verify", "exact identities and kernel cross-checks");
  add_common(verify);
  verify->add_option("--corrupt-critical-angle", corrupt, "shift the critical angle (negative control)");
  auto* sweep = app.add_subcommand("sweep", "run a norm sweep");
  add_common(sweep);
  auto* fit = app.add_subcommand("fit", "log-log fits of a sweep");
  add_common(fit);
  auto* report = app.add_subcommand("report", "verdict table and plot data");
  add_common(report);
  CLI11_PARSE(app, argc, argv);
  try {
    if (*verify) return cmd_verify(o, corrupt);
    if (*sweep) return cmd_sweep_run(o);
    if (*fit) return cmd_fit_run(o);
    if (*report) return cmd_report_run(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
