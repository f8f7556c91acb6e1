#pragma once

#include "geometry.hpp"
#include "io.hpp"
#include "norms.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace hlab {

inline constexpr const char* kCodeVersion = "hermite_lab 0.1.0";

// ---- fits --------------------------------------------------------------------

enum class Verdict { PASS, FAIL, REPORT_ONLY };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::PASS: return "PASS";
    case Verdict::FAIL: return "FAIL";
    case Verdict::REPORT_ONLY: return "REPORT_ONLY";
  }
  return "?";
}

struct FitReport {
  std::string label;
  double slope = 0, intercept = 0, stderr_ = 0;
  double theory = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0;
  Verdict verdict = Verdict::REPORT_ONLY;
  bool outlier = false;
  std::vector<std::pair<double, double>> points;  // (log x, log y)
};

// least squares of log y on log x
inline FitReport fit_loglog(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 4) throw std::invalid_argument("fit_loglog: at least 4 points required");
  FitReport r;
  for (auto [x, y] : xy) {
    if (!(x > 0) || !(y > 0)) throw std::invalid_argument("fit_loglog: positive values required");
    r.points.emplace_back(std::log(x), std::log(y));
  }
  const double n = static_cast<double>(r.points.size());
  double mx = 0, my = 0;
  for (auto [u, v] : r.points) {
    mx += u;
    my += v;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (auto [u, v] : r.points) {
    sxx += (u - mx) * (u - mx);
    sxy += (u - mx) * (v - my);
  }
  if (!(sxx > 1e-300 * n)) throw std::invalid_argument("fit_loglog: degenerate abscissae");
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0;
  std::vector<double> res;
  for (auto [u, v] : r.points) {
    res.push_back(v - r.intercept - r.slope * u);
    ss += res.back() * res.back();
  }
  double sigma = std::sqrt(ss / (n - 2.0));
  r.stderr_ = sigma / std::sqrt(sxx);
  for (double e : res)
    if (sigma > 1e-14 && std::abs(e) > 3.0 * sigma) r.outlier = true;
  return r;
}

inline FitReport judge(FitReport r, double theory, double tol, bool report_only = false) {
  r.theory = theory;
  r.tolerance = tol;
  if (report_only || std::isnan(theory)) r.verdict = Verdict::REPORT_ONLY;
  else r.verdict = std::abs(r.slope - theory) <= tol ? Verdict::PASS : Verdict::FAIL;
  return r;
}

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (auto [u, v] : r.points) pts.push_back({u, v});
  return {{"label", r.label},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"stderr", r.stderr_},
          {"theory", std::isnan(r.theory) ? nlohmann::json(nullptr) : nlohmann::json(r.theory)},
          {"tolerance", r.tolerance},
          {"verdict", to_string(r.verdict)},
          {"outlier", r.outlier},
          {"points", pts}};
}

inline std::string describe(const FitReport& r) {
  std::ostringstream s;
  s.precision(4);
  s << r.label << ": slope " << r.slope << " +- " << r.stderr_;
  if (!std::isnan(r.theory)) s << " vs " << r.theory << " (tol " << r.tolerance << ")";
  s << " " << to_string(r.verdict);
  return s.str();
}

// ---- configuration --------------------------------------------------------------

struct PQPoint {
  double p, q;
};

inline double parse_exponent(const nlohmann::json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    return std::stod(s);
  }
  return j.get<double>();
}

struct MaskSpec {
  std::string kind = "global";  // global | annulus | ball | fixed
  int sigma = +1, sigma_prime = +1;
  double radius = 0.5;  // ball: radius / sqrt(lambda); fixed: absolute radius

  std::string name() const {
    auto sg = [](int s) { return s > 0 ? std::string("+") : std::string("-"); };
    if (kind == "annulus") return "annulus" + sg(sigma) + sg(sigma_prime);
    if (kind == "ball") return "ball_r" + fmt(radius);
    if (kind == "fixed") return "fixed_r" + fmt(radius);
    return kind;
  }
};

struct Tolerances {
  double slope_exact = 0.05, slope_witness = 0.07, slope_annulus_witness = 0.1;
  double identity = 1e-10, finite_difference = 1e-6;
};

struct ExperimentConfig {
  int d = 2;
  std::vector<double> lambdas;
  std::vector<double> mus;
  std::vector<PQPoint> pq_list;
  std::vector<MaskSpec> masks{MaskSpec{}};
  std::vector<WitnessKind> witnesses;
  std::string method = "auto";  // auto | power
  int restarts = 8, max_iter = 80;
  double tol = 1e-8;
  double nodes_per_wavelength = 4.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  Tolerances tolerances;

  void validate() const {
    if (d < 1 || d > 3) throw std::invalid_argument("config: d in {1,2,3}");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      double l = lambdas[i];
      if (l != std::floor(l) || l < d || static_cast<long>(l - d) % 2 != 0)
        throw std::invalid_argument("config: lambda " + fmt(l) + " is not of the form 2N + d");
      if (i && !(l > lambdas[i - 1])) throw std::invalid_argument("config: lambdas must increase strictly");
    }
    bool annulus = std::any_of(masks.begin(), masks.end(), [](const MaskSpec& m) { return m.kind == "annulus"; });
    if (annulus) {
      if (mus.empty()) throw std::invalid_argument("config: annulus masks need mus");
      double lo = lambdas.empty() ? 0.0 : std::pow(lambdas.back(), -2.0 / 3.0);
      for (double m : mus)
        if (!(m <= 0.25) || m < lo * (1 - 1e-12))
          throw std::invalid_argument("config: mu " + fmt(m) + " outside [lambda^{-2/3}, 1/4]");
    }
    for (auto& m : masks)
      if (m.kind != "global" && m.kind != "annulus" && m.kind != "ball" && m.kind != "fixed")
        throw std::invalid_argument("config: unknown mask " + m.kind);
    for (auto& pq : pq_list)
      if (!(pq.p >= 1) || !(pq.q >= 1)) throw std::invalid_argument("config: exponents must be >= 1");
    if (method != "auto" && method != "power") throw std::invalid_argument("config: method auto|power");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json pq = nlohmann::json::array();
  for (auto& x : c.pq_list) pq.push_back({exponent_json(x.p), exponent_json(x.q)});
  nlohmann::json masks = nlohmann::json::array();
  for (auto& m : c.masks)
    masks.push_back({{"kind", m.kind}, {"sigma", m.sigma}, {"sigma_prime", m.sigma_prime}, {"radius", m.radius}});
  nlohmann::json wit = nlohmann::json::array();
  for (auto w : c.witnesses) wit.push_back(to_string(w));
  return {{"d", c.d},
          {"lambdas", c.lambdas},
          {"mus", c.mus},
          {"pq", pq},
          {"masks", masks},
          {"witnesses", wit},
          {"method", c.method},
          {"restarts", c.restarts},
          {"max_iter", c.max_iter},
          {"tol", c.tol},
          {"nodes_per_wavelength", c.nodes_per_wavelength},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"tolerances",
           {{"slope_exact", c.tolerances.slope_exact},
            {"slope_witness", c.tolerances.slope_witness},
            {"slope_annulus_witness", c.tolerances.slope_annulus_witness},
            {"identity", c.tolerances.identity},
            {"finite_difference", c.tolerances.finite_difference}}}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.d = j.value("d", 2);
  c.lambdas = j.value("lambdas", std::vector<double>{});
  c.mus = j.value("mus", std::vector<double>{});
  if (j.contains("pq"))
    for (auto& e : j.at("pq")) c.pq_list.push_back({parse_exponent(e.at(0)), parse_exponent(e.at(1))});
  if (j.contains("masks")) {
    c.masks.clear();
    for (auto& m : j.at("masks")) {
      MaskSpec s;
      s.kind = m.value("kind", "global");
      auto sg = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>() == "-" ? -1 : 1;
        return v.get<int>() < 0 ? -1 : 1;
      };
      if (m.contains("sigma")) s.sigma = sg(m.at("sigma"));
      if (m.contains("sigma_prime")) s.sigma_prime = sg(m.at("sigma_prime"));
      s.radius = m.value("radius", 0.5);
      c.masks.push_back(s);
    }
  }
  if (j.contains("witnesses"))
    for (auto& w : j.at("witnesses")) c.witnesses.push_back(witness_kind_from(w.get<std::string>()));
  c.method = j.value("method", "auto");
  c.restarts = j.value("restarts", 8);
  c.max_iter = j.value("max_iter", 80);
  c.tol = j.value("tol", 1e-8);
  c.nodes_per_wavelength = j.value("nodes_per_wavelength", 4.0);
  c.seed = j.value("seed", std::uint64_t{1});
  c.output_dir = j.value("output_dir", "out");
  if (j.contains("tolerances")) {
    auto& t = j.at("tolerances");
    c.tolerances.slope_exact = t.value("slope_exact", c.tolerances.slope_exact);
    c.tolerances.slope_witness = t.value("slope_witness", c.tolerances.slope_witness);
    c.tolerances.slope_annulus_witness = t.value("slope_annulus_witness", c.tolerances.slope_annulus_witness);
    c.tolerances.identity = t.value("identity", c.tolerances.identity);
    c.tolerances.finite_difference = t.value("finite_difference", c.tolerances.finite_difference);
  }
  c.validate();
  return c;
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

// splitmix64 step; cell seeds depend only on the experiment seed and the cell index
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---- theory join ------------------------------------------------------------------

inline bool in_exponent_square(double p, double q) {
  double a = 1.0 / p, b = std::isinf(q) ? 0.0 : 1.0 / q;
  return a >= 0.5 - 1e-12 && a <= 1.0 + 1e-12 && b >= -1e-12 && b <= 0.5 + 1e-12;
}

inline Pt exponent_point(double p, double q) { return {1.0 / p, std::isinf(q) ? 0.0 : 1.0 / q}; }

// lambda-exponents of the witness ratios (d = 2 constructions)
inline double witness_lambda_theory(WitnessKind k, double p, double q, int d) {
  double ip = 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q, D = d;
  switch (k) {
    case WitnessKind::cube_sum: return 0.5 * (D - 1) - 0.5 * D * (ip + iq);
    case WitnessKind::single_line: return -0.5 * (ip - iq);
    case WitnessKind::small_cube: return -1.0 + 0.5 * D * (ip - iq);
    case WitnessKind::annulus_cube: return -0.5 + 0.5 * D * (1.0 - ip - iq);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double witness_mu_theory(double p, double q, int d) {
  double ip = 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q;
  return -0.25 + d * (0.75 - ip - 0.5 * iq);
}

// d = 1: ||h_N||_{p'} ||h_N||_q ~ N^e (log N)^g
inline std::pair<double, double> rank_one_exponent(double p, double q) {
  auto a = expected_lp_exponent(conj_exp(p)), b = expected_lp_exponent(q);
  return {a.exponent + b.exponent, a.log_power + b.log_power};
}

struct Theory {
  double value = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.05;
  bool report_only = false;
  std::string source;
};

// axis: "lambda" or "mu"
inline Theory theory_for(const std::string& mask, const std::string& method, double p, double q, int d,
                         const std::string& axis, const Tolerances& tol) {
  Theory t;
  t.tolerance = tol.slope_exact;
  if (method.rfind("witness:", 0) == 0) {
    auto k = witness_kind_from(method.substr(8));
    t.tolerance = k == WitnessKind::annulus_cube ? tol.slope_annulus_witness : tol.slope_witness;
    if (axis == "lambda") {
      t.value = witness_lambda_theory(k, p, q, d);
      t.source = "witness floor";
      // ball witnesses are gated only where their floor is the sharp exponent
      if (k != WitnessKind::annulus_cube)
        t.report_only = !in_exponent_square(p, q) || d < 2 || std::abs(t.value - beta_max(exponent_point(p, q), d)) > 1e-12;
    } else if (k == WitnessKind::annulus_cube) {
      t.value = witness_mu_theory(p, q, d);
      t.source = "annulus witness mu-exponent";
    }
    return t;
  }
  if (mask == "global") {
    if (d == 1 && axis == "lambda") {
      auto [e, g] = rank_one_exponent(p, q);
      t.value = e;
      t.report_only = g != 0.0;  // log factor present
      t.source = "rank-one composite";
    } else if (d >= 2 && p == 2.0 && axis == "lambda") {
      t.value = global_two_q_exponent(q, d);
      t.source = "global 2->q";
    }
    return t;
  }
  if (!in_exponent_square(p, q) || d < 2) return t;
  Pt pt = exponent_point(p, q);
  if (mask.rfind("annulus++", 0) == 0) {
    t.value = axis == "mu" ? gamma_exponent(pt, d) : beta_max(pt, d);
    t.source = axis == "mu" ? "gamma" : "beta";
  } else if (mask.rfind("annulus", 0) == 0) {
    t.report_only = true;  // mixed or inner annuli
    t.source = "unbalanced/inner annulus";
  } else if (mask.rfind("ball", 0) == 0 && axis == "lambda") {
    t.value = beta_max(pt, d);
    t.source = "beta";
  } else if (mask.rfind("fixed", 0) == 0 && axis == "lambda") {
    t.value = beta_max(pt, d);
    t.report_only = true;
    t.source = "beta (fixed set)";
  }
  return t;
}

// ---- sweep ---------------------------------------------------------------------------

struct SweepCell {
  std::size_t index = 0;
  double lambda = 0, mu = 0, p = 2, q = 2;
  MaskSpec mask;
  std::uint64_t seed = 0;
};

struct SweepRow {
  std::size_t cell = 0;
  double lambda = 0, mu = 0, p = 2, q = 2;
  std::string mask, method;
  double value = std::numeric_limits<double>::quiet_NaN();
  double witness_floor = 0;
  std::string status = "ok";
};

struct CellOutput {
  std::vector<SweepRow> rows;
  std::vector<nlohmann::json> estimates;
  double wallclock = 0;
};

inline std::vector<SweepCell> enumerate_cells(const ExperimentConfig& c) {
  std::vector<SweepCell> cells;
  for (const auto& m : c.masks)
    for (double lam : c.lambdas) {
      std::vector<double> mus = m.kind == "annulus" ? c.mus : std::vector<double>{0.0};
      for (double mu : mus)
        for (const auto& pq : c.pq_list) {
          SweepCell s;
          s.index = cells.size();
          s.lambda = lam;
          s.mu = mu;
          s.p = pq.p;
          s.q = pq.q;
          s.mask = m;
          s.seed = derive_seed(c.seed, s.index);
          cells.push_back(s);
        }
    }
  return cells;
}

namespace detail {

inline SweepRow base_row(const SweepCell& s) {
  SweepRow r;
  r.cell = s.index;
  r.lambda = s.lambda;
  r.mu = s.mu;
  r.p = s.p;
  r.q = s.q;
  r.mask = s.mask.name();
  return r;
}

inline PowerOptions power_options(const ExperimentConfig& c, const SweepCell& s, bool real_field) {
  PowerOptions o;
  o.restarts = c.restarts;
  o.max_iter = c.max_iter;
  o.tol = c.tol;
  o.seed = s.seed;
  o.real_field = real_field;
  return o;
}

inline void record(CellOutput& out, SweepRow row, const NormEstimate& e) {
  row.value = e.value;
  row.method = to_string(e.method);
  row.witness_floor = std::max(row.witness_floor, e.witness_floor);
  if (e.method == NormMethod::nonlinear_power && e.stalled) row.status = "ok_iteration_cap";
  if (!e.monotone) row.status = "non_monotone";
  auto j = to_json(e);
  j["cell"] = row.cell;
  j["lambda"] = row.lambda;
  j["mu"] = row.mu;
  j["mask"] = row.mask;
  out.estimates.push_back(std::move(j));
  out.rows.push_back(std::move(row));
}

inline void run_d1(const ExperimentConfig& c, const SweepCell& s, CellOutput& out) {
  SweepRow row = base_row(s);
  if (s.mask.kind != "global") {
    const double R = s.mask.kind == "ball" ? s.mask.radius * std::sqrt(s.lambda) : s.mask.radius;
    Rule ax = breakpoint_axis(s.lambda, {-R, R}, std::max(6.0, c.nodes_per_wavelength));
    GridSpec g = grid_from_axes({ax});
    auto T = assemble(direct_oracle(s.lambda, 1), g, g);
    if (s.p == 1.0 || std::isinf(s.q)) return record(out, row, norm_endpoint(T, s.p, s.q));
    if (s.p == 2.0 && s.q == 2.0) return record(out, row, norm_svd(T));
    auto e = norm_pq(T, s.p, s.q, {}, power_options(c, s, true));
    return record(out, row, e);
  }
  NormEstimate e;
  e.p = s.p;
  e.q = s.q;
  e.method = NormMethod::rank_one;
  e.value = rank_one_norm_d1(s.lambda, s.p, s.q);
  e.seed = s.seed;
  record(out, row, e);
}

inline void run_global_or_ball(const ExperimentConfig& c, const SweepCell& s, CellOutput& out) {
  const double lam = s.lambda;
  SweepRow row = base_row(s);
  const bool masked = s.mask.kind != "global";
  const double R = s.mask.kind == "ball" ? s.mask.radius * std::sqrt(lam) : s.mask.radius;
  Rule ax = masked ? breakpoint_axis(lam, {-R, R}, c.nodes_per_wavelength) : projection_axis(lam, 1.5, c.nodes_per_wavelength);
  TensorProjection P(lam, c.d, ax);
  if (masked) {
    Mask m = mask_where(P.grid(), [R](const Vec& x) { return x.norm() <= R; });
    P.set_masks(m, m);
  }
  // witness ratios (d = 2, ball of radius sqrt(lambda)/2)
  std::vector<VecC> warm;
  if (c.d == 2 && s.mask.kind == "ball" && std::abs(s.mask.radius - 0.5) < 1e-12) {
    for (auto k : c.witnesses) {
      if (k == WitnessKind::annulus_cube) continue;
      SweepRow wr = base_row(s);
      wr.method = "witness:" + to_string(k);
      try {
        Witness w = make_witness(k, lam, 0.0, s.seed);
        wr.value = witness_ratio_ball(w, s.p, s.q).ratio;
        VecC f(P.cols());
        for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = w(P.grid().node(i));
        if (f.cwiseAbs().maxCoeff() > 0) warm.push_back(std::move(f));
      } catch (const std::exception& e) {
        wr.status = std::string("error: ") + e.what();
      }
      row.witness_floor = std::max(row.witness_floor, std::isnan(wr.value) ? 0.0 : wr.value);
      out.rows.push_back(wr);
    }
  }
  const bool exact_ok = c.method == "auto";
  if (exact_ok && std::isinf(s.q) && (s.p == 1.0 || (s.p == 2.0 && !masked))) {
    Eigen::VectorXd diag = P.diagonal();
    double mx = 0;
    for (Eigen::Index i = 0; i < diag.size(); ++i)
      if (!masked || P.grid().node(i).norm() <= R) mx = std::max(mx, diag(i));
    NormEstimate e;
    e.p = s.p;
    e.q = s.q;
    e.method = NormMethod::exact_endpoint;
    e.value = s.p == 1.0 ? mx : std::sqrt(mx);
    e.seed = s.seed;
    return record(out, row, e);
  }
  if (s.p == 1.0 || std::isinf(s.q) || std::isinf(s.p)) {
    row.status = "unsupported: endpoint on structured grid";
    out.rows.push_back(row);
    return;
  }
  if (s.p == 2.0 && !masked) {
    LevelSynthesis S(P);
    return record(out, row, norm_pq(S, 2.0, s.q, {}, power_options(c, s, true)));
  }
  record(out, row, norm_pq(P, s.p, s.q, warm, power_options(c, s, true)));
}

inline void run_annulus(const ExperimentConfig& c, const SweepCell& s, CellOutput& out) {
  const double lam = s.lambda, mu = s.mu;
  SweepRow row = base_row(s);
  if (mu < std::pow(lam, -2.0 / 3.0) * (1 - 1e-12)) {
    row.status = "skipped: mu below lambda^{-2/3}";
    out.rows.push_back(row);
    return;
  }
  if (c.d != 2) {
    row.status = "unsupported: annulus operators for d = 2 only";
    out.rows.push_back(row);
    return;
  }
  auto [o0, o1] = annulus_radii(lam, mu, s.mask.sigma);
  auto [i0, i1] = annulus_radii(lam, mu, s.mask.sigma_prime);
  PolarOperator P(projection_levels(lam), radial_grid(i0, i1, lam, 24), radial_grid(o0, o1, lam, 24));
  std::vector<VecC> warm;
  if (s.mask.sigma > 0 && s.mask.sigma_prime > 0 &&
      std::find(c.witnesses.begin(), c.witnesses.end(), WitnessKind::annulus_cube) != c.witnesses.end()) {
    SweepRow wr = base_row(s);
    wr.method = "witness:annulus_cube";
    try {
      Witness w = make_witness(WitnessKind::annulus_cube, lam, mu, s.seed);
      VecC f = annulus_kernel_witness(P, w);
      wr.value = witness_ratio(P, f, s.p, s.q);
      warm.push_back(std::move(f));
    } catch (const std::exception& e) {
      wr.status = std::string("error: ") + e.what();
    }
    row.witness_floor = std::isnan(wr.value) ? 0.0 : wr.value;
    out.rows.push_back(wr);
  }
  NormEstimate e;
  e.p = s.p;
  e.q = s.q;
  e.seed = s.seed;
  if (c.method == "auto" && s.p == 2.0 && s.q == 2.0) {
    e.method = NormMethod::svd;
    e.value = P.norm_22();
    return record(out, row, e);
  }
  if (c.method == "auto" && s.p == 1.0 && std::isinf(s.q)) {
    e.method = NormMethod::exact_endpoint;
    e.value = P.max_abs_kernel();
    return record(out, row, e);
  }
  if (s.p == 1.0 || std::isinf(s.q) || std::isinf(s.p)) {
    row.status = "unsupported: endpoint on polar grid";
    out.rows.push_back(row);
    return;
  }
  record(out, row, norm_pq(P, s.p, s.q, warm, power_options(c, s, true)));
}

}  // namespace detail

inline CellOutput run_cell(const ExperimentConfig& c, const SweepCell& s) {
  CellOutput out;
  auto t0 = std::chrono::steady_clock::now();
  try {
    if (c.d == 1) detail::run_d1(c, s, out);
    else if (s.mask.kind == "annulus") detail::run_annulus(c, s, out);
    else detail::run_global_or_ball(c, s, out);
  } catch (const std::exception& e) {
    SweepRow r = detail::base_row(s);
    r.status = std::string("error: ") + e.what();
    out.rows.push_back(r);
  }
  out.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<CellOutput> outputs;  // same order as cells
};

// cells run on a shared queue; results land in cell order
inline SweepResult run_sweep(const ExperimentConfig& c, int threads = 1) {
  SweepResult r;
  r.cells = enumerate_cells(c);
  r.outputs.resize(r.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < r.cells.size();) r.outputs[i] = run_cell(c, r.cells[i]);
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return r;
}

inline const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h{"cell", "lambda", "mu", "p", "q", "mask", "method", "value", "witness_floor", "status"};
  return h;
}

inline std::string sweep_csv(const SweepResult& r) {
  std::string s = csv_line(sweep_header());
  for (const auto& o : r.outputs)
    for (const auto& row : o.rows)
      s += csv_line({std::to_string(row.cell), fmt(row.lambda), fmt(row.mu), fmt(row.p), fmt(row.q), row.mask, row.method,
                     fmt(row.value), fmt(row.witness_floor), row.status});
  return s;
}

inline std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  auto rows = csv_parse(text);
  std::vector<SweepRow> out;
  if (rows.empty()) return out;
  if (rows[0] != sweep_header()) throw std::runtime_error("sweep csv: unexpected header");
  auto num = [](const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
  };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != sweep_header().size()) throw std::runtime_error("sweep csv: bad row " + std::to_string(i));
    SweepRow r;
    r.cell = std::stoul(f[0]);
    r.lambda = num(f[1]);
    r.mu = num(f[2]);
    r.p = num(f[3]);
    r.q = num(f[4]);
    r.mask = f[5];
    r.method = f[6];
    r.value = num(f[7]);
    r.witness_floor = num(f[8]);
    r.status = f[9];
    out.push_back(r);
  }
  return out;
}

struct Manifest {
  nlohmann::json json;
};

inline nlohmann::json make_manifest(const ExperimentConfig& c, const fs::path& dir, const std::vector<std::string>& files,
                                    const nlohmann::json& extra = {}) {
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& f : files) fl.push_back({{"file", f}, {"checksum", file_checksum(dir / f)}});
  nlohmann::json branch = nlohmann::json::array();
  if (c.d >= 1 && c.d <= 3) {
    cd b = branch_constant(c.d);
    branch = {b.real(), b.imag()};
  }
  nlohmann::json j{{"config", to_json(c)},
                   {"config_hash", config_hash(c)},
                   {"seed", c.seed},
                   {"code_version", kCodeVersion},
                   {"branch_constant", branch},
                   {"files", fl}};
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

inline void persist_manifest(const ExperimentConfig& c, const fs::path& dir, const std::vector<std::string>& files,
                             const nlohmann::json& extra = {}) {
  write_file(dir / "manifest.json", make_manifest(c, dir, files, extra).dump(2) + "\n");
}

// writes sweep.csv (deterministic), timings.csv, estimates.jsonl and manifest.json
inline SweepResult cmd_sweep(const ExperimentConfig& c, const fs::path& dir, int threads = 1) {
  SweepResult r = run_sweep(c, threads);
  fs::create_directories(dir);
  write_file(dir / "sweep.csv", sweep_csv(r));
  std::string t = csv_line({"cell", "wallclock_s"});
  std::string est;
  for (std::size_t i = 0; i < r.outputs.size(); ++i) {
    t += csv_line({std::to_string(i), fmt(r.outputs[i].wallclock)});
    for (const auto& e : r.outputs[i].estimates) est += e.dump() + "\n";
  }
  write_file(dir / "timings.csv", t);
  write_file(dir / "estimates.jsonl", est);
  persist_manifest(c, dir, {"sweep.csv", "timings.csv", "estimates.jsonl"});
  return r;
}

// ---- fit and report ------------------------------------------------------------------

struct FitRow {
  FitReport fit;
  std::string mask, method, axis;
  double p = 2, q = 2, fixed = 0;  // fixed: mu for lambda-fits, lambda for mu-fits
  std::string theory_source;
};

inline std::vector<FitRow> fit_sweep(const std::vector<SweepRow>& rows, int d, const Tolerances& tol,
                                     std::vector<std::string>* warnings = nullptr) {
  using Key = std::tuple<std::string, std::string, double, double, double>;
  std::map<Key, std::map<double, double>> by_lambda, by_mu;
  for (const auto& r : rows) {
    if (r.status.rfind("ok", 0) != 0 || !(r.value > 0)) continue;
    by_lambda[{r.mask, r.method, r.p, r.q, r.mu}][r.lambda] = r.value;
    if (r.mask.rfind("annulus", 0) == 0) by_mu[{r.mask, r.method, r.p, r.q, r.lambda}][r.mu] = r.value;
  }
  std::vector<FitRow> out;
  auto emit = [&](const Key& k, const std::map<double, double>& pts, const std::string& axis) {
    auto [mask, method, p, q, fixed] = k;
    std::ostringstream lab;
    lab << mask << " " << method << " p=" << fmt(p) << " q=" << fmt(q) << " " << (axis == "lambda" ? "mu=" : "lambda=")
        << fmt(fixed) << " vs " << axis;
    if (pts.size() < 4) {
      if (warnings) warnings->push_back("fewer than 4 points: " + lab.str());
      return;
    }
    std::vector<std::pair<double, double>> xy(pts.begin(), pts.end());
    FitRow fr;
    Theory th = theory_for(mask, method, p, q, d, axis, tol);
    fr.fit = judge(fit_loglog(xy), th.value, th.tolerance, th.report_only);
    fr.fit.label = lab.str();
    fr.mask = mask;
    fr.method = method;
    fr.axis = axis;
    fr.p = p;
    fr.q = q;
    fr.fixed = fixed;
    fr.theory_source = th.source;
    out.push_back(std::move(fr));
  };
  for (auto& [k, pts] : by_lambda) emit(k, pts, "lambda");
  for (auto& [k, pts] : by_mu) emit(k, pts, "mu");
  return out;
}

inline nlohmann::json to_json(const FitRow& f) {
  auto j = to_json(f.fit);
  j["mask"] = f.mask;
  j["method"] = f.method;
  j["axis"] = f.axis;
  j["p"] = exponent_json(f.p);
  j["q"] = exponent_json(f.q);
  j["fixed"] = f.fixed;
  j["theory_source"] = f.theory_source;
  return j;
}

inline std::string fits_csv(const std::vector<FitRow>& fits) {
  std::string s = csv_line({"mask", "method", "axis", "p", "q", "fixed", "slope", "stderr", "theory", "tolerance", "verdict", "outlier"});
  for (const auto& f : fits)
    s += csv_line({f.mask, f.method, f.axis, fmt(f.p), fmt(f.q), fmt(f.fixed), fmt(f.fit.slope), fmt(f.fit.stderr_),
                   fmt(f.fit.theory), fmt(f.fit.tolerance), to_string(f.fit.verdict), f.fit.outlier ? "1" : "0"});
  return s;
}

// region diagram on the (1/p, 1/q) square: columns 1/p 1/q region beta gamma
inline std::string region_diagram_data(int d, int n = 101) {
  std::ostringstream s;
  s << "# inv_p inv_q region beta gamma\n";
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      Pt p{0.5 + 0.5 * i / (n - 1), 0.5 * k / (n - 1)};
      auto piece = exponent_piece(p, d);
      int id = piece == ExponentPiece::r1 ? 1 : piece == ExponentPiece::r2 ? 2 : piece == ExponentPiece::r2p ? 3 : 4;
      s << fmt(p.a) << ' ' << fmt(p.b) << ' ' << id << ' ' << fmt(beta_piecewise(p, d)) << ' ' << fmt(gamma_exponent(p, d))
        << '\n';
    }
    s << '\n';
  }
  return s.str();
}

struct ReportOutcome {
  std::vector<FitRow> fits;
  std::vector<std::string> warnings;
  std::string table;
};

// joins fits with theory, asserts the join, writes verdicts.csv and plot data
inline ReportOutcome cmd_report(int d, const Tolerances& tol, const std::vector<SweepRow>& rows, const fs::path& dir) {
  ReportOutcome r;
  if (rows.empty()) r.warnings.push_back("no sweep results: empty table");
  r.fits = fit_sweep(rows, d, tol, &r.warnings);
  std::ostringstream table, scatter;
  scatter << "# theory slope stderr verdict(1=PASS,0=FAIL,2=REPORT_ONLY) label\n";
  for (const auto& f : r.fits) {
    Theory th = theory_for(f.mask, f.method, f.p, f.q, d, f.axis, tol);
    if (!(std::isnan(th.value) && std::isnan(f.fit.theory)) && th.value != f.fit.theory)
      throw std::logic_error("report: theory join mismatch for " + f.fit.label);
    table << describe(f.fit) << "\n";
    if (!std::isnan(f.fit.theory))
      scatter << fmt(f.fit.theory) << ' ' << fmt(f.fit.slope) << ' ' << fmt(f.fit.stderr_) << ' '
              << (f.fit.verdict == Verdict::PASS ? 1 : f.fit.verdict == Verdict::FAIL ? 0 : 2) << " \"" << f.fit.label
              << "\"\n";
  }
  r.table = table.str();
  fs::create_directories(dir);
  write_file(dir / "verdicts.csv", fits_csv(r.fits));
  nlohmann::json fj = nlohmann::json::array();
  for (const auto& f : r.fits) fj.push_back(to_json(f));
  write_file(dir / "fits.json", fj.dump(2) + "\n");
  write_file(dir / "slope_vs_theory.dat", scatter.str());
  if (d >= 2) write_file(dir / "region_diagram.dat", region_diagram_data(d));
  return r;
}

}  // namespace hlab
