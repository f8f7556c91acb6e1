#pragma once

#include "lab.hpp"

#include <chrono>
#include <functional>
#include <random>
#include <sstream>

namespace hlab::acceptance {

struct Criterion {
  std::string id;
  bool pass = false;
  std::string headline;
  std::vector<std::string> details;
  double seconds = 0;
};

inline std::string line(const Criterion& c) {
  std::ostringstream s;
  s << c.id << ' ' << (c.pass ? "PASS" : "FAIL") << ": " << c.headline;
  return s.str();
}

namespace detail {

inline double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

inline std::string num(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

inline Vec uniform_ball(std::mt19937_64& rng, int d, double R) {
  std::uniform_real_distribution<double> U(-R, R);
  Vec x(d);
  do
    for (int i = 0; i < d; ++i) x(i) = U(rng);
  while (x.norm() > R);
  return x;
}

inline Eigen::MatrixXd random_rotation(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> G;
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = G(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ();
}

}  // namespace detail

// ---- identity suite ----------------------------------------------------------------

struct IdentityCheck {
  std::string name;
  double max_error = 0, tolerance = 0;
  std::size_t samples = 0;
  bool pass() const { return max_error <= tolerance; }
};

inline nlohmann::json to_json(const IdentityCheck& c) {
  return {{"name", c.name}, {"max_error", c.max_error}, {"tolerance", c.tolerance}, {"samples", c.samples}, {"pass", c.pass()}};
}

// corrupt_sc shifts the critical angle used in the S_c identities (negative control)
inline std::vector<IdentityCheck> identity_suite(std::uint64_t seed, double corrupt_sc = 0.0, const Tolerances& tol = {}) {
  std::vector<IdentityCheck> out;
  std::mt19937_64 rng(seed);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };

  for (int d : {2, 3}) {
    IdentityCheck i32{"pythagoras_product d=" + std::to_string(d), 0, tol.identity},
        i33{"critical_angle_cosine d=" + std::to_string(d), 0, tol.identity},
        i34{"Q_at_critical_angle d=" + std::to_string(d), 0, tol.identity};
    while (i32.samples < 1000) {
      Vec x = detail::uniform_ball(rng, d, 2.0), y = detail::uniform_ball(rng, d, 2.0);
      double xy = x.dot(y), p = (x + y).norm(), m = (x - y).norm(), n2 = x.squaredNorm() + y.squaredNorm();
      if (std::abs(xy) < 1e-3 || m < 1e-3 || p < 1e-3) continue;
      ++i32.samples, ++i33.samples, ++i34.samples;
      i32.max_error = std::max(i32.max_error, rel(p * p * m * m, n2 * n2 - 4 * xy * xy));
      double c = std::cos(critical_angle(x, y) + corrupt_sc);
      i33.max_error = std::max({i33.max_error, rel(1 - c, (p - m) * m / (2 * xy)), rel(1 - c, 2 * m / (p + m))});
      // denominator carries <x,y>^2; the first power does not satisfy the identity
      double rhs = -2 * m * p / (m * p + n2 - 2 * xy * xy) * discriminant(x, y);
      i34.max_error = std::max(i34.max_error, rel(quad_Q(x, y, c), rhs));
    }
    out.push_back(i32);
    out.push_back(i33);
    out.push_back(i34);

    IdentityCheck g{"critical_angle_gradient d=" + std::to_string(d), 0, tol.finite_difference};
    IdentityCheck sym{"critical_angle_gradient_swap d=" + std::to_string(d), 0, tol.identity};
    while (g.samples < 300) {
      Vec x = detail::uniform_ball(rng, d, 2.0), y = detail::uniform_ball(rng, d, 2.0);
      if ((x - y).norm() < 0.2 || (x + y).norm() < 0.2 || std::abs(x.dot(y)) < 0.1) continue;
      double s = critical_angle(x, y);
      if (std::sin(s) < 0.1) continue;
      ++g.samples;
      ++sym.samples;
      auto grad = critical_angle_gradient(x, y);
      const double h = 1e-5;
      Vec fx(d), fy(d);
      for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e(i) = h;
        fx(i) = (critical_angle(x + e, y) - critical_angle(x - e, y)) / (2 * h);
        fy(i) = (critical_angle(x, y + e) - critical_angle(x, y - e)) / (2 * h);
      }
      double scale = std::sqrt(grad.dx.squaredNorm() + grad.dy.squaredNorm());
      double err = std::sqrt((grad.dx - fx).squaredNorm() + (grad.dy - fy).squaredNorm()) / scale;
      g.max_error = std::max(g.max_error, err);
      auto sw = critical_angle_gradient(y, x);
      sym.max_error = std::max(sym.max_error, (sw.dx - grad.dy).norm() / scale);
    }
    out.push_back(g);
    out.push_back(sym);
  }

  {
    IdentityCheck part{"window_partition_of_unity", 0, 1e-12};
    for (int jmax : {4, 7, 10}) {
      auto ws = make_windows(jmax);
      const int n = 20001;
      for (int i = 0; i < n; ++i) {
        double t = -std::numbers::pi + 2 * std::numbers::pi * i / (n - 1);
        double s = 0;
        for (auto& w : ws) s += w.samples(t);
        part.max_error = std::max(part.max_error, std::abs(s - 1.0));
        ++part.samples;
      }
    }
    out.push_back(part);
  }

  for (int d : {2, 3}) {
    IdentityCheck b{"beta_piecewise_equals_max d=" + std::to_string(d), 0, 1e-12};
    const int n = 400;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        Pt p{0.5 + 0.5 * i / (n - 1), 0.5 * k / (n - 1)};
        b.max_error = std::max(b.max_error, std::abs(beta_piecewise(p, d) - beta_max(p, d)));
        ++b.samples;
      }
    out.push_back(b);
  }

  {
    IdentityCheck ov{"overlap_closed_form", 0, 1e-8};
    std::uniform_int_distribution<int> K(0, 60);
    std::uniform_real_distribution<double> L(0.1, 12.0);
    for (int i = 0; i < 60; ++i) {
      int u = K(rng), v0 = K(rng);
      if (u == v0) continue;
      auto v = overlap_integral(u, v0, L(rng));
      ov.max_error = std::max(ov.max_error, std::abs(v.closed_form - v.quadrature));
      ++ov.samples;
    }
    out.push_back(ov);
  }

  {
    // modulus symmetries of the window pieces, and rotation invariance of the kernel
    IdentityCheck sym{"window_modulus_symmetry", 0, 1e-8};
    IdentityCheck rot{"rotation_invariance", 0, 1e-8};
    const double lam = 22;
    const double R = std::sqrt(lam);
    auto sp = spectral_coefficients(lam, 2, make_window(WindowKind::plus, 4), 1e-13);
    auto sm = spectral_coefficients(lam, 2, make_window(WindowKind::minus, 4), 1e-13);
    auto spp = spectral_coefficients(lam, 2, make_window(WindowKind::pi_plus, 4), 1e-13);
    auto spm = spectral_coefficients(lam, 2, make_window(WindowKind::pi_minus, 4), 1e-13);
    double scale = 0;
    std::vector<std::array<double, 4>> errs;
    for (int i = 0; i < 50; ++i) {
      Vec x = detail::uniform_ball(rng, 2, R), y = detail::uniform_ball(rng, 2, R);
      cd a = spectral_sum(sp, x, y), b = spectral_sum(sm, x, y);
      cd c = spectral_sum(spp, x, y), e = spectral_sum(spm, x, y);
      cd bm = spectral_sum(sm, x, -y), am = spectral_sum(sp, x, -y);
      scale = std::max({scale, std::abs(a), std::abs(c)});
      errs.push_back({std::abs(std::abs(a) - std::abs(b)), std::abs(std::abs(c) - std::abs(bm)),
                      std::abs(std::abs(e) - std::abs(am)), 0.0});
      ++sym.samples;
      Eigen::MatrixXd U = detail::random_rotation(rng, 2);
      double k0 = projection_direct(lam, x, y), k1 = projection_direct(lam, U * x, U * y);
      double diag = std::sqrt(projection_direct(lam, x, x) * projection_direct(lam, y, y));
      rot.max_error = std::max(rot.max_error, std::abs(k0 - k1) / std::max(diag, 1e-300));
      ++rot.samples;
    }
    for (auto& e : errs) sym.max_error = std::max({sym.max_error, e[0] / scale, e[1] / scale, e[2] / scale});
    out.push_back(sym);
    out.push_back(rot);
  }
  return out;
}

// ---- criteria ------------------------------------------------------------------------

inline Criterion ac1(std::uint64_t seed = 2024) {
  Criterion c{"AC1"};
  double t0 = detail::now();
  auto checks = identity_suite(seed);
  c.pass = true;
  int failed = 0;
  for (auto& k : checks) {
    c.pass = c.pass && k.pass();
    failed += !k.pass();
    c.details.push_back(k.name + ": max error " + detail::num(k.max_error, 3) + " (tol " + detail::num(k.tolerance, 2) + ", " +
                        std::to_string(k.samples) + " samples)" + (k.pass() ? "" : " FAILED"));
  }
  // the corrupted critical angle must be caught
  auto neg = identity_suite(seed, 1e-6);
  bool caught = false;
  for (auto& k : neg)
    if (!k.pass() && k.name.rfind("Q_at_critical_angle", 0) == 0) caught = true;
  c.details.push_back(std::string("negative control (S_c shifted by 1e-6) ") + (caught ? "detected" : "NOT detected"));
  c.pass = c.pass && caught;
  c.headline = std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) +
               " identity checks within tolerance; negative control " + (caught ? "detected" : "missed");
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac2() {
  Criterion c{"AC2"};
  double t0 = detail::now();
  bool ok = true;
  double worstC = 0;
  for (int k : {100, 200, 500, 1000}) {
    const double mu = std::sqrt(2.0 * k + 1.0);
    double C = 0;
    const int n = 8000;
    for (int i = 0; i <= n; ++i) {
      double t = (mu + 8.0) * i / n;
      auto a = hermite_asymptotic(k, t);
      if (a.regime == HermiteRegime::transition) continue;
      if (a.envelope < 1e-250) continue;
      C = std::max(C, std::abs(eval_hermite(k, t) - a.value) / a.envelope);
    }
    worstC = std::max(worstC, C);
    c.details.push_back("k=" + std::to_string(k) + ": fitted C = " + detail::num(C));
  }
  ok = worstC <= 10.0;
  std::vector<int> ks{64, 128, 256, 512, 1024, 2048};
  double worst = 0;
  for (double p : {1.0, 2.0, 3.0, 6.0, kInf}) {
    std::vector<std::pair<double, double>> pts;
    for (int k : ks) pts.emplace_back(k, hermite_lp_norm(k, p));
    auto f = judge(fit_loglog(pts), expected_lp_exponent(p).exponent, 0.03);
    worst = std::max(worst, std::abs(f.slope - f.theory));
    ok = ok && f.verdict == Verdict::PASS;
    c.details.push_back("L^" + fmt(p) + " slope " + detail::num(f.slope, 5) + " vs " + detail::num(f.theory, 5) + " " +
                        to_string(f.verdict));
  }
  {
    std::vector<std::pair<double, double>> pts;
    for (int k : ks) pts.emplace_back(k, hermite_lp_norm(k, 4.0) / std::pow(std::log(k), 0.25));
    auto f = fit_loglog(pts);
    double rms = 0;
    for (auto [u, v] : f.points) rms += std::pow(v - f.intercept - f.slope * u, 2);
    rms = std::sqrt(rms / f.points.size());
    bool pass4 = rms <= 0.01;
    ok = ok && pass4;
    c.details.push_back("L^4 with (log k)^{1/4} removed: slope " + detail::num(f.slope, 5) + " (reference -0.125), rms residual " +
                        detail::num(rms, 3) + (pass4 ? " ok" : " too large"));
  }
  c.pass = ok;
  c.headline = "max fitted C = " + detail::num(worstC) + " (<= 10); max |slope - exponent| = " + detail::num(worst, 3) +
               " (<= 0.03); p=4 residual check";
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac3() {
  Criterion c{"AC3"};
  double t0 = detail::now();
  bool ok = true;
  double worst = 0;
  for (auto [p, q] : std::vector<std::pair<double, double>>{{2, kInf}, {1, kInf}, {2, 6}, {4.0 / 3.0, 4}}) {
    auto [e, g] = rank_one_exponent(p, q);
    std::vector<std::pair<double, double>> pts;
    for (int N = 64; N <= 2048; N *= 2) pts.emplace_back(N, rank_one_norm_d1(2.0 * N + 1, p, q) / std::pow(std::log(N), g));
    auto f = judge(fit_loglog(pts), e, 0.03);
    worst = std::max(worst, std::abs(f.slope - e));
    ok = ok && f.verdict == Verdict::PASS;
    c.details.push_back("(p,q)=(" + fmt(p) + "," + fmt(q) + "): slope " + detail::num(f.slope, 5) + " vs " + detail::num(e, 5) +
                        (g != 0 ? " (log power " + fmt(g) + " divided out)" : "") + " " + to_string(f.verdict));
  }
  c.pass = ok;
  c.headline = "rank-one slopes, max |slope - composite exponent| = " + detail::num(worst, 3) + " (<= 0.03)";
  c.seconds = detail::now() - t0;
  return c;
}

// ||P^2 - P|| / ||P|| in the weighted L^2 of the grid, by power iteration
inline double idempotence_defect(double lambda, int n) {
  const double L = std::sqrt(lambda) + 3.0;
  GridSpec g = make_grid(Box::cube(2, -L, L), n, RuleKind::midpoint);
  auto T = assemble(direct_oracle(lambda, 2), g, g);
  Eigen::MatrixXd K = T.kernel.real();
  const Eigen::VectorXd w = T.w_in;
  auto P = [&](const Eigen::VectorXd& f) { return Eigen::VectorXd(K * w.cwiseProduct(f)); };
  auto op_norm = [&](auto&& A) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(w.size());
    double s = 0;
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd u = A(v);
      double nu = std::sqrt(u.cwiseAbs2().dot(w)), nv = std::sqrt(v.cwiseAbs2().dot(w));
      s = nu / nv;
      if (nu == 0) break;
      v = u / nu;
    }
    return s;
  };
  double nP = op_norm(P);
  double nE = op_norm([&](const Eigen::VectorXd& f) {
    Eigen::VectorXd a = P(f);
    return Eigen::VectorXd(P(a) - a);
  });
  return nE / nP;
}

inline Criterion ac4(std::uint64_t seed = 7) {
  Criterion c{"AC4"};
  double t0 = detail::now();
  std::mt19937_64 rng(seed);
  double worst_cross = 0, worst_rot = 0;
  for (double lam : {30.0, 62.0, 122.0}) {
    auto direct = direct_oracle(lam, 2);
    auto recon = window_reconstruction_oracle(lam, 2);
    auto spec = spectral_window_sum_oracle(lam, 2);
    const double R = std::sqrt(lam) + 1.0;
    std::vector<Vec> xs, ys;
    std::vector<double> dv;
    double scale = 0;
    for (int i = 0; i < 100; ++i) {
      xs.push_back(detail::uniform_ball(rng, 2, R));
      ys.push_back(detail::uniform_ball(rng, 2, R));
      dv.push_back(direct.eval(xs.back(), ys.back()).real());
      scale = std::max(scale, std::abs(dv.back()));
    }
    double er = 0, es = 0, erot = 0;
    for (int i = 0; i < 100; ++i) {
      er = std::max(er, std::abs(recon.eval(xs[i], ys[i]) - dv[i]) / scale);
      es = std::max(es, std::abs(spec.eval(xs[i], ys[i]) - dv[i]) / scale);
      Eigen::MatrixXd U = detail::random_rotation(rng, 2);
      erot = std::max(erot, std::abs(direct.eval(U * xs[i], U * ys[i]).real() - dv[i]) / scale);
    }
    worst_cross = std::max({worst_cross, er, es});
    worst_rot = std::max(worst_rot, erot);
    c.details.push_back("lambda=" + fmt(lam) + ": window reconstruction err " + detail::num(er, 3) + ", spectral window sum err " +
                        detail::num(es, 3) + ", rotation err " + detail::num(erot, 3) + " (relative to max |kernel| on the sample)");
  }
  bool idem_ok = true;
  std::string idem_summary;
  for (auto [lam, ns] : std::vector<std::pair<double, std::vector<int>>>{{30.0, {24, 32, 40}}, {62.0, {56, 66, 76}}}) {
    std::vector<double> defs;
    for (int n : ns) defs.push_back(idempotence_defect(lam, n));
    bool improving = true;
    for (std::size_t i = 1; i < defs.size(); ++i) improving = improving && defs[i] < defs[i - 1];
    bool ok = defs.back() <= 1e-2 && improving;
    idem_ok = idem_ok && ok;
    std::string s = "lambda=" + fmt(lam) + " idempotence:";
    for (std::size_t i = 0; i < ns.size(); ++i) s += " n=" + std::to_string(ns[i]) + " " + detail::num(defs[i], 3);
    c.details.push_back(s + (ok ? "" : " FAILED"));
    idem_summary += (idem_summary.empty() ? "" : ", ") + detail::num(defs.back(), 2);
  }
  c.pass = worst_cross <= 1e-3 && worst_rot <= 1e-8 && idem_ok;
  c.headline = "cross-oracle max err " + detail::num(worst_cross, 3) + " (<= 1e-3), idempotence at reference " + idem_summary +
               " (<= 1e-2, decreasing), rotation " + detail::num(worst_rot, 3) + " (<= 1e-8)";
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac5(std::uint64_t seed = 5) {
  Criterion c{"AC5"};
  double t0 = detail::now();
  const std::vector<double> lams{52, 100, 200, 400, 800};
  std::map<double, std::vector<std::pair<double, double>>> pts;
  std::size_t cell = 0;
  for (double lam : lams) {
    TensorProjection P(lam, 2, projection_axis(lam, 1.5, 4.0));
    LevelSynthesis S(P);
    for (double q : {2.5, 6.0}) {
      PowerOptions o;
      o.real_field = true;
      o.restarts = 8;
      o.max_iter = 80;
      o.seed = derive_seed(seed, cell++);
      auto e = norm_pq(S, 2.0, q, {}, o);
      pts[q].emplace_back(lam, e.value);
    }
    pts[kInf].emplace_back(lam, std::sqrt(P.diagonal().maxCoeff()));
  }
  bool ok = true;
  std::string head;
  for (auto& [q, xy] : pts) {
    auto f = judge(fit_loglog(xy), global_two_q_exponent(q, 2), 0.05);
    ok = ok && f.verdict == Verdict::PASS;
    std::string vals;
    for (auto [l, v] : xy) vals += " " + detail::num(v, 6);
    c.details.push_back("q=" + fmt(q) + ": values" + vals + "; slope " + detail::num(f.slope, 4) + " vs " + detail::num(f.theory, 4) +
                        " " + to_string(f.verdict));
    head += (head.empty() ? "" : ", ") + std::string("q=") + fmt(q) + " " + detail::num(f.slope, 3) + "/" + detail::num(f.theory, 3);
  }
  c.pass = ok;
  c.headline = "2->q slopes (fit/theory) " + head + " over lambda 52..800, tol 0.05";
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac6() {
  Criterion c{"AC6"};
  double t0 = detail::now();
  bool ok = true;
  std::string head;
  struct Case {
    WitnessKind k;
    double p, q;
  };
  const std::vector<double> lams{100, 200, 400, 800, 1600};
  // gated exactly where the floor is the sharp exponent, as in the sweep's theory join
  for (auto cs : std::vector<Case>{{WitnessKind::cube_sum, 2, 6},
                                   {WitnessKind::single_line, 2, 4},
                                   {WitnessKind::small_cube, 1, 4},
                                   {WitnessKind::small_cube, 1, kInf},
                                   {WitnessKind::cube_sum, 2, kInf},
                                   {WitnessKind::cube_sum, 1.5, 8}}) {
    Theory th = theory_for("ball_r0.5", "witness:" + to_string(cs.k), cs.p, cs.q, 2, "lambda", Tolerances{});
    const bool gate = !th.report_only;
    std::vector<std::pair<double, double>> xy;
    for (double lam : lams) xy.emplace_back(lam, witness_ratio_ball(make_witness(cs.k, lam), cs.p, cs.q).ratio);
    auto f = judge(fit_loglog(xy), th.value, th.tolerance, !gate);
    if (gate) ok = ok && f.verdict == Verdict::PASS;
    c.details.push_back(to_string(cs.k) + " (p,q)=(" + fmt(cs.p) + "," + fmt(cs.q) + "): slope " + detail::num(f.slope, 4) +
                        " vs floor " + detail::num(f.theory, 4) + " " + to_string(f.verdict));
    if (gate) head += (head.empty() ? "" : ", ") + to_string(cs.k) + " " + detail::num(f.slope, 3) + "/" + detail::num(f.theory, 3);
  }
  // annulus witness at mu = 1/8: gated fit over lambda >= 400, reported below
  const double mu = 0.125;
  const std::vector<std::pair<double, double>> annulus_pq{{1.25, 6}, {2, 6}, {1, kInf}};
  std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> hi, lo;
  for (double lam : {200.0, 250.0, 300.0, 350.0, 400.0, 566.0, 800.0, 1132.0, 1600.0}) {
    Witness w;
    try {
      w = make_witness(WitnessKind::annulus_cube, lam, mu);
    } catch (const std::exception& e) {
      c.details.push_back("annulus_cube lambda=" + fmt(lam) + ": " + e.what());
      continue;
    }
    auto [a, b] = annulus_radii(lam, mu, +1);
    auto g = radial_grid(a, b, lam, 24);
    PolarOperator P(projection_levels(lam), g, g);
    VecC f = annulus_kernel_witness(P, w);
    for (auto pq : annulus_pq) (lam >= 400 ? hi : lo)[pq].emplace_back(lam, witness_ratio(P, f, pq.first, pq.second));
  }
  for (auto pq : annulus_pq) {
    double th = witness_lambda_theory(WitnessKind::annulus_cube, pq.first, pq.second, 2);
    bool gate = pq.first == 1.25;
    auto f = judge(fit_loglog(hi[pq]), th, 0.1, !gate);
    if (gate) {
      ok = ok && f.verdict == Verdict::PASS;
      head += ", annulus_cube " + detail::num(f.slope, 3) + "/" + detail::num(th, 3);
    }
    c.details.push_back("annulus_cube mu=1/8 (p,q)=(" + fmt(pq.first) + "," + fmt(pq.second) + ") lambda 400..1600: slope " +
                        detail::num(f.slope, 4) + " vs " + detail::num(th, 4) + " " + to_string(f.verdict));
    if (lo[pq].size() >= 4) {
      auto fl = judge(fit_loglog(lo[pq]), th, 0.1, true);
      c.details.push_back("  below lambda=400: slope " + detail::num(fl.slope, 4) + " REPORT_ONLY");
    } else {
      c.details.push_back("  below lambda=400: " + std::to_string(lo[pq].size()) + " admissible points, no fit (REPORT_ONLY)");
    }
  }
  c.pass = ok;
  c.headline = "witness slopes (fit/floor) " + head;
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac7() {
  Criterion c{"AC7"};
  double t0 = detail::now();
  bool slope_ok = true;
  std::string head;
  for (double lam : {400.0, 800.0}) {
    std::vector<std::pair<double, double>> xy;
    std::string vals;
    for (double mu = 0.25; mu >= std::pow(lam, -2.0 / 3.0); mu /= 2) {
      auto [r0, r1] = annulus_radii(lam, mu, +1);
      auto g = radial_grid(r0, r1, lam, 24);
      PolarOperator P(projection_levels(lam), g, g);
      double n = P.norm_22();
      xy.emplace_back(mu, n);
      vals += " " + detail::num(n / std::sqrt(mu), 3);
    }
    auto f = judge(fit_loglog(xy), 0.5, 0.07);
    slope_ok = slope_ok && f.verdict == Verdict::PASS;
    c.details.push_back("lambda=" + fmt(lam) + ": mu-slope " + detail::num(f.slope, 4) + " vs 0.5 " + to_string(f.verdict) +
                        "; norm/sqrt(mu) from mu=1/4 down:" + vals);
    head += (head.empty() ? "" : ", ") + std::string("mu-slope ") + detail::num(f.slope, 3) + " at lambda=" + fmt(lam);
  }
  // windowed pieces for 2^{-j} >= 4 sqrt(mu); the constant at each lambda is the largest ratio over (j, mu)
  const std::vector<double> wl{800.0, 1200.0, 1600.0};
  std::vector<double> cmax(wl.size(), 0.0);
  for (double mu : {1.0 / 32, 1.0 / 64})
    for (int j : {0, 1}) {
      if (std::ldexp(1.0, -j) < 4 * std::sqrt(mu)) continue;
      std::string s = "window j=" + std::to_string(j) + " mu=" + fmt(mu) + ": ratio";
      auto w = make_window(WindowKind::plus, j);
      double lo = kInf, hi = 0;
      for (std::size_t k = 0; k < wl.size(); ++k) {
        double lam = wl[k];
        auto sc = spectral_coefficients(lam, 2, w, 1e-8);
        auto [r0, r1] = annulus_radii(lam, mu, +1);
        PolarOperator P(sc.c, radial_grid(r0, r1, lam, 16), radial_grid(r0, r1, lam, 16));
        double r = P.norm_22() / (std::ldexp(1.0, j) * mu);
        cmax[k] = std::max(cmax[k], r);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        s += " " + detail::num(r, 4);
      }
      c.details.push_back(s + " (lambda 800, 1200, 1600), spread " + detail::num(hi / lo, 3));
    }
  std::string cs;
  for (double v : cmax) cs += " " + detail::num(v, 4);
  double rmax = *std::max_element(cmax.begin(), cmax.end()), rmin = *std::min_element(cmax.begin(), cmax.end());
  c.details.push_back("window constant max_(j,mu) ratio per lambda:" + cs);
  bool window_ok = rmax / rmin <= 2.0;
  // super-polynomial decay on the annulus outside the turning circle
  bool decay_ok = true;
  double worst_decay = 0;
  for (double lam : {400.0, 800.0}) {
    double v[2];
    int i = 0;
    for (double t : {1.0, 8.0}) {
      double mu = std::pow(t / lam, 2.0 / 3.0);
      auto [r0, r1] = annulus_radii(lam, mu, -1);
      auto g = radial_grid(r0, r1, lam, 12);
      PolarOperator P(projection_levels(lam), g, g);
      v[i++] = P.max_abs_kernel();
    }
    worst_decay = std::max(worst_decay, v[1] / v[0]);
    decay_ok = decay_ok && v[1] <= 1e-3 * v[0];
    c.details.push_back("lambda=" + fmt(lam) + ": exterior annulus 1->inf at lambda mu^{3/2}=1: " + detail::num(v[0], 4) + ", at 8: " +
                        detail::num(v[1], 4));
  }
  c.pass = slope_ok && window_ok && decay_ok;
  c.headline = head + " (target 0.5 +- 0.07" + (slope_ok ? "" : ", not met") + "); window constant spread " +
               detail::num(rmax / rmin, 3) + " across lambda (<= 2); outer decay ratio " + detail::num(worst_decay, 3) + " (<= 1e-3)";
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac8(std::uint64_t seed = 11) {
  Criterion c{"AC8"};
  double t0 = detail::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-2, 2);
  std::uniform_int_distribution<int> J(1, 8), S(0, 1);
  struct Sample {
    Vec x, y;
    int j, s;
  };
  std::vector<Sample> sm;
  while (sm.size() < 200) {
    Vec x(2), y(2);
    x << U(rng), U(rng);
    y << U(rng), U(rng);
    if (x.norm() > 2 || y.norm() > 2) continue;
    double D = std::abs(discriminant(x, y));
    if (D < 1e-3 || D > 1) continue;
    sm.push_back({x, y, J(rng), S(rng)});
  }
  std::vector<double> maxima;
  for (double lam : {100.0, 400.0, 1600.0}) {
    double mx = 0;
    for (auto& s : sm) {
      auto w = make_window(s.s ? WindowKind::plus : WindowKind::minus, s.j);
      auto r = oscillatory_Ij(lam, w, s.x, s.y, false);
      mx = std::max(mx, std::abs(r.value) * std::pow(2.0, s.j / 2.0) * std::sqrt(lam) *
                            std::pow(std::abs(discriminant(s.x, s.y)), 0.25));
    }
    maxima.push_back(mx);
    c.details.push_back("lambda=" + fmt(lam) + ": max normalized |I_j| = " + detail::num(mx, 4));
  }
  double spread = *std::max_element(maxima.begin(), maxima.end()) / *std::min_element(maxima.begin(), maxima.end());
  c.pass = spread <= 2.0;
  c.headline = "envelope maxima spread " + detail::num(spread, 3) + "x across lambda 100, 400, 1600 (<= 2x)";
  c.seconds = detail::now() - t0;
  return c;
}

inline Criterion ac9(std::uint64_t seed = 9) {
  Criterion c{"AC9"};
  double t0 = detail::now();
  const double lam = 400, mu = 0.125;
  auto [o0, o1] = annulus_radii(lam, mu, +1);
  auto out = radial_grid(o0, o1, lam, 24);
  bool monotone_all = true;
  std::size_t cell = 0;
  for (double q : {2.0, 4.0}) {
    const double qp = conj_exp(q), delta = 1.0 / qp - 1.0 / q;
    std::vector<double> ratios;
    std::string s = "q=" + fmt(q) + ", mu=1/8: norm / balanced bound for mu'/mu =";
    for (double mup : {0.125, 0.0625, 0.03125}) {
      auto [i0, i1] = annulus_radii(lam, mup, +1);
      PolarOperator P(projection_levels(lam), radial_grid(i0, i1, lam, 24), out);
      double n;
      if (q == 2.0) {
        n = P.norm_22();
      } else {
        PowerOptions o;
        o.real_field = true;
        o.restarts = 4;
        o.max_iter = 80;
        o.seed = derive_seed(seed, cell++);
        n = norm_pq(P, qp, q, {}, o).value;
      }
      double B = std::pow(lam, -delta) * std::pow(mu * mup, 0.25 - 5.0 * delta / 4.0);
      ratios.push_back(n / B);
      s += " " + fmt(mup / mu) + ": " + detail::num(n / B, 4);
    }
    bool mono = std::is_sorted(ratios.rbegin(), ratios.rend());
    monotone_all = monotone_all && mono;
    c.details.push_back(s + (mono ? " (decreasing as mu'/mu shrinks)" : " (not monotone)"));
  }
  c.details.push_back("not computed at desk scale: the d >= 5 endpoint bound, its dimensional exponent c, any d >= 4 norm");
  c.pass = true;
  c.headline = std::string("declared not reproducible in d >= 4; d=2 unbalanced-ratio study completed (REPORT_ONLY, ") +
               (monotone_all ? "monotone" : "not monotone") + ")";
  c.seconds = detail::now() - t0;
  return c;
}

inline std::vector<std::pair<std::string, std::function<Criterion()>>> all_criteria() {
  return {{"AC1", [] { return ac1(); }}, {"AC2", [] { return ac2(); }}, {"AC3", [] { return ac3(); }},
          {"AC4", [] { return ac4(); }}, {"AC5", [] { return ac5(); }}, {"AC6", [] { return ac6(); }},
          {"AC7", [] { return ac7(); }}, {"AC8", [] { return ac8(); }}, {"AC9", [] { return ac9(); }}};
}

}  // namespace hlab::acceptance
