#pragma once

#include "geometry.hpp"
#include "hermite.hpp"
#include "windows.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

inline int eigen_level(double lambda, int d) {
  double n = 0.5 * (lambda - d);
  long N = std::lround(n);
  if (d < 1 || std::abs(n - N) > 1e-9 || N < 0)
    throw std::invalid_argument("lambda must lie in 2N + d");
  return static_cast<int>(N);
}

// ---- direct eigenfunction sums ----------------------------------------------

namespace detail {

inline std::vector<double> diag_products(int K, double a, double b) {
  std::vector<double> ha(K + 1), hb(K + 1), u(K + 1);
  hermite_row(K, a, ha.data());
  hermite_row(K, b, hb.data());
  for (int n = 0; n <= K; ++n) u[n] = ha[n] * hb[n];
  return u;
}

// truncated linear convolution (length K+1)
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b, int K) {
  std::vector<double> out(K + 1, 0.0);
  if (K < 1500) {
    for (int n = 0; n <= K; ++n) {
      double s = 0.0;
      for (int m = 0; m <= n; ++m) s += a[m] * b[n - m];
      out[n] = s;
    }
    return out;
  }
  std::size_t L = 1;
  while (L < 2 * static_cast<std::size_t>(K + 1)) L <<= 1;
  std::vector<double> pa(L, 0.0), pb(L, 0.0), pc;
  std::copy(a.begin(), a.begin() + K + 1, pa.begin());
  std::copy(b.begin(), b.begin() + K + 1, pb.begin());
  Eigen::FFT<double> fft;
  std::vector<cd> A, B;
  fft.fwd(A, pa);
  fft.fwd(B, pb);
  for (std::size_t i = 0; i < A.size(); ++i) A[i] *= B[i];
  fft.inv(pc, A);
  for (int n = 0; n <= K; ++n) out[n] = pc[n];
  return out;
}

}  // namespace detail

// P_n = Pi_{2n+d}(x, y) for n = 0..K
inline std::vector<double> projection_sequence(int K, const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  std::vector<double> acc = detail::diag_products(K, x(0), y(0));
  for (int j = 1; j < d; ++j) acc = detail::convolve(acc, detail::diag_products(K, x(j), y(j)), K);
  return acc;
}

inline double projection_direct(double lambda, const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > 3 || y.size() != x.size()) throw std::invalid_argument("projection_direct: d in {1,2,3}");
  const int N = eigen_level(lambda, d);
  auto u1 = detail::diag_products(N, x(0), y(0));
  if (d == 1) return u1[N];
  auto u2 = detail::diag_products(N, x(1), y(1));
  if (d == 2) {
    double s = 0.0;
    for (int a = 0; a <= N; ++a) s += u1[a] * u2[N - a];
    return s;
  }
  auto u3 = detail::diag_products(N, x(2), y(2));
  double s = 0.0;
  for (int a = 0; a <= N; ++a) {
    double t = 0.0;
    for (int b = 0; b <= N - a; ++b) t += u2[b] * u3[N - a - b];
    s += u1[a] * t;
  }
  return s;
}

// ---- Mehler kernel ----------------------------------------------------------

inline cd branch_constant(int d);

// kernel of e^{-itH}: a(2t) exp(i p(x,y,t)); t reduced mod pi with the scalar factor e^{-i pi d}
inline cd mehler_kernel(double t, const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  constexpr double pi = std::numbers::pi;
  double m = std::round(t / pi);
  double tr = t - m * pi;
  if (std::abs(std::sin(2.0 * tr)) < 1e-14) throw std::invalid_argument("mehler_kernel: singular time");
  cd c = branch_constant(d);
  double s2 = std::sin(2.0 * tr);
  cd amp = std::pow(2.0 * pi * std::abs(s2), -0.5 * d) * (tr > 0 ? c : std::conj(c));
  double p = 0.5 * (x.squaredNorm() + y.squaredNorm()) / std::tan(2.0 * tr) - x.dot(y) / s2;
  return amp * std::polar(1.0, p) * std::polar(1.0, -pi * d * m);
}

// ---- time-domain windowed kernels ----------------------------------------

struct PhaseSpec {
  double lambda;  // phase = lambda t/2 + A cot t - B csc t
  double A, B;
  double operator()(double t) const { return 0.5 * lambda * t + (A * std::cos(t) - B) / std::sin(t); }
  double derivative(double t) const {
    double s = std::sin(t);
    return 0.5 * lambda - (A - B * std::cos(t)) / (s * s);
  }
};

inline PhaseSpec phase_for(double lambda, const Vec& x, const Vec& y) {
  return {lambda, 0.5 * (x.squaredNorm() + y.squaredNorm()), x.dot(y)};
}

struct TimeQuadResult {
  cd value = 0.0;
  double error = 0.0;
  long nodes = 0;
};

namespace detail {

inline std::vector<std::pair<double, double>> phase_panels(double a, double b, const PhaseSpec& ph,
                                                           double periods_per_panel, double max_width = 1e300) {
  std::vector<std::pair<double, double>> out, stack;
  const int init = 8;
  for (int i = init - 1; i >= 0; --i) stack.emplace_back(a + (b - a) * i / init, a + (b - a) * (i + 1) / init);
  const double budget = 2.0 * std::numbers::pi * periods_per_panel;
  while (!stack.empty()) {
    auto [u, v] = stack.back();
    stack.pop_back();
    double mx = 0.0;
    for (int k = 0; k <= 4; ++k) mx = std::max(mx, std::abs(ph.derivative(u + (v - u) * k / 4.0)));
    if (((v - u) * 1.25 * mx <= budget && v - u <= max_width) || (v - u) < 1e-14) {
      out.emplace_back(u, v);
    } else {
      double m = 0.5 * (u + v);
      stack.emplace_back(m, v);
      stack.emplace_back(u, m);
    }
  }
  return out;
}

template <class Amp>
cd integrate_window(const SpectralWindow& w, const PhaseSpec& ph, Amp&& amp, double ppp, long& nodes) {
  constexpr int ngl = 20;
  const Rule& ref = gl_rule(ngl);
  cd total = 0.0;
  for (auto [a, b] : w.support) {
    double s1 = std::sin(a), s2 = std::sin(b);
    if (std::abs(s1) < 1e-15 || std::abs(s2) < 1e-15)
      throw std::invalid_argument("time quadrature: window support touches a singular time");
    // window transitions live on the scale w.scale
    auto panels = phase_panels(a, b, ph, ngl / ppp, 0.5 * w.scale);
    for (auto [u, v] : panels) {
      double h = 0.5 * (v - u), c = 0.5 * (u + v);
      for (int i = 0; i < ngl; ++i) {
        double t = c + h * ref.x[i];
        double wv = w.samples(t);
        if (wv == 0.0) continue;
        total += h * ref.w[i] * wv * amp(t) * std::polar(1.0, ph(t));
      }
      nodes += ngl;
    }
  }
  return total;
}

}  // namespace detail

// int w(t) amp(t) e^{i phase(t)} dt with oscillation-resolving panels
template <class Amp>
TimeQuadResult oscillatory_time_integral(const SpectralWindow& w, const PhaseSpec& ph, Amp&& amp, double ppp = 16.0,
                                         bool self_check = false) {
  TimeQuadResult r;
  r.value = detail::integrate_window(w, ph, amp, ppp, r.nodes);
  if (self_check) {
    long n2 = 0;
    cd fine = detail::integrate_window(w, ph, amp, 2.0 * ppp, n2);
    r.error = std::abs(fine - r.value);
    r.value = fine;
    r.nodes += n2;
  }
  return r;
}

inline auto mehler_amplitude(int d, cd c) {
  return [d, c](double t) {
    double m = std::pow(2.0 * std::numbers::pi * std::abs(std::sin(t)), -0.5 * d);
    return t > 0 ? m * c : m * std::conj(c);
  };
}

inline TimeQuadResult windowed_projection_timequad(double lambda, const SpectralWindow& w, const Vec& x, const Vec& y,
                                                   bool self_check = false, double ppp = 16.0) {
  const int d = static_cast<int>(x.size());
  eigen_level(lambda, d);
  return oscillatory_time_integral(w, phase_for(lambda, x, y), mehler_amplitude(d, branch_constant(d)), ppp,
                                   self_check);
}

// I_j(x, y) = int w(s) e^{i lambda P(x,y,s)} ds
inline TimeQuadResult oscillatory_Ij(double lambda, const SpectralWindow& w, const Vec& x, const Vec& y,
                                     bool self_check = false) {
  if (!(lambda >= 1.0)) throw std::invalid_argument("oscillatory_Ij: lambda >= 1");
  if (x.norm() > 2.0 + 1e-12 || y.norm() > 2.0 + 1e-12) throw std::invalid_argument("oscillatory_Ij: |x|,|y| <= 2");
  PhaseSpec ph{lambda, 0.5 * lambda * (x.squaredNorm() + y.squaredNorm()), lambda * x.dot(y)};
  return oscillatory_time_integral(w, ph, [](double) { return cd(1.0); }, 16.0, self_check);
}

// ---- spectral windowed kernels --------------------------------------------

struct SpectralCoefficients {
  std::vector<cd> c;  // c[n] multiplies Pi_{2n+d}
  int K = -1;
};

// multipliers hat w(n - N) for n = 0..K, K chosen from the decay of hat w
inline SpectralCoefficients spectral_coefficients(double lambda, int d, const SpectralWindow& w, double tol = 1e-9,
                                                  int cap = 1 << 21) {
  const int N = eigen_level(lambda, d);
  auto weight = [&](long n) { return std::pow(std::max(1.0, 2.0 * n + d), 0.5 * (d - 2)); };
  std::size_t M = 1024;
  while (M < 8.0 * std::max<double>(N, 64.0 / w.scale)) M <<= 1;
  for (;; M <<= 1) {
    if (M > static_cast<std::size_t>(2 * cap)) throw std::runtime_error("spectral_coefficients: truncation cap reached");
    auto tab = w.fourier_table(M);
    const long half = static_cast<long>(M / 2), lim = half / 2;
    // smallest Xi with sum_{xi > Xi, xi < lim} |hat w| weight < tol
    double floor = 0.0;  // roundoff level of the table
    for (auto& v : tab) floor = std::max(floor, std::abs(v));
    floor *= 1e-14;
    double tail = 0.0;
    long Xi = lim;
    for (long xi = lim - 1; xi >= 0; --xi) {
      double a = std::abs(tab[xi + half]);
      if (a > floor) tail += a * weight(N + xi);
      if (tail >= tol) break;
      Xi = xi;
    }
    // the quarter band must itself be negligible for the cut to be trusted
    if (Xi >= lim / 2) continue;
    SpectralCoefficients sc;
    sc.K = static_cast<int>(N + Xi);
    sc.c.resize(sc.K + 1);
    for (int n = 0; n <= sc.K; ++n) sc.c[n] = tab[n - N + half];
    return sc;
  }
}

inline cd spectral_sum(const SpectralCoefficients& sc, const Vec& x, const Vec& y) {
  auto P = projection_sequence(sc.K, x, y);
  cd s = 0.0;
  for (int n = 0; n <= sc.K; ++n) s += sc.c[n] * P[n];
  return s;
}

inline cd windowed_projection_spectral(double lambda, const SpectralWindow& w, const Vec& x, const Vec& y,
                                       double tol = 1e-9) {
  return spectral_sum(spectral_coefficients(lambda, static_cast<int>(x.size()), w, tol), x, y);
}

// ---- branch calibration ---------------------------------------------------

struct BranchCalibration {
  cd constant;
  double residual;
  double lambda;
};

inline BranchCalibration calibrate_branch(int d) {
  const double lambda = 2 * 8 + d;
  Vec x(d), y(d);
  const double xs[3] = {0.9, -0.6, 0.4}, ys[3] = {-0.3, 1.1, 0.7};
  for (int i = 0; i < d; ++i) {
    x(i) = xs[i];
    y(i) = ys[i];
  }
  std::vector<SpectralWindow> ws{make_window(WindowKind::plus, 4),
                                 make_window(WindowKind::minus, 4), make_window(WindowKind::pi_plus, 4),
                                 make_window(WindowKind::pi_minus, 4)};
  auto mag = [d](double t) { return cd(std::pow(2.0 * std::numbers::pi * std::abs(std::sin(t)), -0.5 * d)); };
  auto pos = [&](double t) { return t > 0 ? mag(t) : cd(0.0); };
  auto neg = [&](double t) { return t < 0 ? mag(t) : cd(0.0); };
  PhaseSpec ph = phase_for(lambda, x, y);
  // S = c Ip + conj(c) Im is real-linear in (Re c, Im c)
  Eigen::MatrixXd M(2 * ws.size(), 2);
  Eigen::VectorXd rhs(2 * ws.size());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    cd S = windowed_projection_spectral(lambda, ws[k], x, y, 1e-10);
    cd Ip = oscillatory_time_integral(ws[k], ph, pos, 32.0).value;
    cd Im = oscillatory_time_integral(ws[k], ph, neg, 32.0).value;
    cd col_r = Ip + Im, col_i = cd(0, 1) * (Ip - Im);
    M(2 * k, 0) = col_r.real();
    M(2 * k, 1) = col_i.real();
    M(2 * k + 1, 0) = col_r.imag();
    M(2 * k + 1, 1) = col_i.imag();
    rhs(2 * k) = S.real();
    rhs(2 * k + 1) = S.imag();
  }
  Eigen::Vector2d sol = M.colPivHouseholderQr().solve(rhs);
  double res = (M * sol - rhs).norm() / rhs.norm();
  return {cd(sol(0), sol(1)), res, lambda};
}

inline cd branch_constant(int d) {
  static std::mutex mtx;
  static std::map<int, cd> cache;
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
  }
  cd c = calibrate_branch(d).constant;
  std::lock_guard<std::mutex> lock(mtx);
  cache[d] = c;
  return c;
}

// ---- oracles --------------------------------------------------------------

enum class KernelMethod { direct_sum, time_quadrature, spectral_window };

inline std::string to_string(KernelMethod m) {
  switch (m) {
    case KernelMethod::direct_sum: return "direct_sum";
    case KernelMethod::time_quadrature: return "time_quadrature";
    case KernelMethod::spectral_window: return "spectral_window";
  }
  return "?";
}

struct KernelOracle {
  double lambda = 0;
  int d = 0;
  KernelMethod method = KernelMethod::direct_sum;
  std::optional<SpectralWindow> window;
  std::string label;
  double point_scale = 1.0;  // eval(x,y) = base(point_scale x, point_scale y)
  std::function<cd(const Vec&, const Vec&)> eval;

  cd operator()(const Vec& x, const Vec& y) const { return eval(x, y); }
  bool real_valued() const { return method == KernelMethod::direct_sum && !window; }

  // norm conversion between the rescaled and the original operator
  double conversion_factor(double p, double q) const {
    double ip = std::isinf(p) ? 0.0 : 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q;
    return std::pow(point_scale * point_scale, 0.5 * d * (ip - iq - 1.0));
  }
};

inline KernelOracle direct_oracle(double lambda, int d) {
  eigen_level(lambda, d);
  KernelOracle o;
  o.lambda = lambda;
  o.d = d;
  o.method = KernelMethod::direct_sum;
  o.label = "direct";
  o.eval = [lambda](const Vec& x, const Vec& y) { return cd(projection_direct(lambda, x, y)); };
  return o;
}

inline KernelOracle timequad_oracle(double lambda, int d, const SpectralWindow& w) {
  eigen_level(lambda, d);
  KernelOracle o;
  o.lambda = lambda;
  o.d = d;
  o.method = KernelMethod::time_quadrature;
  o.window = w;
  o.label = "timequad:" + w.name();
  o.eval = [lambda, w](const Vec& x, const Vec& y) { return windowed_projection_timequad(lambda, w, x, y).value; };
  return o;
}

inline KernelOracle spectral_oracle(double lambda, int d, const SpectralWindow& w, double tol = 1e-9) {
  KernelOracle o;
  o.lambda = lambda;
  o.d = d;
  o.method = KernelMethod::spectral_window;
  o.window = w;
  o.label = "spectral:" + w.name();
  auto sc = std::make_shared<SpectralCoefficients>(spectral_coefficients(lambda, d, w, tol));
  o.eval = [sc](const Vec& x, const Vec& y) { return spectral_sum(*sc, x, y); };
  return o;
}

// Largest j with 2^j <= lambda; windows beyond it form the tails.
inline int window_cutoff(double lambda) {
  int j = 4;
  while (std::ldexp(1.0, j + 1) <= lambda) ++j;
  return j;
}

// Pi_lambda rebuilt from the window partition: time quadrature for psi0 and 4 <= j <= j_max,
// spectral evaluation for the tails; the partition integrates to 2 pi Pi_lambda.
inline KernelOracle window_reconstruction_oracle(double lambda, int d, double tol = 1e-9) {
  int jmax = window_cutoff(lambda);
  auto ws = make_windows(jmax);
  SpectralCoefficients tails;
  std::vector<SpectralWindow> timed;
  for (auto& w : ws) {
    if (!is_tail(w)) {
      timed.push_back(w);
      continue;
    }
    auto sc = spectral_coefficients(lambda, d, w, tol);
    if (sc.K > tails.K) tails.c.resize(sc.K + 1, 0.0), tails.K = sc.K;
    for (int n = 0; n <= sc.K; ++n) tails.c[n] += sc.c[n];
  }
  KernelOracle o;
  o.lambda = lambda;
  o.d = d;
  o.method = KernelMethod::time_quadrature;
  o.label = "window_reconstruction";
  auto tp = std::make_shared<SpectralCoefficients>(std::move(tails));
  o.eval = [lambda, timed, tp](const Vec& x, const Vec& y) {
    cd s = spectral_sum(*tp, x, y);
    for (auto& w : timed) s += windowed_projection_timequad(lambda, w, x, y).value;
    return s / (2.0 * std::numbers::pi);
  };
  return o;
}

// every window evaluated spectrally, multipliers summed first
inline KernelOracle spectral_window_sum_oracle(double lambda, int d, double tol = 1e-9) {
  auto ws = make_windows(window_cutoff(lambda));
  SpectralCoefficients total;
  for (auto& w : ws) {
    auto sc = spectral_coefficients(lambda, d, w, tol);
    if (sc.K > total.K) total.c.resize(sc.K + 1, 0.0), total.K = sc.K;
    for (int n = 0; n <= sc.K; ++n) total.c[n] += sc.c[n];
  }
  for (auto& v : total.c) v /= 2.0 * std::numbers::pi;
  KernelOracle o;
  o.lambda = lambda;
  o.d = d;
  o.method = KernelMethod::spectral_window;
  o.label = "spectral_window_sum";
  auto tp = std::make_shared<SpectralCoefficients>(std::move(total));
  o.eval = [tp](const Vec& x, const Vec& y) { return spectral_sum(*tp, x, y); };
  return o;
}

inline KernelOracle rescale(const KernelOracle& base) {
  KernelOracle o = base;
  const double s = std::sqrt(base.lambda);
  o.point_scale = base.point_scale * s;
  o.label = "rescaled:" + base.label;
  auto inner = base.eval;
  o.eval = [inner, s](const Vec& x, const Vec& y) { return inner(s * x, s * y); };
  return o;
}

inline KernelOracle unscale(const KernelOracle& scaled) {
  KernelOracle o = scaled;
  const double s = std::sqrt(scaled.lambda);
  o.point_scale = scaled.point_scale / s;
  o.label = "unscaled:" + scaled.label;
  auto inner = scaled.eval;
  o.eval = [inner, s](const Vec& x, const Vec& y) { return inner(x / s, y / s); };
  return o;
}

}  // namespace hlab
