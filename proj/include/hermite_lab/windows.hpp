#pragma once

#include "quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hlab {

using cd = std::complex<double>;

// phi = 1 on (-inf, 1/2], 0 on [1, inf), built from exp(-1/s)
inline double smooth_step(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  double a = std::exp(-1.0 / (1.0 - t));
  double b = std::exp(-1.0 / (t - 0.5));
  return a / (a + b);
}

// base window, supported in [1/4, 1]
inline double psi_base(double t) { return smooth_step(t) - smooth_step(2.0 * t); }

enum class WindowKind { psi0, plus, minus, pi_plus, pi_minus, tail_zero, tail_pi, custom };

inline std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::psi0: return "psi0";
    case WindowKind::plus: return "psi_j_plus";
    case WindowKind::minus: return "psi_j_minus";
    case WindowKind::pi_plus: return "psi_j_pi_plus";
    case WindowKind::pi_minus: return "psi_j_pi_minus";
    case WindowKind::tail_zero: return "tail_zero";
    case WindowKind::tail_pi: return "tail_pi";
    case WindowKind::custom: return "custom";
  }
  return "?";
}

struct SpectralWindow {
  WindowKind kind = WindowKind::custom;
  int j = 0;
  std::function<double(double)> samples;
  // closed intervals inside [-pi, pi], none straddling 0
  std::vector<std::pair<double, double>> support;
  double scale = 1.0;  // characteristic width, 2^-j

  double operator()(double t) const { return samples(t); }
  int base_panels(double a, double b) const { return 8 + static_cast<int>(std::ceil(8.0 * (b - a) / scale)); }
  std::string name() const { return to_string(kind) + (kind == WindowKind::psi0 ? "" : "_" + std::to_string(j)); }

  double l1_norm() const {
    double s = 0.0;
    for (auto [a, b] : support) {
      Rule r = composite_gl(a, b, base_panels(a, b), 16);
      for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * std::abs(samples(r.x[i]));
    }
    return s;
  }

  // hat w(xi) = int w(t) e^{-i t xi} dt
  cd fourier(double xi) const {
    cd s = 0.0;
    for (auto [a, b] : support) {
      int panels = base_panels(a, b) + static_cast<int>(std::ceil(std::abs(xi) * (b - a) / std::numbers::pi));
      Rule r = composite_gl(a, b, panels, 16);
      for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * samples(r.x[i]) * std::polar(1.0, -xi * r.x[i]);
    }
    return s;
  }

  // hat w(n) for -M/2 <= n < M/2 from the periodic trapezoid rule; every window is smooth on the circle
  std::vector<cd> fourier_table(std::size_t M) const {
    constexpr double pi = std::numbers::pi;
    std::vector<cd> f(M);
    for (std::size_t m = 0; m < M; ++m) f[m] = samples(-pi + 2.0 * pi * m / M);
    Eigen::FFT<double> fft;
    std::vector<cd> F;
    fft.fwd(F, f);
    std::vector<cd> out(M);
    const long half = static_cast<long>(M / 2);
    for (long n = -half; n < half; ++n) {
      // t_m = -pi + 2 pi m / M contributes e^{i n pi} e^{-2 pi i n m / M}
      cd v = F[(n + static_cast<long>(M)) % static_cast<long>(M)] * (2.0 * pi / M);
      out[n + half] = (n % 2 == 0) ? v : -v;
    }
    return out;
  }

  // hat w at the integers xi0, xi0+1, ..., xi0+count-1
  std::vector<cd> fourier_integers(long xi0, long count) const {
    std::vector<cd> out(count, 0.0);
    if (count <= 0) return out;
    double ximax = std::max(std::abs(double(xi0)), std::abs(double(xi0 + count - 1)));
    for (auto [a, b] : support) {
      int panels = base_panels(a, b) + static_cast<int>(std::ceil(ximax * (b - a) / std::numbers::pi));
      Rule r = composite_gl(a, b, panels, 16);
      const std::size_t m = r.size();
      std::vector<cd> ph(m), step(m);
      for (std::size_t i = 0; i < m; ++i) {
        double wv = r.w[i] * samples(r.x[i]);
        ph[i] = wv * std::polar(1.0, -double(xi0) * r.x[i]);
        step[i] = std::polar(1.0, -r.x[i]);
      }
      for (long k = 0; k < count; ++k) {
        cd s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          s += ph[i];
          ph[i] *= step[i];
        }
        out[k] += s;
        if ((k & 255) == 255)  // refresh phasors against drift
          for (std::size_t i = 0; i < m; ++i)
            ph[i] = r.w[i] * samples(r.x[i]) * std::polar(1.0, -double(xi0 + k + 1) * r.x[i]);
      }
    }
    return out;
  }
};

inline SpectralWindow make_window(WindowKind kind, int j = 0) {
  constexpr double pi = std::numbers::pi;
  SpectralWindow w;
  w.kind = kind;
  w.j = j;
  const double s = std::ldexp(1.0, j);
  w.scale = 1.0 / s;
  switch (kind) {
    case WindowKind::psi0:
      w.scale = 1.0 / 16;
      w.samples = [](double t) {
        double a = std::abs(t);
        if (a >= pi) return 0.0;
        return 1.0 - smooth_step(16.0 * a) - smooth_step(16.0 * (pi - a));
      };
      w.support = {{-pi + 1.0 / 32, -1.0 / 32}, {1.0 / 32, pi - 1.0 / 32}};
      break;
    case WindowKind::plus:
      w.samples = [s](double t) { return psi_base(s * t); };
      w.support = {{0.25 / s, 1.0 / s}};
      break;
    case WindowKind::minus:
      w.samples = [s](double t) { return psi_base(-s * t); };
      w.support = {{-1.0 / s, -0.25 / s}};
      break;
    case WindowKind::pi_plus:
      w.samples = [s](double t) { return psi_base(s * (pi - t)); };
      w.support = {{pi - 1.0 / s, pi - 0.25 / s}};
      break;
    case WindowKind::pi_minus:
      w.samples = [s](double t) { return psi_base(s * (pi + t)); };
      w.support = {{-pi + 0.25 / s, -pi + 1.0 / s}};
      break;
    case WindowKind::tail_zero:
      w.samples = [s](double t) { return std::abs(t) >= pi ? 0.0 : smooth_step(s * std::abs(t)); };
      w.support = {{-1.0 / s, 0.0}, {0.0, 1.0 / s}};
      break;
    case WindowKind::tail_pi:
      w.samples = [s](double t) { return std::abs(t) > pi ? 0.0 : smooth_step(s * (pi - std::abs(t))); };
      w.support = {{-pi, -pi + 1.0 / s}, {pi - 1.0 / s, pi}};
      break;
    case WindowKind::custom:
      throw std::invalid_argument("make_window: custom windows are built directly");
  }
  return w;
}

// psi0, the four families for 4 <= j <= j_max, and the two tails at J = j_max + 1
inline std::vector<SpectralWindow> make_windows(int j_max) {
  if (j_max < 4) throw std::invalid_argument("make_windows: j_max >= 4 required");
  std::vector<SpectralWindow> out;
  out.push_back(make_window(WindowKind::psi0));
  for (int j = 4; j <= j_max; ++j)
    for (auto k : {WindowKind::plus, WindowKind::minus, WindowKind::pi_plus, WindowKind::pi_minus})
      out.push_back(make_window(k, j));
  out.push_back(make_window(WindowKind::tail_zero, j_max + 1));
  out.push_back(make_window(WindowKind::tail_pi, j_max + 1));
  return out;
}

inline bool is_tail(const SpectralWindow& w) {
  return w.kind == WindowKind::tail_zero || w.kind == WindowKind::tail_pi;
}

}  // namespace hlab
