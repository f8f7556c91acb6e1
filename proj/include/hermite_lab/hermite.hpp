#pragma once

#include "quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace hlab {

namespace detail {

inline constexpr int kRescaleBits = 256;
inline const double kRescaleUp = std::ldexp(1.0, kRescaleBits);
inline const double kRescaleDown = std::ldexp(1.0, -kRescaleBits);

// h_0(t) split as mantissa * 2^e so large |t| does not underflow the recurrence
inline void ground_state(double t, double& m, long& e) {
  double lg = (-0.5 * t * t - 0.25 * std::log(std::numbers::pi)) / std::numbers::ln2;
  double fl = std::floor(lg);
  e = static_cast<long>(fl);
  m = std::exp2(lg - fl);
}

inline double to_double(double m, long e) {
  if (m == 0.0) return 0.0;
  if (e < -1200) return 0.0;
  if (e > 1100) return std::copysign(std::numeric_limits<double>::infinity(), m);
  return std::ldexp(m, static_cast<int>(e));
}

struct RecurrenceCoeffs {
  std::vector<double> a, b;  // h_{n+1} = a_n t h_n - b_n h_{n-1}
  void ensure(int K) {
    int have = static_cast<int>(a.size());
    if (have >= K + 1) return;
    a.resize(K + 1);
    b.resize(K + 1);
    for (int n = have; n <= K; ++n) {
      a[n] = std::sqrt(2.0 / (n + 1.0));
      b[n] = std::sqrt(n / (n + 1.0));
    }
  }
};

inline const RecurrenceCoeffs& coeffs(int K) {
  thread_local RecurrenceCoeffs c;
  c.ensure(K);
  return c;
}

}  // namespace detail

// h_0..h_K at t; values beyond double range flush to zero.
inline void hermite_row(int K, double t, double* out) {
  if (K < 0) return;
  const auto& c = detail::coeffs(K);
  double cur, prev = 0.0;
  long e;
  detail::ground_state(t, cur, e);
  out[0] = detail::to_double(cur, e);
  for (int n = 0; n < K; ++n) {
    double nxt = c.a[n] * t * cur - c.b[n] * prev;
    prev = cur;
    cur = nxt;
    if (std::abs(cur) > detail::kRescaleUp) {
      cur *= detail::kRescaleDown;
      prev *= detail::kRescaleDown;
      e += detail::kRescaleBits;
    }
    out[n + 1] = detail::to_double(cur, e);
  }
}

inline std::vector<double> hermite_row(int K, double t) {
  std::vector<double> v(K + 1);
  hermite_row(K, t, v.data());
  return v;
}

inline double eval_hermite(int k, double t) {
  if (k < 0) throw std::invalid_argument("eval_hermite: negative order");
  const auto& c = detail::coeffs(k);
  double cur, prev = 0.0;
  long e;
  detail::ground_state(t, cur, e);
  for (int n = 0; n < k; ++n) {
    double nxt = c.a[n] * t * cur - c.b[n] * prev;
    prev = cur;
    cur = nxt;
    if (std::abs(cur) > detail::kRescaleUp) {
      cur *= detail::kRescaleDown;
      prev *= detail::kRescaleDown;
      e += detail::kRescaleBits;
    }
  }
  return detail::to_double(cur, e);
}

inline double hermite_derivative(int k, double t) {
  return t * eval_hermite(k, t) - std::sqrt(2.0 * k + 2.0) * eval_hermite(k + 1, t);
}

// H(i, n) = h_n(t_i), n = 0..K. Loop order keeps the inner loop over points.
inline Eigen::MatrixXd hermite_matrix(int K, std::span<const double> ts) {
  const Eigen::Index m = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd H(m, K + 1);
  if (m == 0) return H;
  const auto& c = detail::coeffs(K);
  std::vector<double> cur(m), prev(m, 0.0);
  std::vector<long> ex(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    detail::ground_state(ts[i], cur[i], ex[i]);
    H(i, 0) = detail::to_double(cur[i], ex[i]);
  }
  for (int n = 0; n < K; ++n) {
    const double an = c.a[n], bn = c.b[n];
    double* col = H.col(n + 1).data();
    for (Eigen::Index i = 0; i < m; ++i) {
      double nxt = an * ts[i] * cur[i] - bn * prev[i];
      prev[i] = cur[i];
      cur[i] = nxt;
      if (std::abs(nxt) > detail::kRescaleUp) {
        cur[i] *= detail::kRescaleDown;
        prev[i] *= detail::kRescaleDown;
        ex[i] += detail::kRescaleBits;
      }
      col[i] = detail::to_double(cur[i], ex[i]);
    }
  }
  return H;
}

enum class HermiteRegime { oscillatory, transition, exponential };

struct HermiteAsymptotic {
  double value;     // leading term; zero in the transition band
  double envelope;  // amplitude times the relative error scale
  HermiteRegime regime;
};

inline double phase_inside(double mu, double t) {
  double r = std::sqrt(std::max(0.0, mu * mu - t * t));
  return 0.5 * (t * r + mu * mu * std::asin(std::clamp(t / mu, -1.0, 1.0)));
}

inline double phase_outside(double mu, double t) {
  t = std::abs(t);
  double r = std::sqrt(std::max(0.0, t * t - mu * mu));
  return 0.5 * (t * r - mu * mu * std::log((t + r) / mu));
}

inline HermiteAsymptotic hermite_asymptotic(int k, double t) {
  const double mu = std::sqrt(2.0 * k + 1.0);
  const double band = std::pow(mu, -1.0 / 3.0);
  const double at = std::abs(t);
  if (at < mu - band) {
    double amp = std::sqrt(2.0 / std::numbers::pi) * std::pow(mu * mu - t * t, -0.25);
    double s = phase_inside(mu, t);
    double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    double v = sign * amp * ((k % 2 == 0) ? std::cos(s) : std::sin(s));
    double err = 1.0 / (std::sqrt(mu * mu - t * t) * (mu - at));
    return {v, amp * err, HermiteRegime::oscillatory};
  }
  if (at <= mu + band) return {0.0, std::pow(mu, -1.0 / 6.0), HermiteRegime::transition};
  double amp = std::exp(-phase_outside(mu, t)) * std::pow(t * t - mu * mu, -0.25) /
               std::sqrt(2.0 * std::numbers::pi);
  if (t < 0 && k % 2 == 1) amp = -amp;
  double err = 1.0 / (std::sqrt(t * t - mu * mu) * (at - mu));
  return {amp, std::abs(amp) * err, HermiteRegime::exponential};
}

// Nodes on [0, T] resolving h_k; the function is symmetric up to sign.
inline Rule hermite_half_line_rule(int k, int per_panel = 16) {
  const double mu = std::sqrt(2.0 * k + 1.0);
  const double T = mu + 14.0 * std::pow(mu, -1.0 / 3.0) + 6.0;
  const double width = std::min(0.5, std::numbers::pi / (2.0 * mu));
  int panels = static_cast<int>(std::ceil(T / width));
  return composite_gl(0.0, T, panels, per_panel);
}

inline double hermite_lp_norm(int k, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("hermite_lp_norm: p < 1");
  if (std::isinf(p)) {
    const double mu = std::sqrt(2.0 * k + 1.0);
    const double T = mu + 6.0 * std::pow(mu, -1.0 / 3.0) + 2.0;
    const int n = static_cast<int>(std::ceil(T * mu * 24.0)) + 64;
    std::vector<double> ts(n + 1);
    for (int i = 0; i <= n; ++i) ts[i] = T * i / n;
    int best = 0;
    double bv = 0.0;
    for (int i = 0; i <= n; ++i) {
      double v = std::abs(eval_hermite(k, ts[i]));
      if (v > bv) { bv = v; best = i; }
    }
    // golden-section refinement of |h_k| around the best sample
    double a = ts[std::max(0, best - 1)], b = ts[std::min(n, best + 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = std::abs(eval_hermite(k, c)), fd = std::abs(eval_hermite(k, d));
    for (int it = 0; it < 60; ++it) {
      if (fc > fd) { b = d; d = c; fd = fc; c = b - g * (b - a); fc = std::abs(eval_hermite(k, c)); }
      else { a = c; c = d; fc = fd; d = a + g * (b - a); fd = std::abs(eval_hermite(k, d)); }
    }
    return std::max({bv, fc, fd});
  }
  Rule r = hermite_half_line_rule(k);
  // |h_k|^p has kinks at the zeros unless p is an even integer: panel breaks go there
  if (std::fmod(p, 2.0) != 0.0 && k > 0) {
    const double mu = std::sqrt(2.0 * k + 1.0);
    const double T = r.x.back() + 1.0;
    const double h = std::numbers::pi / (8.0 * mu);
    std::vector<double> edges{0.0};
    double a = 0.0, fa = eval_hermite(k, 0.0);
    for (double b = h; b < mu + 2.0; b += h) {
      double fb = eval_hermite(k, b);
      if (fa == 0.0 && a > 0.0) edges.push_back(a);
      else if (fa * fb < 0.0) {
        double lo = a, hi = b, flo = fa;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it) {
          double m = 0.5 * (lo + hi), fm = eval_hermite(k, m);
          if ((fm < 0) == (flo < 0)) lo = m, flo = fm;
          else hi = m;
        }
        if (0.5 * (lo + hi) > edges.back()) edges.push_back(0.5 * (lo + hi));
      }
      a = b;
      fa = fb;
    }
    r = composite_gl(edges, 16);
    const double tail0 = edges.back(), width = std::min(0.5, std::numbers::pi / (2.0 * mu));
    r.append(composite_gl(tail0, T, static_cast<int>(std::ceil((T - tail0) / width)), 16));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * std::pow(std::abs(eval_hermite(k, r.x[i])), p);
  return std::pow(2.0 * s, 1.0 / p);
}

struct LpExponent {
  double exponent;
  bool log_factor;
  double log_power;  // power of log k multiplying k^exponent
};

inline LpExponent expected_lp_exponent(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("expected_lp_exponent: p < 1");
  if (std::isinf(p)) return {-1.0 / 12.0, false, 0.0};
  if (p < 4.0) return {1.0 / (2.0 * p) - 0.25, false, 0.0};
  if (p == 4.0) return {-0.125, true, 0.25};
  return {-1.0 / (6.0 * p) - 1.0 / 12.0, false, 0.0};
}

// int_{s0}^{s1} h_u^2 for u <= K, by composite quadrature
inline Eigen::VectorXd interval_self_overlaps(double s0, double s1, int K) {
  const double mu = std::sqrt(2.0 * K + 1.0);
  const double width = std::min(0.5, std::numbers::pi / (2.0 * mu));
  int panels = std::max(1, static_cast<int>(std::ceil((s1 - s0) / width)));
  Rule r = composite_gl(s0, s1, panels, 16);
  Eigen::MatrixXd H = hermite_matrix(K, r.x);
  Eigen::Map<const Eigen::VectorXd> w(r.w.data(), static_cast<Eigen::Index>(r.w.size()));
  return (H.array().square().colwise() * w.array()).colwise().sum().transpose();
}

// int_{s0}^{s1} h_u h_v for u, v <= K.
inline Eigen::MatrixXd interval_overlaps(double s0, double s1, int K) {
  if (!(s1 > s0)) throw std::invalid_argument("interval_overlaps: empty interval");
  std::vector<double> h0(K + 2), h1(K + 2);
  hermite_row(K + 1, s0, h0.data());
  hermite_row(K + 1, s1, h1.data());
  Eigen::MatrixXd A(K + 1, K + 1);
  auto bracket = [&](const std::vector<double>& h, int u, int v) {
    return std::sqrt(u + 1.0) * h[u + 1] * h[v] - std::sqrt(v + 1.0) * h[u] * h[v + 1];
  };
  for (int u = 0; u <= K; ++u)
    for (int v = 0; v < u; ++v) {
      double val = (bracket(h1, u, v) - bracket(h0, u, v)) / (std::numbers::sqrt2 * (u - v));
      A(u, v) = val;
      A(v, u) = val;
    }
  Eigen::VectorXd diag = interval_self_overlaps(s0, s1, K);
  for (int u = 0; u <= K; ++u) A(u, u) = diag(u);
  return A;
}

// a_{u,v} = int_{-l}^{l} h_u h_v
inline Eigen::MatrixXd overlap_integrals(double ell, int K) {
  if (!(ell > 0.0)) throw std::invalid_argument("overlap_integrals: ell must be positive");
  std::vector<double> h(K + 2);
  hermite_row(K + 1, ell, h.data());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int u = 0; u <= K; ++u)
    for (int v = u % 2; v < u; v += 2) {
      double val = 2.0 * (std::sqrt(u + 1.0) * h[u + 1] * h[v] - std::sqrt(v + 1.0) * h[u] * h[v + 1]) /
                   (std::numbers::sqrt2 * (u - v));
      A(u, v) = val;
      A(v, u) = val;
    }
  Eigen::VectorXd D = interval_self_overlaps(-ell, ell, K);
  for (int u = 0; u <= K; ++u) A(u, u) = D(u);
  return A;
}

struct OverlapValue {
  double quadrature;
  double closed_form;  // NaN on the diagonal
};

// a_{u,v} by Gauss-Legendre and, for u != v, by the boundary formula; the two must agree
inline OverlapValue overlap_integral(int u, int v, double ell) {
  if (u < 0 || v < 0 || !(ell > 0.0)) throw std::invalid_argument("overlap_integral: bad arguments");
  const int K = std::max(u, v) + 1;
  const double mu = std::sqrt(2.0 * K + 1.0);
  int panels = static_cast<int>(std::ceil(2.0 * ell * (mu + 1.0) / 2.0)) + 4;
  Rule r = composite_gl(-ell, ell, panels, 24);
  std::vector<double> h(K + 1);
  double q = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    hermite_row(K, r.x[i], h.data());
    q += r.w[i] * h[u] * h[v];
  }
  OverlapValue out{q, std::numeric_limits<double>::quiet_NaN()};
  if (u != v) {
    hermite_row(K, ell, h.data());
    out.closed_form = ((u + v) % 2)
                          ? 0.0
                          : 2.0 * (std::sqrt(u + 1.0) * h[u + 1] * h[v] - std::sqrt(v + 1.0) * h[u] * h[v + 1]) /
                                (std::numbers::sqrt2 * (u - v));
    if (std::abs(out.closed_form - q) > 1e-8)
      throw std::logic_error("overlap_integral: closed form disagrees with quadrature");
  }
  return out;
}

struct ActionIntegrals {
  double s_minus;  // int_0^t sqrt(mu^2 - tau^2), 0 <= t <= mu
  double s_plus;   // int_mu^t sqrt(tau^2 - mu^2), t >= mu
};

inline double action_inside(double mu, double t) {
  if (!(mu > 0.0) || t < 0.0 || t > mu) throw std::invalid_argument("action_inside: need 0 <= t <= mu");
  return phase_inside(mu, t);
}

inline double action_outside(double mu, double t) {
  if (!(mu > 0.0) || t < mu) throw std::invalid_argument("action_outside: need t >= mu");
  return phase_outside(mu, t);
}

// each branch is NaN off its domain
inline ActionIntegrals action_integrals(double mu, double t) {
  if (!(mu > 0.0)) throw std::invalid_argument("action_integrals: mu > 0");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  return {(t >= 0.0 && t <= mu) ? phase_inside(mu, t) : nan, t >= mu ? phase_outside(mu, t) : nan};
}

using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

// all alpha with |alpha| = N, lexicographic
inline std::vector<MultiIndex> enumerate_multiindices(int N, int d, std::size_t cap = 50'000'000) {
  if (d < 1 || d > 3) throw std::invalid_argument("enumerate_multiindices: d in {1,2,3}");
  if (N < 0) throw std::invalid_argument("enumerate_multiindices: N >= 0");
  double count = 1.0;
  for (int i = 1; i < d; ++i) count = count * (N + i) / i;
  if (count > static_cast<double>(cap)) throw std::length_error("enumerate_multiindices: count exceeds cap");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(count + 0.5));
  MultiIndex a(d, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == d - 1) {
      a[pos] = left;
      out.push_back(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, N);
  return out;
}

inline double eval_phi(const MultiIndex& alpha, std::span<const double> x) {
  if (alpha.size() != x.size()) throw std::invalid_argument("eval_phi: dimension mismatch");
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) v *= eval_hermite(alpha[i], x[i]);
  return v;
}

}  // namespace hlab
