#pragma once

#include "kernels.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

using VecC = Eigen::VectorXcd;
using Mask = std::vector<std::uint8_t>;

// ---- grids ------------------------------------------------------------------

enum class RuleKind { midpoint, gauss_legendre, custom };

inline std::string to_string(RuleKind r) {
  switch (r) {
    case RuleKind::midpoint: return "midpoint";
    case RuleKind::gauss_legendre: return "gauss_legendre";
    case RuleKind::custom: return "custom";
  }
  return "?";
}

struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }
  static Box cube(int d, double a, double b) { return {std::vector<double>(d, a), std::vector<double>(d, b)}; }
};

inline Rule midpoint_rule(double a, double b, int n) {
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(a + (b - a) * (i + 0.5) / n);
    r.w.push_back((b - a) / n);
  }
  return r;
}

// n nodes: one rule up to order 32, then panels of order 16 (n rounded up to a multiple of 16)
inline Rule gl_axis(double a, double b, int n) {
  if (n <= 32) return gl_on(a, b, n);
  return composite_gl(a, b, (n + 15) / 16, 16);
}

struct GridSpec {
  int d = 0;
  Box box;
  RuleKind rule = RuleKind::midpoint;
  std::vector<Rule> axes;  // tensor factors, axis 0 fastest
  Eigen::MatrixXd nodes;   // d x n
  Eigen::VectorXd weights;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  std::vector<int> resolution() const {
    std::vector<int> r;
    for (auto& a : axes) r.push_back(static_cast<int>(a.size()));
    return r;
  }
  Vec node(std::size_t i) const { return nodes.col(static_cast<Eigen::Index>(i)); }
};

inline constexpr std::size_t kGridCap = 20'000'000;

inline GridSpec grid_from_axes(std::vector<Rule> axes, RuleKind kind = RuleKind::custom, std::size_t cap = kGridCap) {
  GridSpec g;
  g.d = static_cast<int>(axes.size());
  g.rule = kind;
  std::size_t n = 1;
  for (auto& a : axes) {
    n *= a.size();
    g.box.lo.push_back(a.x.front());
    g.box.hi.push_back(a.x.back());
  }
  if (n > cap) throw std::length_error("grid exceeds memory cap");
  g.nodes.resize(g.d, static_cast<Eigen::Index>(n));
  g.weights.resize(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> idx(g.d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    for (int k = 0; k < g.d; ++k) {
      g.nodes(k, i) = axes[k].x[idx[k]];
      w *= axes[k].w[idx[k]];
    }
    g.weights(i) = w;
    for (int k = 0; k < g.d; ++k) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
  g.axes = std::move(axes);
  return g;
}

inline GridSpec make_grid(const Box& box, int resolution, RuleKind rule = RuleKind::midpoint) {
  if (resolution < 2) throw std::invalid_argument("make_grid: resolution >= 2");
  std::vector<Rule> axes;
  for (int k = 0; k < box.dim(); ++k)
    axes.push_back(rule == RuleKind::midpoint ? midpoint_rule(box.lo[k], box.hi[k], resolution)
                                              : gl_axis(box.lo[k], box.hi[k], resolution));
  GridSpec g = grid_from_axes(std::move(axes), rule);
  g.box = box;
  return g;
}

// Axis for Pi_lambda in original coordinates on [-extent sqrt(lambda), extent sqrt(lambda)]:
// GL panels sized by the central wavelength inside the turning region, coarse panels beyond it.
inline Rule projection_axis(double lambda, double extent = 1.5, double nodes_per_wavelength = 6.0) {
  const double s = std::sqrt(lambda);
  const double R = extent * s;
  const double T = std::min(R, s + 4.0 * std::pow(lambda, -1.0 / 6.0));
  const int order = 16;
  const double width = order * (2.0 * std::numbers::pi / s) / nodes_per_wavelength;
  const int inner = std::max(2, static_cast<int>(std::ceil(2.0 * T / width)));
  Rule r;
  auto outer = [&](double a, double b) {
    if (b - a <= 1e-12) return;
    int p = std::max(1, static_cast<int>(std::ceil((b - a) / (3.0 * width))));
    r.append(composite_gl(a, b, p, order));
  };
  outer(-R, -T);
  r.append(composite_gl(-T, T, inner, order));
  outer(T, R);
  return r;
}

// ---- dense discretization -------------------------------------------------

struct DiscretizedOperator {
  Eigen::MatrixXcd kernel;  // rows = out nodes
  Eigen::VectorXd w_in, w_out;
  Mask mask_in, mask_out;

  Eigen::Index rows() const { return kernel.rows(); }
  Eigen::Index cols() const { return kernel.cols(); }
  const Eigen::VectorXd& in_weights() const { return w_in; }
  const Eigen::VectorXd& out_weights() const { return w_out; }

  VecC apply(const VecC& f) const {
    VecC g(f.size());
    for (Eigen::Index j = 0; j < f.size(); ++j) g(j) = mask_in[j] ? f(j) * w_in(j) : cd(0.0);
    VecC out = kernel * g;
    for (Eigen::Index i = 0; i < out.size(); ++i)
      if (!mask_out[i]) out(i) = 0.0;
    return out;
  }
  VecC apply_adjoint(const VecC& g) const {
    VecC h(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) h(i) = mask_out[i] ? g(i) * w_out(i) : cd(0.0);
    VecC out = kernel.adjoint() * h;
    for (Eigen::Index j = 0; j < out.size(); ++j)
      if (!mask_in[j]) out(j) = 0.0;
    return out;
  }
  bool real_kernel() const { return kernel.imag().isZero(0.0); }
};

inline Mask full_mask(std::size_t n) { return Mask(n, 1); }

template <class Pred>
Mask mask_where(const GridSpec& g, Pred&& pred) {
  Mask m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = pred(g.node(i)) ? 1 : 0;
  return m;
}

inline DiscretizedOperator from_matrix(Eigen::MatrixXcd K, Eigen::VectorXd w_in, Eigen::VectorXd w_out) {
  DiscretizedOperator T;
  T.mask_in = full_mask(K.cols());
  T.mask_out = full_mask(K.rows());
  T.kernel = std::move(K);
  T.w_in = std::move(w_in);
  T.w_out = std::move(w_out);
  return T;
}

inline DiscretizedOperator assemble(const KernelOracle& oracle, const GridSpec& in, const GridSpec& out,
                                    Mask mask_in = {}, Mask mask_out = {}) {
  if (in.d != oracle.d || out.d != oracle.d) throw std::invalid_argument("assemble: dimension mismatch");
  if (mask_in.empty()) mask_in = full_mask(in.size());
  if (mask_out.empty()) mask_out = full_mask(out.size());
  if (mask_in.size() != in.size() || mask_out.size() != out.size())
    throw std::invalid_argument("assemble: mask size mismatch");
  DiscretizedOperator T;
  T.kernel.resize(static_cast<Eigen::Index>(out.size()), static_cast<Eigen::Index>(in.size()));
  for (std::size_t j = 0; j < in.size(); ++j) {
    Vec y = in.node(j);
    for (std::size_t i = 0; i < out.size(); ++i) {
      try {
        T.kernel(i, j) = oracle(out.node(i), y);
      } catch (const std::exception& e) {
        throw std::runtime_error("assemble: oracle failed at (" + std::to_string(i) + "," + std::to_string(j) +
                                 "): " + e.what());
      }
    }
  }
  T.w_in = in.weights;
  T.w_out = out.weights;
  T.mask_in = std::move(mask_in);
  T.mask_out = std::move(mask_out);
  return T;
}

// ---- tensor-structured Pi_lambda --------------------------------------------

// Pi_lambda on a tensor grid (same 1-D rule on each axis), applied through the eigenbasis:
// analysis against Phi_alpha, |alpha| = N, then synthesis.
class TensorProjection {
 public:
  TensorProjection(double lambda, int d, const Rule& axis, Mask mask_in = {}, Mask mask_out = {})
      : lambda_(lambda), d_(d), N_(eigen_level(lambda, d)), n_(static_cast<int>(axis.size())), axis_(axis) {
    if (d < 1 || d > 3) throw std::invalid_argument("TensorProjection: d in {1,2,3}");
    H_ = hermite_matrix(N_, std::span<const double>(axis.x));
    std::vector<Rule> axes(d, axis);
    grid_ = grid_from_axes(axes, RuleKind::custom);
    mask_in_ = mask_in.empty() ? full_mask(grid_.size()) : std::move(mask_in);
    mask_out_ = mask_out.empty() ? full_mask(grid_.size()) : std::move(mask_out);
  }

  const GridSpec& grid() const { return grid_; }
  const Eigen::VectorXd& in_weights() const { return grid_.weights; }
  const Eigen::VectorXd& out_weights() const { return grid_.weights; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(grid_.size()); }
  Eigen::Index cols() const { return rows(); }
  int level() const { return N_; }
  double lambda() const { return lambda_; }
  void set_masks(Mask in, Mask out) {
    mask_in_ = std::move(in);
    mask_out_ = std::move(out);
  }

  // <f, Phi_alpha> for |alpha| = N; layout follows enumerate_multiindices
  Eigen::VectorXd analysis(const Eigen::VectorXd& f, const Mask* mask = nullptr) const {
    Eigen::VectorXd g = f.cwiseProduct(grid_.weights);
    if (mask)
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (!(*mask)[i]) g(i) = 0.0;
    const int N = N_;
    if (d_ == 1) return Eigen::VectorXd::Constant(1, H_.col(N).dot(g));
    if (d_ == 2) {
      Eigen::Map<const Eigen::MatrixXd> G(g.data(), n_, n_);
      Eigen::MatrixXd T = G * H_;  // T(i, m) = sum_l G(i,l) h_m(t_l)
      Eigen::VectorXd c(N + 1);
      for (int k = 0; k <= N; ++k) c(k) = H_.col(k).dot(T.col(N - k));
      return c;
    }
    // d = 3: alpha = (a, b, N-a-b)
    Eigen::Map<const Eigen::MatrixXd> G(g.data(), n_ * n_, n_);
    Eigen::MatrixXd T1 = G * H_;  // (i + n l, m)
    Eigen::VectorXd c((N + 1) * (N + 2) / 2);
    int pos = 0;
    std::vector<Eigen::MatrixXd> S(N + 1);
    for (int m = 0; m <= N; ++m) {
      Eigen::Map<const Eigen::MatrixXd> Tm(T1.col(m).data(), n_, n_);
      S[m] = H_.leftCols(N - m + 1).transpose() * Tm * H_.leftCols(N - m + 1);  // (a, b)
    }
    for (int a = 0; a <= N; ++a)
      for (int b = 0; b <= N - a; ++b) c(pos++) = S[N - a - b](a, b);
    return c;
  }

  Eigen::VectorXd synthesis(const Eigen::VectorXd& c, const Mask* mask = nullptr) const {
    const int N = N_;
    Eigen::VectorXd out(grid_.size());
    if (d_ == 1) {
      out = c(0) * H_.col(N);
    } else if (d_ == 2) {
      Eigen::MatrixXd A = H_ * c.asDiagonal();
      Eigen::MatrixXd Hr = H_.rowwise().reverse();
      Eigen::Map<Eigen::MatrixXd>(out.data(), n_, n_) = A * Hr.transpose();
    } else {
      std::vector<Eigen::MatrixXd> C(N + 1, Eigen::MatrixXd::Zero(N + 1, N + 1));
      int pos = 0;
      for (int a = 0; a <= N; ++a)
        for (int b = 0; b <= N - a; ++b) C[N - a - b](a, b) = c(pos++);
      Eigen::MatrixXd T1(n_ * n_, N + 1);
      for (int m = 0; m <= N; ++m) {
        Eigen::MatrixXd Tm = H_ * C[m] * H_.transpose();
        T1.col(m) = Eigen::Map<Eigen::VectorXd>(Tm.data(), n_ * n_);
      }
      Eigen::Map<Eigen::MatrixXd>(out.data(), n_ * n_, n_) = T1 * H_.transpose();
    }
    if (mask)
      for (Eigen::Index i = 0; i < out.size(); ++i)
        if (!(*mask)[i]) out(i) = 0.0;
    return out;
  }

  Eigen::VectorXd apply_real(const Eigen::VectorXd& f) const { return synthesis(analysis(f, &mask_in_), &mask_out_); }
  Eigen::VectorXd apply_adjoint_real(const Eigen::VectorXd& g) const {
    return synthesis(analysis(g, &mask_out_), &mask_in_);
  }

  VecC apply(const VecC& f) const {
    Eigen::VectorXd re = apply_real(f.real());
    if (f.imag().isZero(0.0)) return re.cast<cd>();
    Eigen::VectorXd im = apply_real(f.imag());
    VecC out(re.size());
    out.real() = re;
    out.imag() = im;
    return out;
  }
  VecC apply_adjoint(const VecC& g) const {
    Eigen::VectorXd re = apply_adjoint_real(g.real());
    if (g.imag().isZero(0.0)) return re.cast<cd>();
    Eigen::VectorXd im = apply_adjoint_real(g.imag());
    VecC out(re.size());
    out.real() = re;
    out.imag() = im;
    return out;
  }

  // Pi_lambda(x, x) on the grid
  Eigen::VectorXd diagonal() const {
    const int N = N_;
    Eigen::MatrixXd S = H_.cwiseAbs2();
    Eigen::VectorXd out(grid_.size());
    if (d_ == 1) return S.col(N);
    if (d_ == 2) {
      Eigen::Map<Eigen::MatrixXd>(out.data(), n_, n_) = S * S.rowwise().reverse().transpose();
      return out;
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      Vec x = grid_.node(i);
      out(static_cast<Eigen::Index>(i)) = projection_direct(lambda_, x, x);
    }
    return out;
  }

 private:
  double lambda_;
  int d_, N_, n_;
  Rule axis_;
  Eigen::MatrixXd H_;  // H(i, k) = h_k(t_i)
  GridSpec grid_;
  Mask mask_in_, mask_out_;
};

// ---- polar, rotation-invariant kernels in d = 2 ------------------------------

// l_{k,m}(r) = sqrt(k!/(k+m)!) r^m e^{-r^2/2} L_k^m(r^2), k = 0..kmax
inline std::vector<double> radial_row(int m, int kmax, double r) {
  std::vector<double> out(kmax + 1, 0.0);
  const double s = r * r;
  double lg = (r > 0 ? m * std::log(r) : (m == 0 ? 0.0 : -INFINITY)) - 0.5 * s - 0.5 * std::lgamma(m + 1.0);
  if (!std::isfinite(lg)) {
    if (m == 0) lg = -0.5 * s;
    else return out;
  }
  long e = static_cast<long>(std::floor(lg / std::numbers::ln2));
  double cur = std::exp(lg - e * std::numbers::ln2), prev = 0.0;
  constexpr int bits = 256;
  const double up = std::ldexp(1.0, bits), down = std::ldexp(1.0, -bits);
  for (int k = 0; k <= kmax; ++k) {
    out[k] = (e < -1100) ? 0.0 : std::ldexp(cur, static_cast<int>(std::max(-2000L, std::min(2000L, e))));
    double nxt = ((2.0 * k + m + 1.0 - s) * cur - std::sqrt(double(k) * (k + m)) * prev) /
                 std::sqrt((k + 1.0) * (k + m + 1.0));
    prev = cur;
    cur = nxt;
    if (std::abs(cur) > up) {
      cur *= down;
      prev *= down;
      e += bits;
    }
  }
  return out;
}

// rotation-invariant kernel: sum over levels n of c[n] Pi_{2n+2}, through angular modes
inline cd polar_kernel_value(const std::vector<cd>& c, const Vec& x, const Vec& y) {
  const int K = static_cast<int>(c.size()) - 1;
  const double r = x.norm(), rho = y.norm();
  const double th = std::atan2(x(1), x(0)) - std::atan2(y(1), y(0));
  cd s = 0.0;
  for (int m = 0; m <= K; ++m) {
    int kmax = (K - m) / 2;
    auto a = radial_row(m, kmax, r), b = radial_row(m, kmax, rho);
    cd t = 0.0;
    for (int k = 0; k <= kmax; ++k) t += c[2 * k + m] * a[k] * b[k];
    s += t * (m == 0 ? 1.0 : 2.0 * std::cos(m * th));
  }
  return s / std::numbers::pi;
}

struct RadialGrid {
  double r0, r1;
  Rule rule;  // nodes r, weights w (without the factor r)
};

inline RadialGrid radial_grid(double r0, double r1, double lambda, int min_nodes = 16) {
  const double freq = std::sqrt(lambda) + 1.0;
  int panels = std::max(1, static_cast<int>(std::ceil((r1 - r0) * freq / (2.0 * std::numbers::pi))));
  int per = std::max(8, min_nodes / panels);
  return {r0, r1, composite_gl(r0, r1, panels, per)};
}

// Annulus {sqrt(lambda)(1 - 2 mu) <= |x| <= sqrt(lambda)(1 - mu)} for sign +, mirrored outside for sign -.
inline std::pair<double, double> annulus_radii(double lambda, double mu, int sign) {
  const double s = std::sqrt(lambda);
  return sign > 0 ? std::pair{s * (1.0 - 2.0 * mu), s * (1.0 - mu)} : std::pair{s * (1.0 + mu), s * (1.0 + 2.0 * mu)};
}

// chi_out K chi_in on polar grids: f(r_a, theta_t) stored at a + n_r t.
class PolarOperator {
 public:
  PolarOperator(const std::vector<cd>& coeffs, RadialGrid in, RadialGrid out, int n_theta = 0, double drop = 1e-15)
      : in_(std::move(in)), out_(std::move(out)) {
    const int K = static_cast<int>(coeffs.size()) - 1;
    const int ni = static_cast<int>(in_.rule.size()), no = static_cast<int>(out_.rule.size());
    // mode kernels kappa_m(a, b) = 2 sum_k c_{2k+m} l_{k,m}(r_a) l_{k,m}(rho_b)
    std::vector<Eigen::MatrixXcd> modes;
    double peak = 0.0;
    for (int m = 0; m <= K; ++m) {
      int kmax = (K - m) / 2;
      Eigen::MatrixXd Li(ni, kmax + 1), Lo(no, kmax + 1);
      for (int a = 0; a < ni; ++a) {
        auto row = radial_row(m, kmax, in_.rule.x[a]);
        for (int k = 0; k <= kmax; ++k) Li(a, k) = row[k];
      }
      for (int a = 0; a < no; ++a) {
        auto row = radial_row(m, kmax, out_.rule.x[a]);
        for (int k = 0; k <= kmax; ++k) Lo(a, k) = row[k];
      }
      Eigen::VectorXcd cm(kmax + 1);
      for (int k = 0; k <= kmax; ++k) cm(k) = coeffs[2 * k + m];
      Eigen::MatrixXcd km = 2.0 * (Lo.cast<cd>() * cm.asDiagonal() * Li.transpose().cast<cd>());
      double mag = km.cwiseAbs().maxCoeff();
      peak = std::max(peak, mag);
      modes.push_back(std::move(km));
    }
    // trim negligible high modes
    int M = static_cast<int>(modes.size()) - 1;
    while (M > 0 && modes[M].cwiseAbs().maxCoeff() <= drop * peak) --M;
    modes.resize(M + 1);
    modes_ = std::move(modes);
    int nt = 8;
    while (nt < 2 * M + 2) nt <<= 1;
    n_theta_ = std::max(nt, n_theta);
    wi_.resize(static_cast<Eigen::Index>(ni) * n_theta_);
    wo_.resize(static_cast<Eigen::Index>(no) * n_theta_);
    const double dth = 2.0 * std::numbers::pi / n_theta_;
    for (int t = 0; t < n_theta_; ++t) {
      for (int a = 0; a < ni; ++a) wi_(a + ni * t) = in_.rule.w[a] * in_.rule.x[a] * dth;
      for (int a = 0; a < no; ++a) wo_(a + no * t) = out_.rule.w[a] * out_.rule.x[a] * dth;
    }
  }

  int n_theta() const { return n_theta_; }
  int max_mode() const { return static_cast<int>(modes_.size()) - 1; }
  const Eigen::MatrixXcd& mode(int m) const { return modes_[std::abs(m)]; }
  const RadialGrid& in_grid() const { return in_; }
  const RadialGrid& out_grid() const { return out_; }
  const Eigen::VectorXd& in_weights() const { return wi_; }
  const Eigen::VectorXd& out_weights() const { return wo_; }
  Eigen::Index rows() const { return wo_.size(); }
  Eigen::Index cols() const { return wi_.size(); }

  Vec point_in(Eigen::Index i) const { return point(in_, i); }
  Vec point_out(Eigen::Index i) const { return point(out_, i); }

  VecC apply(const VecC& f) const { return run(f, false); }
  VecC apply_adjoint(const VecC& g) const { return run(g, true); }

  // exact 2 -> 2 norm: largest singular value over modes
  double norm_22(int* arg_mode = nullptr) const {
    Eigen::VectorXd si = sqrt_w(in_), so = sqrt_w(out_);
    double best = 0.0;
    for (int m = 0; m < static_cast<int>(modes_.size()); ++m) {
      Eigen::MatrixXcd B = so.asDiagonal() * modes_[m] * si.asDiagonal();
      double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(B).singularValues()(0);
      if (s > best) {
        best = s;
        if (arg_mode) *arg_mode = m;
      }
    }
    return best;
  }

  // kernel K(r_a e_1, rho_b e^{i theta}) on the grid (for 1 -> infinity)
  double max_abs_kernel() const {
    const int ni = static_cast<int>(in_.rule.size()), no = static_cast<int>(out_.rule.size());
    Eigen::FFT<double> fft;
    double best = 0.0;
    std::vector<cd> spec(n_theta_), vals;
    for (int a = 0; a < no; ++a)
      for (int b = 0; b < ni; ++b) {
        std::fill(spec.begin(), spec.end(), cd(0.0));
        for (int m = 0; m < static_cast<int>(modes_.size()); ++m) {
          cd v = modes_[m](a, b) / (2.0 * std::numbers::pi);
          spec[m] += v;
          if (m > 0) spec[n_theta_ - m] += v;
        }
        fft.inv(vals, spec);
        for (auto& v : vals) best = std::max(best, std::abs(v) * n_theta_);
      }
    return best;
  }

 private:
  static Eigen::VectorXd sqrt_w(const RadialGrid& g) {
    Eigen::VectorXd s(g.rule.size());
    for (std::size_t a = 0; a < g.rule.size(); ++a) s(a) = std::sqrt(g.rule.w[a] * g.rule.x[a]);
    return s;
  }
  Vec point(const RadialGrid& g, Eigen::Index i) const {
    const Eigen::Index n = static_cast<Eigen::Index>(g.rule.size());
    double th = 2.0 * std::numbers::pi * static_cast<double>(i / n) / n_theta_;
    Vec v(2);
    v << g.rule.x[i % n] * std::cos(th), g.rule.x[i % n] * std::sin(th);
    return v;
  }

  VecC run(const VecC& f, bool adjoint) const {
    const RadialGrid& src = adjoint ? out_ : in_;
    const RadialGrid& dst = adjoint ? in_ : out_;
    const Eigen::VectorXd& w = adjoint ? wo_ : wi_;
    const int ns = static_cast<int>(src.rule.size()), nd = static_cast<int>(dst.rule.size());
    const double dth = 2.0 * std::numbers::pi / n_theta_;
    Eigen::FFT<double> fft;
    // F(a, m) = sum_t f(a, t) w e^{-i m theta_t}
    Eigen::MatrixXcd F(ns, n_theta_);
    std::vector<cd> line(n_theta_), spec;
    for (int a = 0; a < ns; ++a) {
      for (int t = 0; t < n_theta_; ++t) line[t] = f(a + ns * t) * w(a + ns * t) / dth;
      fft.fwd(spec, line);
      for (int t = 0; t < n_theta_; ++t) F(a, t) = spec[t];
    }
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(nd, n_theta_);
    const int M = static_cast<int>(modes_.size()) - 1;
    for (int m = -M; m <= M; ++m) {
      int col = (m + n_theta_) % n_theta_;
      const Eigen::MatrixXcd& km = modes_[std::abs(m)];
      if (adjoint) G.col(col) = km.adjoint() * F.col(col);
      else G.col(col) = km * F.col(col);
    }
    VecC out(static_cast<Eigen::Index>(nd) * n_theta_);
    for (int a = 0; a < nd; ++a) {
      for (int t = 0; t < n_theta_; ++t) spec[t] = G(a, t);
      fft.inv(line, spec);
      for (int t = 0; t < n_theta_; ++t) out(a + nd * t) = line[t];
    }
    return out;
  }

  RadialGrid in_, out_;
  std::vector<Eigen::MatrixXcd> modes_;
  int n_theta_ = 0;
  Eigen::VectorXd wi_, wo_;
};

// level coefficients of Pi_lambda itself
inline std::vector<cd> projection_levels(double lambda, int d = 2) {
  int N = eigen_level(lambda, d);
  std::vector<cd> c(N + 1, 0.0);
  c[N] = 1.0;
  return c;
}

}  // namespace hlab
