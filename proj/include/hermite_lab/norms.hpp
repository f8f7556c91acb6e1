#pragma once

#include "operators.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double conj_exp(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

enum class NormMethod { exact_endpoint, rank_one, svd, nonlinear_power, witness };

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::exact_endpoint: return "exact_endpoint";
    case NormMethod::rank_one: return "rank_one";
    case NormMethod::svd: return "svd";
    case NormMethod::nonlinear_power: return "nonlinear_power";
    case NormMethod::witness: return "witness";
  }
  return "?";
}

struct NormEstimate {
  double value = 0.0;
  double p = 2.0, q = 2.0;
  NormMethod method = NormMethod::nonlinear_power;
  int restarts = 0;
  int iterations = 0;
  std::optional<std::vector<double>> witness_snapshot;  // |f| of the best start, subsampled
  std::uint64_t seed = 0;
  bool monotone = true;
  bool stalled = false;
  double witness_floor = 0.0;
};

inline nlohmann::json exponent_json(double p) { return std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p); }

inline nlohmann::json to_json(const NormEstimate& e) {
  nlohmann::json j{{"value", e.value},
                   {"p", exponent_json(e.p)},
                   {"q", exponent_json(e.q)},
                   {"method", to_string(e.method)},
                   {"restarts", e.restarts},
                   {"iterations", e.iterations},
                   {"seed", e.seed},
                   {"monotone", e.monotone},
                   {"stalled", e.stalled},
                   {"witness_floor", e.witness_floor}};
  if (e.witness_snapshot) j["witness_snapshot"] = *e.witness_snapshot;
  return j;
}

// (sum w |v|^p)^{1/p}; p = inf gives max |v|
inline double weighted_norm(const VecC& v, const Eigen::VectorXd& w, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += w(i) * std::pow(std::abs(v(i)), p);
  return std::pow(s, 1.0 / p);
}

inline double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += w(i) * std::pow(std::abs(v(i)), p);
  return std::pow(s, 1.0 / p);
}

// ---- exact endpoint formulas ------------------------------------------------

inline NormEstimate norm_endpoint(const DiscretizedOperator& T, double p, double q) {
  if (!(p == 1.0 || std::isinf(q))) throw std::invalid_argument("norm_endpoint: need p = 1 or q = inf");
  NormEstimate e;
  e.p = p;
  e.q = q;
  e.method = NormMethod::exact_endpoint;
  double best = 0.0;
  if (p == 1.0 && std::isinf(q)) {
    for (Eigen::Index j = 0; j < T.cols(); ++j)
      if (T.mask_in[j])
        for (Eigen::Index i = 0; i < T.rows(); ++i)
          if (T.mask_out[i]) best = std::max(best, std::abs(T.kernel(i, j)));
  } else if (p == 1.0) {
    for (Eigen::Index j = 0; j < T.cols(); ++j) {
      if (!T.mask_in[j]) continue;
      VecC col = T.kernel.col(j);
      for (Eigen::Index i = 0; i < col.size(); ++i)
        if (!T.mask_out[i]) col(i) = 0.0;
      best = std::max(best, weighted_norm(col, T.w_out, q));
    }
  } else {
    const double pp = conj_exp(p);
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      if (!T.mask_out[i]) continue;
      VecC row = T.kernel.row(i).transpose();
      for (Eigen::Index j = 0; j < row.size(); ++j)
        if (!T.mask_in[j]) row(j) = 0.0;
      best = std::max(best, weighted_norm(row, T.w_in, pp));
    }
  }
  e.value = best;
  return e;
}

// largest singular value of the weighted matrix (p = q = 2)
inline NormEstimate norm_svd(const DiscretizedOperator& T) {
  Eigen::MatrixXcd B = T.kernel;
  for (Eigen::Index i = 0; i < B.rows(); ++i) B.row(i) *= T.mask_out[i] ? std::sqrt(T.w_out(i)) : 0.0;
  for (Eigen::Index j = 0; j < B.cols(); ++j) B.col(j) *= T.mask_in[j] ? std::sqrt(T.w_in(j)) : 0.0;
  NormEstimate e;
  e.method = NormMethod::svd;
  e.value = Eigen::JacobiSVD<Eigen::MatrixXcd>(B).singularValues()(0);
  return e;
}

// ---- nonlinear power method ------------------------------------------------

struct PowerOptions {
  int restarts = 8;
  int max_iter = 400;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  bool real_field = false;  // keep iterates real (real kernels)
  int snapshot_stride = 0;  // >0: keep every k-th |f| of the best iterate
};

// |z|^{s} phase(z), elementwise
inline VecC holder_map(const VecC& z, double s) {
  VecC out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double a = std::abs(z(i));
    out(i) = a > 0 ? z(i) / a * std::pow(a, s) : cd(0.0);
  }
  return out;
}

template <class Op>
NormEstimate norm_pq(const Op& T, double p, double q, const std::vector<VecC>& warm = {}, PowerOptions opt = {}) {
  if (!(p > 1.0) || !(q > 1.0) || std::isinf(p) || std::isinf(q))
    throw std::invalid_argument("norm_pq: need 1 < p, q < inf");
  const Eigen::VectorXd& wi = T.in_weights();
  const Eigen::VectorXd& wo = T.out_weights();
  const double pp = conj_exp(p);
  NormEstimate best;
  best.p = p;
  best.q = q;
  best.method = NormMethod::nonlinear_power;
  best.seed = opt.seed;
  best.value = -1.0;

  std::vector<VecC> starts = warm;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  for (int r = 0; r < opt.restarts; ++r) {
    VecC f(T.cols());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = opt.real_field ? cd(gauss(rng)) : cd(gauss(rng), gauss(rng));
    starts.push_back(std::move(f));
  }
  best.restarts = static_cast<int>(starts.size());
  double floor = 0.0;
  for (std::size_t si = 0; si < starts.size(); ++si) {
    VecC f = starts[si];
    double nf = weighted_norm(f, wi, p);
    if (!(nf > 0)) continue;
    f /= nf;
    VecC g = T.apply(f);
    double val = weighted_norm(g, wo, q);
    if (si < warm.size()) floor = std::max(floor, val);
    bool monotone = true, converged = false;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
      if (!(val > 0)) break;
      VecC h = holder_map(g, q - 1.0) / std::pow(val, q - 1.0);
      VecC z = T.apply_adjoint(h);
      VecC fn = holder_map(z, pp - 1.0);
      if (opt.real_field) fn = fn.real().cast<cd>();
      double nfn = weighted_norm(fn, wi, p);
      if (!(nfn > 0)) break;
      fn /= nfn;
      VecC gn = T.apply(fn);
      double vn = weighted_norm(gn, wo, q);
      if (vn < val * (1.0 - 1e-10)) monotone = false;
      double change = std::abs(vn - val) / std::max(vn, 1e-300);
      if (vn >= val) {
        f = std::move(fn);
        g = std::move(gn);
        val = vn;
      }
      if (change <= opt.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    best.iterations += it;
    if (!monotone) best.monotone = false;
    if (val > best.value) {
      best.value = val;
      best.stalled = !converged;
      if (opt.snapshot_stride > 0) {
        std::vector<double> snap;
        for (Eigen::Index i = 0; i < f.size(); i += opt.snapshot_stride) snap.push_back(std::abs(f(i)));
        best.witness_snapshot = std::move(snap);
      }
    }
  }
  best.witness_floor = floor;
  return best;
}

template <class Op>
double witness_ratio(const Op& T, const VecC& f, double p, double q) {
  double nf = weighted_norm(f, T.in_weights(), p);
  if (!(nf > 0)) throw std::invalid_argument("witness_ratio: zero-norm input");
  return weighted_norm(T.apply(f), T.out_weights(), q) / nf;
}

// c -> sum_alpha c_alpha Phi_alpha on the grid; an isometry from l^2, so its 2 -> q norm is that of Pi_lambda
class LevelSynthesis {
 public:
  explicit LevelSynthesis(const TensorProjection& P)
      : P_(P), ones_(Eigen::VectorXd::Ones(P.analysis(Eigen::VectorXd::Zero(P.rows())).size())) {}
  const Eigen::VectorXd& in_weights() const { return ones_; }
  const Eigen::VectorXd& out_weights() const { return P_.out_weights(); }
  Eigen::Index rows() const { return P_.rows(); }
  Eigen::Index cols() const { return ones_.size(); }
  VecC apply(const VecC& c) const { return P_.synthesis(c.real()).cast<cd>(); }
  VecC apply_adjoint(const VecC& g) const { return P_.analysis(g.real()).cast<cd>(); }

 private:
  const TensorProjection& P_;
  Eigen::VectorXd ones_;
};

// d = 1: Pi_lambda = h_N (x) h_N
inline double rank_one_norm_d1(double lambda, double p, double q) {
  const int N = eigen_level(lambda, 1);
  return hermite_lp_norm(N, conj_exp(p)) * hermite_lp_norm(N, q);
}

// ---- witnesses (d = 2) -------------------------------------------------------

enum class WitnessKind { cube_sum, single_line, small_cube, annulus_cube };

inline std::string to_string(WitnessKind k) {
  switch (k) {
    case WitnessKind::cube_sum: return "cube_sum";
    case WitnessKind::single_line: return "single_line";
    case WitnessKind::small_cube: return "small_cube";
    case WitnessKind::annulus_cube: return "annulus_cube";
  }
  return "?";
}

inline WitnessKind witness_kind_from(const std::string& s) {
  for (auto k : {WitnessKind::cube_sum, WitnessKind::single_line, WitnessKind::small_cube, WitnessKind::annulus_cube})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown witness kind: " + s);
}

// f = sum_{k in index} coef_k h_{N-k}(x1) h_k(x2) restricted to a box, or the indicator of a box family.
struct Witness {
  WitnessKind kind;
  double lambda = 0, mu = 0;
  int N = 0;
  std::vector<int> index;     // second component alpha_2 of each alpha in J
  std::vector<double> signs;  // c_alpha
  Box box;                    // support
  Vec x0;                     // reference point
  std::uint64_t seed = 0;

  std::size_t size_J() const { return index.size(); }

  double operator()(const Vec& x) const {
    if (kind == WitnessKind::small_cube) {
      for (int j = 0; j < 2; ++j)
        if (!(x(j) > box.lo[j] && x(j) < box.hi[j])) return 0.0;
      return 1.0;
    }
    for (int j = 0; j < 2; ++j)
      if (x(j) < box.lo[j] || x(j) > box.hi[j]) return 0.0;
    auto h1 = hermite_row(N, x(0)), h2 = hermite_row(N, x(1));
    double s = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) s += signs[i] * h1[N - index[i]] * h2[index[i]];
    return s;
  }
};

namespace detail {

inline bool sign_consistent(int N, const std::vector<int>& idx, double lo, double hi, std::vector<double>& signs) {
  signs.assign(idx.size(), 0.0);
  const int probes = 5;
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < probes; ++k) rows.push_back(hermite_row(N, lo + (hi - lo) * k / (probes - 1.0)));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    int a1 = N - idx[i], a2 = idx[i];
    double sgn = 0.0;
    for (int k1 = 0; k1 < probes; ++k1)
      for (int k2 = 0; k2 < probes; ++k2) {
        // interior probes only: odd factors vanish at the cube's lower corner only when lo = 0
        double v = rows[k1][a1] * rows[k2][a2];
        if (v == 0.0) return false;
        double s = v > 0 ? 1.0 : -1.0;
        if (sgn == 0.0) sgn = s;
        else if (s != sgn) return false;
      }
    signs[i] = sgn;
  }
  return true;
}

}  // namespace detail

inline Witness make_witness(WitnessKind kind, double lambda, double mu = 0.0, std::uint64_t signs_seed = 0) {
  const int d = 2;
  Witness w;
  w.kind = kind;
  w.lambda = lambda;
  w.mu = mu;
  w.N = eigen_level(lambda, d);
  w.seed = signs_seed;
  const int N = w.N;
  const double s = std::sqrt(lambda);
  switch (kind) {
    case WitnessKind::cube_sum: {
      const double ell = s / (2.0 * std::sqrt(double(d)));
      w.box = Box::cube(d, -ell, ell);
      for (int a2 = static_cast<int>(std::ceil(N / 32.0)); a2 <= N / 16; ++a2) w.index.push_back(a2);
      if (w.index.empty()) throw std::invalid_argument("make_witness: empty index set");
      // reference cube (c/sqrt(lambda), 2c/sqrt(lambda))^2 with c shrunk until every sign is constant on it
      bool ok = false;
      for (double c = 0.5; c > 1e-3 && !ok; c *= 0.5)
        if (detail::sign_consistent(N, w.index, c / s, 2.0 * c / s, w.signs)) {
          ok = true;
          w.x0 = Vec::Constant(2, 1.5 * c / s);
        }
      if (!ok) throw std::runtime_error("make_witness: sign construction failure");
      break;
    }
    case WitnessKind::single_line: {
      const double ell = s / (2.0 * std::sqrt(double(d)));
      w.box = Box::cube(d, -ell, ell);
      w.index = {0};
      w.signs = {1.0};
      w.x0 = Vec::Zero(2);
      break;
    }
    case WitnessKind::small_cube: {
      w.box = Box::cube(d, 0.0625 / s, 0.125 / s);
      w.x0 = Vec::Constant(2, 0.09375 / s);
      break;
    }
    case WitnessKind::annulus_cube: {
      if (!(mu >= std::pow(lambda, -2.0 / 3.0) * (1 - 1e-12) && mu <= 0.25))
        throw std::invalid_argument("make_witness: need lambda^{-2/3} <= mu <= 1/4");
      const double ell = std::sqrt(lambda * mu) / (2.0 * std::sqrt(double(d)));
      w.box = {{s * (1.0 - 2.0 * mu), -ell}, {s * (1.0 - 1.5 * mu), ell}};
      for (int a2 = static_cast<int>(std::ceil(N * mu / 32.0)); a2 <= N * mu / 16.0; ++a2) w.index.push_back(a2);
      if (w.index.empty()) throw std::invalid_argument("make_witness: empty index set (lambda mu too small)");
      // x0 maximizes sum |Phi_alpha| over [box x-range] x [-(lambda mu)^{-1/2}, (lambda mu)^{-1/2}]
      const double rad = 1.0 / std::sqrt(lambda * mu);
      double best = -1.0;
      std::mt19937_64 rng(signs_seed);
      std::uniform_real_distribution<double> jitter(-0.5, 0.5);
      const int n1 = 256, n2 = 9;
      for (int i = 0; i <= n1; ++i) {
        double x1 = w.box.lo[0] + (w.box.hi[0] - w.box.lo[0]) * (i + (signs_seed ? 0.5 + jitter(rng) : 0.0)) / (n1 + 1);
        auto h1 = hermite_row(N, x1);
        for (int k = 0; k < n2; ++k) {
          double x2 = -rad + 2.0 * rad * k / (n2 - 1);
          auto h2 = hermite_row(N, x2);
          double v = 0.0;
          for (int a2 : w.index) v += std::abs(h1[N - a2] * h2[a2]);
          if (v > best) {
            best = v;
            w.x0 = Vec(2);
            w.x0 << x1, x2;
          }
        }
      }
      auto h1 = hermite_row(N, w.x0(0)), h2 = hermite_row(N, w.x0(1));
      for (int a2 : w.index) w.signs.push_back(h1[N - a2] * h2[a2] >= 0 ? 1.0 : -1.0);
      break;
    }
  }
  return w;
}

// coefficients of Pi_lambda f in the basis Phi_{(N-b, b)}, b = 0..N
inline Eigen::VectorXd witness_projection_coefficients(const Witness& w) {
  const int N = w.N;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N + 1);
  if (w.kind == WitnessKind::small_cube) {
    Rule r = gl_on(w.box.lo[0], w.box.hi[0], 24);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(N + 1);
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto h = hermite_row(N, r.x[i]);
      for (int k = 0; k <= N; ++k) m(k) += r.w[i] * h[k];
    }
    for (int b = 0; b <= N; ++b) c(b) = m(N - b) * m(b);
    return c;
  }
  Eigen::MatrixXd A1 = interval_overlaps(w.box.lo[0], w.box.hi[0], N);
  Eigen::MatrixXd A2 = interval_overlaps(w.box.lo[1], w.box.hi[1], N);
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    int a2 = w.index[i], a1 = N - a2;
    for (int b = 0; b <= N; ++b) c(b) += w.signs[i] * A1(a1, N - b) * A2(a2, b);
  }
  return c;
}

// sum_b c_b h_{N-b}(x1) h_b(x2) at arbitrary points (2 x n)
inline Eigen::VectorXd synthesize_level(int N, const Eigen::VectorXd& c, const Eigen::MatrixXd& pts) {
  Eigen::VectorXd out(pts.cols());
  std::vector<double> h1(N + 1), h2(N + 1);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    hermite_row(N, pts(0, i), h1.data());
    hermite_row(N, pts(1, i), h2.data());
    double s = 0.0;
    for (int b = 0; b <= N; ++b) s += c(b) * h1[N - b] * h2[b];
    out(i) = s;
  }
  return out;
}

// tensor GL axis on [a, b] with the given breakpoints, resolving frequency sqrt(lambda)
inline Rule breakpoint_axis(double lambda, std::vector<double> cuts, double nodes_per_wavelength = 8.0) {
  std::sort(cuts.begin(), cuts.end());
  const double width = 16.0 * (2.0 * std::numbers::pi / std::sqrt(lambda)) / nodes_per_wavelength;
  Rule r;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 1e-14) continue;
    r.append(composite_gl(a, b, std::max(1, static_cast<int>(std::ceil((b - a) / width))), 16));
  }
  return r;
}

struct WitnessMeasurement {
  double ratio;
  double norm_f;   // ||f||_p
  double norm_Tf;  // ||chi Pi chi f||_q on the ball
};

// G(i, k) = sum_b c_b h_{N-b}(x_i) h_b(y_k)
inline Eigen::MatrixXd level_on_tensor(int N, const Eigen::VectorXd& c, const Rule& ax, const Rule& ay) {
  Eigen::MatrixXd A = hermite_matrix(N, ax.x).rowwise().reverse();
  Eigen::MatrixXd B = hermite_matrix(N, ay.x);
  return A * (B * c.asDiagonal()).transpose();
}

inline double tensor_norm(const Eigen::MatrixXd& G, const Rule& ax, const Rule& ay, double p,
                          const std::function<bool(double, double)>& keep) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < G.cols(); ++k)
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      if (!keep(ax.x[i], ay.x[k])) continue;
      double a = std::abs(G(i, k));
      s = std::isinf(p) ? std::max(s, a) : s + ax.w[i] * ay.w[k] * std::pow(a, p);
    }
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

// chi Pi_lambda chi f with chi the ball B(0, sqrt(lambda)/2): exact coefficients, tensor GL norms
inline WitnessMeasurement witness_ratio_ball(const Witness& w, double p, double q, double nodes_per_wavelength = 6.0) {
  const double R = 0.5 * std::sqrt(w.lambda);
  Eigen::VectorXd c = witness_projection_coefficients(w);
  double nf;
  if (w.kind == WitnessKind::small_cube) {
    nf = std::isinf(p) ? 1.0 : std::pow(w.box.volume(), 1.0 / p);
  } else {
    Rule ax = breakpoint_axis(w.lambda, {w.box.lo[0], w.box.hi[0]}, nodes_per_wavelength);
    Rule ay = breakpoint_axis(w.lambda, {w.box.lo[1], w.box.hi[1]}, nodes_per_wavelength);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(w.N + 1);
    for (std::size_t i = 0; i < w.index.size(); ++i) coef(w.index[i]) = w.signs[i];
    nf = tensor_norm(level_on_tensor(w.N, coef, ax, ay), ax, ay, p, [](double, double) { return true; });
  }
  Rule ar = breakpoint_axis(w.lambda, {-R, 0.0, R}, nodes_per_wavelength);
  const double R2 = R * R;
  double nT = tensor_norm(level_on_tensor(w.N, c, ar, ar), ar, ar, q,
                          [R2](double x, double y) { return x * x + y * y <= R2; });
  if (std::isinf(q)) {
    Eigen::MatrixXd x0 = w.x0;
    nT = std::max(nT, std::abs(synthesize_level(w.N, c, x0)(0)));
  }
  return {nT / nf, nf, nT};
}

// f = Pi_lambda(x0, .) chi_{A+} sampled on the operator's input grid; x0 is moved to the nearest
// radial node on the ray theta = 0 (the kernel is rotation invariant)
inline VecC annulus_kernel_witness(const PolarOperator& P, const Witness& w) {
  if (w.kind != WitnessKind::annulus_cube) throw std::invalid_argument("annulus_kernel_witness: need annulus_cube");
  const auto& r = P.in_grid().rule.x;
  const double r0 = w.x0.norm();
  Eigen::Index a0 = 0;
  for (std::size_t a = 1; a < r.size(); ++a)
    if (std::abs(r[a] - r0) < std::abs(r[a0] - r0)) a0 = static_cast<Eigen::Index>(a);
  VecC delta = VecC::Zero(P.cols());
  delta(a0) = 1.0 / P.in_weights()(a0);
  return P.apply(delta);
}

}  // namespace hlab
