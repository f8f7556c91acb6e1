#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hlab {

using Vec = Eigen::VectorXd;

// ---- quadratic geometry on B_2 x B_2 -------------------------------------

inline double discriminant(const Vec& x, const Vec& y) {
  double xy = x.dot(y);
  return 1.0 + xy * xy - x.squaredNorm() - y.squaredNorm();
}

inline double quad_Q(const Vec& x, const Vec& y, double tau) {
  double xy = x.dot(y);
  return (tau - xy) * (tau - xy) - discriminant(x, y);
}

inline double quad_R(const Vec& x, const Vec& y, double tau) {
  return tau * tau - (x.squaredNorm() + y.squaredNorm()) / x.dot(y) * tau + 1.0;
}

struct TauRoots {
  double minus, plus;
};

// Roots of R; the minus root uses the cancellation-free form.
inline TauRoots tau_roots(const Vec& x, const Vec& y) {
  double n2 = x.squaredNorm() + y.squaredNorm();
  double pq = (x + y).norm() * (x - y).norm();
  double xy = x.dot(y);
  return {2.0 * xy / (n2 + pq), (n2 + pq) / (2.0 * xy)};
}

inline double critical_angle(const Vec& x, const Vec& y) {
  return std::acos(std::clamp(tau_roots(x, y).minus, -1.0, 1.0));
}

struct CriticalGradient {
  Vec dx, dy;
};

inline CriticalGradient critical_angle_gradient(const Vec& x, const Vec& y) {
  double pq = (x - y).norm() * (x + y).norm();
  double a = 2.0 / pq;
  double b = (x.squaredNorm() + y.squaredNorm()) / (x.dot(y) * pq);
  double s = critical_angle(x, y);
  double f = std::cos(s) / std::sin(s);
  return {f * (a * x - b * y), f * (a * y - b * x)};
}

// Phase of the scaled oscillatory integral and its s-derivatives
inline double phase_P(const Vec& x, const Vec& y, double s) {
  return 0.5 * s + 0.5 * (x.squaredNorm() + y.squaredNorm()) / std::tan(s) - x.dot(y) / std::sin(s);
}

inline double phase_P_ds(const Vec& x, const Vec& y, double s) {
  double sn = std::sin(s);
  return -quad_Q(x, y, std::cos(s)) / (2.0 * sn * sn);
}

inline double phase_P_ds2(const Vec& x, const Vec& y, double s) {
  double sn = std::sin(s);
  return -x.dot(y) * quad_R(x, y, std::cos(s)) / (sn * sn * sn);
}

// ---- exponent geometry on the (1/p, 1/q) square ----------------------------

struct Pt {
  double a, b;
};

inline Pt prime(Pt p) { return {1.0 - p.b, 1.0 - p.a}; }

enum class SpecialPoint { A, C, D, E, F, G };
using SP = SpecialPoint;

inline Pt special_point(SpecialPoint which, int d) {
  if (d < 2) throw std::invalid_argument("special_point: d >= 2 required");
  const double D = d;
  switch (which) {
    case SpecialPoint::A: return {(D + 3) / (2 * (D + 1)), 0.5};
    case SpecialPoint::C: return {(D * D + 4 * D - 1) / (2 * D * (D + 1)), (D - 1) / (2 * D)};
    case SpecialPoint::D: return {1.0, (D - 1) / (2 * D)};
    case SpecialPoint::E: return {(D + 2) / (2 * D), 0.5};
    case SpecialPoint::F: return {(D * D + 2 * D - 4) / (2 * D * (D - 1)), (D - 2) / (2 * (D - 1))};
    case SpecialPoint::G:
      return {(2 * D * D + 7 * D - 7) / (2 * (2 * D - 1) * (D + 1)), (2 * D - 3) / (2 * (2 * D - 1))};
  }
  throw std::invalid_argument("special_point");
}

namespace detail {

inline constexpr double kGeomEps = 1e-12;

inline double seg_dist(Pt p, Pt u, Pt v) {
  double dx = v.a - u.a, dy = v.b - u.b;
  double L = dx * dx + dy * dy;
  double t = L > 0 ? std::clamp(((p.a - u.a) * dx + (p.b - u.b) * dy) / L, 0.0, 1.0) : 0.0;
  double ex = u.a + t * dx - p.a, ey = u.b + t * dy - p.b;
  return std::sqrt(ex * ex + ey * ey);
}

inline bool on_segment(Pt p, Pt u, Pt v, double eps = kGeomEps) { return seg_dist(p, u, v) <= eps; }

inline bool same_point(Pt p, Pt u, double eps = kGeomEps) {
  return std::abs(p.a - u.a) <= eps && std::abs(p.b - u.b) <= eps;
}

// closed convex polygon, either orientation; repeated vertices allowed
inline bool in_closed_polygon(Pt p, const std::vector<Pt>& poly, double eps = kGeomEps) {
  int pos = 0, neg = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    Pt u = poly[i], v = poly[(i + 1) % n];
    if (same_point(u, v, 0.0)) continue;
    if (on_segment(p, u, v, eps)) return true;
    double cr = (v.a - u.a) * (p.b - u.b) - (v.b - u.b) * (p.a - u.a);
    if (cr > 0) ++pos;
    else if (cr < 0) ++neg;
  }
  return pos == 0 || neg == 0;
}

inline bool on_polygon_boundary(Pt p, const std::vector<Pt>& poly, double eps = kGeomEps) {
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (on_segment(p, poly[i], poly[(i + 1) % poly.size()], eps)) return true;
  return false;
}

}  // namespace detail

struct RegionInfo {
  bool r1 = false, r2 = false, r2p = false, r3 = false, r3_closure = false;
  bool uniform = false;            // pentagon of uniform boundedness
  bool l1 = false, l2 = false, l2p = false, l3 = false;  // sharp local ranges near the sphere
  bool on_boundary = false;        // on the boundary of one of R1, R2, R2', R3-closure
  bool excluded = false;           // lies on a removed vertex or segment of a closed piece
};

inline std::vector<Pt> polygon_r1(int d) {
  Pt A = special_point(SP::A, d), C = special_point(SP::C, d);
  return {{0.5, 0.5}, A, C, prime(C), prime(A)};
}
inline std::vector<Pt> polygon_r2(int d) {
  return {special_point(SP::A, d), {1.0, 0.5}, special_point(SP::D, d), special_point(SP::C, d)};
}
inline std::vector<Pt> polygon_r2p(int d) {
  auto p = polygon_r2(d);
  for (auto& v : p) v = prime(v);
  return p;
}
inline std::vector<Pt> polygon_r3(int d) {
  Pt C = special_point(SP::C, d), D = special_point(SP::D, d);
  return {C, D, {1.0, 0.0}, prime(D), prime(C)};
}

inline RegionInfo region_classify(Pt p, int d) {
  constexpr double eps = detail::kGeomEps;
  if (p.a < 0.5 - eps || p.a > 1.0 + eps || p.b < -eps || p.b > 0.5 + eps)
    throw std::invalid_argument("region_classify: point outside [1/2,1]x[0,1/2]");
  RegionInfo r;
  Pt A = special_point(SP::A, d), C = special_point(SP::C, d), D = special_point(SP::D, d);
  Pt Cp = prime(C), Dp = prime(D), Ap = prime(A);
  auto P1 = polygon_r1(d), P2 = polygon_r2(d), P2p = polygon_r2p(d), P3 = polygon_r3(d);

  bool c1 = detail::in_closed_polygon(p, P1), c2 = detail::in_closed_polygon(p, P2);
  bool c2p = detail::in_closed_polygon(p, P2p), c3 = detail::in_closed_polygon(p, P3);
  bool onCD = detail::on_segment(p, C, D), onCDp = detail::on_segment(p, Cp, Dp);
  bool atC = detail::same_point(p, C) || detail::same_point(p, Cp);

  r.r1 = c1 && !atC;
  r.r2 = c2 && !onCD;
  r.r2p = c2p && !onCDp;
  r.r3 = c3 && !onCD && !onCDp;
  r.r3_closure = c3;
  r.on_boundary = (c1 && detail::on_polygon_boundary(p, P1)) || (c2 && detail::on_polygon_boundary(p, P2)) ||
                  (c2p && detail::on_polygon_boundary(p, P2p)) || (c3 && detail::on_polygon_boundary(p, P3));
  r.excluded = (c1 && atC) || (c2 && onCD) || (c2p && onCDp);

  if (d == 2) {
    r.uniform = true;
  } else {
    Pt E = special_point(SP::E, d), F = special_point(SP::F, d);
    std::vector<Pt> pent{E, {0.5, 0.5}, prime(E), prime(F), F};
    r.uniform = detail::in_closed_polygon(p, pent) && !detail::same_point(p, F) && !detail::same_point(p, prime(F));
  }

  Pt G = special_point(SP::G, d), Gp = prime(G);
  if (d == 2) {
    r.l1 = detail::in_closed_polygon(p, {{0.5, 0.5}, A, G, Ap});
    r.l3 = detail::in_closed_polygon(p, {{1.0, 0.0}, D, G, Dp}) && !detail::same_point(p, D) &&
           !detail::same_point(p, Dp);
  } else {
    r.l1 = detail::in_closed_polygon(p, {{0.5, 0.5}, A, G, Gp, Ap}) && !detail::same_point(p, G) &&
           !detail::same_point(p, Gp);
    r.l3 = detail::in_closed_polygon(p, {{1.0, 0.0}, D, G, Gp, Dp}) && !detail::same_point(p, G) &&
           !detail::same_point(p, Gp) && !detail::same_point(p, D) && !detail::same_point(p, Dp);
  }
  r.l2 = detail::in_closed_polygon(p, {A, {1.0, 0.5}, D}) && !detail::same_point(p, D);
  r.l2p = detail::in_closed_polygon(p, {Ap, {0.5, 0.0}, Dp}) && !detail::same_point(p, Dp);
  return r;
}

enum class ExponentPiece { r1, r2, r2p, r3 };

inline ExponentPiece exponent_piece(Pt p, int d) {
  auto r = region_classify(p, d);
  if (detail::in_closed_polygon(p, polygon_r1(d))) return ExponentPiece::r1;
  if (r.r2 || detail::in_closed_polygon(p, polygon_r2(d))) return ExponentPiece::r2;
  if (r.r2p || detail::in_closed_polygon(p, polygon_r2p(d))) return ExponentPiece::r2p;
  if (r.r3_closure) return ExponentPiece::r3;
  throw std::logic_error("exponent_piece: point not covered");
}

inline double beta_max(Pt p, int d) {
  double del = p.a - p.b, s = p.a + p.b, D = d;
  return std::max({-0.5 * del, -1.0 + 0.5 * D * del, -0.5 * (D + 1) + 0.5 * D * s, 0.5 * (D - 1) - 0.5 * D * s});
}

inline double beta_piecewise(Pt p, int d) {
  double del = p.a - p.b, s = p.a + p.b, D = d;
  switch (exponent_piece(p, d)) {
    case ExponentPiece::r1: return -0.5 * del;
    case ExponentPiece::r2: return -0.5 * (D + 1) + 0.5 * D * s;
    case ExponentPiece::r2p: return 0.5 * (D - 1) - 0.5 * D * s;
    case ExponentPiece::r3: return -1.0 + 0.5 * D * del;
  }
  return 0.0;
}

inline double gamma_exponent(Pt p, int d) {
  double del = p.a - p.b, D = d;
  switch (exponent_piece(p, d)) {
    case ExponentPiece::r1: return 0.5 - 0.25 * (D + 3) * del;
    case ExponentPiece::r2: return D * (0.5 * p.a + p.b) - 0.25 * (3 * D + 1);
    case ExponentPiece::r2p: return 0.25 * (3 * D - 1) - D * (p.a + 0.5 * p.b);
    case ExponentPiece::r3: return 0.5 * D * del - 1.0;
  }
  return 0.0;
}

// Global 2 -> q rate for Pi_lambda (three regimes in q)
inline double global_two_q_exponent(double q, int d) {
  double del = 0.5 - (std::isinf(q) ? 0.0 : 1.0 / q), D = d;
  double q1 = 2.0 * (D + 3) / (D + 1);
  double q2 = d > 2 ? 2.0 * D / (D - 2) : std::numeric_limits<double>::infinity();
  if (q < q1) return -0.5 * del;
  if (q < q2) return -1.0 / 6.0 + D / 6.0 * del;
  return -0.5 + 0.5 * D * del;
}

// ---- Whitney-type decomposition of the unit sphere (d = 2, 3) --------------

struct SphereCell {
  // d=2: [lo0, hi0) is an arc in angle; d=3: polar band [lo0,hi0) x longitude [lo1,hi1)
  double lo0, hi0, lo1 = 0.0, hi1 = 0.0;
  int parent = -1;
  double diameter = 0.0;  // chordal, measured
};

struct WhitneyLevel {
  std::vector<SphereCell> cells;
  std::vector<int> band_start;  // d=3: first cell index per band
  std::vector<int> band_count;  // d=3: cells per band
};

class WhitneyDecomposition {
 public:
  static constexpr double kCloseRatio = 0.4;  // close if dist <= kCloseRatio * 2^-nu

  WhitneyDecomposition(int d, int nu_max) : d_(d), nu_max_(nu_max) {
    if (d != 2 && d != 3) throw std::invalid_argument("whitney: d must be 2 or 3");
    if (nu_max < 0) throw std::invalid_argument("whitney: nu_max < 0");
    for (int nu = 0; nu <= nu_max; ++nu) levels_.push_back(d == 2 ? build2(nu) : build3(nu));
    c_ = 1e300;
    C_ = 0.0;
    for (int nu = 0; nu <= nu_max; ++nu)
      for (auto& c : levels_[nu].cells) {
        double s = c.diameter * std::ldexp(1.0, nu);
        c_ = std::min(c_, s);
        C_ = std::max(C_, s);
      }
  }

  int dim() const { return d_; }
  int nu_max() const { return nu_max_; }
  const WhitneyLevel& level(int nu) const { return levels_.at(nu); }
  double c_lower() const { return c_; }
  double C_upper() const { return C_; }

  Vec sample_point(int nu, int k, double u, double v = 0.5) const {
    const auto& c = levels_.at(nu).cells.at(k);
    if (d_ == 2) {
      double th = c.lo0 + u * (c.hi0 - c.lo0);
      Vec p(2);
      p << std::cos(th), std::sin(th);
      return p;
    }
    double z0 = std::cos(c.lo0), z1 = std::cos(c.hi0);
    double th = std::acos(z0 + u * (z1 - z0));  // area-uniform in the band
    double ph = c.lo1 + v * (c.hi1 - c.lo1);
    Vec p(3);
    p << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
    return p;
  }

  int locate(int nu, const Vec& w) const {
    const auto& L = levels_.at(nu);
    if (d_ == 2) {
      double th = std::atan2(w(1), w(0));
      if (th < 0) th += 2 * std::numbers::pi;
      int M = static_cast<int>(L.cells.size());
      int k = static_cast<int>(std::floor(th / (2 * std::numbers::pi) * M));
      return std::clamp(k, 0, M - 1);
    }
    double th = std::acos(std::clamp(w(2) / w.norm(), -1.0, 1.0));
    int B = static_cast<int>(L.band_start.size());
    int b = std::clamp(static_cast<int>(std::floor(th / std::numbers::pi * B)), 0, B - 1);
    double ph = std::atan2(w(1), w(0));
    if (ph < 0) ph += 2 * std::numbers::pi;
    int n = L.band_count[b];
    int j = std::clamp(static_cast<int>(std::floor(ph / (2 * std::numbers::pi) * n)), 0, n - 1);
    return L.band_start[b] + j;
  }

  double cell_distance(int nu, int k, int l) const {
    if (k == l) return 0.0;
    const auto& L = levels_.at(nu);
    if (d_ == 2) {
      int M = static_cast<int>(L.cells.size());
      int diff = std::abs(k - l);
      diff = std::min(diff, M - diff);
      if (diff <= 1) return 0.0;
      return 2.0 * std::sin(std::numbers::pi * (diff - 1) / M);
    }
    if (touching3(L.cells[k], L.cells[l])) return 0.0;
    double best = 1e300;
    constexpr int m = 5;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        if (i != 0 && i != m && j != 0 && j != m) continue;
        Vec p = sample_point(nu, k, double(i) / m, double(j) / m);
        for (int i2 = 0; i2 <= m; ++i2)
          for (int j2 = 0; j2 <= m; ++j2) {
            if (i2 != 0 && i2 != m && j2 != 0 && j2 != m) continue;
            best = std::min(best, (p - sample_point(nu, l, double(i2) / m, double(j2) / m)).norm());
          }
      }
    return best;
  }

  bool close(int nu, int k, int l) const { return cell_distance(nu, k, l) <= kCloseRatio * std::ldexp(1.0, -nu); }

  // Pairs related at scale nu for a stopping scale nu_stop: not close at nu with close parents
  // (all non-close pairs when nu = 0), plus every close pair when nu = nu_stop.
  std::vector<std::pair<int, int>> relation(int nu, int nu_stop) const {
    if (nu > nu_stop || nu_stop > nu_max_) throw std::invalid_argument("whitney relation: bad scales");
    std::vector<std::pair<int, int>> out;
    auto candidates = close_pairs_children(nu);
    for (auto [k, l] : candidates) {
      bool c = close(nu, k, l);
      if (!c || nu == nu_stop) out.emplace_back(k, l);
    }
    return out;
  }

 private:
  // children of close parent pairs (all pairs at nu = 0)
  std::vector<std::pair<int, int>> close_pairs_children(int nu) const {
    std::vector<std::pair<int, int>> out;
    const auto& L = levels_.at(nu);
    int n = static_cast<int>(L.cells.size());
    if (nu == 0) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) out.emplace_back(k, l);
      return out;
    }
    std::vector<std::vector<int>> kids(levels_[nu - 1].cells.size());
    for (int k = 0; k < n; ++k) kids[L.cells[k].parent].push_back(k);
    auto parents = close_pairs(nu - 1);
    for (auto [P, Q] : parents)
      for (int k : kids[P])
        for (int l : kids[Q]) out.emplace_back(k, l);
    return out;
  }

  std::vector<std::pair<int, int>> close_pairs(int nu) const {
    auto it = close_cache_.find(nu);
    if (it != close_cache_.end()) return it->second;
    std::vector<std::pair<int, int>> out;
    for (auto [k, l] : close_pairs_children(nu))
      if (close(nu, k, l)) out.emplace_back(k, l);
    close_cache_[nu] = out;
    return out;
  }

  static bool touching3(const SphereCell& a, const SphereCell& b) {
    constexpr double e = 1e-12;
    bool band_touch = a.lo0 <= b.hi0 + e && b.lo0 <= a.hi0 + e;
    if (!band_touch) return false;
    if (a.lo0 < e && b.lo0 < e) return true;  // both touch the north pole
    if (a.hi0 > std::numbers::pi - e && b.hi0 > std::numbers::pi - e) return true;
    double tp = 2 * std::numbers::pi;
    for (double s : {-tp, 0.0, tp})
      if (a.lo1 <= b.hi1 + s + e && b.lo1 + s <= a.hi1 + e) return true;
    return false;
  }

  WhitneyLevel build2(int nu) const {
    WhitneyLevel L;
    int M = 7 << nu;
    for (int k = 0; k < M; ++k) {
      SphereCell c;
      c.lo0 = 2 * std::numbers::pi * k / M;
      c.hi0 = 2 * std::numbers::pi * (k + 1) / M;
      c.parent = nu == 0 ? -1 : k / 2;
      c.diameter = 2.0 * std::sin(std::numbers::pi / M);
      L.cells.push_back(c);
    }
    return L;
  }

  WhitneyLevel build3(int nu) const {
    WhitneyLevel L;
    int B = 4 << nu;
    double h = std::numbers::pi / B;
    for (int b = 0; b < B; ++b) {
      double lo = b * h, hi = (b + 1) * h;
      double smax = (lo <= std::numbers::pi / 2 && hi >= std::numbers::pi / 2) ? 1.0
                                                                               : std::max(std::sin(lo), std::sin(hi));
      int target = std::max(1, static_cast<int>(std::ceil(2 * std::numbers::pi * smax / h)));
      int n;
      int pstart = 0;
      if (nu == 0) {
        n = target;
      } else {
        const auto& P = levels_[nu - 1];
        int pb = b / 2;
        int pn = P.band_count[pb];
        pstart = P.band_start[pb];
        int mult = std::max(1, static_cast<int>(std::lround(double(target) / pn)));
        n = pn * mult;
      }
      L.band_start.push_back(static_cast<int>(L.cells.size()));
      L.band_count.push_back(n);
      for (int j = 0; j < n; ++j) {
        SphereCell c;
        c.lo0 = lo;
        c.hi0 = hi;
        c.lo1 = 2 * std::numbers::pi * j / n;
        c.hi1 = 2 * std::numbers::pi * (j + 1) / n;
        if (nu > 0) {
          int pn = levels_[nu - 1].band_count[b / 2];
          c.parent = pstart + j / (n / pn);
        }
        L.cells.push_back(c);
      }
    }
    // measured chordal diameters from boundary samples
    for (std::size_t k = 0; k < L.cells.size(); ++k) L.cells[k].diameter = measure3(L.cells[k]);
    return L;
  }

  static double measure3(const SphereCell& c) {
    constexpr int m = 6;
    std::vector<Vec> pts;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        if (i != 0 && i != m && j != 0 && j != m) continue;
        double th = c.lo0 + (c.hi0 - c.lo0) * i / m, ph = c.lo1 + (c.hi1 - c.lo1) * j / m;
        Vec p(3);
        p << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        pts.push_back(p);
      }
    double dm = 0.0;
    for (auto& p : pts)
      for (auto& q : pts) dm = std::max(dm, (p - q).norm());
    return dm;
  }

  int d_, nu_max_;
  std::vector<WhitneyLevel> levels_;
  double c_, C_;
  mutable std::map<int, std::vector<std::pair<int, int>>> close_cache_;
};

struct StopScale {
  int nu;
  bool two_sided;  // mu mu'/2 < 2^6 C^2 2^{-2 nu} <= mu mu' holds
};

// Coarsest scale with 2^6 C^2 2^{-2nu} <= mu mu'; the factor-2 lower side holds only on one parity
// of log2(mu mu'), so the lower side returned is mu mu'/4.
inline StopScale stop_scale(double mu, double mu_prime, double C) {
  if (!(mu > 0 && mu_prime > 0 && C > 0)) throw std::invalid_argument("stop_scale: positive inputs required");
  double X = 64.0 * C * C;
  double target = mu * mu_prime;
  int nu = static_cast<int>(std::ceil(0.5 * std::log2(X / target)));
  while (X * std::ldexp(1.0, -2 * nu) > target) ++nu;
  while (X * std::ldexp(1.0, -2 * (nu - 1)) <= target) --nu;
  double v = X * std::ldexp(1.0, -2 * nu);
  return {nu, target / 2 < v && v <= target};
}

}  // namespace hlab
