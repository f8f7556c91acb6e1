#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace hlab {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const { return x.size(); }
  void append(const Rule& r) {
    x.insert(x.end(), r.x.begin(), r.x.end());
    w.insert(w.end(), r.w.begin(), r.w.end());
  }
};

// Gauss-Legendre rule on [-1,1], cached by order.
inline const Rule& gl_rule(int n) {
  static std::mutex mtx;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw std::invalid_argument("gl_rule: order must be positive");
  Rule r;
  if (n == 1) {
    r.x = {0.0};
    r.w = {2.0};
  } else {
    // boost returns the non-negative zeros in increasing order
    auto z = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> xs;
    for (auto it2 = z.rbegin(); it2 != z.rend(); ++it2)
      if (*it2 != 0.0) xs.push_back(-*it2);
    for (double v : z) xs.push_back(v);
    for (double v : xs) {
      double dp = boost::math::legendre_p_prime(n, v);
      r.x.push_back(v);
      r.w.push_back(2.0 / ((1.0 - v * v) * dp * dp));
    }
  }
  return cache.emplace(n, std::move(r)).first->second;
}

inline Rule gl_on(double a, double b, int n) {
  const Rule& ref = gl_rule(n);
  Rule r;
  r.x.resize(ref.size());
  r.w.resize(ref.size());
  double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    r.x[i] = c + h * ref.x[i];
    r.w[i] = h * ref.w[i];
  }
  return r;
}

inline Rule composite_gl(const std::vector<double>& edges, int n) {
  Rule r;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) r.append(gl_on(edges[i], edges[i + 1], n));
  return r;
}

inline Rule composite_gl(double a, double b, int panels, int n) {
  std::vector<double> e(panels + 1);
  for (int i = 0; i <= panels; ++i) e[i] = a + (b - a) * i / panels;
  return composite_gl(e, n);
}

}  // namespace hlab
