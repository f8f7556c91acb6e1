#include "hermite_lab/windows.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

constexpr double pi = std::numbers::pi;

// plain midpoint rule on [-pi, pi]
cd midpoint_fourier(const SpectralWindow& w, double xi, int n = 400000) {
  double h = 2 * pi / n;
  cd s = 0;
  for (int i = 0; i < n; ++i) {
    double t = -pi + (i + 0.5) * h;
    s += h * w(t) * std::polar(1.0, -xi * t);
  }
  return s;
}

}  // namespace

TEST(Windows, SmoothStepShape) {
  EXPECT_EQ(smooth_step(0.2), 1.0);
  EXPECT_EQ(smooth_step(1.3), 0.0);
  EXPECT_NEAR(smooth_step(0.75), 0.5, 1e-15);
  for (double t = 0.5; t < 1.0; t += 0.01) EXPECT_GE(smooth_step(t), smooth_step(t + 0.01));
}

TEST(Windows, PartitionOfUnity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-pi, pi);
  for (int jmax : {4, 6, 9}) {
    auto ws = make_windows(jmax);
    EXPECT_EQ(ws.size(), 1 + 4 * (jmax - 3) + 2u);
    for (int i = 0; i < 2000; ++i) {
      double t = U(rng);
      double s = 0;
      for (auto& w : ws) s += w(t);
      ASSERT_NEAR(s, 1.0, 1e-13) << "jmax=" << jmax << " t=" << t;
    }
  }
  EXPECT_THROW(make_windows(3), std::invalid_argument);
}

TEST(Windows, SamplesVanishOutsideSupport) {
  for (auto& w : make_windows(6)) {
    for (double t = -pi; t <= pi; t += 1e-3) {
      bool inside = false;
      for (auto [a, b] : w.support) inside = inside || (t >= a - 1e-12 && t <= b + 1e-12);
      if (!inside) ASSERT_EQ(w(t), 0.0) << w.name() << " t=" << t;
    }
  }
}

TEST(Windows, FourierAgainstMidpointRule) {
  for (auto w : {make_window(WindowKind::psi0), make_window(WindowKind::plus, 5), make_window(WindowKind::pi_minus, 4),
                 make_window(WindowKind::tail_zero, 7)})
    for (double xi : {0.0, 3.5, -40.0, 250.0}) {
      cd a = w.fourier(xi), b = midpoint_fourier(w, xi);
      EXPECT_LT(std::abs(a - b), 1e-8) << w.name() << " xi=" << xi;
    }
}

TEST(Windows, FourierTableMatchesDirect) {
  // tables need about 512 samples per unit of 1/scale to resolve the transitions
  for (int j : {4, 7}) {
    auto w = make_window(WindowKind::minus, j);
    const std::size_t M = std::size_t(512) << j;
    auto tab = w.fourier_table(M);
    for (long n : {-300L, -7L, 0L, 1L, 64L, 511L}) EXPECT_LT(std::abs(tab[n + M / 2] - w.fourier(double(n))), 1e-10) << j << " " << n;
  }
}

TEST(Windows, FourierIntegersMatchesDirect) {
  auto w = make_window(WindowKind::pi_plus, 5);
  auto v = w.fourier_integers(-600, 1300);
  for (long k : {0L, 255L, 256L, 599L, 600L, 1299L}) EXPECT_LT(std::abs(v[k] - w.fourier(double(-600 + k))), 1e-10) << k;
}

TEST(Windows, L1NormOfScaledWindow) {
  // dilation by 2^j divides the L1 norm by 2^j
  double a = make_window(WindowKind::plus, 4).l1_norm(), b = make_window(WindowKind::plus, 7).l1_norm();
  EXPECT_NEAR(a / b, 8.0, 1e-10);
  EXPECT_NEAR(make_window(WindowKind::plus, 4).l1_norm(), std::abs(midpoint_fourier(make_window(WindowKind::plus, 4), 0.0)), 1e-9);
}
