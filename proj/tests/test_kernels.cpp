#include "hermite_lab/kernels.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

Vec rand_box(std::mt19937_64& rng, int d, double R) {
  std::uniform_real_distribution<double> U(-R, R);
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = U(rng);
  return x;
}

// sum of Phi_a(x) Phi_a(y) over |a| = N
double brute_projection(int N, const Vec& x, const Vec& y) {
  std::vector<double> xs(x.data(), x.data() + x.size()), ys(y.data(), y.data() + y.size());
  double s = 0;
  for (auto& a : enumerate_multiindices(N, static_cast<int>(x.size()))) s += eval_phi(a, xs) * eval_phi(a, ys);
  return s;
}

}  // namespace

TEST(Kernels, EigenLevel) {
  EXPECT_EQ(eigen_level(22, 2), 10);
  EXPECT_EQ(eigen_level(7, 3), 2);
  EXPECT_THROW(eigen_level(21, 2), std::invalid_argument);
  EXPECT_THROW(eigen_level(1, 3), std::invalid_argument);
}

TEST(Kernels, DirectSumAgainstMultiIndexEnumeration) {
  std::mt19937_64 rng(11);
  for (int d : {1, 2, 3})
    for (int N : {0, 3, 12, 25}) {
      Vec x = rand_box(rng, d, 3), y = rand_box(rng, d, 3);
      double ref = brute_projection(N, x, y);
      EXPECT_NEAR(projection_direct(2.0 * N + d, x, y), ref, 1e-12 * std::max(1.0, std::abs(ref))) << d << " " << N;
    }
}

TEST(Kernels, SequenceMatchesDirectIncludingFftPath) {
  std::mt19937_64 rng(12);
  Vec x = rand_box(rng, 2, 4), y = rand_box(rng, 2, 4);
  auto P = projection_sequence(1700, x, y);
  for (int n : {0, 40, 900, 1700}) EXPECT_NEAR(P[n], projection_direct(2.0 * n + 2, x, y), 1e-10) << n;
}

TEST(Kernels, DiagonalTraceCountsMultiplicity) {
  // int Pi(x, x) dx = dim of the eigenspace = N + 1 in d = 2
  const int N = 9;
  const double L = 9, h = 0.05;
  double s = 0;
  Vec x(2);
  for (double a = -L; a < L; a += h)
    for (double b = -L; b < L; b += h) {
      x << a + 0.5 * h, b + 0.5 * h;
      s += h * h * projection_direct(2.0 * N + 2, x, x);
    }
  EXPECT_NEAR(s, N + 1.0, 1e-8);
}

TEST(Kernels, BranchConstantIsEighthRoot) {
  constexpr double pi = std::numbers::pi;
  for (int d : {1, 2, 3}) {
    auto cal = calibrate_branch(d);
    EXPECT_LT(cal.residual, 1e-6);
    EXPECT_LT(std::abs(cal.constant - std::polar(1.0, -pi * d / 4)), 1e-6) << "d=" << d;
  }
}

TEST(Kernels, TimeQuadratureAgreesWithSpectralWindow) {
  std::mt19937_64 rng(13);
  for (int d : {1, 2, 3})
    for (double lam : {31.0 + (d == 2), 101.0 + (d == 2)}) {
      const double R = std::sqrt(lam);
      for (auto w : {make_window(WindowKind::psi0), make_window(WindowKind::plus, 5), make_window(WindowKind::pi_minus, 4)})
        for (int i = 0; i < 3; ++i) {
          Vec x = rand_box(rng, d, R), y = rand_box(rng, d, R);
          cd a = windowed_projection_timequad(lam, w, x, y).value;
          cd b = windowed_projection_spectral(lam, w, x, y, 1e-11);
          EXPECT_LT(std::abs(a - b), 1e-7 * std::max(1.0, std::abs(b))) << w.name() << " d=" << d << " lam=" << lam;
        }
    }
}

TEST(Kernels, SelfCheckReportsSmallError) {
  Vec x(2), y(2);
  x << 1.2, -0.4;
  y << -2.0, 0.7;
  auto r = windowed_projection_timequad(42, make_window(WindowKind::plus, 6), x, y, true);
  EXPECT_LT(r.error, 1e-9);
  EXPECT_GT(r.nodes, 0);
}

TEST(Kernels, SpectralWindowSumRebuildsProjection) {
  std::mt19937_64 rng(14);
  auto orc = spectral_window_sum_oracle(30, 2);
  auto rec = window_reconstruction_oracle(30, 2);
  for (int i = 0; i < 5; ++i) {
    Vec x = rand_box(rng, 2, 5), y = rand_box(rng, 2, 5);
    double ref = projection_direct(30, x, y);
    EXPECT_LT(std::abs(orc(x, y) - ref), 1e-8);
    EXPECT_LT(std::abs(rec(x, y) - ref), 1e-8);
  }
}

TEST(Kernels, MehlerKernelSymmetryAndPeriod) {
  constexpr double pi = std::numbers::pi;
  Vec x(2), y(2);
  x << 0.3, 1.1;
  y << -0.8, 0.2;
  double t = 0.37;
  EXPECT_LT(std::abs(mehler_kernel(t, x, y) - mehler_kernel(t, y, x)), 1e-14);
  // e^{-i pi H} acts as e^{-i pi d} on every level
  cd a = mehler_kernel(t + pi, x, y), b = std::polar(1.0, -pi * 2) * mehler_kernel(t, x, y);
  EXPECT_LT(std::abs(a - b), 1e-12);
  EXPECT_THROW(mehler_kernel(0.0, x, y), std::invalid_argument);
}

TEST(Kernels, RescaleRoundTrip) {
  auto base = direct_oracle(22, 2);
  auto back = unscale(rescale(base));
  Vec x(2), y(2);
  x << 0.4, -1.0;
  y << 2.2, 0.1;
  EXPECT_NEAR(std::abs(back(x, y) - base(x, y)), 0.0, 1e-14);
  auto sc = rescale(base);
  Vec xs = x / std::sqrt(22.0), ys = y / std::sqrt(22.0);
  EXPECT_NEAR(std::abs(sc(xs, ys) - base(x, y)), 0.0, 1e-14);
  // at p = q = 2 the factor is lambda^{-d/2}
  EXPECT_NEAR(sc.conversion_factor(2, 2), std::pow(22.0, -1.0), 1e-14);
}

TEST(Kernels, OscillatoryIntegralDomain) {
  Vec x(2), y(2);
  x << 0.5, 0.1;
  y << 3.0, 0.0;
  EXPECT_THROW(oscillatory_Ij(10, make_window(WindowKind::plus, 4), x, y), std::invalid_argument);
}
