#include "hermite_lab/geometry.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace hlab;

namespace {

Vec rand_ball(std::mt19937_64& rng, int d, double R) {
  std::uniform_real_distribution<double> U(-R, R);
  Vec x(d);
  do
    for (int i = 0; i < d; ++i) x(i) = U(rng);
  while (x.norm() > R);
  return x;
}

}  // namespace

TEST(Geometry, SpecialPointsD2) {
  // A = ((d+3)/(2(d+1)), 1/2), C = ((d^2+4d-1)/(2d(d+1)), (d-1)/(2d)), D = (1, (d-1)/(2d))
  Pt A = special_point(SP::A, 2), C = special_point(SP::C, 2), D = special_point(SP::D, 2);
  EXPECT_NEAR(A.a, 5.0 / 6, 1e-15);
  EXPECT_NEAR(A.b, 0.5, 1e-15);
  EXPECT_NEAR(C.a, 11.0 / 12, 1e-15);
  EXPECT_NEAR(C.b, 0.25, 1e-15);
  EXPECT_NEAR(D.a, 1.0, 1e-15);
  EXPECT_NEAR(D.b, 0.25, 1e-15);
  // G coincides with (5/6, 1/6) in d = 2
  Pt G = special_point(SP::G, 2);
  EXPECT_NEAR(G.a, 5.0 / 6, 1e-15);
  EXPECT_NEAR(G.b, 1.0 / 6, 1e-15);
  EXPECT_THROW(special_point(SP::A, 1), std::invalid_argument);
}

TEST(Geometry, PrimeIsInvolution) {
  Pt p{0.7, 0.2};
  Pt q = prime(prime(p));
  EXPECT_DOUBLE_EQ(q.a, p.a);
  EXPECT_DOUBLE_EQ(q.b, p.b);
}

TEST(Geometry, RegionsOfKnownPoints) {
  auto r = region_classify({0.5, 0.5}, 3);
  EXPECT_TRUE(r.r1);
  auto corner = region_classify({1.0, 0.0}, 3);
  EXPECT_TRUE(corner.r3);
  Pt C = special_point(SP::C, 3);
  auto atC = region_classify(C, 3);
  EXPECT_FALSE(atC.r1);
  EXPECT_TRUE(atC.excluded);
  auto top = region_classify({1.0, 0.5}, 3);
  EXPECT_TRUE(top.r2);
  EXPECT_THROW(region_classify({0.3, 0.1}, 2), std::invalid_argument);
}

TEST(Geometry, BetaPiecewiseEqualsMaxOnGrid) {
  for (int d : {2, 3, 4})
    for (int i = 0; i <= 120; ++i)
      for (int k = 0; k <= 120; ++k) {
        Pt p{0.5 + 0.5 * i / 120, 0.5 * k / 120};
        ASSERT_NEAR(beta_piecewise(p, d), beta_max(p, d), 1e-12) << d << " " << p.a << " " << p.b;
      }
}

TEST(Geometry, BetaKnownValues) {
  // beta(2,2) = 0, beta(1,inf) = (d-2)/2 in the corner piece
  EXPECT_NEAR(beta_max({0.5, 0.5}, 2), 0.0, 1e-15);
  EXPECT_NEAR(beta_max({1.0, 0.0}, 2), 0.0, 1e-15);
  EXPECT_NEAR(beta_max({1.0, 0.0}, 3), 0.5, 1e-15);
  // 2 -> 2(d+1)/(d-1) local bound has exponent -1/(d+1)
  for (int d : {2, 3, 5}) EXPECT_NEAR(beta_max({0.5, (d - 1.0) / (2 * (d + 1.0))}, d), -0.5 / (d + 1.0), 1e-15);
}

TEST(Geometry, GammaContinuousAcrossPieces) {
  for (int d : {2, 3}) {
    double worst = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        Pt p{0.5 + 0.5 * i / (n - 1), 0.5 * k / (n - 1)};
        Pt q{std::min(1.0, p.a + 1e-7), p.b};
        worst = std::max(worst, std::abs(gamma_exponent(p, d) - gamma_exponent(q, d)));
      }
    EXPECT_LT(worst, 1e-5) << "d=" << d;
  }
  // 2 -> 2 annulus exponent is 1/2
  EXPECT_NEAR(gamma_exponent({0.5, 0.5}, 2), 0.5, 1e-15);
}

TEST(Geometry, GlobalTwoQRegimes) {
  // d = 2: -delta/2 below 10/3, then -1/6 + delta/3, zero at q = inf
  EXPECT_NEAR(global_two_q_exponent(2.0, 2), 0.0, 1e-15);
  EXPECT_NEAR(global_two_q_exponent(3.0, 2), -0.5 * (0.5 - 1.0 / 3), 1e-15);
  EXPECT_NEAR(global_two_q_exponent(6.0, 2), -1.0 / 6 + (0.5 - 1.0 / 6) / 3, 1e-15);
  EXPECT_NEAR(global_two_q_exponent(std::numeric_limits<double>::infinity(), 2), 0.0, 1e-15);
  // continuity at q1 = 2(d+3)/(d+1) and q2 = 2d/(d-2)
  for (int d : {3, 4}) {
    double q1 = 2.0 * (d + 3) / (d + 1), q2 = 2.0 * d / (d - 2);
    EXPECT_NEAR(global_two_q_exponent(q1 * (1 - 1e-12), d), global_two_q_exponent(q1, d), 1e-9);
    EXPECT_NEAR(global_two_q_exponent(q2 * (1 - 1e-12), d), global_two_q_exponent(q2, d), 1e-9);
  }
}

TEST(Geometry, TauRootsSolveR) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    Vec x = rand_ball(rng, 3, 2), y = rand_ball(rng, 3, 2);
    if (std::abs(x.dot(y)) < 1e-2) continue;
    auto r = tau_roots(x, y);
    EXPECT_NEAR(quad_R(x, y, r.minus), 0.0, 1e-9 * std::max(1.0, r.plus * r.plus));
    EXPECT_NEAR(quad_R(x, y, r.plus), 0.0, 1e-9 * std::max(1.0, r.plus * r.plus));
    EXPECT_LE(std::abs(r.minus), 1.0 + 1e-12);
  }
}

TEST(Geometry, PhaseDerivativesByFiniteDifference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> S(0.2, 2.9);
  for (int i = 0; i < 100; ++i) {
    Vec x = rand_ball(rng, 2, 2), y = rand_ball(rng, 2, 2);
    double s = S(rng), h = 1e-5;
    double d1 = (phase_P(x, y, s + h) - phase_P(x, y, s - h)) / (2 * h);
    double d2 = (phase_P_ds(x, y, s + h) - phase_P_ds(x, y, s - h)) / (2 * h);
    EXPECT_NEAR(phase_P_ds(x, y, s), d1, 1e-6 * std::max(1.0, std::abs(d1)));
    EXPECT_NEAR(phase_P_ds2(x, y, s), d2, 1e-6 * std::max(1.0, std::abs(d2)));
  }
}

TEST(Geometry, CriticalAngleZeroesSecondDerivative) {
  std::mt19937_64 rng(3);
  int n = 0;
  while (n < 100) {
    Vec x = rand_ball(rng, 2, 2), y = rand_ball(rng, 2, 2);
    if (x.dot(y) < 0.05 || (x - y).norm() < 0.05) continue;
    ++n;
    double s = critical_angle(x, y);
    EXPECT_NEAR(phase_P_ds2(x, y, s) * std::pow(std::sin(s), 3), 0.0, 1e-10);
  }
}

TEST(Geometry, DiscriminantRotationInvariant) {
  std::mt19937_64 rng(4);
  Vec x = rand_ball(rng, 2, 2), y = rand_ball(rng, 2, 2);
  double th = 0.77;
  Eigen::Matrix2d U;
  U << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  EXPECT_NEAR(discriminant(U * x, U * y), discriminant(x, y), 1e-14);
  EXPECT_NEAR(critical_angle(U * x, U * y), critical_angle(x, y), 1e-13);
}

TEST(Geometry, WhitneyCellsShrinkDyadically) {
  for (int d : {2, 3}) {
    WhitneyDecomposition W(d, 4);
    EXPECT_GT(W.c_lower(), 0.0);
    EXPECT_LT(W.C_upper() / W.c_lower(), 8.0);
  }
}

TEST(Geometry, WhitneyRelationsPartitionPairs) {
  // every off-diagonal pair of directions is covered exactly once up to the stopping scale
  for (int d : {2, 3}) {
    WhitneyDecomposition W(d, 4);
    const int stop = 3;
    std::vector<std::set<std::pair<int, int>>> rel(stop + 1);
    for (int nu = 0; nu <= stop; ++nu) {
      auto r = W.relation(nu, stop);
      rel[nu] = {r.begin(), r.end()};
    }
    std::mt19937_64 rng(5);
    std::normal_distribution<double> G;
    for (int i = 0; i < 300; ++i) {
      Vec a(d), b(d);
      for (int k = 0; k < d; ++k) a(k) = G(rng), b(k) = G(rng);
      a.normalize();
      b.normalize();
      int hits = 0;
      for (int nu = 0; nu <= stop; ++nu) hits += rel[nu].count({W.locate(nu, a), W.locate(nu, b)});
      EXPECT_EQ(hits, 1) << "d=" << d << " sample " << i;
    }
  }
}

TEST(Geometry, StopScaleBrackets) {
  for (double mu : {0.25, 0.03, 0.004})
    for (double mup : {0.25, 0.01}) {
      auto s = stop_scale(mu, mup, 1.0);
      double v = 64.0 * std::ldexp(1.0, -2 * s.nu);
      EXPECT_LE(v, mu * mup);
      EXPECT_GT(v, mu * mup / 4);
    }
  EXPECT_THROW(stop_scale(0, 1, 1), std::invalid_argument);
}
