#include "hermite_lab/operators.hpp"

#include <boost/math/special_functions/laguerre.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

VecC random_vec(std::mt19937_64& rng, Eigen::Index n, bool complex_ = true) {
  std::normal_distribution<double> G;
  VecC v(n);
  for (auto& z : v) z = cd(G(rng), complex_ ? G(rng) : 0.0);
  return v;
}

cd weighted_dot(const VecC& a, const VecC& b, const Eigen::VectorXd& w) {
  cd s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += w(i) * std::conj(a(i)) * b(i);
  return s;
}

}  // namespace

TEST(Operators, MidpointAndGaussGrids) {
  auto g = make_grid(Box::cube(2, -1, 3), 10);
  EXPECT_EQ(g.size(), 100u);
  EXPECT_NEAR(g.weights.sum(), 16.0, 1e-13);
  auto h = make_grid(Box::cube(3, 0, 1), 40, RuleKind::gauss_legendre);
  // composite rule integrates x^2 y z^3 exactly
  double s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    Vec x = h.node(i);
    s += h.weights(i) * x(0) * x(0) * x(1) * std::pow(x(2), 3);
  }
  EXPECT_NEAR(s, 1.0 / 24, 1e-14);
  EXPECT_THROW(make_grid(Box::cube(2, 0, 1), 1), std::invalid_argument);
  EXPECT_THROW(grid_from_axes({midpoint_rule(0, 1, 1000), midpoint_rule(0, 1, 1000)}, RuleKind::custom, 1000),
               std::length_error);
}

TEST(Operators, TensorProjectionMatchesDenseAssembly) {
  std::mt19937_64 rng(21);
  for (int d : {1, 2, 3}) {
    const double lam = 2 * 5 + d;
    Rule ax = midpoint_rule(-5, 5, d == 3 ? 9 : 17);
    TensorProjection P(lam, d, ax);
    auto D = assemble(direct_oracle(lam, d), P.grid(), P.grid());
    VecC f = random_vec(rng, P.cols());
    EXPECT_LT((P.apply(f) - D.apply(f)).cwiseAbs().maxCoeff(), 1e-11) << "d=" << d;
    EXPECT_LT((P.diagonal() - D.kernel.diagonal().real()).cwiseAbs().maxCoeff(), 1e-12) << "d=" << d;
  }
}

TEST(Operators, MaskedTensorProjectionMatchesDense) {
  std::mt19937_64 rng(22);
  const double lam = 18;
  Rule ax = midpoint_rule(-6, 6, 20);
  TensorProjection P(lam, 2, ax);
  auto in = mask_where(P.grid(), [](const Vec& x) { return x.norm() < 3; });
  auto out = mask_where(P.grid(), [](const Vec& x) { return x(0) > 0.5; });
  P.set_masks(in, out);
  auto D = assemble(direct_oracle(lam, 2), P.grid(), P.grid(), in, out);
  VecC f = random_vec(rng, P.cols()), g = random_vec(rng, P.rows());
  EXPECT_LT((P.apply(f) - D.apply(f)).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((P.apply_adjoint(g) - D.apply_adjoint(g)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Operators, AnalysisSynthesisOrthonormal) {
  // on a wide Gauss grid the sampled eigenfunctions stay orthonormal
  const double lam = 2 * 12 + 3;
  TensorProjection P(lam, 3, gl_axis(-9, 9, 128));
  std::mt19937_64 rng(23);
  std::normal_distribution<double> G;
  Eigen::VectorXd c((12 + 1) * (12 + 2) / 2);
  for (auto& v : c) v = G(rng);
  EXPECT_LT((P.analysis(P.synthesis(c)) - c).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Operators, DenseAdjointIdentity) {
  std::mt19937_64 rng(24);
  auto g = make_grid(Box::cube(2, -3, 3), 8);
  Eigen::MatrixXcd K(g.size(), g.size());
  for (auto& z : K.reshaped()) z = cd(std::normal_distribution<double>()(rng), 0.3);
  auto T = from_matrix(K, g.weights, g.weights);
  VecC f = random_vec(rng, T.cols()), h = random_vec(rng, T.rows());
  EXPECT_LT(std::abs(weighted_dot(h, T.apply(f), T.out_weights()) - weighted_dot(T.apply_adjoint(h), f, T.in_weights())),
            1e-10);
}

TEST(Operators, RadialRowAgainstLaguerre) {
  for (int m : {0, 1, 4, 9})
    for (double r : {0.0, 0.3, 2.1, 5.5}) {
      auto row = radial_row(m, 12, r);
      for (int k = 0; k <= 12; ++k) {
        double ref = std::sqrt(std::exp(std::lgamma(k + 1.0) - std::lgamma(k + m + 1.0))) * std::pow(r, m) *
                     std::exp(-0.5 * r * r) * boost::math::laguerre(k, m, r * r);
        ASSERT_NEAR(row[k], ref, 1e-12 * std::max(1.0, std::abs(ref))) << m << " " << k << " " << r;
      }
    }
}

TEST(Operators, PolarKernelValueIsProjection) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> U(-5, 5);
  auto c = projection_levels(40);
  for (int i = 0; i < 10; ++i) {
    Vec x(2), y(2);
    x << U(rng), U(rng);
    y << U(rng), U(rng);
    EXPECT_NEAR(std::abs(polar_kernel_value(c, x, y) - projection_direct(40, x, y)), 0.0, 1e-11);
  }
}

TEST(Operators, PolarOperatorAgainstDenseSum) {
  const double lam = 30;
  auto [a0, a1] = annulus_radii(lam, 0.25, +1);
  auto [b0, b1] = annulus_radii(lam, 0.125, -1);
  PolarOperator P(projection_levels(lam), radial_grid(a0, a1, lam), radial_grid(b0, b1, lam));
  std::mt19937_64 rng(26);
  VecC f = random_vec(rng, P.cols()), g = random_vec(rng, P.rows());
  VecC Pf = P.apply(f);
  double scale = Pf.cwiseAbs().maxCoeff();
  for (Eigen::Index i : {Eigen::Index(0), P.rows() / 3, P.rows() - 1}) {
    cd s = 0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) s += projection_direct(lam, P.point_out(i), P.point_in(j)) * P.in_weights()(j) * f(j);
    EXPECT_LT(std::abs(Pf(i) - s), 1e-10 * scale) << i;
  }
  EXPECT_LT(std::abs(weighted_dot(g, Pf, P.out_weights()) - weighted_dot(P.apply_adjoint(g), f, P.in_weights())), 1e-9);
}

TEST(Operators, PolarNorm22MatchesDenseSvd) {
  const double lam = 20;
  auto [a0, a1] = annulus_radii(lam, 0.25, +1);
  PolarOperator P(projection_levels(lam), radial_grid(a0, a1, lam, 10), radial_grid(a0, a1, lam, 10));
  Eigen::MatrixXcd B(P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      B(i, j) = std::sqrt(P.out_weights()(i)) * projection_direct(lam, P.point_out(i), P.point_in(j)) *
                std::sqrt(P.in_weights()(j));
  double ref = Eigen::JacobiSVD<Eigen::MatrixXcd>(B).singularValues()(0);
  EXPECT_NEAR(P.norm_22(), ref, 1e-10 * ref);
  double mx = 0;
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) mx = std::max(mx, std::abs(projection_direct(lam, P.point_out(i), P.point_in(j))));
  EXPECT_NEAR(P.max_abs_kernel(), mx, 1e-10 * mx);
}

TEST(Operators, ProjectionAxisCoversTurningRegion) {
  Rule r = projection_axis(400, 1.5, 6);
  EXPECT_NEAR(r.x.front(), -30, 1.0);
  EXPECT_NEAR(r.x.back(), 30, 1.0);
  double w = 0;
  for (double v : r.w) w += v;
  EXPECT_NEAR(w, 60.0, 1e-10);
}
