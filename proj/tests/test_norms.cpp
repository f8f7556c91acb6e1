#include "hermite_lab/norms.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlab;

namespace {

DiscretizedOperator random_op(std::mt19937_64& rng, int m, int n, bool complex_ = true) {
  std::normal_distribution<double> G;
  std::uniform_real_distribution<double> U(0.2, 1.5);
  Eigen::MatrixXcd K(m, n);
  for (auto& z : K.reshaped()) z = cd(G(rng), complex_ ? G(rng) : 0.0);
  Eigen::VectorXd wi(n), wo(m);
  for (auto& v : wi) v = U(rng);
  for (auto& v : wo) v = U(rng);
  return from_matrix(K, wi, wo);
}

VecC random_vec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> G;
  VecC v(n);
  for (auto& z : v) z = cd(G(rng), G(rng));
  return v;
}

double wnorm(const VecC& v, const Eigen::VectorXd& w, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += w(i) * std::pow(std::abs(v(i)), p);
  return std::pow(s, 1 / p);
}

}  // namespace

TEST(Norms, ConjugateExponents) {
  EXPECT_EQ(conj_exp(1.0), kInf);
  EXPECT_EQ(conj_exp(kInf), 1.0);
  EXPECT_DOUBLE_EQ(conj_exp(4.0), 4.0 / 3);
}

TEST(Norms, EndpointsAgainstColumnAndRowNorms) {
  std::mt19937_64 rng(31);
  auto T = random_op(rng, 12, 9);
  for (double q : {1.5, 3.0, kInf}) {
    double best = 0;
    for (int j = 0; j < 9; ++j) best = std::max(best, wnorm(T.kernel.col(j), T.w_out, q));
    EXPECT_NEAR(norm_endpoint(T, 1.0, q).value, best, 1e-12 * best);
    // no input does better than the worst column
    for (int k = 0; k < 50; ++k) {
      VecC f = random_vec(rng, 9);
      EXPECT_LE(wnorm(T.apply(f), T.w_out, q) / wnorm(f, T.w_in, 1.0), best * (1 + 1e-12));
    }
  }
  for (double p : {1.25, 2.0}) {
    double best = 0;
    for (int i = 0; i < 12; ++i) best = std::max(best, wnorm(T.kernel.row(i).transpose(), T.w_in, conj_exp(p)));
    EXPECT_NEAR(norm_endpoint(T, p, kInf).value, best, 1e-12 * best);
  }
  EXPECT_THROW(norm_endpoint(T, 2.0, 3.0), std::invalid_argument);
}

TEST(Norms, EndpointRespectsMasks) {
  std::mt19937_64 rng(32);
  auto T = random_op(rng, 6, 6);
  T.mask_in = {1, 1, 0, 0, 1, 0};
  T.mask_out = {0, 1, 1, 1, 0, 1};
  double best = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (T.mask_in[j] && T.mask_out[i]) best = std::max(best, std::abs(T.kernel(i, j)));
  EXPECT_DOUBLE_EQ(norm_endpoint(T, 1.0, kInf).value, best);
}

TEST(Norms, SvdAgainstBdcsvd) {
  std::mt19937_64 rng(33);
  auto T = random_op(rng, 30, 20);
  Eigen::MatrixXcd B = T.w_out.cwiseSqrt().asDiagonal() * T.kernel * T.w_in.cwiseSqrt().asDiagonal();
  double ref = Eigen::BDCSVD<Eigen::MatrixXcd>(B).singularValues()(0);
  EXPECT_NEAR(norm_svd(T).value, ref, 1e-12 * ref);
  PowerOptions opt;
  opt.seed = 1;
  EXPECT_NEAR(norm_pq(T, 2.0, 2.0, {}, opt).value, ref, 1e-6 * ref);
}

TEST(Norms, PowerMethodOnRankOne) {
  // ||u v^T||_{p->q} = ||u||_q ||v||_{p'} for weighted spaces
  std::mt19937_64 rng(34);
  const int m = 40, n = 25;
  auto T = random_op(rng, m, n);
  VecC u = random_vec(rng, m), v = random_vec(rng, n);
  T.kernel = u * v.transpose();
  for (auto [p, q] : {std::pair{2.0, 4.0}, {1.5, 3.0}, {4.0, 1.5}}) {
    double ref = wnorm(u, T.w_out, q) * wnorm(v, T.w_in, conj_exp(p));
    PowerOptions opt;
    opt.seed = 7;
    auto e = norm_pq(T, p, q, {}, opt);
    EXPECT_NEAR(e.value, ref, 1e-6 * ref) << p << " " << q;
    EXPECT_TRUE(e.monotone);
  }
}

TEST(Norms, PowerMethodBoundsWitnessesAndUsesWarmStarts) {
  std::mt19937_64 rng(35);
  auto T = random_op(rng, 20, 20);
  VecC f = random_vec(rng, 20);
  PowerOptions opt;
  opt.seed = 3;
  opt.restarts = 2;
  auto e = norm_pq(T, 1.5, 5.0, {f}, opt);
  EXPECT_GE(e.value * (1 + 1e-12), witness_ratio(T, f, 1.5, 5.0));
  EXPECT_NEAR(e.witness_floor, witness_ratio(T, f, 1.5, 5.0), 1e-12);
  EXPECT_EQ(e.restarts, 3);
  // reproducible from the seed
  EXPECT_EQ(norm_pq(T, 1.5, 5.0, {f}, opt).value, e.value);
  EXPECT_THROW(norm_pq(T, 1.0, 5.0), std::invalid_argument);
  EXPECT_THROW(witness_ratio(T, VecC::Zero(20), 2, 2), std::invalid_argument);
}

TEST(Norms, RankOneD1AgainstPowerMethod) {
  const double lam = 41;
  Rule ax = projection_axis(lam, 1.8, 10);
  TensorProjection P(lam, 1, ax);
  PowerOptions opt;
  opt.real_field = true;
  opt.seed = 2;
  for (auto [p, q] : {std::pair{2.0, 4.0}, {1.5, 6.0}}) {
    double ref = rank_one_norm_d1(lam, p, q);
    // |h|^{p'} with p' = 3 has kinks the Gauss rule does not see; 1e-3 covers that discretization error
    EXPECT_NEAR(norm_pq(P, p, q, {}, opt).value, ref, (p == 2.0 ? 1e-6 : 1e-3) * ref) << p << " " << q;
  }
}

TEST(Norms, LevelSynthesisIsIsometry) {
  TensorProjection P(22, 2, projection_axis(22, 2.0, 10));
  LevelSynthesis S(P);
  PowerOptions opt;
  opt.seed = 4;
  opt.real_field = true;
  EXPECT_NEAR(norm_pq(S, 2.0, 2.0, {}, opt).value, 1.0, 1e-8);
  EXPECT_EQ(S.cols(), 11);
}

TEST(Norms, WitnessConstruction) {
  auto c = make_witness(WitnessKind::cube_sum, 802);
  EXPECT_EQ(c.N, 400);
  EXPECT_EQ(c.index.front(), 13);
  EXPECT_EQ(c.index.back(), 25);
  EXPECT_EQ(c.signs.size(), c.index.size());
  auto s = make_witness(WitnessKind::small_cube, 402);
  EXPECT_EQ(s(s.x0), 1.0);
  EXPECT_THROW(make_witness(WitnessKind::annulus_cube, 402, 0.5), std::invalid_argument);
  EXPECT_EQ(witness_kind_from("single_line"), WitnessKind::single_line);
  EXPECT_THROW(witness_kind_from("nope"), std::invalid_argument);
}

TEST(Norms, WitnessCoefficientsByQuadrature) {
  // <f, Phi_{(N-b,b)}> by a fine tensor Gauss rule on the witness box
  for (auto kind : {WitnessKind::single_line, WitnessKind::cube_sum, WitnessKind::small_cube}) {
    auto w = make_witness(kind, 98);
    auto c = witness_projection_coefficients(w);
    Rule a = composite_gl(w.box.lo[0], w.box.hi[0], 12, 16), b = composite_gl(w.box.lo[1], w.box.hi[1], 12, 16);
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(w.N + 1);
    Vec x(2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto h1 = hermite_row(w.N, a.x[i]);
      for (std::size_t k = 0; k < b.size(); ++k) {
        x << a.x[i], b.x[k];
        double f = w(x);
        if (f == 0.0) continue;
        auto h2 = hermite_row(w.N, b.x[k]);
        for (int m = 0; m <= w.N; ++m) ref(m) += a.w[i] * b.w[k] * f * h1[w.N - m] * h2[m];
      }
    }
    EXPECT_LT((c - ref).cwiseAbs().maxCoeff(), 1e-9) << to_string(kind);
  }
}

TEST(Norms, BreakpointAxisHitsCuts) {
  Rule r = breakpoint_axis(100, {1.0, -2.0, 0.5});
  double w = 0;
  for (double v : r.w) w += v;
  EXPECT_NEAR(w, 3.0, 1e-13);
  EXPECT_GT(r.x.front(), -2.0);
  EXPECT_LT(r.x.back(), 1.0);
}
