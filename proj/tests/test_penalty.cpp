#include "drcombine/penalty.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace drcombine;

TEST(Scad, TaggedValues) {
  EXPECT_EQ(scad_q(0.0, 1.0, 3.7), 1.0);
  EXPECT_EQ(scad_q(4.0, 1.0, 3.7), 0.0);
  EXPECT_DOUBLE_EQ(scad_q(2.0, 1.0, 3.7), 1.7 / 2.7);
  EXPECT_NEAR(scad_q(2.0, 1.0, 3.7), 0.629630, 1e-6);
}

TEST(Scad, ContinuousAtKnots) {
  for (double lambda : {0.01, 0.3, 1.0, 7.5}) {
    const double a = 3.7;
    for (double knot : {lambda, a * lambda}) {
      const double left = scad_q(std::nextafter(knot, 0.0), lambda, a);
      const double right = scad_q(std::nextafter(knot, 1e9), lambda, a);
      EXPECT_LE(std::abs(left - scad_q(knot, lambda, a)), 1e-12);
      EXPECT_LE(std::abs(right - scad_q(knot, lambda, a)), 1e-12);
    }
  }
}

TEST(Scad, NonIncreasingAndBounded) {
  double prev = scad_q(0.0, 0.5, 3.7);
  for (double u = 0.0; u < 3.0; u += 0.01) {
    const double q = scad_q(u, 0.5, 3.7);
    EXPECT_LE(q, prev + 1e-15);
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 0.5);
    prev = q;
  }
}

TEST(Scad, NegativeLambdaThrows) { EXPECT_THROW(scad_q(1.0, -0.1, 3.7), Error); }

TEST(PenalizedScore, ZeroCoefficientsLeaveScore) {
  ScoreVector u{Eigen::VectorXd::Constant(2, 0.1), Eigen::VectorXd::Constant(2, -0.2),
                Eigen::VectorXd::Constant(2, 0.3), Eigen::VectorXd::Constant(2, 0.4)};
  const Eigen::VectorXd s = penalized_score(u, NuisanceParams::zeros(2), 1.0, 2.0, 3.7);
  Eigen::VectorXd expected(8);
  expected << u.u_beta, u.u_gamma, u.u_alpha, u.u_tau;
  EXPECT_EQ(s, expected);
}

TEST(PenalizedScore, NegativeCoefficientHandValue) {
  ScoreVector u{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2),
                Eigen::VectorXd::Zero(2)};
  NuisanceParams w = NuisanceParams::zeros(2);
  w.alpha[1] = -0.5;
  const Eigen::VectorXd s = penalized_score(u, w, 1.0, 1.0, 3.7);
  // alpha pairs with the u_beta equation
  EXPECT_DOUBLE_EQ(s[1], -1.0);
  EXPECT_EQ(s.cwiseAbs().sum(), 1.0);
}

TEST(PenalizedScore, ZeroLambdaIsIdentity) {
  ScoreVector u{Eigen::VectorXd::Constant(2, 0.1), Eigen::VectorXd::Constant(2, -0.2),
                Eigen::VectorXd::Constant(2, 0.3), Eigen::VectorXd::Constant(2, 0.4)};
  NuisanceParams w = NuisanceParams::zeros(2);
  w.beta << 0.3, -2.0;
  w.tau << 1.0, 0.01;
  EXPECT_EQ(penalized_score(u, w, 0.0, 0.0, 3.7), u.stacked());
}

TEST(LqaDiag, HandValues) {
  Eigen::VectorXd v(3);
  v << 0.5, 10.0, 0.0;
  const Eigen::VectorXd e = lqa_diag(v, 1.0, 3.7, 1e-6);
  EXPECT_NEAR(e[0], 1.0 / 0.500001, 1e-12);
  EXPECT_NEAR(e[0], 1.999996, 1e-6);
  EXPECT_EQ(e[1], 0.0);
  EXPECT_TRUE(lqa_diag(v, 0.0, 3.7, 1e-6).isZero(0.0));
}

TEST(LqaDiag, BlocksExemptIntercepts) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(6, 0.5);
  const Eigen::VectorXd e = lqa_diag_blocks(v, 3, 1.0, 3.7, 1e-6);
  EXPECT_EQ(e[0], 0.0);
  EXPECT_EQ(e[3], 0.0);
  EXPECT_GT(e[1], 1.9);
}

TEST(HardThreshold, ZeroesSmallSlopes) {
  NuisanceParams w = NuisanceParams::zeros(3);
  w.beta << 1e-6, 1e-5, 0.8;
  w.alpha << 0.2, -3e-5, -0.4;
  const NuisanceParams t = hard_threshold(w, 1e-4);
  EXPECT_EQ(t.beta[0], 1e-6);  // intercept preserved
  EXPECT_EQ(t.beta[1], 0.0);
  EXPECT_EQ(t.beta[2], 0.8);
  EXPECT_EQ(t.alpha[1], 0.0);
  EXPECT_EQ(t.alpha[2], -0.4);
}

TEST(HardThreshold, LargeEntriesUnchanged) {
  NuisanceParams w = NuisanceParams::zeros(2);
  w.alpha << 1, 2;
  w.tau << -1, -2;
  w.beta << 3, 4;
  w.gamma << 5, 0.5;
  EXPECT_EQ(hard_threshold(w, 1e-4).omega(), w.omega());
}

TEST(Intercepts, EveryBlockStart) {
  EXPECT_TRUE(is_intercept(0, 4));
  EXPECT_TRUE(is_intercept(8, 4));
  EXPECT_FALSE(is_intercept(5, 4));
}
