#include "drcombine/estimators.hpp"
#include "drcombine/penalty.hpp"
#include "drcombine/solver.hpp"
#include "drcombine/working_models.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace drcombine;
using drcombine::testing::random_dataset;

namespace {

Design solver_design(std::uint64_t seed = 31) {
  return Design::from_dataset(random_dataset(seed, 400, 4));
}

}  // namespace

TEST(DefaultGrid, EndpointsAndOrder) {
  const std::vector<double> g = default_grid(1.0);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_NEAR(g.front(), 0.001, 1e-15);
  EXPECT_NEAR(g.back(), 1.0, 1e-15);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(std::adjacent_find(g.begin(), g.end()), g.end());
}

TEST(SolveBlock, CalibrationClosedForm) {
  // Intercept-only calibration: sum_A d_A = n_B / expit(alpha).
  // Ten A units of weight 10 and 30 B units give expit(alpha) = 0.3.
  std::vector<UnitRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({true, false, 10.0, {1.0}, {}, {}});
  for (int i = 0; i < 30; ++i) recs.push_back({false, true, {}, {1.0}, i % 2, 0.5 * i});
  const Design dz = Design::from_dataset(CombinedDataset(recs, 200.0, OutcomeKind::continuous));
  const BlockSystem sys = calibration_system(dz, 1e-6, 1.0 / dz.pop_size);
  InnerStats stats;
  PenaltyConfig cfg;
  cfg.tol_inner = 1e-13;
  const Eigen::VectorXd v = solve_block(sys, Eigen::VectorXd::Zero(1), 0.0, cfg, &stats);
  const double expected = logit(static_cast<double>(dz.count_b()) / dz.wa.sum());
  EXPECT_NEAR(v[0], expected, 1e-8);
  EXPECT_LE(stats.steps, 8);
}

TEST(NewtonBlockUpdate, FixedPointIsStationary) {
  const Design dz = solver_design();
  const ModelSpec spec;
  const PenaltyConfig cfg;
  const NuisanceParams root = solve_unpenalized(dz, spec, cfg, initial_params(dz, spec, 1e-6));
  const BlockSystem sys = eta_system(dz, root.mu(), spec, cfg.prob_clip);
  const Eigen::VectorXd next = newton_block_update(sys, root.eta(), 0.0, cfg);
  EXPECT_LE((next - root.eta()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolvePenalized, ZeroLambdaMatchesUnpenalizedNewton) {
  for (OutcomeKind kind : {OutcomeKind::continuous, OutcomeKind::binary}) {
    const Design dz = Design::from_dataset(random_dataset(44, 400, 4, kind));
    const ModelSpec spec = ModelSpec::for_outcome(kind);
    PenaltyConfig cfg;
    cfg.tol_inner = 1e-13;
    cfg.tol_xi = 1e-12;
    const NuisanceParams init = initial_params(dz, spec, cfg.prob_clip);
    const NuisanceParams ref = solve_unpenalized(dz, spec, cfg, init);
    const FitResult fit = solve_penalized(dz, spec, 0.0, 0.0, cfg, init);
    EXPECT_TRUE(fit.converged);
    EXPECT_LE((fit.omega_hat.omega() - ref.omega()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SolvePenalized, LargeLambdaZeroesAllSlopes) {
  const Design dz = solver_design();
  const ModelSpec spec;
  const PenaltyConfig cfg;
  const FitResult fit =
      solve_penalized(dz, spec, 1e3, 1e3, cfg, initial_params(dz, spec, cfg.prob_clip));
  for (const auto& s : fit.support) EXPECT_TRUE(s.empty());
  for (const Eigen::VectorXd* b :
       {&fit.omega_hat.alpha, &fit.omega_hat.tau, &fit.omega_hat.beta, &fit.omega_hat.gamma}) {
    EXPECT_TRUE(b->tail(b->size() - 1).isZero(0.0));
  }
}

TEST(SolvePenalized, SatisfiesPenalizedEquations) {
  const Design dz = solver_design(7);
  const ModelSpec spec;
  const PenaltyConfig cfg;
  const FitResult fit =
      solve_penalized(dz, spec, 0.02, 0.02, cfg, initial_params(dz, spec, cfg.prob_clip));
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.residual, 1e-4);
}

TEST(SolvePenalized, PermutationDeterminism) {
  const CombinedDataset ds = random_dataset(12, 400, 4);
  std::vector<UnitRecord> recs = ds.records();
  std::reverse(recs.begin(), recs.end());
  const Design a = Design::from_dataset(ds);
  const Design b = Design::from_dataset(CombinedDataset(recs, ds.supplied_pop_size(),
                                                        ds.outcome_kind()));
  const ModelSpec spec;
  const PenaltyConfig cfg;
  const FitResult fa = solve_penalized(a, spec, 0.01, 0.01, cfg, initial_params(a, spec, 1e-6));
  const FitResult fb = solve_penalized(b, spec, 0.01, 0.01, cfg, initial_params(b, spec, 1e-6));
  EXPECT_EQ(fa.omega_hat.omega(), fb.omega_hat.omega());
}

TEST(CrossValidate, SingleValueGridIsChosen) {
  const Design dz = solver_design();
  const CvResult cv = cross_validate(dz, ModelSpec{}, {0.05}, {0.07}, PenaltyConfig{}, 3);
  EXPECT_EQ(cv.lambda_eta, 0.05);
  EXPECT_EQ(cv.lambda_mu, 0.07);
}

TEST(CrossValidate, LossesNonNegativeAndDeterministic) {
  const Design dz = solver_design();
  const std::vector<double> grid = {0.001, 0.01, 0.1};
  const CvResult a = cross_validate(dz, ModelSpec{}, grid, grid, PenaltyConfig{}, 9);
  const CvResult b = cross_validate(dz, ModelSpec{}, grid, grid, PenaltyConfig{}, 9);
  ASSERT_EQ(a.loss_eta.size(), grid.size());
  for (double l : a.loss_eta) EXPECT_GE(l, 0.0);
  for (double l : a.loss_mu) EXPECT_GE(l, 0.0);
  EXPECT_EQ(a.loss_eta, b.loss_eta);
  EXPECT_EQ(a.loss_mu, b.loss_mu);
  EXPECT_NE(std::find(grid.begin(), grid.end(), a.lambda_eta), grid.end());
}

TEST(Folds, StratifiedAndSeeded) {
  const Design dz = solver_design();
  const std::vector<int> f = assign_folds(dz, 5, 1);
  EXPECT_EQ(f, assign_folds(dz, 5, 1));
  EXPECT_NE(f, assign_folds(dz, 5, 2));
  for (int k = 0; k < 5; ++k) {
    const Design held = fold_subset(dz, f, k, true);
    EXPECT_GT(held.count_b1(), 0);
    EXPECT_GT(held.count_b0(), 0);
    EXPECT_GT(held.count_a(), 0);
  }
}

TEST(FitPenalizedCv, BitIdenticalReruns) {
  const Design dz = solver_design(3);
  const FitResult a = fit_penalized_cv(dz, ModelSpec{}, PenaltyConfig{}, 5);
  const FitResult b = fit_penalized_cv(dz, ModelSpec{}, PenaltyConfig{}, 5);
  EXPECT_EQ(a.omega_hat.omega(), b.omega_hat.omega());
  EXPECT_EQ(a.lambda_eta, b.lambda_eta);
  EXPECT_EQ(a.lambda_mu, b.lambda_mu);
}

TEST(SolveJittered, RidgeRescuesSingularThenGivesUp) {
  const Eigen::VectorXd s = solve_jittered(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2));
  // The first ladder step that yields a well-conditioned matrix is 1e-8.
  EXPECT_NEAR(s[0], 1e8, 1e-4);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(solve_jittered(bad, Eigen::VectorXd::Ones(2)), NumericalError);
}
