#include "drcombine/estimators.hpp"
#include "drcombine/working_models.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace drcombine;
using drcombine::testing::random_dataset;
using drcombine::testing::random_params;

namespace {

UnitRecord a_unit(double w, std::vector<double> x = {1.0}) {
  UnitRecord r;
  r.in_a = true;
  r.weight_a = w;
  r.x = std::move(x);
  return r;
}

UnitRecord b_unit(int t, double y, std::vector<double> x = {1.0}) {
  UnitRecord r;
  r.in_b = true;
  r.t = t;
  r.y = y;
  r.x = std::move(x);
  return r;
}

NuisanceParams scalar_params(double beta, double gamma) {
  NuisanceParams p = NuisanceParams::zeros(1);
  p.beta[0] = beta;
  p.gamma[0] = gamma;
  return p;
}

CombinedDataset drop_sample_b(const CombinedDataset& ds) {
  std::vector<UnitRecord> recs;
  for (const auto& r : ds.records())
    if (!r.in_b) recs.push_back(r);
  return CombinedDataset(recs, ds.supplied_pop_size(), ds.outcome_kind());
}

}  // namespace

TEST(EstimateOr, SingleUnitWithFullWeight) {
  const Design dz = Design::from_dataset(CombinedDataset({a_unit(5.0)}, 5.0, OutcomeKind::continuous));
  EXPECT_NEAR(estimate_or(dz, scalar_params(0.5, 0.2), ModelSpec{}), 0.3, 1e-15);
  EXPECT_EQ(estimate_or(dz, scalar_params(0.4, 0.4), ModelSpec{}), 0.0);
}

TEST(EstimateOr, NeedsSampleA) {
  const Design dz = Design::from_dataset(CombinedDataset({b_unit(1, 2.0)}, 1.0, OutcomeKind::continuous));
  EXPECT_THROW(estimate_or(dz, scalar_params(0, 0), ModelSpec{}), DataError);
}

TEST(EstimateIpw, SingleUnitHandValue) {
  const Design dz = Design::from_dataset(CombinedDataset({b_unit(1, 2.0)}, 1.0, OutcomeKind::continuous));
  EXPECT_DOUBLE_EQ(estimate_ipw(dz, scalar_params(0.7, 0.1), ModelSpec{}), 8.0);
}

TEST(EstimateIpw, ZeroOutcomesGiveZero) {
  const Design dz = Design::from_dataset(
      CombinedDataset({a_unit(3.0), b_unit(1, 0.0), b_unit(0, 0.0)}, 3.0, OutcomeKind::continuous));
  EXPECT_EQ(estimate_ipw(dz, scalar_params(0.2, 0.1), ModelSpec{}), 0.0);
}

TEST(EstimateDr, ReducesToOrWithoutSampleB) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Design dz = Design::from_dataset(drop_sample_b(random_dataset(seed)));
    const NuisanceParams w = random_params(seed, 4);
    EXPECT_NEAR(estimate_dr(dz, w, ModelSpec{}), estimate_or(dz, w, ModelSpec{}), 1e-14);
    EXPECT_NEAR(estimate_dr_joint(dz, w, ModelSpec{}), estimate_or(dz, w, ModelSpec{}), 1e-14);
  }
}

TEST(EstimateDr, ReducesToIpwWithZeroOutcomeModels) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Design dz = Design::from_dataset(random_dataset(seed));
    NuisanceParams w = random_params(seed, 4);
    w.beta.setZero();
    w.gamma.setZero();
    EXPECT_NEAR(estimate_dr(dz, w, ModelSpec{}), estimate_ipw(dz, w, ModelSpec{}), 1e-13);
  }
}

TEST(EstimateDrJoint, MatchesConditionalUnderMatchedProbabilities) {
  // A binary covariate makes the logit models saturated, so w1 = pb pt and
  // w0 = pb (1 - pt) hold exactly for suitable joint coefficients.
  Philox g(3);
  std::vector<UnitRecord> recs;
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x = {1.0, g.uniform() < 0.4 ? 1.0 : 0.0};
    const double u = g.uniform();
    if (u < 0.3) recs.push_back(a_unit(2.0 + g.uniform(), x));
    else recs.push_back(b_unit(g.uniform() < 0.5 ? 1 : 0, x[1] + g.normal(), x));
  }
  const Design dz = Design::from_dataset(CombinedDataset(recs, 400.0, OutcomeKind::continuous));
  NuisanceParams cond = NuisanceParams::zeros(2);
  cond.alpha << -0.4, 0.6;
  cond.tau << 0.3, -0.8;
  cond.beta << 1.0, 0.5;
  cond.gamma << 0.2, -0.3;
  NuisanceParams joint = cond;
  joint.parameterization = Parameterization::joint;
  for (int j = 0; j < 2; ++j) {
    const double pb = expit(cond.alpha[0] + j * cond.alpha[1]);
    const double pt = expit(cond.tau[0] + j * cond.tau[1]);
    const double l1 = logit(pb * pt), l0 = logit(pb * (1 - pt));
    if (j == 0) {
      joint.alpha[0] = l1;
      joint.tau[0] = l0;
    } else {
      joint.alpha[1] = l1 - joint.alpha[0];
      joint.tau[1] = l0 - joint.tau[0];
    }
  }
  EXPECT_NEAR(estimate_dr_joint(dz, joint, ModelSpec{}), estimate_dr(dz, cond, ModelSpec{}), 1e-10);
}

TEST(MeanDifference, TwoUnits) {
  const CombinedDataset ds({b_unit(1, 3.0), b_unit(0, 1.0)}, 2.0, OutcomeKind::continuous);
  EXPECT_EQ(mean_difference(Design::from_dataset(ds)), 2.0);
  RosterOptions opt;
  opt.penalized = false;
  const AteReport r = estimate_roster(ds, EstimatorKind::mean_diff_nonprob, ModelSpec{}, opt);
  EXPECT_NEAR(r.theta_hat, 2.0, 1e-12);
}

TEST(Roster, UnpenalizedCombinedEstimatorsAreFinite) {
  const CombinedDataset ds = random_dataset(17, 400, 4);
  RosterOptions opt;
  opt.penalized = false;
  for (EstimatorKind k : {EstimatorKind::or_combined, EstimatorKind::ipw_combined,
                          EstimatorKind::dr_combined, EstimatorKind::naive_nonprob}) {
    const AteReport r = estimate_roster(ds, k, ModelSpec{}, opt);
    EXPECT_TRUE(std::isfinite(r.theta_hat)) << to_string(k);
    EXPECT_GT(r.se, 0.0) << to_string(k);
    EXPECT_LE(r.ci_low, r.theta_hat);
    EXPECT_GE(r.ci_high, r.theta_hat);
  }
}

TEST(Roster, OracleNeedsColumns) {
  RosterOptions opt;
  EXPECT_THROW(estimate_roster(random_dataset(1, 100, 3), EstimatorKind::oracle_dr, ModelSpec{}, opt),
               ConfigError);
}

TEST(Roster, EstimatorNamesRoundTrip) {
  for (int k = 0; k <= static_cast<int>(EstimatorKind::oracle_dr); ++k) {
    const auto kind = static_cast<EstimatorKind>(k);
    EXPECT_EQ(parse_estimator(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_estimator("bogus"));
}
