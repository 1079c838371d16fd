#pragma once

// ATE point estimators and the estimator roster: combined-data OR / IPW / DR
// (penalized or conventional), the joint-model DR, probability-sample-only
// and non-probability-sample-only estimators, the unadjusted mean
// difference and the true-support oracle.

#include "drcombine/core_types.hpp"
#include "drcombine/design.hpp"
#include "drcombine/solver.hpp"
#include "drcombine/variance.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace drcombine {

// N^-1 sum_A d_A (g1 - g0).
double estimate_or(const Design& design, const NuisanceParams& omega, const ModelSpec& spec);
// N^-1 sum_B {T Y / (pi_B pi_T) - (1 - T) Y / (pi_B (1 - pi_T))}.
double estimate_ipw(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                    double clip = 1e-6);
// theta solving N^-1 sum phi = 0.
double estimate_dr(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                   double clip = 1e-6);
double estimate_dr_joint(const Design& design, const NuisanceParams& params,
                         const ModelSpec& spec, double clip = 1e-6);
// Treated-minus-control mean of Y over sample B.
double mean_difference(const Design& design);

// N^-1 sum w (g(x'b) - target) x over a row range (w, target indexed from
// range.begin); Jacobian N^-1 sum w g' x x'.
BlockSystem glm_system(const Design& design, RowRange range, Eigen::VectorXd weights,
                       Eigen::VectorXd target, Link link, double scale);
// N^-1 {sum_A d_A x - sum_B x / pi_B(x'alpha)}.
BlockSystem calibration_system(const Design& design, double clip, double scale);
// Block-diagonal composition; both parts must share block_dim.
BlockSystem stack_systems(BlockSystem first, BlockSystem second);

struct RosterOptions {
  bool penalized = true;
  std::uint64_t seed = 1;
  PenaltyConfig penalty;
  // Design columns (intercept first) used by the oracle estimator.
  std::vector<Eigen::Index> oracle_columns;
  std::vector<double> grid_eta;
  std::vector<double> grid_mu;
};

// Fits and evaluates roster entries on one design, sharing the penalized
// DR fit between entries that need it.
class RosterSession {
 public:
  RosterSession(const Design& design, ModelSpec spec, RosterOptions options);

  AteReport run(EstimatorKind kind);
  const FitResult& dr_fit();

 private:
  AteReport run_or_combined();
  AteReport run_ipw_combined();
  AteReport run_dr_combined();
  AteReport run_dr_joint();
  AteReport run_probonly(EstimatorKind kind);
  AteReport run_nonprob(EstimatorKind kind);
  AteReport run_oracle();

  const Design& design_;
  ModelSpec spec_;
  RosterOptions options_;
  std::optional<FitResult> dr_fit_;
};

AteReport estimate_roster(const CombinedDataset& dataset, EstimatorKind kind,
                          const ModelSpec& spec, const RosterOptions& options);

}  // namespace drcombine
