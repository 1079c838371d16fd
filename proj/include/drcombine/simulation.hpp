#pragma once

// Monte-Carlo designs for the combined-sample ATE problem: conditional cases
// (normal covariates, separate selection and treatment models), their binary
// outcome variants, and joint-weighting cases with gamma covariates. All draws
// come from per-unit Philox streams, so a replicate is a pure function of its
// seed and replicates can run on any number of threads.

#include "drcombine/core_types.hpp"
#include "drcombine/variance.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drcombine {

enum class Form { linear, nonlinear };

struct CaseSpec {
  std::string case_id;
  bool joint = false;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  Form om_form = Form::linear;
  Form sm_form = Form::linear;  // weighting-model form in joint cases
  Form tm_form = Form::linear;
  std::size_t pop_size = 50000;
  double p_a = 0.02;
  int covariates = 50;
  // Working-model coefficients of the generating process (length covariates
  // + 1): alpha, tau, beta, gamma, or delta1, delta0, beta, gamma.
  std::array<Eigen::VectorXd, 4> truth;
  // Slope columns that carry signal, per block.
  std::array<std::vector<Eigen::Index>, 4> support;
  double true_theta = 0.0;
  std::string theta_note;

  Eigen::Index dim() const { return covariates + 1; }
  // Intercept plus the union of the true supports.
  std::vector<Eigen::Index> oracle_columns() const;
};

// Throws ConfigError listing the valid ids for an unknown case.
CaseSpec case_spec(const std::string& id, bool desk_scale);
const std::vector<std::string>& case_ids();

// Mean of the potential-outcome contrast over a fixed-seed oracle population
// of the given size (used where no closed form exists).
double oracle_theta(const CaseSpec& spec, std::size_t units = 1000000);

struct Population {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x;
  Eigen::VectorXi t;
  Eigen::VectorXd y, y1, y0;
};

// Conditional cases only.
Population generate_population(const CaseSpec& spec, std::uint64_t seed);
// Sample A by Bernoulli(p_a) with weight 1 / p_a, sample B from the rest by
// the selection model. Sample A records carry T and Y as well.
CombinedDataset draw_samples(const Population& population, const CaseSpec& spec,
                             std::uint64_t seed);
// Joint cases: sample A by Bernoulli(p_a), then three-way membership
// (B treated, B control, neither) for the remaining units.
CombinedDataset generate_joint_case(const CaseSpec& spec, std::uint64_t seed);
// Dispatches on spec.joint.
CombinedDataset generate_replicate_data(const CaseSpec& spec, std::uint64_t seed);

struct EstimateRecord {
  EstimatorKind kind = EstimatorKind::dr_combined;
  bool ok = false;
  std::string error;
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool ci_covered = false;
};

struct ReplicationResult {
  std::size_t replicate_id = 0;
  std::uint64_t seed = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::string error;  // data generation failure
  std::vector<EstimateRecord> estimates;
  // Coefficients and support of the primary penalized fit, when run.
  std::optional<std::array<Eigen::VectorXd, 4>> coefficients;
  std::optional<std::array<std::vector<Eigen::Index>, 4>> support_hat;
  double lambda_eta = 0.0;
  double lambda_mu = 0.0;
  double wall_time = 0.0;  // seconds; never written to result files
};

struct SimulationOptions {
  std::vector<EstimatorKind> estimators;  // empty: case default
  bool penalized = true;
  PenaltyConfig penalty;
  int jobs = 1;
};

std::vector<EstimatorKind> default_estimators(const CaseSpec& spec);

ReplicationResult run_replicate(const CaseSpec& spec, std::size_t replicate,
                                std::uint64_t base_seed, const SimulationOptions& options);

struct BlockMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double mse_nonnull = 0.0;
  double mse_null = 0.0;
};

struct EstimatorMetrics {
  EstimatorKind kind = EstimatorKind::dr_combined;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double coverage_low = 0.0;  // coverage -/+ 2 Monte-Carlo standard errors
  double coverage_high = 0.0;
};

struct Metrics {
  std::string case_id;
  double true_theta = 0.0;
  std::size_t replicates = 0;
  std::size_t failed_replicates = 0;
  std::size_t selection_count = 0;  // replicates with a primary fit
  std::optional<std::array<BlockMetrics, 4>> selection;
  std::vector<EstimatorMetrics> estimators;
};

Metrics compute_metrics(const std::vector<ReplicationResult>& results, const CaseSpec& spec);

struct SimulationOutput {
  std::vector<ReplicationResult> results;  // in replicate order
  Metrics metrics;
};

// Replicate r uses seed mix_seed(base_seed, r); output does not depend on jobs.
SimulationOutput run_replications(const CaseSpec& spec, std::size_t replicates,
                                  std::uint64_t base_seed, const SimulationOptions& options);

void write_metrics_csv(std::ostream& out, const Metrics& metrics);
void write_replicates_jsonl(std::ostream& out, const std::vector<ReplicationResult>& results,
                            const CaseSpec& spec);
std::string format_summary(const Metrics& metrics);

}  // namespace drcombine
