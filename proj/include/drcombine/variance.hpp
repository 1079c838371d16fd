#pragma once

// Standard errors on the theta-hat scale: the V1 + V2 decomposition for the
// bias-reduced DR estimator and M-estimation sandwiches for stacked
// estimating equations (with an LQA correction for penalized nuisances).

#include "drcombine/core_types.hpp"
#include "drcombine/design.hpp"
#include "drcombine/solver.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace drcombine {

enum class EstimatorKind {
  or_combined,
  ipw_combined,
  dr_combined,
  dr_joint,
  or_probonly,
  ipw_probonly,
  dr_probonly,
  or_nonprob,
  ipw_nonprob,
  dr_nonprob,
  mean_diff_nonprob,
  naive_nonprob,
  oracle_dr,
};

const char* to_string(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(const std::string& name);

struct VarianceParts {
  double v1 = 0.0;
  double v2 = 0.0;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s5 = 0.0, s6 = 0.0;
};

struct AteReport {
  EstimatorKind estimator = EstimatorKind::dr_combined;
  bool penalized = false;
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<VarianceParts> variance_parts;
  std::string variance_method;
  std::size_t n_used = 0;
  double pop_size = 0.0;
  std::optional<FitResult> fit;
};

void set_wald_ci(AteReport& report);

double v1_hat(const Design& design, const NuisanceParams& omega, const ModelSpec& spec);
// Fills s1..s6 and v2 (floored at zero with a warning).
VarianceParts v2_hat(const Design& design, const NuisanceParams& omega, double theta_hat,
                     const ModelSpec& spec, double clip = 1e-6);
AteReport dr_se(const Design& design, const NuisanceParams& omega, double theta_hat,
                const ModelSpec& spec, double clip = 1e-6);

// Stacked system psi_i = (theta - h_i(omega), U_i(omega)) summed over
// total_units population units; units beyond the design rows contribute
// psi = (theta, 0). scores holds U_i at omega (one row per design row) and
// jacobian the analytic sum over units of dU_i/domega. The theta row's
// derivative is taken by central differences of sum h_i.
struct PsiSystem {
  double theta = 0.0;
  double total_units = 0.0;
  Eigen::VectorXd omega;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> h;
  Eigen::MatrixXd scores;
  Eigen::MatrixXd jacobian;
};

struct SandwichResult {
  Eigen::MatrixXd cov;  // covariance of (theta, omega)
  double se = 0.0;
  double condition = 0.0;  // of A
};

SandwichResult sandwich_unpenalized(const PsiSystem& psi);
// N^-2 sum [phi_i - Phi (D + E)^-1 U_i]^2 with E = diag(e_diag).
double sandwich_penalized(const PsiSystem& psi, const Eigen::VectorXd& e_diag);

// d(sum h)/d omega by central differences, step 1e-6 max(1, |omega_j|).
Eigen::VectorXd theta_row_gradient(const PsiSystem& psi);

}  // namespace drcombine
