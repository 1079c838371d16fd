#include "drcombine/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace drcombine {

double scad_q(double u_abs, double lambda, double a) {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!(a > 2.0)) throw ConfigError("SCAD constant a must exceed 2");
  if (lambda == 0.0) return 0.0;
  if (u_abs < lambda) return lambda;
  return std::max(a * lambda - u_abs, 0.0) / (a - 1.0);
}

static double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::VectorXd penalized_score(const ScoreVector& u, const NuisanceParams& omega,
                                double lambda_eta, double lambda_mu, double a) {
  const Eigen::Index d = omega.dim();
  if (u.u_beta.size() != d) throw DataError("score and parameter dimensions differ");
  Eigen::VectorXd out = u.stacked();
  const Eigen::VectorXd w = omega.omega();
  for (Eigen::Index j = 0; j < 4 * d; ++j) {
    if (is_intercept(j, d)) continue;
    const double lambda = j < 2 * d ? lambda_eta : lambda_mu;
    out[j] += scad_q(std::abs(w[j]), lambda, a) * sgn(w[j]);
  }
  return out;
}

Eigen::VectorXd lqa_diag(const Eigen::VectorXd& omega_block, double lambda, double a,
                         double epsilon) {
  Eigen::VectorXd out(omega_block.size());
  for (Eigen::Index j = 0; j < omega_block.size(); ++j) {
    const double u = std::abs(omega_block[j]);
    out[j] = scad_q(u, lambda, a) / (epsilon + u);
  }
  return out;
}

Eigen::VectorXd lqa_diag_blocks(const Eigen::VectorXd& v, Eigen::Index d, double lambda,
                                double a, double epsilon) {
  Eigen::VectorXd out = lqa_diag(v, lambda, a, epsilon);
  for (Eigen::Index j = 0; j < v.size(); j += d) out[j] = 0.0;
  return out;
}

Eigen::VectorXd hard_threshold_blocks(Eigen::VectorXd v, Eigen::Index d, double zero_threshold) {
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!is_intercept(j, d) && std::abs(v[j]) < zero_threshold) v[j] = 0.0;
  }
  return v;
}

NuisanceParams hard_threshold(const NuisanceParams& omega, double zero_threshold) {
  NuisanceParams out = omega;
  const Eigen::Index d = omega.dim();
  out.alpha = hard_threshold_blocks(omega.alpha, d, zero_threshold);
  out.tau = hard_threshold_blocks(omega.tau, d, zero_threshold);
  out.beta = hard_threshold_blocks(omega.beta, d, zero_threshold);
  out.gamma = hard_threshold_blocks(omega.gamma, d, zero_threshold);
  return out;
}

}  // namespace drcombine
