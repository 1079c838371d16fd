#pragma once

// SCAD derivative, the penalized score and its local quadratic approximation.
// Index 0 of every d-length block is an intercept: it is never penalized and
// never thresholded.

#include "drcombine/core_types.hpp"
#include "drcombine/estimating_system.hpp"

#include <Eigen/Dense>

namespace drcombine {

// q_lambda(|u|) for the SCAD penalty.
double scad_q(double u_abs, double lambda, double a);

// U-bar + (q(|eta|) sgn(eta); q(|mu|) sgn(mu)), positionally paired with the
// score blocks (u_beta, u_gamma | alpha, tau) and (u_alpha, u_tau | beta, gamma).
Eigen::VectorXd penalized_score(const ScoreVector& u, const NuisanceParams& omega,
                                double lambda_eta, double lambda_mu, double a);

// entry_j = q(|w_j|) / (epsilon + |w_j|); no intercept exemption.
Eigen::VectorXd lqa_diag(const Eigen::VectorXd& omega_block, double lambda, double a,
                         double epsilon);
// As lqa_diag, with zeros at the intercept of every block of length d.
Eigen::VectorXd lqa_diag_blocks(const Eigen::VectorXd& v, Eigen::Index d, double lambda,
                                double a, double epsilon);

NuisanceParams hard_threshold(const NuisanceParams& omega, double zero_threshold);
Eigen::VectorXd hard_threshold_blocks(Eigen::VectorXd v, Eigen::Index d, double zero_threshold);

inline bool is_intercept(Eigen::Index j, Eigen::Index d) { return j % d == 0; }

}  // namespace drcombine
