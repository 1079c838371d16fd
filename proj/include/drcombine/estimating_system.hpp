#pragma once

// The DR influence-type function phi, the bias-reduced score U-bar (the
// gradient of mean phi with respect to the nuisance parameters) and the
// block Jacobians used by the alternating Newton solver.

#include "drcombine/core_types.hpp"
#include "drcombine/design.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>

namespace drcombine {

struct ScoreVector {
  Eigen::VectorXd u_beta;
  Eigen::VectorXd u_gamma;
  Eigen::VectorXd u_alpha;  // u_delta1 in the joint parameterization
  Eigen::VectorXd u_tau;    // u_delta0 in the joint parameterization

  Eigen::VectorXd stacked() const;
  Eigen::VectorXd eta_part() const;  // (u_beta, u_gamma)
  Eigen::VectorXd mu_part() const;   // (u_alpha, u_tau)
};

struct BlockJacobian {
  Eigen::MatrixXd m;
  std::array<std::string, 2> row_blocks;
  std::array<std::string, 2> col_blocks;
};

// Working-model values and inverse-link derivatives at every design row.
// In the joint parameterization pb/dpb hold w1 and pt/dpt hold w0.
struct ModelValues {
  Eigen::VectorXd pb, dpb, pt, dpt, g1, dg1, g0, dg0;
};

ModelValues evaluate_models(const Design& design, const NuisanceParams& omega,
                            const ModelSpec& spec, double clip);

double phi(const UnitRecord& record, double theta, const NuisanceParams& omega,
           const ModelSpec& spec, double clip = 1e-6);

// Per-row phi at theta = 0, so theta_DR = N^-1 times their sum.
Eigen::VectorXd phi_rows(const Design& design, const ModelValues& mv, bool joint);

ScoreVector score_u(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                    double clip = 1e-6);
ScoreVector score_u(const CombinedDataset& dataset, const NuisanceParams& omega,
                    const ModelSpec& spec, double clip = 1e-6);
ScoreVector score_u_joint(const Design& design, const NuisanceParams& params,
                          const ModelSpec& spec, double clip = 1e-6);

Eigen::VectorXd partial_o(const Design& design, const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& mu_fixed, const ModelSpec& spec,
                          double clip = 1e-6);
Eigen::VectorXd partial_q(const Design& design, const Eigen::VectorXd& eta_fixed,
                          const Eigen::VectorXd& mu, const ModelSpec& spec, double clip = 1e-6);

// d partial_o / d eta with the outcome derivative factors at the frozen mu.
BlockJacobian jacobian_eta(const Design& design, const Eigen::VectorXd& eta,
                           const Eigen::VectorXd& mu_fixed, const ModelSpec& spec,
                           double clip = 1e-6);
// d partial_q / d mu at the frozen eta.
BlockJacobian jacobian_mu(const Design& design, const Eigen::VectorXd& eta_fixed,
                          const Eigen::VectorXd& mu, const ModelSpec& spec, double clip = 1e-6);

}  // namespace drcombine
