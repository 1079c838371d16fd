#pragma once

// Alternating Newton-Raphson for the penalized bias-reduced system,
// five-fold cross-validation of (lambda_eta, lambda_mu) and a full-Jacobian
// Newton solve of the unpenalized system.

#include "drcombine/core_types.hpp"
#include "drcombine/design.hpp"
#include "drcombine/estimating_system.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace drcombine {

// A square system r(v) = 0 whose Jacobian has a positive-definite-leaning
// diagonal, so that adding a SCAD term shrinks rather than inflates. Index 0
// of every block of length block_dim is an unpenalized intercept.
struct BlockSystem {
  std::function<void(const Eigen::VectorXd& v, Eigen::VectorXd* r, Eigen::MatrixXd* jac)> eval;
  Eigen::Index block_dim = 0;

  Eigen::VectorXd residual(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r;
    eval(v, &r, nullptr);
    return r;
  }
};

// The eta system is (u_beta, u_gamma) in (alpha, tau) with mu frozen; the mu
// system is (u_alpha, u_tau) in (beta, gamma) with eta frozen. In the joint
// parameterization the second equation of each pair changes sign.
BlockSystem eta_system(const Design& design, const Eigen::VectorXd& mu_fixed, const ModelSpec& spec,
                       double clip);
BlockSystem mu_system(const Design& design, const Eigen::VectorXd& eta_fixed, const ModelSpec& spec,
                      double clip);

struct InnerStats {
  int steps = 0;
  double residual = 0.0;  // infinity norm of the penalized equations at exit
  bool converged = false;
};

// One damped LQA Newton step; returns current when no halving decreases the
// residual norm.
Eigen::VectorXd newton_block_update(const BlockSystem& sys, const Eigen::VectorXd& current,
                                    double lambda, const PenaltyConfig& config);

// Solves r(v) + q(|v|) sgn(v) = 0 over the slopes, the fixed-point system of
// the LQA iteration. Plain Newton at lambda = 0; otherwise an active-set
// Newton iteration that holds slopes at zero while |r_j| <= lambda and steps
// the others with the LQA linearization replaced by the exact SCAD term.
Eigen::VectorXd solve_block(const BlockSystem& sys, Eigen::VectorXd start, double lambda,
                            const PenaltyConfig& config, InnerStats* stats = nullptr);

// Unpenalized root first, then solve_block from it.
Eigen::VectorXd solve_block_from_root(const BlockSystem& sys, const Eigen::VectorXd& start,
                                      double lambda, const PenaltyConfig& config,
                                      InnerStats* stats = nullptr,
                                      const Eigen::VectorXd* root = nullptr);

struct CvResult {
  std::vector<double> grid_eta;
  std::vector<double> grid_mu;
  std::vector<double> loss_eta;  // mean held-out loss per grid point
  std::vector<double> loss_mu;
  double lambda_eta = 0.0;
  double lambda_mu = 0.0;
  int folds = 5;
};

struct FitResult {
  NuisanceParams omega_hat;
  // Nonzero slope columns of alpha, tau, beta, gamma (delta1, delta0, ...).
  std::array<std::vector<Eigen::Index>, 4> support;
  double lambda_eta = 0.0;
  double lambda_mu = 0.0;
  int iterations = 0;
  double final_xi = 0.0;
  bool converged = false;
  double residual = 0.0;  // zero-crossing residual of the penalized system
  std::vector<std::pair<int, double>> trace;
  std::optional<CvResult> cv;
};

// Intercept-only starting point: arm means in B through the outcome link,
// logit(n_B / N) for selection and logit of the treated share for treatment.
NuisanceParams initial_params(const Design& design, const ModelSpec& spec, double clip);

FitResult solve_penalized(const Design& design, const ModelSpec& spec, double lambda_eta,
                          double lambda_mu, const PenaltyConfig& config,
                          const NuisanceParams& init);

// Newton on the full 4d system with a central-difference Jacobian; used as
// the reference for the penalized solver at lambda = 0.
NuisanceParams solve_unpenalized(const Design& design, const ModelSpec& spec,
                                 const PenaltyConfig& config, const NuisanceParams& init,
                                 double tol = 1e-12, int max_steps = 100);

std::vector<double> default_grid(double lambda_max, int points = 20);
// Infinity norm of the penalized (non-intercept) residual entries at v.
double lambda_max(const BlockSystem& sys, const Eigen::VectorXd& v);

// Seeded fold labels, stratified on (sample A, sample B, treatment).
std::vector<int> assign_folds(const Design& design, int folds, std::uint64_t seed);
// Training / held-out subsets with N scaled by the retained A-weight share.
Design fold_subset(const Design& design, const std::vector<int>& fold_of, int fold, bool held_out);

struct CvBlock {
  std::vector<double> grid;
  std::vector<double> loss;
  double chosen = 0.0;
};

// Cross-validates one block. make_system builds the system on a subset;
// the loss is the squared residual norm on the held-out fold.
CvBlock cv_block(const std::function<BlockSystem(const Design&)>& make_system,
                 const Design& design, const std::vector<int>& fold_of, int folds,
                 const std::vector<double>& grid, const Eigen::VectorXd& start,
                 const PenaltyConfig& config);

CvResult cross_validate(const Design& design, const ModelSpec& spec,
                        const std::vector<double>& grid_eta, const std::vector<double>& grid_mu,
                        const PenaltyConfig& config, std::uint64_t seed, int folds = 5);

// cross_validate (default grids when the given ones are empty) followed by
// solve_penalized at the chosen pair.
FitResult fit_penalized_cv(const Design& design, const ModelSpec& spec,
                           const PenaltyConfig& config, std::uint64_t seed,
                           std::vector<double> grid_eta = {}, std::vector<double> grid_mu = {});

// Dense solve with the ridge jitter ladder {0, 1e-8, 1e-6, 1e-4}.
Eigen::VectorXd solve_jittered(const Eigen::MatrixXd& m, const Eigen::VectorXd& r,
                               const char* what = "singular LQA system");

std::array<std::vector<Eigen::Index>, 4> support_of(const NuisanceParams& omega);

}  // namespace drcombine
