#pragma once

// Random small datasets and finite-difference helpers shared by the tests
// and the acceptance runner.

#include "drcombine/core_types.hpp"
#include "drcombine/design.hpp"
#include "drcombine/estimating_system.hpp"
#include "drcombine/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace drcombine::testing {

// n units over d columns (intercept included): roughly 30% sample A with
// weights in [1, 5], 50% sample B with both arms present, the rest neither.
inline CombinedDataset random_dataset(std::uint64_t seed, int n = 50, int d = 4,
                                      OutcomeKind kind = OutcomeKind::continuous) {
  Philox g(seed, 7);
  std::vector<UnitRecord> recs;
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    UnitRecord r;
    r.x.push_back(1.0);
    for (int j = 1; j < d; ++j) r.x.push_back(g.normal());
    const double u = g.uniform();
    // first two units fix one B unit per arm
    if (i < 2 || (u >= 0.3 && u < 0.8)) {
      r.in_b = true;
      r.t = i < 2 ? 1 - i : (g.uniform() < 0.5 ? 1 : 0);
    } else if (u < 0.3) {
      r.in_a = true;
      r.weight_a = 1.0 + 4.0 * g.uniform();
      wsum += *r.weight_a;
      if (g.uniform() < 0.5) r.t = g.uniform() < 0.5 ? 1 : 0;
    }
    if (r.t) {
      const double x1 = d > 1 ? r.x[1] : 0.0;
      const double v = 0.5 + x1 - 0.5 * r.x[d - 1] + g.normal();
      r.y = kind == OutcomeKind::binary ? (g.uniform() < 1.0 / (1.0 + std::exp(-v)) ? 1.0 : 0.0)
                                        : v;
    }
    recs.push_back(std::move(r));
  }
  const double pop = std::max(wsum, static_cast<double>(n)) + 10.0;
  return CombinedDataset(std::move(recs), pop, kind);
}

inline NuisanceParams random_params(std::uint64_t seed, int d,
                                    Parameterization p = Parameterization::conditional,
                                    double scale = 0.3) {
  Philox g(seed, 11);
  NuisanceParams w = NuisanceParams::zeros(d, p);
  for (Eigen::VectorXd* b : {&w.alpha, &w.tau, &w.beta, &w.gamma}) {
    for (int j = 0; j < d; ++j) (*b)[j] = scale * g.normal();
  }
  if (p == Parameterization::joint) {
    // keep w1 + w0 comfortably below one
    w.alpha[0] -= 1.0;
    w.tau[0] -= 1.0;
  }
  return w;
}

// Central differences of a vector function, step h.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& v, double h = 1e-5) {
  const Eigen::VectorXd f0 = f(v);
  Eigen::MatrixXd jac(f0.size(), v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    Eigen::VectorXd vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    jac.col(j) = (f(vp) - f(vm)) / (2.0 * h);
  }
  return jac;
}

// Gradient of mean phi over (alpha, tau, beta, gamma), stacked.
inline Eigen::VectorXd fd_mean_phi_gradient(const Design& design, const NuisanceParams& omega,
                                            const ModelSpec& spec, double h = 1e-5) {
  auto f = [&](const Eigen::VectorXd& w) {
    const Eigen::Index d = omega.dim();
    NuisanceParams p = NuisanceParams::from_blocks(w.head(2 * d), w.tail(2 * d),
                                                   omega.parameterization);
    const ModelValues mv = evaluate_models(design, p, spec, 1e-6);
    Eigen::VectorXd out(1);
    out[0] = phi_rows(design, mv, p.parameterization == Parameterization::joint).sum() /
             design.pop_size;
    return out;
  };
  return fd_jacobian(f, omega.omega(), h).row(0).transpose();
}

// max |a - b| / max(|b|_inf, floor)
inline double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-3) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Stacked score in the (alpha, tau, beta, gamma) order of the coefficients.
inline Eigen::VectorXd score_by_coefficient(const ScoreVector& u) {
  Eigen::VectorXd v(4 * u.u_alpha.size());
  v << u.u_alpha, u.u_tau, u.u_beta, u.u_gamma;
  return v;
}

}  // namespace drcombine::testing
