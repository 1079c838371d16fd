#include "drcombine/solver.hpp"

#include "drcombine/log.hpp"
#include "drcombine/penalty.hpp"
#include "drcombine/rng.hpp"
#include "drcombine/working_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

namespace drcombine {

namespace {

bool joint_of(const ModelSpec& spec) { return spec.parameterization == Parameterization::joint; }

// Flips the second half of a residual / Jacobian (joint orientation).
void orient(Eigen::VectorXd* r, Eigen::MatrixXd* jac, Eigen::Index d) {
  if (r) r->tail(d) *= -1.0;
  if (jac) jac->bottomRows(d) *= -1.0;
}

struct Step {
  Eigen::VectorXd next;
  double residual_inf = 0.0;
  bool accepted = false;
};

Eigen::VectorXd sigma_of(const Eigen::VectorXd& v, Eigen::Index d, double lambda,
                         const PenaltyConfig& config) {
  if (lambda == 0.0) return Eigen::VectorXd::Zero(v.size());
  return lqa_diag_blocks(v, d, lambda, config.a, config.epsilon);
}

// Newton steps are capped at this infinity norm. Saturating link functions
// let the merit keep falling along runaway directions otherwise.
constexpr double kMaxStep = 4.0;

Eigen::VectorXd capped(Eigen::VectorXd s) {
  const double m = s.lpNorm<Eigen::Infinity>();
  if (m > kMaxStep) s *= kMaxStep / m;
  return s;
}

// Slopes below this magnitude are read as zeros in the merit function.
constexpr double kNearZero = 1e-3;

// Error vector of the LQA system r + Sigma v. Near-zero slopes contribute
// their subgradient violation max(0, |r_j| - lambda) instead, and frozen
// coordinates contribute nothing.
Eigen::VectorXd lqa_error(const Eigen::VectorXd& r, const Eigen::VectorXd& v, Eigen::Index d,
                          double lambda, const PenaltyConfig& config,
                          const std::vector<char>* frozen) {
  Eigen::VectorXd e = r + sigma_of(v, d, lambda, config).cwiseProduct(v);
  if (lambda == 0.0) return e;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (frozen && (*frozen)[static_cast<std::size_t>(j)]) {
      e[j] = 0.0;
    } else if (!is_intercept(j, d) && std::abs(v[j]) < kNearZero) {
      e[j] = std::max(0.0, std::abs(r[j]) - lambda);
    }
  }
  return e;
}

// One LQA Newton step s = (J + Sigma)^-1 (r + Sigma v) with step halving on
// the norm of lqa_error. Coordinates flagged in frozen are held at zero. A
// non-null jac_in is used in place of the Jacobian at v.
Step lqa_step(const BlockSystem& sys, const Eigen::VectorXd& v, double lambda,
              const PenaltyConfig& config, const std::vector<char>* frozen = nullptr,
              const Eigen::MatrixXd* jac_in = nullptr) {
  const Eigen::Index d = sys.block_dim;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (jac_in) {
    sys.eval(v, &r, nullptr);
    jac = *jac_in;
  } else {
    sys.eval(v, &r, &jac);
  }
  const Eigen::VectorXd sigma = sigma_of(v, d, lambda, config);
  Eigen::VectorXd rhs = r + sigma.cwiseProduct(v);
  const Eigen::VectorXd err = lqa_error(r, v, d, lambda, config, frozen);
  Step out;
  out.residual_inf = err.lpNorm<Eigen::Infinity>();
  out.next = v;
  if (!rhs.allFinite()) return out;
  jac.diagonal() += sigma;
  if (frozen) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (!(*frozen)[static_cast<std::size_t>(j)]) continue;
      rhs[j] = 0.0;
      jac.row(j).setZero();
      jac.col(j).setZero();
      jac(j, j) = 1.0;
    }
  }
  const Eigen::VectorXd s = capped(solve_jittered(jac, rhs));
  const double base = err.norm();
  double scale = 1.0;
  for (int h = 0; h <= 10; ++h) {
    Eigen::VectorXd cand = v - scale * s;
    const Eigen::VectorXd rc = sys.residual(cand);
    const Eigen::VectorXd ec = lqa_error(rc, cand, d, lambda, config, frozen);
    if (ec.allFinite() && ec.norm() <= base) {
      out.next = std::move(cand);
      out.accepted = true;
      return out;
    }
    scale *= 0.5;
  }
  return out;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Residual of the exact (non-LQA) penalized system with zero coordinates
// read as zero-crossings: a zero slope is a solution when |r_j| <= q(0).
double zero_crossing_residual(const Eigen::VectorXd& r, const Eigen::VectorXd& v, Eigen::Index d,
                              double lambda, double a) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    double e;
    if (is_intercept(j, d) || lambda == 0.0) {
      e = std::abs(r[j]);
    } else if (v[j] != 0.0) {
      e = std::abs(r[j] + scad_q(std::abs(v[j]), lambda, a) * sgn(v[j]));
    } else {
      e = std::max(0.0, std::abs(r[j]) - lambda);
    }
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace

Eigen::VectorXd solve_jittered(const Eigen::MatrixXd& m, const Eigen::VectorXd& r,
                               const char* what) {
  static constexpr double kLadder[] = {0.0, 1e-8, 1e-6, 1e-4};
  for (double jitter : kLadder) {
    Eigen::MatrixXd mj = m;
    mj.diagonal().array() += jitter;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(mj);
    if (!(lu.rcond() > 1e-14)) continue;
    Eigen::VectorXd s = lu.solve(r);
    if (s.allFinite()) return s;
  }
  throw NumericalError(what);
}

BlockSystem eta_system(const Design& design, const Eigen::VectorXd& mu_fixed,
                       const ModelSpec& spec, double clip) {
  BlockSystem sys;
  const Eigen::Index d = design.dim();
  sys.block_dim = d;
  const bool joint = joint_of(spec);
  sys.eval = [&design, mu_fixed, spec, clip, joint, d](const Eigen::VectorXd& v,
                                                       Eigen::VectorXd* r, Eigen::MatrixXd* jac) {
    if (r) *r = partial_o(design, v, mu_fixed, spec, clip);
    if (jac) *jac = jacobian_eta(design, v, mu_fixed, spec, clip).m;
    if (joint) orient(r, jac, d);
  };
  return sys;
}

BlockSystem mu_system(const Design& design, const Eigen::VectorXd& eta_fixed,
                      const ModelSpec& spec, double clip) {
  BlockSystem sys;
  const Eigen::Index d = design.dim();
  sys.block_dim = d;
  const bool joint = joint_of(spec);
  if (spec.outcome_link == Link::identity) {
    // Affine in mu: cache the constant Jacobian and the intercept term.
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2 * d);
    auto jac0 = std::make_shared<Eigen::MatrixXd>(jacobian_mu(design, eta_fixed, zero, spec, clip).m);
    auto r0 = std::make_shared<Eigen::VectorXd>(partial_q(design, eta_fixed, zero, spec, clip));
    if (joint) orient(r0.get(), jac0.get(), d);
    sys.eval = [jac0, r0](const Eigen::VectorXd& v, Eigen::VectorXd* r, Eigen::MatrixXd* jac) {
      if (r) *r = *r0 + *jac0 * v;
      if (jac) *jac = *jac0;
    };
    return sys;
  }
  sys.eval = [&design, eta_fixed, spec, clip, joint, d](const Eigen::VectorXd& v,
                                                        Eigen::VectorXd* r, Eigen::MatrixXd* jac) {
    if (r) *r = partial_q(design, eta_fixed, v, spec, clip);
    if (jac) *jac = jacobian_mu(design, eta_fixed, v, spec, clip).m;
    if (joint) orient(r, jac, d);
  };
  return sys;
}

Eigen::VectorXd newton_block_update(const BlockSystem& sys, const Eigen::VectorXd& current,
                                    double lambda, const PenaltyConfig& config) {
  return lqa_step(sys, current, lambda, config).next;
}

namespace {

// d q(u) / du for the SCAD derivative q.
double scad_q_slope(double u, double lambda, double a) {
  return (u > lambda && u < a * lambda) ? -1.0 / (a - 1.0) : 0.0;
}

// Newton iteration at lambda = 0.
Eigen::VectorXd solve_plain(const BlockSystem& sys, Eigen::VectorXd v, const PenaltyConfig& config,
                            InnerStats& st) {
  for (int k = 0; k < config.max_inner; ++k) {
    Step step = lqa_step(sys, v, 0.0, config);
    ++st.steps;
    st.residual = step.residual_inf;
    if (step.residual_inf < config.tol_inner) {
      st.converged = true;
      // Take the pending Newton step as a polish.
      if (step.accepted) v = std::move(step.next);
      break;
    }
    if (!step.accepted) break;
    const double moved = (step.next - v).lpNorm<Eigen::Infinity>();
    v = std::move(step.next);
    if (moved < config.tol_inner) {
      st.converged = true;
      break;
    }
  }
  if (!st.converged) {
    st.residual = sys.residual(v).lpNorm<Eigen::Infinity>();
    st.converged = st.residual < config.tol_inner;
  }
  return v;
}

}  // namespace

Eigen::VectorXd solve_block(const BlockSystem& sys, Eigen::VectorXd v, double lambda,
                            const PenaltyConfig& config, InnerStats* stats) {
  InnerStats st;
  if (lambda == 0.0) {
    v = solve_plain(sys, std::move(v), config, st);
    if (stats) *stats = st;
    return v;
  }
  // Same fixed points as the LQA iteration r + Sigma(v) v = 0, reached by an
  // active-set Newton iteration. LQA moves a slope inside (0, lambda) only
  // geometrically, in either direction; here a slope is either held at zero
  // (while zero satisfies |r_j| <= lambda) or follows projected Newton steps
  // on r_j + q(|v_j|) sgn(v_j).
  using Mask = std::vector<char>;
  const Eigen::Index n = v.size();
  const Eigen::Index d = sys.block_dim;
  const double a = config.a;
  const auto at = [](Eigen::Index j) { return static_cast<std::size_t>(j); };
  const auto slope = [&](Eigen::Index j) { return !is_intercept(j, d); };
  Mask zero(at(n), 0);
  // Slopes released from zero this often stay there (breaks cycles).
  constexpr int kMaxReleases = 3;
  std::vector<int> releases(at(n), 0);
  constexpr int kRefresh = 4;
  Eigen::MatrixXd jac;
  int age = kRefresh;

  // Re-reads the active set from the residual at v; true when it changed.
  // Active slopes near zero that satisfy |r_j| <= lambda join the zero set.
  // Of the zeroed slopes violating that condition only the worst is released
  // per call, just off zero in the descent direction; the next joint Newton
  // step sizes it. With correlated columns, releasing many at once overshoots.
  const auto classify = [&](const Eigen::VectorXd& r) {
    bool changed = false;
    Eigen::Index worst = -1;
    double excess = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!slope(j)) continue;
      if (zero[at(j)]) {
        const double e = std::abs(r[j]) - lambda;
        if (e > excess && releases[at(j)] < kMaxReleases) {
          excess = e;
          worst = j;
        }
      } else if (std::abs(v[j]) < kNearZero && std::abs(r[j]) <= lambda) {
        zero[at(j)] = 1;
        v[j] = 0.0;
        changed = true;
      }
    }
    if (worst >= 0) {
      zero[at(worst)] = 0;
      ++releases[at(worst)];
      v[worst] = -sgn(r[worst]) * kNearZero;
      changed = true;
    }
    return changed;
  };
  // Equation values; rows of zeroed slopes hold their subgradient violation.
  const auto error_of = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& x, const Mask& z) {
    Eigen::VectorXd e = r;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!slope(j)) continue;
      if (z[at(j)]) {
        e[j] = std::max(0.0, std::abs(r[j]) - lambda);
      } else {
        e[j] += scad_q(std::abs(x[j]), lambda, a) * sgn(x[j]);
      }
    }
    return e;
  };

  Eigen::VectorXd r = sys.residual(v);
  for (int k = 0; k < config.max_inner; ++k) {
    if (classify(r)) r = sys.residual(v);
    const Eigen::VectorXd err = error_of(r, v, zero);
    st.residual = err.lpNorm<Eigen::Infinity>();
    if (!err.allFinite()) break;
    if (st.residual < config.tol_inner) {
      st.converged = true;
      break;
    }
    bool accepted = false;
    bool fresh = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (age >= kRefresh || attempt > 0) {
        if (fresh) break;
        sys.eval(v, nullptr, &jac);
        age = 0;
        fresh = true;
      }
      Eigen::MatrixXd h = jac;
      Eigen::VectorXd rhs = err;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!slope(j)) continue;
        if (zero[at(j)]) {
          rhs[j] = 0.0;
          h.row(j).setZero();
          h.col(j).setZero();
          h(j, j) = 1.0;
        } else {
          // SCAD's negative slope, capped so the diagonal stays positive.
          h(j, j) += std::max(scad_q_slope(std::abs(v[j]), lambda, a), -0.5 * std::abs(h(j, j)));
        }
      }
      const Eigen::VectorXd s = capped(solve_jittered(h, rhs));
      // Projected step: slopes that cross zero stop there. Halving on the
      // merit of the projected point.
      const double base = err.norm();
      double scale = 1.0;
      for (int half = 0; half <= 10 && !accepted; ++half, scale *= 0.5) {
        Eigen::VectorXd cand = v - scale * s;
        Mask z = zero;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (slope(j) && !z[at(j)] && cand[j] * v[j] <= 0.0) {
            cand[j] = 0.0;
            z[at(j)] = 1;
          }
        }
        Eigen::VectorXd rc = sys.residual(cand);
        const Eigen::VectorXd ec = error_of(rc, cand, z);
        if (ec.allFinite() && ec.norm() < base) {
          v = std::move(cand);
          zero = std::move(z);
          r = std::move(rc);
          accepted = true;
          // Heavy damping suggests a stale Jacobian.
          if (scale < 0.25 && !fresh) age = kRefresh;
        }
      }
      if (accepted || !fresh) continue;
      // No decrease: try zeroing only the slope whose Newton step would
      // cross zero first.
      double reach = std::numeric_limits<double>::infinity();
      Eigen::Index hit = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!slope(j) || zero[at(j)] || s[j] == 0.0) continue;
        const double t = v[j] / s[j];
        if (t > 0.0 && t < reach) {
          reach = t;
          hit = j;
        }
      }
      if (hit >= 0) {
        Eigen::VectorXd cand = v;
        cand[hit] = 0.0;
        Mask z = zero;
        z[at(hit)] = 1;
        Eigen::VectorXd rc = sys.residual(cand);
        if (error_of(rc, cand, z).norm() < base) {
          v = std::move(cand);
          zero = std::move(z);
          r = std::move(rc);
          accepted = true;
        }
      }
    }
    if (age < kRefresh) ++age;
    ++st.steps;
    if (logger().should_log(spdlog::level::trace)) {
      logger().trace("inner lambda {:.4g} step {} err {:.3e} accepted {}", lambda, k,
                     st.residual, accepted);
    }
    if (!accepted) break;
  }
  if (!st.converged) {
    classify(r);
    st.residual = error_of(sys.residual(v), v, zero).lpNorm<Eigen::Infinity>();
    st.converged = st.residual < config.tol_inner;
  }
  if (stats) *stats = st;
  return v;
}

Eigen::VectorXd solve_block_from_root(const BlockSystem& sys, const Eigen::VectorXd& start,
                                      double lambda, const PenaltyConfig& config,
                                      InnerStats* stats, const Eigen::VectorXd* root) {
  Eigen::VectorXd base = root ? *root : solve_block(sys, start, 0.0, config, stats);
  if (lambda == 0.0) return base;
  return solve_block(sys, std::move(base), lambda, config, stats);
}

NuisanceParams initial_params(const Design& design, const ModelSpec& spec, double clip) {
  const Eigen::Index d = design.dim();
  if (design.count_b() == 0) throw DataError("sample B is empty");
  NuisanceParams p = NuisanceParams::zeros(d, spec.parameterization);
  const auto clamp = [clip](double v) { return std::clamp(v, clip, 1.0 - clip); };
  const auto arm_mean = [&](RowRange r) {
    if (r.size() == 0) return spec.outcome_link == Link::logit ? 0.5 : 0.0;
    return design.y.segment(r.begin, r.size()).mean();
  };
  const auto through_link = [&](double m) {
    return spec.outcome_link == Link::logit ? logit(clamp(m)) : m;
  };
  p.beta[0] = through_link(arm_mean(design.range_b1()));
  p.gamma[0] = through_link(arm_mean(design.range_b0()));
  const double n_b = static_cast<double>(design.count_b());
  const double n_b1 = static_cast<double>(design.count_b1());
  const double n_b0 = static_cast<double>(design.count_b0());
  const double pop = design.pop_size > 0.0 ? design.pop_size : n_b;
  if (joint_of(spec)) {
    p.alpha[0] = logit(clamp(n_b1 / pop));
    p.tau[0] = logit(clamp(n_b0 / pop));
  } else {
    p.alpha[0] = logit(clamp(n_b / pop));
    p.tau[0] = logit(clamp(n_b1 / n_b));
  }
  return p;
}

std::array<std::vector<Eigen::Index>, 4> support_of(const NuisanceParams& omega) {
  std::array<std::vector<Eigen::Index>, 4> out;
  const Eigen::VectorXd* blocks[] = {&omega.alpha, &omega.tau, &omega.beta, &omega.gamma};
  for (std::size_t b = 0; b < 4; ++b) {
    for (Eigen::Index j = 1; j < blocks[b]->size(); ++j) {
      if ((*blocks[b])[j] != 0.0) out[b].push_back(j);
    }
  }
  return out;
}

FitResult solve_penalized(const Design& design, const ModelSpec& spec, double lambda_eta,
                          double lambda_mu, const PenaltyConfig& config,
                          const NuisanceParams& init) {
  config.check();
  const double clip = config.prob_clip;
  const Eigen::Index d = design.dim();
  FitResult fit;
  fit.lambda_eta = lambda_eta;
  fit.lambda_mu = lambda_mu;
  Eigen::VectorXd eta = init.eta();
  Eigen::VectorXd mu = init.mu();
  InnerStats se, sm;

  if (spec.outcome_link == Link::identity) {
    // Eta's system does not involve mu, so one pass is exact.
    eta = solve_block_from_root(eta_system(design, mu, spec, clip), eta, lambda_eta, config, &se);
    mu = solve_block_from_root(mu_system(design, eta, spec, clip), mu, lambda_mu, config, &sm);
    fit.iterations = 1;
    fit.final_xi = 0.0;
    fit.trace.emplace_back(1, 0.0);
    fit.converged = se.converged && sm.converged;
  } else {
    for (int k = 1; k <= config.max_iter; ++k) {
      Eigen::VectorXd eta_next =
          solve_block_from_root(eta_system(design, mu, spec, clip), eta, lambda_eta, config, &se);
      Eigen::VectorXd mu_next =
          solve_block_from_root(mu_system(design, eta_next, spec, clip), mu, lambda_mu, config, &sm);
      const double xi = std::max((eta_next - eta).norm(), (mu_next - mu).norm());
      eta = std::move(eta_next);
      mu = std::move(mu_next);
      fit.iterations = k;
      fit.final_xi = xi;
      fit.trace.emplace_back(k, xi);
      logger().debug("outer iteration {} xi = {:.3e}", k, xi);
      if (xi < config.tol_xi) {
        fit.converged = true;
        break;
      }
    }
  }

  eta = hard_threshold_blocks(eta, d, config.zero_threshold);
  mu = hard_threshold_blocks(mu, d, config.zero_threshold);
  fit.omega_hat = NuisanceParams::from_blocks(eta, mu, spec.parameterization);
  fit.support = support_of(fit.omega_hat);
  const Eigen::VectorXd r_eta = eta_system(design, mu, spec, clip).residual(eta);
  const Eigen::VectorXd r_mu = mu_system(design, eta, spec, clip).residual(mu);
  fit.residual = std::max(zero_crossing_residual(r_eta, eta, d, lambda_eta, config.a),
                          zero_crossing_residual(r_mu, mu, d, lambda_mu, config.a));
  if (!fit.converged) {
    logger().warn("penalized solver did not converge (xi = {:.2e}, residual = {:.2e})",
                  fit.final_xi, fit.residual);
  }
  return fit;
}

NuisanceParams solve_unpenalized(const Design& design, const ModelSpec& spec,
                                 const PenaltyConfig& config, const NuisanceParams& init,
                                 double tol, int max_steps) {
  const double clip = config.prob_clip;
  const Eigen::Index d = design.dim();
  const auto residual = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd eta = w.head(2 * d);
    const Eigen::VectorXd mu = w.tail(2 * d);
    Eigen::VectorXd r(4 * d);
    r << eta_system(design, mu, spec, clip).residual(eta),
        mu_system(design, eta, spec, clip).residual(mu);
    return r;
  };
  Eigen::VectorXd w = init.omega();
  Eigen::VectorXd r = residual(w);
  for (int step = 0; step < max_steps && r.lpNorm<Eigen::Infinity>() >= tol; ++step) {
    Eigen::MatrixXd jac(4 * d, 4 * d);
    for (Eigen::Index j = 0; j < 4 * d; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[j]));
      Eigen::VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      jac.col(j) = (residual(wp) - residual(wm)) / (2.0 * h);
    }
    const Eigen::VectorXd s = capped(solve_jittered(jac, r, "singular unpenalized system"));
    double scale = 1.0;
    bool moved = false;
    for (int h = 0; h <= 10; ++h) {
      const Eigen::VectorXd cand = w - scale * s;
      const Eigen::VectorXd rc = residual(cand);
      if (rc.allFinite() && rc.norm() <= r.norm()) {
        w = cand;
        r = rc;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  return NuisanceParams::from_blocks(w.head(2 * d), w.tail(2 * d), spec.parameterization);
}

std::vector<double> default_grid(double lambda_max, int points) {
  if (!(lambda_max > 0.0) || points < 1) return {0.0};
  if (points == 1) return {lambda_max};
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = std::log(lambda_max / 1000.0);
  const double hi = std::log(lambda_max);
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (points - 1));
  }
  grid.front() = lambda_max / 1000.0;
  grid.back() = lambda_max;
  return grid;
}

double lambda_max(const BlockSystem& sys, const Eigen::VectorXd& v) {
  const Eigen::VectorXd r = sys.residual(v);
  double m = 0.0;
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    if (!is_intercept(j, sys.block_dim)) m = std::max(m, std::abs(r[j]));
  }
  return m;
}

std::vector<int> assign_folds(const Design& design, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  std::map<int, std::vector<Eigen::Index>> strata;
  const RowRange b1 = design.range_b1();
  const RowRange b0 = design.range_b0();
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    int key;
    if (i < design.n_a) {
      key = design.has_ty[static_cast<std::size_t>(i)] ? 1 + static_cast<int>(design.t[i]) : 0;
    } else if (i >= b1.begin && i < b1.end) {
      key = 4;
    } else if (i >= b0.begin && i < b0.end) {
      key = 3;
    } else {
      key = 5;
    }
    strata[key].push_back(i);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(design.rows()), 0);
  for (auto& [key, rows] : strata) {
    Philox rng(seed, static_cast<std::uint64_t>(key));
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    for (std::size_t pos = 0; pos < rows.size(); ++pos) {
      fold_of[static_cast<std::size_t>(rows[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    }
  }
  return fold_of;
}

Design fold_subset(const Design& design, const std::vector<int>& fold_of, int fold,
                   bool held_out) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    if ((fold_of[static_cast<std::size_t>(i)] == fold) == held_out) rows.push_back(i);
  }
  const double total_w = kernels::sum(design.wa);
  double share;
  if (total_w > 0.0) {
    CompensatedSum s;
    for (Eigen::Index i : rows) s.add(design.wa[i]);
    share = s.value() / total_w;
  } else {
    share = static_cast<double>(rows.size()) / static_cast<double>(design.rows());
  }
  return design.select_rows(rows, design.pop_size * share);
}

CvBlock cv_block(const std::function<BlockSystem(const Design&)>& make_system,
                 const Design& design, const std::vector<int>& fold_of, int folds,
                 const std::vector<double>& grid, const Eigen::VectorXd& start,
                 const PenaltyConfig& config) {
  if (grid.empty()) throw ConfigError("empty lambda grid");
  CvBlock out;
  out.grid = grid;
  out.loss.assign(grid.size(), 0.0);
  const Eigen::Index d = design.dim();
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  for (int k = 0; k < folds; ++k) {
    const Design train = fold_subset(design, fold_of, k, false);
    const Design test = fold_subset(design, fold_of, k, true);
    if (train.count_b() == 0 || test.count_b() == 0) {
      throw DataError("degenerate fold; reduce folds or enlarge data");
    }
    const BlockSystem sys_train = make_system(train);
    const BlockSystem sys_test = make_system(test);
    const Eigen::VectorXd root = solve_block(sys_train, start, 0.0, config);
    // Path warm start: each lambda starts from the solution at the next
    // smaller one, so coordinates zeroed earlier stay zero.
    Eigen::VectorXd prev = root;
    for (std::size_t g : order) {
      double loss;
      try {
        Eigen::VectorXd v = grid[g] == 0.0 ? root : solve_block(sys_train, prev, grid[g], config);
        prev = v;
        v = hard_threshold_blocks(std::move(v), d, config.zero_threshold);
        loss = sys_test.residual(v).squaredNorm();
        if (!std::isfinite(loss)) loss = std::numeric_limits<double>::infinity();
      } catch (const NumericalError&) {
        loss = std::numeric_limits<double>::infinity();
      }
      out.loss[g] += loss / folds;
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const bool larger = grid[g] >= grid[best];
    if (out.loss[g] < out.loss[best] || (out.loss[g] == out.loss[best] && larger)) best = g;
  }
  out.chosen = grid[best];
  return out;
}

CvResult cross_validate(const Design& design, const ModelSpec& spec,
                        const std::vector<double>& grid_eta_in,
                        const std::vector<double>& grid_mu_in, const PenaltyConfig& config,
                        std::uint64_t seed, int folds) {
  config.check();
  const double clip = config.prob_clip;
  const NuisanceParams init = initial_params(design, spec, clip);
  const std::vector<int> fold_of = assign_folds(design, folds, seed);
  const Eigen::VectorXd mu0 = init.mu();

  const BlockSystem full_eta = eta_system(design, mu0, spec, clip);
  std::vector<double> grid_eta =
      grid_eta_in.empty() ? default_grid(lambda_max(full_eta, init.eta())) : grid_eta_in;
  const CvBlock cb_eta = cv_block(
      [&](const Design& s) { return eta_system(s, mu0, spec, clip); }, design, fold_of, folds,
      grid_eta, init.eta(), config);

  const Eigen::VectorXd eta_hat =
      solve_block_from_root(full_eta, init.eta(), cb_eta.chosen, config);
  const BlockSystem full_mu = mu_system(design, eta_hat, spec, clip);
  std::vector<double> grid_mu =
      grid_mu_in.empty() ? default_grid(lambda_max(full_mu, mu0)) : grid_mu_in;
  const CvBlock cb_mu = cv_block(
      [&](const Design& s) { return mu_system(s, eta_hat, spec, clip); }, design, fold_of, folds,
      grid_mu, mu0, config);

  CvResult out;
  out.grid_eta = cb_eta.grid;
  out.loss_eta = cb_eta.loss;
  out.lambda_eta = cb_eta.chosen;
  out.grid_mu = cb_mu.grid;
  out.loss_mu = cb_mu.loss;
  out.lambda_mu = cb_mu.chosen;
  out.folds = folds;
  return out;
}

FitResult fit_penalized_cv(const Design& design, const ModelSpec& spec,
                           const PenaltyConfig& config, std::uint64_t seed,
                           std::vector<double> grid_eta, std::vector<double> grid_mu) {
  CvResult cv = cross_validate(design, spec, grid_eta, grid_mu, config, seed);
  const NuisanceParams init = initial_params(design, spec, config.prob_clip);
  FitResult fit = solve_penalized(design, spec, cv.lambda_eta, cv.lambda_mu, config, init);
  fit.cv = std::move(cv);
  return fit;
}

}  // namespace drcombine
