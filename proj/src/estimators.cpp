#include "drcombine/estimators.hpp"

#include "drcombine/estimating_system.hpp"
#include "drcombine/log.hpp"
#include "drcombine/penalty.hpp"
#include "drcombine/working_models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace drcombine {

namespace {

Eigen::VectorXd seg(const Eigen::VectorXd& v, RowRange r) { return v.segment(r.begin, r.size()); }

struct Pred {
  Eigen::VectorXd v, dv;
};

Pred predict_rows(const Design& dz, RowRange r, const Eigen::VectorXd& coef, Link link,
                  double clip) {
  Pred p;
  const Eigen::VectorXd lp = dz.x.middleRows(r.begin, r.size()) * coef;
  eval_link(link, lp, clip, p.v, p.dv);
  return p;
}

PenaltyConfig tight(const PenaltyConfig& c) {
  PenaltyConfig t = c;
  t.tol_inner = 1e-10;
  t.max_inner = 100;
  return t;
}

Eigen::VectorXd fit_root(const BlockSystem& sys, const Eigen::VectorXd& start,
                         const PenaltyConfig& config, const char* what) {
  InnerStats st;
  Eigen::VectorXd v = solve_block(sys, start, 0.0, tight(config), &st);
  if (st.residual > 1e-6) logger().warn("{} fit stopped with residual {:.2e}", what, st.residual);
  return v;
}

// Intercept at the link of the weighted mean target, slopes zero.
Eigen::VectorXd glm_start(const Design& dz, const Eigen::VectorXd& w, const Eigen::VectorXd& target,
                          Link link, double clip) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dz.dim());
  const double sw = w.sum();
  double m = sw > 0.0 ? w.dot(target) / sw : (link == Link::logit ? 0.5 : 0.0);
  v[0] = link == Link::logit ? logit(std::clamp(m, clip, 1.0 - clip)) : m;
  return v;
}

void require_sample_a_ty(const Design& design) {
  if (design.count_a() == 0) throw DataError("probability-sample estimator needs sample A");
  for (Eigen::Index i = 0; i < design.n_a; ++i) {
    if (!design.has_ty[static_cast<std::size_t>(i)]) {
      throw DataError("probability-sample-only estimators need treatment and outcome in sample A");
    }
  }
}

// GLM score rows w (g - target) x written into columns [col, col + d) and the
// unscaled Jacobian sum w g' x x' added to jac.
void glm_rows(const Design& dz, RowRange r, const Eigen::VectorXd& w, const Eigen::VectorXd& target,
              Link link, const Eigen::VectorXd& coef, Eigen::Index col, Eigen::MatrixXd& scores,
              Eigen::MatrixXd& jac) {
  const Eigen::Index d = dz.dim();
  const Pred p = predict_rows(dz, r, coef, link, 0.0);
  const Eigen::VectorXd c = (w.array() * (p.v - target).array()).matrix();
  scores.block(r.begin, col, r.size(), d) = c.asDiagonal() * dz.x.middleRows(r.begin, r.size());
  const Eigen::VectorXd wd = (w.array() * p.dv.array()).matrix();
  jac.block(col, col, d, d) += kernels::weighted_gram(dz.x, r, wd);
}

void calibration_rows(const Design& dz, const Eigen::VectorXd& alpha, double clip, Eigen::Index col,
                      Eigen::MatrixXd& scores, Eigen::MatrixXd& jac) {
  const Eigen::Index d = dz.dim();
  const RowRange ra = dz.range_a();
  const RowRange rb = dz.range_b();
  scores.block(ra.begin, col, ra.size(), d) =
      seg(dz.wa, ra).asDiagonal() * dz.x.middleRows(ra.begin, ra.size());
  const Pred pb = predict_rows(dz, rb, alpha, Link::logit, clip);
  const Eigen::VectorXd inv = (-1.0 / pb.v.array()).matrix();
  scores.block(rb.begin, col, rb.size(), d) = inv.asDiagonal() * dz.x.middleRows(rb.begin, rb.size());
  const Eigen::VectorXd wj = (pb.dv.array() / pb.v.array().square()).matrix();
  jac.block(col, col, d, d) += kernels::weighted_gram(dz.x, rb, wj);
}

enum class Family { outcome, weighting, doubly_robust };

Family family_of(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ipw_probonly:
    case EstimatorKind::ipw_nonprob:
      return Family::weighting;
    case EstimatorKind::dr_probonly:
    case EstimatorKind::dr_nonprob:
      return Family::doubly_robust;
    default:
      return Family::outcome;
  }
}

// Single-sample estimators on rows r of dz (sample A for the probability-only
// kinds, all of the B-only design for the non-probability kinds). unit_w are
// the weights multiplying h (d_A or 1) and total the population divisor.
AteReport single_sample(const Design& dz, RowRange r, const Eigen::VectorXd& unit_w, double total,
                        Family family, const ModelSpec& spec, const PenaltyConfig& config) {
  const Eigen::Index d = dz.dim();
  const double clip = config.prob_clip;
  const Eigen::VectorXd t = seg(dz.t, r);
  const Eigen::VectorXd y = seg(dz.y, r);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(r.size());
  const Eigen::VectorXd ctl = (1.0 - t.array()).matrix();
  const double scale = 1.0 / std::max<double>(1.0, static_cast<double>(r.size()));
  const Link out_link = spec.outcome_link;
  const bool with_outcome = family != Family::weighting;
  const bool with_treatment = family != Family::outcome;

  Eigen::VectorXd beta, gamma, tau;
  if (with_outcome) {
    beta = fit_root(glm_system(dz, r, t, y, out_link, scale), glm_start(dz, t, y, out_link, clip),
                    config, "treated outcome");
    gamma = fit_root(glm_system(dz, r, ctl, y, out_link, scale),
                     glm_start(dz, ctl, y, out_link, clip), config, "control outcome");
  }
  if (with_treatment) {
    tau = fit_root(glm_system(dz, r, ones, t, Link::logit, scale),
                   glm_start(dz, ones, t, Link::logit, clip), config, "treatment");
  }

  PsiSystem psi;
  psi.total_units = total;
  const Eigen::Index p = (with_outcome ? 2 * d : 0) + (with_treatment ? d : 0);
  psi.omega.resize(p);
  if (with_outcome) psi.omega << beta, gamma, (with_treatment ? tau : Eigen::VectorXd());
  else psi.omega << tau;
  const Design* dzp = &dz;
  psi.h = [dzp, r, unit_w, t, y, family, out_link, clip, d](const Eigen::VectorXd& w) {
    const Design& dd = *dzp;
    Eigen::ArrayXd h = Eigen::ArrayXd::Zero(r.size());
    Eigen::ArrayXd g1 = Eigen::ArrayXd::Zero(r.size()), g0 = g1;
    if (family != Family::weighting) {
      g1 = predict_rows(dd, r, w.segment(0, d), out_link, 0.0).v.array();
      g0 = predict_rows(dd, r, w.segment(d, d), out_link, 0.0).v.array();
    }
    if (family == Family::outcome) {
      h = g1 - g0;
    } else {
      const Eigen::Index off = family == Family::weighting ? 0 : 2 * d;
      const Eigen::ArrayXd pt = predict_rows(dd, r, w.segment(off, d), Link::logit, clip).v.array();
      const Eigen::ArrayXd ta = t.array(), ya = y.array();
      h = (g1 + ta / pt * (ya - g1)) - (g0 + (1.0 - ta) / (1.0 - pt) * (ya - g0));
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dd.rows());
    full.segment(r.begin, r.size()) = (unit_w.array() * h).matrix();
    return full;
  };
  psi.scores = Eigen::MatrixXd::Zero(dz.rows(), p);
  psi.jacobian = Eigen::MatrixXd::Zero(p, p);
  if (with_outcome) {
    glm_rows(dz, r, t, y, out_link, beta, 0, psi.scores, psi.jacobian);
    glm_rows(dz, r, ctl, y, out_link, gamma, d, psi.scores, psi.jacobian);
  }
  if (with_treatment) {
    glm_rows(dz, r, ones, t, Link::logit, tau, with_outcome ? 2 * d : 0, psi.scores, psi.jacobian);
  }
  psi.theta = kernels::sum(psi.h(psi.omega)) / total;

  AteReport report;
  report.theta_hat = psi.theta;
  report.se = sandwich_unpenalized(psi).se;
  report.variance_method = "sandwich";
  report.n_used = static_cast<std::size_t>(r.size());
  report.pop_size = total;
  set_wald_ci(report);
  return report;
}

}  // namespace

double estimate_or(const Design& design, const NuisanceParams& omega, const ModelSpec& spec) {
  if (design.count_a() == 0) throw DataError("OR estimator needs sample A");
  const RowRange ra = design.range_a();
  const Pred g1 = predict_rows(design, ra, omega.beta, spec.outcome_link, 0.0);
  const Pred g0 = predict_rows(design, ra, omega.gamma, spec.outcome_link, 0.0);
  const Eigen::VectorXd terms = (seg(design.wa, ra).array() * (g1.v - g0.v).array()).matrix();
  return kernels::sum(terms) / design.pop_size;
}

double estimate_ipw(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                    double clip) {
  if (design.count_b() == 0) throw DataError("IPW estimator needs sample B");
  ModelSpec s = spec;
  s.outcome_link = Link::identity;
  NuisanceParams zeroed = omega;
  zeroed.beta.setZero();
  zeroed.gamma.setZero();
  const ModelValues mv = evaluate_models(design, zeroed, s, clip);
  Eigen::VectorXd h = phi_rows(design, mv, omega.parameterization == Parameterization::joint);
  h.head(design.n_a).setZero();
  return kernels::sum(h) / design.pop_size;
}

double estimate_dr(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                   double clip) {
  const ModelValues mv = evaluate_models(design, omega, spec, clip);
  return kernels::sum(phi_rows(design, mv, omega.parameterization == Parameterization::joint)) /
         design.pop_size;
}

double estimate_dr_joint(const Design& design, const NuisanceParams& params, const ModelSpec& spec,
                         double clip) {
  NuisanceParams p = params;
  p.parameterization = Parameterization::joint;
  return estimate_dr(design, p, spec, clip);
}

double mean_difference(const Design& design) {
  const RowRange r1 = design.range_b1();
  const RowRange r0 = design.range_b0();
  if (r1.size() == 0 || r0.size() == 0) throw DataError("mean difference needs both arms in sample B");
  return kernels::sum(seg(design.y, r1)) / static_cast<double>(r1.size()) -
         kernels::sum(seg(design.y, r0)) / static_cast<double>(r0.size());
}

BlockSystem glm_system(const Design& design, RowRange range, Eigen::VectorXd weights,
                       Eigen::VectorXd target, Link link, double scale) {
  BlockSystem sys;
  sys.block_dim = design.dim();
  sys.eval = [&design, range, w = std::move(weights), tg = std::move(target), link, scale](
                 const Eigen::VectorXd& v, Eigen::VectorXd* r, Eigen::MatrixXd* jac) {
    const Pred p = predict_rows(design, range, v, link, 0.0);
    if (r) {
      const Eigen::VectorXd c = (w.array() * (p.v - tg).array()).matrix();
      *r = kernels::column_sums(design.x, range, c) * scale;
    }
    if (jac) {
      const Eigen::VectorXd c = (w.array() * p.dv.array()).matrix();
      *jac = kernels::weighted_gram(design.x, range, c) * scale;
    }
  };
  return sys;
}

BlockSystem calibration_system(const Design& design, double clip, double scale) {
  BlockSystem sys;
  sys.block_dim = design.dim();
  const RowRange ra = design.range_a();
  const Eigen::VectorXd target =
      kernels::column_sums(design.x, ra, seg(design.wa, ra)) * scale;
  sys.eval = [&design, target, clip, scale](const Eigen::VectorXd& v, Eigen::VectorXd* r,
                                            Eigen::MatrixXd* jac) {
    const RowRange rb = design.range_b();
    const Pred pb = predict_rows(design, rb, v, Link::logit, clip);
    if (r) {
      const Eigen::VectorXd inv = pb.v.cwiseInverse();
      *r = target - kernels::column_sums(design.x, rb, inv) * scale;
    }
    if (jac) {
      const Eigen::VectorXd c = (pb.dv.array() / pb.v.array().square()).matrix();
      *jac = kernels::weighted_gram(design.x, rb, c) * scale;
    }
  };
  return sys;
}

BlockSystem stack_systems(BlockSystem first, BlockSystem second) {
  if (first.block_dim != second.block_dim) throw DataError("stacked systems differ in block size");
  BlockSystem sys;
  sys.block_dim = first.block_dim;
  const Eigen::Index d = first.block_dim;
  // Each part is one block of length d.
  sys.eval = [a = std::move(first), b = std::move(second), d](
                 const Eigen::VectorXd& v, Eigen::VectorXd* r, Eigen::MatrixXd* jac) {
    Eigen::VectorXd ra, rb;
    Eigen::MatrixXd ja, jb;
    a.eval(v.head(d), r ? &ra : nullptr, jac ? &ja : nullptr);
    b.eval(v.tail(v.size() - d), r ? &rb : nullptr, jac ? &jb : nullptr);
    if (r) {
      r->resize(v.size());
      *r << ra, rb;
    }
    if (jac) {
      *jac = Eigen::MatrixXd::Zero(v.size(), v.size());
      jac->topLeftCorner(d, d) = ja;
      jac->bottomRightCorner(jb.rows(), jb.cols()) = jb;
    }
  };
  return sys;
}

RosterSession::RosterSession(const Design& design, ModelSpec spec, RosterOptions options)
    : design_(design), spec_(spec), options_(std::move(options)) {
  spec_.parameterization = Parameterization::conditional;
  spec_.check(design.outcome_kind);
  options_.penalty.check();
}

const FitResult& RosterSession::dr_fit() {
  if (!dr_fit_) {
    dr_fit_ = fit_penalized_cv(design_, spec_, options_.penalty, options_.seed, options_.grid_eta,
                               options_.grid_mu);
  }
  return *dr_fit_;
}

AteReport RosterSession::run(EstimatorKind kind) {
  AteReport report;
  switch (kind) {
    case EstimatorKind::or_combined:
      report = run_or_combined();
      break;
    case EstimatorKind::ipw_combined:
      report = run_ipw_combined();
      break;
    case EstimatorKind::dr_combined:
      report = run_dr_combined();
      break;
    case EstimatorKind::dr_joint:
      report = run_dr_joint();
      break;
    case EstimatorKind::or_probonly:
    case EstimatorKind::ipw_probonly:
    case EstimatorKind::dr_probonly:
      report = run_probonly(kind);
      break;
    case EstimatorKind::or_nonprob:
    case EstimatorKind::ipw_nonprob:
    case EstimatorKind::dr_nonprob:
    case EstimatorKind::mean_diff_nonprob:
    case EstimatorKind::naive_nonprob:
      report = run_nonprob(kind);
      break;
    case EstimatorKind::oracle_dr:
      report = run_oracle();
      break;
  }
  report.estimator = kind;
  return report;
}

namespace {

BlockSystem arm_system(const Design& s, bool treated, Link link) {
  const RowRange r = treated ? s.range_b1() : s.range_b0();
  return glm_system(s, r, Eigen::VectorXd::Ones(r.size()), s.y.segment(r.begin, r.size()), link,
                    1.0 / s.pop_size);
}

BlockSystem or_system(const Design& s, Link link) {
  return stack_systems(arm_system(s, true, link), arm_system(s, false, link));
}

// Penalized block fit with its own five-fold CV.
Eigen::VectorXd cv_fit(const std::function<BlockSystem(const Design&)>& make, const Design& design,
                       const Eigen::VectorXd& start, const PenaltyConfig& config, std::uint64_t seed,
                       double* chosen) {
  const BlockSystem full = make(design);
  const std::vector<int> folds = assign_folds(design, 5, seed);
  const std::vector<double> grid = default_grid(lambda_max(full, start));
  const CvBlock cv = cv_block(make, design, folds, 5, grid, start, config);
  *chosen = cv.chosen;
  Eigen::VectorXd v = solve_block_from_root(full, start, cv.chosen, config);
  return hard_threshold_blocks(std::move(v), design.dim(), config.zero_threshold);
}

}  // namespace

AteReport RosterSession::run_or_combined() {
  const Design& ds = design_;
  const Eigen::Index d = ds.dim();
  const PenaltyConfig& cfg = options_.penalty;
  const Link link = spec_.outcome_link;
  const NuisanceParams init = initial_params(ds, spec_, cfg.prob_clip);
  const Eigen::VectorXd start = init.mu();
  double lambda = 0.0;
  Eigen::VectorXd v;
  if (options_.penalized) {
    v = cv_fit([link](const Design& s) { return or_system(s, link); }, ds, start, cfg,
               options_.seed, &lambda);
  } else {
    v = fit_root(or_system(ds, link), start, cfg, "outcome");
  }
  NuisanceParams omega = NuisanceParams::zeros(d);
  omega.set_mu(v);

  PsiSystem psi;
  psi.total_units = ds.pop_size;
  psi.omega = v;
  const Design* dp = &ds;
  psi.h = [dp, link, d](const Eigen::VectorXd& w) {
    const RowRange ra = dp->range_a();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dp->rows());
    const Pred g1 = predict_rows(*dp, ra, w.head(d), link, 0.0);
    const Pred g0 = predict_rows(*dp, ra, w.tail(d), link, 0.0);
    full.segment(ra.begin, ra.size()) =
        (dp->wa.segment(ra.begin, ra.size()).array() * (g1.v - g0.v).array()).matrix();
    return full;
  };
  psi.scores = Eigen::MatrixXd::Zero(ds.rows(), 2 * d);
  psi.jacobian = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  const RowRange r1 = ds.range_b1(), r0 = ds.range_b0();
  glm_rows(ds, r1, Eigen::VectorXd::Ones(r1.size()), seg(ds.y, r1), link, v.head(d), 0, psi.scores,
           psi.jacobian);
  glm_rows(ds, r0, Eigen::VectorXd::Ones(r0.size()), seg(ds.y, r0), link, v.tail(d), d, psi.scores,
           psi.jacobian);
  psi.theta = estimate_or(ds, omega, spec_);

  AteReport report;
  report.penalized = options_.penalized;
  report.theta_hat = psi.theta;
  if (options_.penalized) {
    report.se = sandwich_penalized(psi, lqa_diag_blocks(v, d, lambda, cfg.a, cfg.epsilon));
    report.variance_method = "penalized sandwich";
  } else {
    report.se = sandwich_unpenalized(psi).se;
    report.variance_method = "sandwich";
  }
  FitResult fit;
  fit.omega_hat = omega;
  fit.lambda_mu = lambda;
  fit.support = support_of(omega);
  fit.converged = true;
  report.fit = fit;
  report.n_used = static_cast<std::size_t>(ds.count_a() + ds.count_b());
  report.pop_size = ds.pop_size;
  set_wald_ci(report);
  return report;
}

AteReport RosterSession::run_ipw_combined() {
  const Design& ds = design_;
  const Eigen::Index d = ds.dim();
  const PenaltyConfig& cfg = options_.penalty;
  const double clip = cfg.prob_clip;
  ModelSpec spec_id = spec_;
  spec_id.outcome_link = Link::identity;
  const Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(2 * d);
  NuisanceParams omega = NuisanceParams::zeros(d);
  double lambda = 0.0;

  PsiSystem psi;
  psi.total_units = ds.pop_size;
  const Design* dp = &ds;
  psi.h = [dp, d, clip](const Eigen::VectorXd& w) {
    const RowRange r1 = dp->range_b1(), r0 = dp->range_b0();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dp->rows());
    const Pred pb1 = predict_rows(*dp, r1, w.head(d), Link::logit, clip);
    const Pred pt1 = predict_rows(*dp, r1, w.tail(d), Link::logit, clip);
    const Pred pb0 = predict_rows(*dp, r0, w.head(d), Link::logit, clip);
    const Pred pt0 = predict_rows(*dp, r0, w.tail(d), Link::logit, clip);
    full.segment(r1.begin, r1.size()) =
        (dp->y.segment(r1.begin, r1.size()).array() / (pb1.v.array() * pt1.v.array())).matrix();
    full.segment(r0.begin, r0.size()) = (-dp->y.segment(r0.begin, r0.size()).array() /
                                         (pb0.v.array() * (1.0 - pt0.v.array())))
                                            .matrix();
    return full;
  };

  if (options_.penalized) {
    Eigen::VectorXd eta;
    if (spec_.outcome_link == Link::identity) {
      // The calibration system is the DR eta system itself; reuse its fit.
      const FitResult& fit = dr_fit();
      eta = fit.omega_hat.eta();
      lambda = fit.lambda_eta;
    } else {
      const Eigen::VectorXd start = initial_params(ds, spec_id, clip).eta();
      eta = cv_fit([&](const Design& s) { return eta_system(s, mu0, spec_id, clip); }, ds, start,
                   cfg, options_.seed, &lambda);
    }
    omega.set_eta(eta);
    psi.omega = eta;
    // Per-unit terms of the calibration equations (outcome derivatives = 1).
    const RowRange ra = ds.range_a(), r1 = ds.range_b1(), r0 = ds.range_b0();
    psi.scores = Eigen::MatrixXd::Zero(ds.rows(), 2 * d);
    const auto xa = ds.x.middleRows(ra.begin, ra.size());
    psi.scores.block(ra.begin, 0, ra.size(), d) = seg(ds.wa, ra).asDiagonal() * xa;
    psi.scores.block(ra.begin, d, ra.size(), d) = -(seg(ds.wa, ra).asDiagonal() * xa);
    const Pred pb1 = predict_rows(ds, r1, omega.alpha, Link::logit, clip);
    const Pred pt1 = predict_rows(ds, r1, omega.tau, Link::logit, clip);
    const Pred pb0 = predict_rows(ds, r0, omega.alpha, Link::logit, clip);
    const Pred pt0 = predict_rows(ds, r0, omega.tau, Link::logit, clip);
    const Eigen::VectorXd c1 = (-1.0 / (pb1.v.array() * pt1.v.array())).matrix();
    const Eigen::VectorXd c0 = (1.0 / (pb0.v.array() * (1.0 - pt0.v.array()))).matrix();
    psi.scores.block(r1.begin, 0, r1.size(), d) = c1.asDiagonal() * ds.x.middleRows(r1.begin, r1.size());
    psi.scores.block(r0.begin, d, r0.size(), d) = c0.asDiagonal() * ds.x.middleRows(r0.begin, r0.size());
    psi.jacobian = jacobian_eta(ds, eta, mu0, spec_id, clip).m * ds.pop_size;
  } else {
    const Eigen::VectorXd alpha =
        fit_root(calibration_system(ds, clip, 1.0 / ds.pop_size),
                 initial_params(ds, spec_id, clip).alpha, cfg, "selection");
    const RowRange rb = ds.range_b();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(rb.size());
    const Eigen::VectorXd tb = seg(ds.t, rb);
    const Eigen::VectorXd tau =
        fit_root(glm_system(ds, rb, ones, tb, Link::logit, 1.0 / ds.pop_size),
                 glm_start(ds, ones, tb, Link::logit, clip), cfg, "treatment");
    omega.alpha = alpha;
    omega.tau = tau;
    psi.omega = omega.eta();
    psi.scores = Eigen::MatrixXd::Zero(ds.rows(), 2 * d);
    psi.jacobian = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    calibration_rows(ds, alpha, clip, 0, psi.scores, psi.jacobian);
    glm_rows(ds, rb, ones, tb, Link::logit, tau, d, psi.scores, psi.jacobian);
  }
  psi.theta = estimate_ipw(ds, omega, spec_id, clip);

  AteReport report;
  report.penalized = options_.penalized;
  report.theta_hat = psi.theta;
  if (options_.penalized) {
    report.se = sandwich_penalized(psi, lqa_diag_blocks(psi.omega, d, lambda, cfg.a, cfg.epsilon));
    report.variance_method = "penalized sandwich";
  } else {
    report.se = sandwich_unpenalized(psi).se;
    report.variance_method = "sandwich";
  }
  FitResult fit;
  fit.omega_hat = omega;
  fit.lambda_eta = lambda;
  fit.support = support_of(omega);
  fit.converged = true;
  report.fit = fit;
  report.n_used = static_cast<std::size_t>(ds.count_a() + ds.count_b());
  report.pop_size = ds.pop_size;
  set_wald_ci(report);
  return report;
}

AteReport RosterSession::run_dr_combined() {
  const Design& ds = design_;
  const PenaltyConfig& cfg = options_.penalty;
  const double clip = cfg.prob_clip;
  if (options_.penalized) {
    const FitResult& fit = dr_fit();
    const double theta = estimate_dr(ds, fit.omega_hat, spec_, clip);
    AteReport report = dr_se(ds, fit.omega_hat, theta, spec_, clip);
    report.penalized = true;
    report.fit = fit;
    return report;
  }
  // Conventional fits: calibration for selection, logistic treatment and
  // arm-wise outcome regressions in sample B.
  const Eigen::Index d = ds.dim();
  const Link link = spec_.outcome_link;
  const NuisanceParams init = initial_params(ds, spec_, clip);
  const RowRange rb = ds.range_b(), r1 = ds.range_b1(), r0 = ds.range_b0();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(rb.size());
  const Eigen::VectorXd tb = seg(ds.t, rb);
  NuisanceParams omega = NuisanceParams::zeros(d);
  omega.alpha = fit_root(calibration_system(ds, clip, 1.0 / ds.pop_size), init.alpha, cfg, "selection");
  omega.tau = fit_root(glm_system(ds, rb, ones, tb, Link::logit, 1.0 / ds.pop_size),
                       glm_start(ds, ones, tb, Link::logit, clip), cfg, "treatment");
  const Eigen::VectorXd mu = fit_root(or_system(ds, link), init.mu(), cfg, "outcome");
  omega.set_mu(mu);

  PsiSystem psi;
  psi.total_units = ds.pop_size;
  psi.omega = omega.omega();
  const Design* dp = &ds;
  const ModelSpec spec = spec_;
  psi.h = [dp, spec, clip](const Eigen::VectorXd& w) {
    const Eigen::Index dd = w.size() / 4;
    const NuisanceParams p = NuisanceParams::from_blocks(w.head(2 * dd), w.tail(2 * dd));
    return phi_rows(*dp, evaluate_models(*dp, p, spec, clip), false);
  };
  psi.scores = Eigen::MatrixXd::Zero(ds.rows(), 4 * d);
  psi.jacobian = Eigen::MatrixXd::Zero(4 * d, 4 * d);
  calibration_rows(ds, omega.alpha, clip, 0, psi.scores, psi.jacobian);
  glm_rows(ds, rb, ones, tb, Link::logit, omega.tau, d, psi.scores, psi.jacobian);
  glm_rows(ds, r1, Eigen::VectorXd::Ones(r1.size()), seg(ds.y, r1), link, omega.beta, 2 * d,
           psi.scores, psi.jacobian);
  glm_rows(ds, r0, Eigen::VectorXd::Ones(r0.size()), seg(ds.y, r0), link, omega.gamma, 3 * d,
           psi.scores, psi.jacobian);
  psi.theta = estimate_dr(ds, omega, spec_, clip);

  AteReport report;
  report.penalized = false;
  report.theta_hat = psi.theta;
  report.se = sandwich_unpenalized(psi).se;
  report.variance_method = "sandwich";
  FitResult fit;
  fit.omega_hat = omega;
  fit.support = support_of(omega);
  fit.converged = true;
  report.fit = fit;
  report.n_used = static_cast<std::size_t>(ds.count_a() + ds.count_b());
  report.pop_size = ds.pop_size;
  set_wald_ci(report);
  return report;
}

AteReport RosterSession::run_dr_joint() {
  ModelSpec spec_j = spec_;
  spec_j.parameterization = Parameterization::joint;
  const PenaltyConfig& cfg = options_.penalty;
  FitResult fit = options_.penalized
                      ? fit_penalized_cv(design_, spec_j, cfg, options_.seed, options_.grid_eta,
                                         options_.grid_mu)
                      : solve_penalized(design_, spec_j, 0.0, 0.0, cfg,
                                        initial_params(design_, spec_j, cfg.prob_clip));
  const double theta = estimate_dr_joint(design_, fit.omega_hat, spec_j, cfg.prob_clip);
  AteReport report = dr_se(design_, fit.omega_hat, theta, spec_j, cfg.prob_clip);
  report.penalized = options_.penalized;
  report.fit = std::move(fit);
  return report;
}

AteReport RosterSession::run_probonly(EstimatorKind kind) {
  require_sample_a_ty(design_);
  const RowRange ra = design_.range_a();
  AteReport report = single_sample(design_, ra, seg(design_.wa, ra), design_.pop_size,
                                   family_of(kind), spec_, options_.penalty);
  report.pop_size = design_.pop_size;
  return report;
}

AteReport RosterSession::run_nonprob(EstimatorKind kind) {
  if (design_.count_b() == 0) throw DataError("non-probability estimators need sample B");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = design_.range_b().begin; i < design_.range_b().end; ++i) rows.push_back(i);
  Design db = design_.select_rows(rows, static_cast<double>(rows.size()));
  if (kind == EstimatorKind::mean_diff_nonprob) db = db.select_columns({0});
  const RowRange all{0, db.rows()};
  return single_sample(db, all, Eigen::VectorXd::Ones(db.rows()), static_cast<double>(db.rows()),
                       family_of(kind), spec_, options_.penalty);
}

AteReport RosterSession::run_oracle() {
  if (options_.oracle_columns.empty()) {
    throw ConfigError("oracle estimator needs the true-support columns");
  }
  const Design dz = design_.select_columns(options_.oracle_columns);
  const PenaltyConfig& cfg = options_.penalty;
  FitResult fit = solve_penalized(dz, spec_, 0.0, 0.0, cfg, initial_params(dz, spec_, cfg.prob_clip));
  const double theta = estimate_dr(dz, fit.omega_hat, spec_, cfg.prob_clip);
  AteReport report = dr_se(dz, fit.omega_hat, theta, spec_, cfg.prob_clip);
  report.fit = std::move(fit);
  return report;
}

AteReport estimate_roster(const CombinedDataset& dataset, EstimatorKind kind, const ModelSpec& spec,
                          const RosterOptions& options) {
  const Design design = Design::from_dataset(dataset);
  RosterSession session(design, spec, options);
  return session.run(kind);
}

}  // namespace drcombine
