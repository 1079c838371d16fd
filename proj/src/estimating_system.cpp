#include "drcombine/estimating_system.hpp"

#include "drcombine/working_models.hpp"

namespace drcombine {

namespace {

bool is_joint(const NuisanceParams& omega) {
  return omega.parameterization == Parameterization::joint;
}

Eigen::VectorXd seg(const Eigen::VectorXd& v, RowRange r) { return v.segment(r.begin, r.size()); }

ScoreVector assemble(const Design& design, const ModelValues& mv, bool joint, bool want_eta,
                     bool want_mu) {
  const RowRange ra = design.range_a();
  const RowRange r1 = design.range_b1();
  const RowRange r0 = design.range_b0();
  const double inv_n = design.pop_size > 0.0 ? 1.0 / design.pop_size : 0.0;

  const Eigen::ArrayXd wa = seg(design.wa, ra).array();
  const Eigen::ArrayXd y1 = seg(design.y, r1).array();
  const Eigen::ArrayXd y0 = seg(design.y, r0).array();
  const Eigen::ArrayXd pb1 = seg(mv.pb, r1).array(), pt1 = seg(mv.pt, r1).array();
  const Eigen::ArrayXd pb0 = seg(mv.pb, r0).array(), pt0 = seg(mv.pt, r0).array();
  const Eigen::ArrayXd dpb1 = seg(mv.dpb, r1).array(), dpt1 = seg(mv.dpt, r1).array();
  const Eigen::ArrayXd dpb0 = seg(mv.dpb, r0).array(), dpt0 = seg(mv.dpt, r0).array();

  ScoreVector out;
  if (want_eta) {
    Eigen::VectorXd a_beta = wa * seg(mv.dg1, ra).array();
    Eigen::VectorXd a_gamma = -wa * seg(mv.dg0, ra).array();
    Eigen::VectorXd b1_beta, b0_gamma;
    if (joint) {
      b1_beta = -seg(mv.dg1, r1).array() / pb1;
      b0_gamma = seg(mv.dg0, r0).array() / pt0;
    } else {
      b1_beta = -seg(mv.dg1, r1).array() / (pb1 * pt1);
      b0_gamma = seg(mv.dg0, r0).array() / (pb0 * (1.0 - pt0));
    }
    out.u_beta = (kernels::column_sums(design.x, ra, a_beta) +
                  kernels::column_sums(design.x, r1, b1_beta)) * inv_n;
    out.u_gamma = (kernels::column_sums(design.x, ra, a_gamma) +
                   kernels::column_sums(design.x, r0, b0_gamma)) * inv_n;
  }
  if (want_mu) {
    const Eigen::ArrayXd res1 = y1 - seg(mv.g1, r1).array();
    const Eigen::ArrayXd res0 = y0 - seg(mv.g0, r0).array();
    if (joint) {
      Eigen::VectorXd c1 = -res1 * dpb1 / (pb1 * pb1);
      Eigen::VectorXd c0 = res0 * dpt0 / (pt0 * pt0);
      out.u_alpha = kernels::column_sums(design.x, r1, c1) * inv_n;
      out.u_tau = kernels::column_sums(design.x, r0, c0) * inv_n;
    } else {
      Eigen::VectorXd b1_alpha = -res1 / pt1 * dpb1 / (pb1 * pb1);
      Eigen::VectorXd b0_alpha = res0 / (1.0 - pt0) * dpb0 / (pb0 * pb0);
      Eigen::VectorXd b1_tau = -res1 / (pt1 * pt1) * dpt1 / pb1;
      Eigen::VectorXd b0_tau = -res0 / ((1.0 - pt0) * (1.0 - pt0)) * dpt0 / pb0;
      out.u_alpha = (kernels::column_sums(design.x, r1, b1_alpha) +
                     kernels::column_sums(design.x, r0, b0_alpha)) * inv_n;
      out.u_tau = (kernels::column_sums(design.x, r1, b1_tau) +
                   kernels::column_sums(design.x, r0, b0_tau)) * inv_n;
    }
  }
  return out;
}

// The four weighted Gram blocks shared by both Jacobians.
struct GramBlocks {
  Eigen::MatrixXd ga, gb, gc, gd;
};

GramBlocks gram_blocks(const Design& design, const ModelValues& mv, bool joint) {
  const RowRange r1 = design.range_b1();
  const RowRange r0 = design.range_b0();
  const double inv_n = design.pop_size > 0.0 ? 1.0 / design.pop_size : 0.0;
  const Eigen::ArrayXd pb1 = seg(mv.pb, r1).array(), pt1 = seg(mv.pt, r1).array();
  const Eigen::ArrayXd pb0 = seg(mv.pb, r0).array(), pt0 = seg(mv.pt, r0).array();
  const Eigen::ArrayXd dg1 = seg(mv.dg1, r1).array(), dg0 = seg(mv.dg0, r0).array();
  GramBlocks g;
  if (joint) {
    Eigen::VectorXd w1 = dg1 * seg(mv.dpb, r1).array() / (pb1 * pb1);
    Eigen::VectorXd w0 = dg0 * seg(mv.dpt, r0).array() / (pt0 * pt0);
    g.ga = kernels::weighted_gram(design.x, r1, w1) * inv_n;
    g.gd = kernels::weighted_gram(design.x, r0, w0) * inv_n;
    return g;
  }
  Eigen::VectorXd wa = dg1 * seg(mv.dpb, r1).array() / (pb1 * pb1 * pt1);
  Eigen::VectorXd wb = dg1 * seg(mv.dpt, r1).array() / (pb1 * pt1 * pt1);
  Eigen::VectorXd wc = dg0 * seg(mv.dpb, r0).array() / (pb0 * pb0 * (1.0 - pt0));
  Eigen::VectorXd wd = dg0 * seg(mv.dpt, r0).array() / (pb0 * (1.0 - pt0) * (1.0 - pt0));
  g.ga = kernels::weighted_gram(design.x, r1, wa) * inv_n;
  g.gb = kernels::weighted_gram(design.x, r1, wb) * inv_n;
  g.gc = kernels::weighted_gram(design.x, r0, wc) * inv_n;
  g.gd = kernels::weighted_gram(design.x, r0, wd) * inv_n;
  return g;
}

NuisanceParams pack(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                    const ModelSpec& spec) {
  return NuisanceParams::from_blocks(eta, mu, spec.parameterization);
}

}  // namespace

Eigen::VectorXd ScoreVector::stacked() const {
  Eigen::VectorXd v(u_beta.size() * 4);
  v << u_beta, u_gamma, u_alpha, u_tau;
  return v;
}

Eigen::VectorXd ScoreVector::eta_part() const {
  Eigen::VectorXd v(u_beta.size() * 2);
  v << u_beta, u_gamma;
  return v;
}

Eigen::VectorXd ScoreVector::mu_part() const {
  Eigen::VectorXd v(u_alpha.size() * 2);
  v << u_alpha, u_tau;
  return v;
}

ModelValues evaluate_models(const Design& design, const NuisanceParams& omega,
                            const ModelSpec& spec, double clip) {
  omega.check_dims();
  if (omega.dim() != design.dim()) throw DataError("parameter and design dimensions differ");
  ModelValues mv;
  if (design.rows() == 0) return mv;
  const Eigen::VectorXd lp_b = design.x * omega.alpha;
  const Eigen::VectorXd lp_t = design.x * omega.tau;
  const Eigen::VectorXd lp_1 = design.x * omega.beta;
  const Eigen::VectorXd lp_0 = design.x * omega.gamma;
  const bool joint = is_joint(omega);
  eval_link(joint ? Link::logit : spec.selection_link, lp_b, clip, mv.pb, mv.dpb);
  eval_link(joint ? Link::logit : spec.treatment_link, lp_t, clip, mv.pt, mv.dpt);
  eval_link(spec.outcome_link, lp_1, 0.0, mv.g1, mv.dg1);
  eval_link(spec.outcome_link, lp_0, 0.0, mv.g0, mv.dg0);
  return mv;
}

double phi(const UnitRecord& r, double theta, const NuisanceParams& omega, const ModelSpec& spec,
           double clip) {
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(r.x.data(),
                                                              static_cast<Eigen::Index>(r.x.size()));
  const double g1 = predict(spec, ModelKind::outcome1, omega.beta, x, clip).value;
  const double g0 = predict(spec, ModelKind::outcome0, omega.gamma, x, clip).value;
  double out = -theta;
  if (r.in_a) out += r.weight_a.value_or(0.0) * (g1 - g0);
  if (r.in_b) {
    if (!r.t || !r.y) throw DataError("sample-B record without treatment or outcome");
    double w1, w0;
    if (is_joint(omega)) {
      w1 = predict(spec, ModelKind::joint1, omega.alpha, x, clip).value;
      w0 = predict(spec, ModelKind::joint0, omega.tau, x, clip).value;
    } else {
      const double pb = predict(spec, ModelKind::selection, omega.alpha, x, clip).value;
      const double pt = predict(spec, ModelKind::treatment, omega.tau, x, clip).value;
      w1 = pb * pt;
      w0 = pb * (1.0 - pt);
    }
    if (*r.t == 1) {
      out += (*r.y - g1) / w1;
    } else {
      out -= (*r.y - g0) / w0;
    }
  }
  return out;
}

Eigen::VectorXd phi_rows(const Design& design, const ModelValues& mv, bool joint) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design.rows());
  if (design.rows() == 0) return out;
  const RowRange ra = design.range_a();
  const RowRange r1 = design.range_b1();
  const RowRange r0 = design.range_b0();
  out.segment(ra.begin, ra.size()) =
      seg(design.wa, ra).array() * (seg(mv.g1, ra) - seg(mv.g0, ra)).array();
  const Eigen::ArrayXd w1 = joint ? seg(mv.pb, r1).array()
                                  : (seg(mv.pb, r1).array() * seg(mv.pt, r1).array()).eval();
  const Eigen::ArrayXd w0 = joint ? seg(mv.pt, r0).array()
                                  : (seg(mv.pb, r0).array() * (1.0 - seg(mv.pt, r0).array())).eval();
  out.segment(r1.begin, r1.size()) = (seg(design.y, r1) - seg(mv.g1, r1)).array() / w1;
  out.segment(r0.begin, r0.size()) = -(seg(design.y, r0) - seg(mv.g0, r0)).array() / w0;
  return out;
}

ScoreVector score_u(const Design& design, const NuisanceParams& omega, const ModelSpec& spec,
                    double clip) {
  if (is_joint(omega)) return score_u_joint(design, omega, spec, clip);
  const Eigen::Index d = omega.dim();
  if (design.rows() == 0) {
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
            Eigen::VectorXd::Zero(d)};
  }
  return assemble(design, evaluate_models(design, omega, spec, clip), false, true, true);
}

ScoreVector score_u(const CombinedDataset& dataset, const NuisanceParams& omega,
                    const ModelSpec& spec, double clip) {
  if (dataset.empty()) {
    const Eigen::Index d = omega.dim();
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
            Eigen::VectorXd::Zero(d)};
  }
  return score_u(Design::from_dataset(dataset), omega, spec, clip);
}

ScoreVector score_u_joint(const Design& design, const NuisanceParams& params,
                          const ModelSpec& spec, double clip) {
  const Eigen::Index d = params.dim();
  if (design.rows() == 0) {
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
            Eigen::VectorXd::Zero(d)};
  }
  NuisanceParams p = params;
  p.parameterization = Parameterization::joint;
  return assemble(design, evaluate_models(design, p, spec, clip), true, true, true);
}

Eigen::VectorXd partial_o(const Design& design, const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& mu_fixed, const ModelSpec& spec, double clip) {
  if (design.rows() == 0) return Eigen::VectorXd::Zero(eta.size());
  const NuisanceParams p = pack(eta, mu_fixed, spec);
  return assemble(design, evaluate_models(design, p, spec, clip), is_joint(p), true, false)
      .eta_part();
}

Eigen::VectorXd partial_q(const Design& design, const Eigen::VectorXd& eta_fixed,
                          const Eigen::VectorXd& mu, const ModelSpec& spec, double clip) {
  if (design.rows() == 0) return Eigen::VectorXd::Zero(mu.size());
  const NuisanceParams p = pack(eta_fixed, mu, spec);
  return assemble(design, evaluate_models(design, p, spec, clip), is_joint(p), false, true)
      .mu_part();
}

BlockJacobian jacobian_eta(const Design& design, const Eigen::VectorXd& eta,
                           const Eigen::VectorXd& mu_fixed, const ModelSpec& spec, double clip) {
  const NuisanceParams p = pack(eta, mu_fixed, spec);
  const Eigen::Index d = p.dim();
  BlockJacobian out;
  out.m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  const bool joint = is_joint(p);
  out.row_blocks = {"u_beta", "u_gamma"};
  out.col_blocks = joint ? std::array<std::string, 2>{"delta1", "delta0"}
                         : std::array<std::string, 2>{"alpha", "tau"};
  if (design.count_b() == 0) return out;
  const GramBlocks g = gram_blocks(design, evaluate_models(design, p, spec, clip), joint);
  out.m.topLeftCorner(d, d) = g.ga;
  if (joint) {
    out.m.bottomRightCorner(d, d) = -g.gd;
  } else {
    out.m.topRightCorner(d, d) = g.gb;
    out.m.bottomLeftCorner(d, d) = -g.gc;
    out.m.bottomRightCorner(d, d) = g.gd;
  }
  return out;
}

BlockJacobian jacobian_mu(const Design& design, const Eigen::VectorXd& eta_fixed,
                          const Eigen::VectorXd& mu, const ModelSpec& spec, double clip) {
  const NuisanceParams p = pack(eta_fixed, mu, spec);
  const Eigen::Index d = p.dim();
  BlockJacobian out;
  out.m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  const bool joint = is_joint(p);
  out.row_blocks = joint ? std::array<std::string, 2>{"u_delta1", "u_delta0"}
                         : std::array<std::string, 2>{"u_alpha", "u_tau"};
  out.col_blocks = {"beta", "gamma"};
  if (design.count_b() == 0) return out;
  const GramBlocks g = gram_blocks(design, evaluate_models(design, p, spec, clip), joint);
  out.m.topLeftCorner(d, d) = g.ga;
  if (joint) {
    out.m.bottomRightCorner(d, d) = -g.gd;
  } else {
    out.m.topRightCorner(d, d) = -g.gc;
    out.m.bottomLeftCorner(d, d) = g.gb;
    out.m.bottomRightCorner(d, d) = g.gd;
  }
  return out;
}

}  // namespace drcombine
