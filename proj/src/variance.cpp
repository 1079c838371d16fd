#include "drcombine/variance.hpp"

#include "drcombine/estimating_system.hpp"
#include "drcombine/log.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace drcombine {

namespace {

constexpr std::array<std::pair<EstimatorKind, const char*>, 13> kNames{{
    {EstimatorKind::or_combined, "or_combined"},
    {EstimatorKind::ipw_combined, "ipw_combined"},
    {EstimatorKind::dr_combined, "dr_combined"},
    {EstimatorKind::dr_joint, "dr_joint"},
    {EstimatorKind::or_probonly, "or_probonly"},
    {EstimatorKind::ipw_probonly, "ipw_probonly"},
    {EstimatorKind::dr_probonly, "dr_probonly"},
    {EstimatorKind::or_nonprob, "or_nonprob"},
    {EstimatorKind::ipw_nonprob, "ipw_nonprob"},
    {EstimatorKind::dr_nonprob, "dr_nonprob"},
    {EstimatorKind::mean_diff_nonprob, "mean_diff_nonprob"},
    {EstimatorKind::naive_nonprob, "naive_nonprob"},
    {EstimatorKind::oracle_dr, "oracle_dr"},
}};

Eigen::VectorXd seg(const Eigen::VectorXd& v, RowRange r) { return v.segment(r.begin, r.size()); }

}  // namespace

const char* to_string(EstimatorKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<EstimatorKind> parse_estimator(const std::string& name) {
  for (const auto& [k, n] : kNames) {
    if (name == n) return k;
  }
  return std::nullopt;
}

void set_wald_ci(AteReport& report) {
  report.ci_low = report.theta_hat - 1.96 * report.se;
  report.ci_high = report.theta_hat + 1.96 * report.se;
}

double v1_hat(const Design& design, const NuisanceParams& omega, const ModelSpec& spec) {
  const RowRange ra = design.range_a();
  if (ra.size() == 0) return 0.0;
  const ModelValues mv = evaluate_models(design, omega, spec, 1e-6);
  const Eigen::ArrayXd wa = seg(design.wa, ra).array();
  const Eigen::ArrayXd diff = (seg(mv.g1, ra) - seg(mv.g0, ra)).array();
  const Eigen::VectorXd terms = wa * (wa - 1.0) * diff.square();
  return kernels::sum(terms) / (design.pop_size * design.pop_size);
}

VarianceParts v2_hat(const Design& design, const NuisanceParams& omega, double theta_hat,
                     const ModelSpec& spec, double clip) {
  VarianceParts parts;
  const ModelValues mv = evaluate_models(design, omega, spec, clip);
  const bool joint = omega.parameterization == Parameterization::joint;
  const RowRange ra = design.range_a();
  const RowRange r1 = design.range_b1();
  const RowRange r0 = design.range_b0();
  const double n2 = design.pop_size * design.pop_size;

  const auto centred = [&](RowRange r) -> Eigen::ArrayXd {
    return (seg(mv.g1, r) - seg(mv.g0, r)).array() - theta_hat;
  };
  const Eigen::ArrayXd w1 = joint ? seg(mv.pb, r1).array()
                                  : (seg(mv.pb, r1).array() * seg(mv.pt, r1).array()).eval();
  const Eigen::ArrayXd w0 = joint ? seg(mv.pt, r0).array()
                                  : (seg(mv.pb, r0).array() * (1.0 - seg(mv.pt, r0).array())).eval();
  const Eigen::ArrayXd e1 = (seg(design.y, r1) - seg(mv.g1, r1)).array() / w1;
  const Eigen::ArrayXd e0 = (seg(design.y, r0) - seg(mv.g0, r0)).array() / w0;
  const Eigen::ArrayXd c1 = centred(r1);
  const Eigen::ArrayXd c0 = centred(r0);
  const Eigen::ArrayXd ca = centred(ra);

  parts.s1 = kernels::sum(e1.square().matrix()) / n2;
  parts.s2 = kernels::sum(e0.square().matrix()) / n2;
  parts.s3 = kernels::sum((seg(design.wa, ra).array() * ca.square()).matrix()) / n2;
  parts.s5 = 2.0 * kernels::sum((e1 * c1).matrix()) / n2;
  parts.s6 = -2.0 * kernels::sum((e0 * c0).matrix()) / n2;
  const double total = parts.s1 + parts.s2 + parts.s3 + parts.s5 + parts.s6;
  if (total < 0.0) logger().warn("negative V2 estimate {} floored at 0", total);
  parts.v2 = std::max(total, 0.0);
  return parts;
}

AteReport dr_se(const Design& design, const NuisanceParams& omega, double theta_hat,
                const ModelSpec& spec, double clip) {
  AteReport report;
  report.estimator = omega.parameterization == Parameterization::joint ? EstimatorKind::dr_joint
                                                                       : EstimatorKind::dr_combined;
  report.theta_hat = theta_hat;
  VarianceParts parts = v2_hat(design, omega, theta_hat, spec, clip);
  parts.v1 = v1_hat(design, omega, spec);
  report.se = std::sqrt(parts.v1 + parts.v2);
  report.variance_parts = parts;
  report.variance_method = "v1+v2";
  report.n_used = static_cast<std::size_t>(design.count_a() + design.count_b());
  report.pop_size = design.pop_size;
  set_wald_ci(report);
  return report;
}

Eigen::VectorXd theta_row_gradient(const PsiSystem& psi) {
  const Eigen::Index p = psi.omega.size();
  Eigen::VectorXd grad(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(psi.omega[j]));
    Eigen::VectorXd wp = psi.omega, wm = psi.omega;
    wp[j] += h;
    wm[j] -= h;
    grad[j] = (kernels::sum(psi.h(wp)) - kernels::sum(psi.h(wm))) / (2.0 * h);
  }
  return grad;
}

SandwichResult sandwich_unpenalized(const PsiSystem& psi) {
  const Eigen::Index p = psi.omega.size();
  const double m = psi.total_units;
  const Eigen::VectorXd h = psi.h(psi.omega);
  const Eigen::Index n = h.size();
  if (m < static_cast<double>(n)) throw DataError("total units below design rows");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 1, p + 1);
  a(0, 0) = 1.0;
  if (p > 0) {
    a.block(0, 1, 1, p) = -theta_row_gradient(psi).transpose() / m;
    a.bottomRightCorner(p, p) = psi.jacobian / m;
  }

  Eigen::MatrixXd rows(n, p + 1);
  rows.col(0) = (psi.theta - h.array()).matrix();
  if (p > 0) rows.rightCols(p) = psi.scores;
  Eigen::MatrixXd b = rows.transpose() * rows;
  b(0, 0) += (m - static_cast<double>(n)) * psi.theta * psi.theta;
  b /= m;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    throw NumericalError("singular sandwich bread (condition number " +
                         std::to_string(sv(0) / sv(sv.size() - 1)) + ")");
  }
  const Eigen::MatrixXd ainv = lu.inverse();
  SandwichResult out;
  out.cov = ainv * b * ainv.transpose() / m;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.se = std::sqrt(std::max(out.cov(0, 0), 0.0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  out.condition = sv(0) / sv(sv.size() - 1);
  return out;
}

double sandwich_penalized(const PsiSystem& psi, const Eigen::VectorXd& e_diag) {
  const Eigen::Index p = psi.omega.size();
  const double m = psi.total_units;
  const Eigen::VectorXd h = psi.h(psi.omega);
  const Eigen::Index n = h.size();
  Eigen::VectorXd infl = (psi.theta - h.array()).matrix();
  if (p > 0) {
    // Phi = m^-1 sum dphi/domega = -m^-1 grad(sum h)
    const Eigen::VectorXd phi_grad = -theta_row_gradient(psi) / m;
    Eigen::MatrixXd bracket = psi.jacobian / m;
    bracket.diagonal() += e_diag;
    const Eigen::VectorXd coef =
        solve_jittered(bracket.transpose(), phi_grad, "singular penalized sandwich bracket");
    infl -= psi.scores * coef;
  }
  CompensatedSum s;
  for (Eigen::Index i = 0; i < n; ++i) s.add(infl[i] * infl[i]);
  s.add((m - static_cast<double>(n)) * psi.theta * psi.theta);
  return std::sqrt(std::max(s.value(), 0.0)) / m;
}

}  // namespace drcombine
