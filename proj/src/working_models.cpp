#include "drcombine/working_models.hpp"

#include <algorithm>
#include <cmath>

namespace drcombine {

LinkEval eval_link(Link link, double lp) {
  if (!std::isfinite(lp)) throw NumericalError("non-finite linear predictor");
  if (link == Link::identity) return {lp, 1.0};
  const double p = expit(lp);
  return {p, p * (1.0 - p)};
}

Link link_for(const ModelSpec& spec, ModelKind which) {
  switch (which) {
    case ModelKind::selection:
      return spec.selection_link;
    case ModelKind::treatment:
      return spec.treatment_link;
    case ModelKind::outcome1:
    case ModelKind::outcome0:
      return spec.outcome_link;
    case ModelKind::joint1:
    case ModelKind::joint0:
      return Link::logit;
  }
  return Link::identity;
}

static bool is_weighting(ModelKind which) {
  return which != ModelKind::outcome1 && which != ModelKind::outcome0;
}

LinkEval predict(const ModelSpec& spec, ModelKind which, const Eigen::VectorXd& coef,
                 const Eigen::VectorXd& x, double clip) {
  if (coef.size() != x.size()) throw DataError("coefficient and covariate lengths differ");
  LinkEval out = eval_link(link_for(spec, which), x.dot(coef));
  if (is_weighting(which)) out.value = std::clamp(out.value, clip, 1.0 - clip);
  return out;
}

void eval_link(Link link, const Eigen::VectorXd& lp, double clip, Eigen::VectorXd& value,
               Eigen::VectorXd& dvalue) {
  const Eigen::Index n = lp.size();
  value.resize(n);
  dvalue.resize(n);
  if (!lp.allFinite()) throw NumericalError("non-finite linear predictor");
  if (link == Link::identity) {
    value = lp;
    dvalue.setOnes();
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = expit(lp[i]);
    dvalue[i] = p * (1.0 - p);
    value[i] = clip > 0.0 ? std::clamp(p, clip, 1.0 - clip) : p;
  }
}

}  // namespace drcombine
