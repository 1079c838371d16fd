#pragma once

#include "drcombine/core_types.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace drcombine {

struct LinkEval {
  double value;
  double dvalue;  // derivative of the inverse link at the linear predictor
};

enum class ModelKind { selection, treatment, outcome1, outcome0, joint1, joint0 };

LinkEval eval_link(Link link, double lp);

Link link_for(const ModelSpec& spec, ModelKind which);

// Weighting models (selection, treatment, joint) are clamped into
// [clip, 1 - clip]; dvalue always comes from the unclamped predictor.
// Outcome predictions are never inverted and are left unclamped.
LinkEval predict(const ModelSpec& spec, ModelKind which, const Eigen::VectorXd& coef,
                 const Eigen::VectorXd& x, double clip);

// Vectorised form used by the estimating system. clip <= 0 disables clamping.
void eval_link(Link link, const Eigen::VectorXd& lp, double clip, Eigen::VectorXd& value,
               Eigen::VectorXd& dvalue);

inline double expit(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace drcombine
