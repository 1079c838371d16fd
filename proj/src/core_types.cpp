#include "drcombine/core_types.hpp"

#include "drcombine/log.hpp"

#include <cmath>

namespace drcombine {

CombinedDataset::CombinedDataset(std::vector<UnitRecord> records,
                                 std::optional<double> pop_size, OutcomeKind outcome_kind)
    : records_(std::move(records)), pop_size_(pop_size), outcome_kind_(outcome_kind) {}

double CombinedDataset::pop_size() const {
  if (pop_size_) return *pop_size_;
  return derive_pop_size(*this);
}

std::size_t CombinedDataset::count_a() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.in_a ? 1 : 0;
  return n;
}

std::size_t CombinedDataset::count_b() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.in_b ? 1 : 0;
  return n;
}

std::vector<Violation> validate(const CombinedDataset& dataset) {
  std::vector<Violation> out;
  const std::size_t d = dataset.dim();
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const UnitRecord& r = dataset[k];
    if (r.in_a && r.in_b) out.push_back({k, "overlap"});
    if (r.in_a) {
      if (!r.weight_a) {
        out.push_back({k, "missing weight in sample A"});
      } else if (!std::isfinite(*r.weight_a) || *r.weight_a < 1.0) {
        out.push_back({k, "weight below 1 in sample A"});
      }
    } else if (r.weight_a) {
      out.push_back({k, "weight outside sample A"});
    }
    if (r.in_b) {
      if (!r.t) out.push_back({k, "missing treatment in sample B"});
      if (!r.y) out.push_back({k, "missing outcome in sample B"});
    }
    if (r.t && *r.t != 0 && *r.t != 1) out.push_back({k, "treatment not binary"});
    if (r.y) {
      if (!std::isfinite(*r.y)) {
        out.push_back({k, "non-finite outcome"});
      } else if (dataset.outcome_kind() == OutcomeKind::binary && *r.y != 0.0 && *r.y != 1.0) {
        out.push_back({k, "outcome not binary"});
      }
    }
    if (r.x.size() != d || d == 0) {
      out.push_back({k, "dimension mismatch"});
      continue;
    }
    if (r.x[0] != 1.0) out.push_back({k, "intercept not 1"});
    for (double v : r.x) {
      if (!std::isfinite(v)) {
        out.push_back({k, "non-finite covariate"});
        break;
      }
    }
  }
  if (const auto& n = dataset.supplied_pop_size()) {
    if (!(*n > 0.0) ||
        *n < static_cast<double>(dataset.count_a() + dataset.count_b())) {
      out.push_back({dataset.size(), "population size below n_A + n_B"});
    }
  }
  return out;
}

double derive_pop_size(const CombinedDataset& dataset) {
  double total = 0.0;
  double comp = 0.0;
  std::size_t n_a = 0;
  for (const auto& r : dataset.records()) {
    if (!r.in_a || !r.weight_a) continue;
    ++n_a;
    // Neumaier summation
    const double v = *r.weight_a;
    const double s = total + v;
    comp += std::abs(total) >= std::abs(v) ? (total - s) + v : (v - s) + total;
    total = s;
  }
  if (n_a == 0) throw DataError("cannot estimate N: sample A is empty");
  const double derived = std::round(total + comp);
  if (const auto& supplied = dataset.supplied_pop_size()) {
    if (std::abs(*supplied - derived) > 0.05 * *supplied) {
      logger().warn("supplied N = {} differs from weight-derived N = {} by more than 5%",
                    *supplied, derived);
    }
    return *supplied;
  }
  return derived;
}

NuisanceParams NuisanceParams::zeros(Eigen::Index d, Parameterization p) {
  NuisanceParams out;
  out.alpha = Eigen::VectorXd::Zero(d);
  out.tau = Eigen::VectorXd::Zero(d);
  out.beta = Eigen::VectorXd::Zero(d);
  out.gamma = Eigen::VectorXd::Zero(d);
  out.parameterization = p;
  return out;
}

NuisanceParams NuisanceParams::from_blocks(const Eigen::VectorXd& eta,
                                           const Eigen::VectorXd& mu, Parameterization p) {
  if (eta.size() != mu.size() || eta.size() % 2 != 0) {
    throw DataError("eta and mu must have equal even length");
  }
  NuisanceParams out = zeros(eta.size() / 2, p);
  out.set_eta(eta);
  out.set_mu(mu);
  return out;
}

Eigen::VectorXd NuisanceParams::eta() const {
  Eigen::VectorXd v(alpha.size() + tau.size());
  v << alpha, tau;
  return v;
}

Eigen::VectorXd NuisanceParams::mu() const {
  Eigen::VectorXd v(beta.size() + gamma.size());
  v << beta, gamma;
  return v;
}

Eigen::VectorXd NuisanceParams::omega() const {
  Eigen::VectorXd v(4 * alpha.size());
  v << alpha, tau, beta, gamma;
  return v;
}

void NuisanceParams::set_eta(const Eigen::VectorXd& eta) {
  const Eigen::Index d = eta.size() / 2;
  alpha = eta.head(d);
  tau = eta.tail(d);
}

void NuisanceParams::set_mu(const Eigen::VectorXd& mu) {
  const Eigen::Index d = mu.size() / 2;
  beta = mu.head(d);
  gamma = mu.tail(d);
}

void NuisanceParams::check_dims() const {
  const Eigen::Index d = alpha.size();
  if (tau.size() != d || beta.size() != d || gamma.size() != d) {
    throw DataError("nuisance blocks must share one dimension");
  }
}

void PenaltyConfig::check() const {
  if (!(lambda_eta >= 0.0) || !(lambda_mu >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(a > 2.0)) throw ConfigError("SCAD constant a must exceed 2");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(tol_xi > 0.0)) throw ConfigError("tol_xi must be positive");
  if (!(prob_clip > 0.0 && prob_clip < 0.5)) throw ConfigError("prob_clip must lie in (0, 0.5)");
  if (!(zero_threshold > 0.0)) throw ConfigError("zero_threshold must be positive");
  if (max_iter < 1 || max_inner < 1) throw ConfigError("iteration limits must be positive");
}

ModelSpec ModelSpec::for_outcome(OutcomeKind kind, Parameterization p) {
  ModelSpec s;
  s.outcome_link = kind == OutcomeKind::binary ? Link::logit : Link::identity;
  s.parameterization = p;
  return s;
}

void ModelSpec::check(OutcomeKind kind) const {
  const Link expected = kind == OutcomeKind::binary ? Link::logit : Link::identity;
  if (outcome_link != expected) {
    throw ConfigError(std::string("outcome link ") + to_string(outcome_link) +
                      " does not match " + to_string(kind) + " outcome");
  }
  if (selection_link != Link::logit || treatment_link != Link::logit) {
    throw ConfigError("selection and treatment models must use the logit link");
  }
}

const char* to_string(OutcomeKind k) {
  return k == OutcomeKind::binary ? "binary" : "continuous";
}
const char* to_string(Link l) { return l == Link::logit ? "logit" : "identity"; }
const char* to_string(Parameterization p) {
  return p == Parameterization::joint ? "joint" : "conditional";
}

}  // namespace drcombine
