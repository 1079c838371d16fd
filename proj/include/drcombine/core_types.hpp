#pragma once

// Data model shared by every module: unit records of the combined
// probability / non-probability sample, nuisance parameter blocks and the
// numeric configuration of the penalized solver.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drcombine {

// Error taxonomy. The CLI maps these onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class DataError : public Error {
 public:
  using Error::Error;
};
class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class OutcomeKind { continuous, binary };
enum class Link { identity, logit };
enum class Parameterization { conditional, joint };

// One unit of the target population that was observed in sample A
// (probability survey), sample B (non-probability sample) or neither.
struct UnitRecord {
  bool in_a = false;
  bool in_b = false;
  std::optional<double> weight_a;  // survey design weight d_A
  std::vector<double> x;           // x[0] is the materialized intercept
  std::optional<int> t;
  std::optional<double> y;

  bool operator==(const UnitRecord&) const = default;
};

class CombinedDataset {
 public:
  CombinedDataset() = default;
  CombinedDataset(std::vector<UnitRecord> records, std::optional<double> pop_size,
                  OutcomeKind outcome_kind);

  const std::vector<UnitRecord>& records() const { return records_; }
  const UnitRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Covariate dimension including the intercept (taken from the first record).
  std::size_t dim() const { return records_.empty() ? 0 : records_.front().x.size(); }
  OutcomeKind outcome_kind() const { return outcome_kind_; }

  // N as supplied by the caller, if any.
  const std::optional<double>& supplied_pop_size() const { return pop_size_; }
  // N in effect: supplied value, otherwise the rounded sum of sample-A weights.
  double pop_size() const;

  std::size_t count_a() const;
  std::size_t count_b() const;

  bool operator==(const CombinedDataset&) const = default;

 private:
  std::vector<UnitRecord> records_;
  std::optional<double> pop_size_;
  OutcomeKind outcome_kind_ = OutcomeKind::continuous;
};

struct Violation {
  std::size_t index;  // record index, or size() for dataset-level rules
  std::string rule;

  bool operator==(const Violation&) const = default;
};

// Checks the structural invariants of the combined sample. Never throws.
std::vector<Violation> validate(const CombinedDataset& dataset);

// round(sum of sample-A weights); throws DataError when sample A is empty.
double derive_pop_size(const CombinedDataset& dataset);

// Coefficients of the four working models. In the joint parameterization the
// first two blocks hold (delta1, delta0) and are reached through the aliases.
struct NuisanceParams {
  Eigen::VectorXd alpha;
  Eigen::VectorXd tau;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  Parameterization parameterization = Parameterization::conditional;

  static NuisanceParams zeros(Eigen::Index d,
                              Parameterization p = Parameterization::conditional);
  static NuisanceParams from_blocks(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                    Parameterization p = Parameterization::conditional);

  Eigen::Index dim() const { return alpha.size(); }
  Eigen::VectorXd eta() const;
  Eigen::VectorXd mu() const;
  Eigen::VectorXd omega() const;
  void set_eta(const Eigen::VectorXd& eta);
  void set_mu(const Eigen::VectorXd& mu);

  const Eigen::VectorXd& delta1() const { return alpha; }
  const Eigen::VectorXd& delta0() const { return tau; }

  // Throws DataError unless all blocks share one dimension.
  void check_dims() const;
};

struct PenaltyConfig {
  double lambda_eta = 0.0;
  double lambda_mu = 0.0;
  double a = 3.7;
  double epsilon = 1e-6;
  double zero_threshold = 1e-4;
  int max_iter = 50;
  double tol_xi = 1e-2;
  double prob_clip = 1e-6;
  double tol_inner = 1e-6;
  int max_inner = 50;

  // Throws ConfigError on out-of-range values.
  void check() const;
};

struct ModelSpec {
  Link selection_link = Link::logit;
  Link treatment_link = Link::logit;
  Link outcome_link = Link::identity;
  Parameterization parameterization = Parameterization::conditional;

  static ModelSpec for_outcome(OutcomeKind kind,
                               Parameterization p = Parameterization::conditional);
  // Throws ConfigError when the outcome link does not match the outcome kind.
  void check(OutcomeKind kind) const;
};

const char* to_string(OutcomeKind k);
const char* to_string(Link l);
const char* to_string(Parameterization p);

}  // namespace drcombine
