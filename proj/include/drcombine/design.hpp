#pragma once

// Column-major numeric view of a CombinedDataset. Rows are sorted into a
// canonical order (sample A, sample B treated, sample B control, others;
// lexicographic within a category) so every reduction is independent of the
// order in which records were supplied, and each category is a contiguous
// row range the kernels can sweep without branching.

#include "drcombine/core_types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace drcombine {

struct RowRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
};

class Design {
 public:
  Design() = default;
  static Design from_dataset(const CombinedDataset& dataset);

  // Rows kept in their canonical order; pop_size is passed explicitly.
  Design select_rows(const std::vector<Eigen::Index>& rows, double pop_size) const;
  // Keeps the listed covariate columns (the intercept must be listed).
  Design select_columns(const std::vector<Eigen::Index>& cols) const;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  RowRange range_a() const { return {0, n_a}; }
  RowRange range_b1() const { return {n_a, n_a + n_b1}; }
  RowRange range_b0() const { return {n_a + n_b1, n_a + n_b1 + n_b0}; }
  RowRange range_b() const { return {n_a, n_a + n_b1 + n_b0}; }

  Eigen::Index count_a() const { return n_a; }
  Eigen::Index count_b() const { return n_b1 + n_b0; }
  Eigen::Index count_b1() const { return n_b1; }
  Eigen::Index count_b0() const { return n_b0; }

  Eigen::MatrixXd x;
  Eigen::VectorXd y;   // 0 when absent
  Eigen::VectorXd t;   // 0 when absent
  Eigen::VectorXd wa;  // d_A on sample-A rows, 0 elsewhere
  std::vector<unsigned char> has_ty;  // treatment and outcome both observed
  std::vector<std::size_t> source;    // record index in the originating dataset
  double pop_size = 0.0;
  OutcomeKind outcome_kind = OutcomeKind::continuous;

  Eigen::Index n_a = 0;
  Eigen::Index n_b1 = 0;
  Eigen::Index n_b0 = 0;
};

// Weighted column sums and weighted Gram matrices over a row range. The
// default entry points reduce fixed 512-row chunks (OpenMP over chunks when
// available) and combine chunk partials in chunk order with compensated
// summation, so results do not depend on the thread count. The serial
// namespace is a per-record reference used by tests and the benchmark.
namespace kernels {

inline constexpr Eigen::Index kChunkRows = 512;

// sum_{i in range} c[i - begin] * x.row(i)^T
Eigen::VectorXd column_sums(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& c);
// sum_{i in range} w[i - begin] * x.row(i)^T x.row(i)
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& w);
// sum of a vector, compensated
double sum(const Eigen::VectorXd& v);

namespace serial {
Eigen::VectorXd column_sums(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& c);
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& w);
}  // namespace serial

}  // namespace kernels

// Running Neumaier-compensated sum.
struct CompensatedSum {
  double total = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double s = total + v;
    comp += std::abs(total) >= std::abs(v) ? (total - s) + v : (v - s) + total;
    total = s;
  }
  double value() const { return total + comp; }
};

}  // namespace drcombine
