#include "drcombine/design.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace drcombine {

namespace {

int category(const UnitRecord& r) {
  if (r.in_a) return 0;
  if (r.in_b) return (r.t && *r.t == 1) ? 1 : 2;
  return 3;
}

bool canonical_less(const UnitRecord& a, const UnitRecord& b) {
  const int ca = category(a);
  const int cb = category(b);
  if (ca != cb) return ca < cb;
  if (a.x != b.x) return a.x < b.x;
  const auto key = [](const UnitRecord& r) {
    return std::make_tuple(r.t.has_value(), r.t.value_or(0), r.y.has_value(), r.y.value_or(0.0),
                           r.weight_a.value_or(0.0));
  };
  return key(a) < key(b);
}

}  // namespace

Design Design::from_dataset(const CombinedDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto d = static_cast<Eigen::Index>(dataset.dim());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return canonical_less(dataset[i], dataset[j]);
  });

  Design out;
  out.x.resize(n, d);
  out.y = Eigen::VectorXd::Zero(n);
  out.t = Eigen::VectorXd::Zero(n);
  out.wa = Eigen::VectorXd::Zero(n);
  out.has_ty.assign(order.size(), 0);
  out.source = order;
  out.outcome_kind = dataset.outcome_kind();
  for (Eigen::Index i = 0; i < n; ++i) {
    const UnitRecord& r = dataset[order[static_cast<std::size_t>(i)]];
    if (static_cast<Eigen::Index>(r.x.size()) != d) throw DataError("dimension mismatch");
    for (Eigen::Index j = 0; j < d; ++j) out.x(i, j) = r.x[static_cast<std::size_t>(j)];
    if (r.y) out.y[i] = *r.y;
    if (r.t) out.t[i] = *r.t;
    if (r.in_a && r.weight_a) out.wa[i] = *r.weight_a;
    out.has_ty[static_cast<std::size_t>(i)] = (r.y && r.t) ? 1 : 0;
    switch (category(r)) {
      case 0:
        ++out.n_a;
        break;
      case 1:
        ++out.n_b1;
        break;
      case 2:
        if (!r.t) throw DataError("missing treatment in sample B");
        ++out.n_b0;
        break;
      default:
        break;
    }
  }
  out.pop_size = dataset.empty() ? 0.0
                 : out.n_a > 0   ? dataset.pop_size()
                                 : dataset.supplied_pop_size().value_or(static_cast<double>(n));
  return out;
}

Design Design::select_rows(const std::vector<Eigen::Index>& rows, double pop) const {
  Design out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.x.resize(n, dim());
  out.y.resize(n);
  out.t.resize(n);
  out.wa.resize(n);
  out.has_ty.resize(rows.size());
  out.source.resize(rows.size());
  out.pop_size = pop;
  out.outcome_kind = outcome_kind;
  const RowRange b1 = range_b1();
  const RowRange b0 = range_b0();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    if (k > 0 && i <= rows[static_cast<std::size_t>(k - 1)]) {
      throw DataError("row selection must be strictly increasing");
    }
    out.x.row(k) = x.row(i);
    out.y[k] = y[i];
    out.t[k] = t[i];
    out.wa[k] = wa[i];
    out.has_ty[static_cast<std::size_t>(k)] = has_ty[static_cast<std::size_t>(i)];
    out.source[static_cast<std::size_t>(k)] = source[static_cast<std::size_t>(i)];
    if (i < n_a) {
      ++out.n_a;
    } else if (i >= b1.begin && i < b1.end) {
      ++out.n_b1;
    } else if (i >= b0.begin && i < b0.end) {
      ++out.n_b0;
    }
  }
  return out;
}

Design Design::select_columns(const std::vector<Eigen::Index>& cols) const {
  if (cols.empty() || cols.front() != 0) throw DataError("column selection must keep the intercept");
  Design out = *this;
  out.x.resize(rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  }
  return out;
}

namespace kernels {

namespace {

Eigen::Index chunk_count(RowRange range) {
  return (range.size() + kChunkRows - 1) / kChunkRows;
}

}  // namespace

Eigen::VectorXd column_sums(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& c) {
  const Eigen::Index d = x.cols();
  const Eigen::Index chunks = chunk_count(range);
  Eigen::MatrixXd partial(d, std::max<Eigen::Index>(chunks, 1));
  partial.setZero();
#pragma omp parallel for schedule(static) if (chunks > 4)
  for (Eigen::Index k = 0; k < chunks; ++k) {
    const Eigen::Index lo = k * kChunkRows;
    const Eigen::Index len = std::min(kChunkRows, range.size() - lo);
    partial.col(k).noalias() =
        x.middleRows(range.begin + lo, len).transpose() * c.segment(lo, len);
  }
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    CompensatedSum s;
    for (Eigen::Index k = 0; k < chunks; ++k) s.add(partial(j, k));
    out[j] = s.value();
  }
  return out;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& w) {
  const Eigen::Index d = x.cols();
  const Eigen::Index chunks = chunk_count(range);
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static) if (chunks > 4)
  for (Eigen::Index k = 0; k < chunks; ++k) {
    const Eigen::Index lo = k * kChunkRows;
    const Eigen::Index len = std::min(kChunkRows, range.size() - lo);
    const auto xc = x.middleRows(range.begin + lo, len);
    const Eigen::MatrixXd scaled = w.segment(lo, len).asDiagonal() * xc;
    Eigen::MatrixXd g(d, d);
    g.noalias() = xc.transpose() * scaled;
    partial[static_cast<std::size_t>(k)] = std::move(g);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    for (Eigen::Index a = b; a < d; ++a) {
      CompensatedSum s;
      for (const auto& g : partial) s.add(g(a, b));
      out(a, b) = s.value();
      out(b, a) = out(a, b);
    }
  }
  return out;
}

double sum(const Eigen::VectorXd& v) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s.add(v[i]);
  return s.value();
}

namespace serial {

Eigen::VectorXd column_sums(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& c) {
  const Eigen::Index d = x.cols();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d));
  for (Eigen::Index i = range.begin; i < range.end; ++i) {
    const double ci = c[i - range.begin];
    for (Eigen::Index j = 0; j < d; ++j) acc[static_cast<std::size_t>(j)].add(ci * x(i, j));
  }
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = acc[static_cast<std::size_t>(j)].value();
  return out;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, RowRange range, const Eigen::VectorXd& w) {
  const Eigen::Index d = x.cols();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d * d));
  for (Eigen::Index i = range.begin; i < range.end; ++i) {
    const double wi = w[i - range.begin];
    for (Eigen::Index b = 0; b < d; ++b) {
      const double xb = wi * x(i, b);
      for (Eigen::Index a = b; a < d; ++a) acc[static_cast<std::size_t>(b * d + a)].add(xb * x(i, a));
    }
  }
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    for (Eigen::Index a = b; a < d; ++a) {
      out(a, b) = acc[static_cast<std::size_t>(b * d + a)].value();
      out(b, a) = out(a, b);
    }
  }
  return out;
}

}  // namespace serial
}  // namespace kernels
}  // namespace drcombine
