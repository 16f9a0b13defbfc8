#include "magnet/data.hpp"

#include <string>

#include "magnet/error.hpp"
#include "magnet/rng.hpp"

namespace magnet {

namespace {

Eigen::MatrixXi block_min_counts(const Eigen::MatrixXd& counts, const AttributeLayout& layout) {
  const int p = layout.node_count();
  Eigen::MatrixXi out(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      out(a, b) = static_cast<int>(counts
                                       .block(layout.offset(a), layout.offset(b),
                                              layout.attr_count(a), layout.attr_count(b))
                                       .minCoeff());
  return out;
}

}  // namespace

bool Dataset::fully_observed() const { return !mask || (mask->array() == 1.0).all(); }

void Dataset::validate() const {
  if (values.cols() != layout.total_dim())
    throw InputError("dataset has " + std::to_string(values.cols()) +
                     " columns but layout has total dimension " +
                     std::to_string(layout.total_dim()));
  if (mask) {
    if (mask->rows() != values.rows() || mask->cols() != values.cols())
      throw InputError("mask shape does not match data shape");
    if (!((mask->array() == 0.0) || (mask->array() == 1.0)).all())
      throw InputError("mask entries must be 0 or 1");
    // Unobserved entries may hold anything (NaN placeholders included).
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if ((*mask)(i, j) == 1.0 && !std::isfinite(values(i, j)))
          throw InputError("observed value at row " + std::to_string(i) + ", column " +
                           std::to_string(j) + " is not finite");
  } else if (!values.allFinite()) {
    throw InputError("dataset has non-finite values");
  }
}

Dataset Dataset::select_rows(std::span<const int> rows) const {
  Dataset out{layout, Eigen::MatrixXd(rows.size(), values.cols()), std::nullopt};
  if (mask) out.mask = Eigen::MatrixXd(rows.size(), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
    if (mask) out.mask->row(static_cast<Eigen::Index>(i)) = mask->row(rows[i]);
  }
  return out;
}

CovEstimate sample_covariance(const Dataset& d, bool center) {
  d.validate();
  const int n = d.sample_count();
  if (n == 0) throw InputError("sample covariance needs at least one sample");
  if (!d.fully_observed())
    throw InputError("dataset has missing entries; use the masked covariance estimator");
  Eigen::MatrixXd s;
  if (center) {
    const Eigen::RowVectorXd mean = d.values.colwise().mean();
    const Eigen::MatrixXd x = d.values.rowwise() - mean;
    s = x.transpose() * x;
  } else {
    s = d.values.transpose() * d.values;
  }
  s /= static_cast<double>(n);
  s = 0.5 * (s + s.transpose()).eval();
  const int p = d.layout.node_count();
  return {BlockSymMatrix(d.layout, std::move(s)), Eigen::MatrixXi::Constant(p, p, n), n};
}

CovEstimate masked_covariance(const Dataset& d) {
  d.validate();
  const int n = d.sample_count();
  if (n == 0) throw InputError("covariance needs at least one sample");
  const Eigen::MatrixXd r =
      d.mask ? *d.mask : Eigen::MatrixXd::Ones(d.values.rows(), d.values.cols());
  // Zero out unobserved values so placeholders never leak into the sums.
  const Eigen::MatrixXd x = (r.array() == 1.0).select(d.values, 0.0);
  const Eigen::MatrixXd counts = r.transpose() * r;
  for (Eigen::Index l = 0; l < counts.rows(); ++l)
    for (Eigen::Index k = l; k < counts.cols(); ++k)
      if (counts(l, k) < 1.0)
        throw InputError("columns " + std::to_string(l) + " and " + std::to_string(k) +
                         " have no co-observed sample");
  Eigen::MatrixXd s = (x.transpose() * x).cwiseQuotient(counts);
  s = 0.5 * (s + s.transpose()).eval();
  return {BlockSymMatrix(d.layout, std::move(s)), block_min_counts(counts, d.layout), n};
}

Dataset sample_mvn(const BlockSymMatrix& precision, int n, std::uint64_t seed) {
  if (n < 0) throw InputError("sample count must be non-negative");
  const Eigen::LLT<Eigen::MatrixXd> llt(precision.dense());
  if (llt.info() != Eigen::Success)
    throw NumericalError("precision matrix is not positive definite");
  const int d = precision.total_dim();
  // precision = L L^T, so x = L^-T z has covariance precision^-1.
  Eigen::MatrixXd z(d, n);
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) z(j, i) = rng.normal();
  }
  llt.matrixU().solveInPlace(z);
  return {precision.layout(), z.transpose(), std::nullopt};
}

}  // namespace magnet
