#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "magnet/layout.hpp"

namespace magnet {

/// n samples over the stacked attribute space of `layout`. mask(i, l) = 1
/// marks values(i, l) as observed; an absent mask means fully observed.
struct Dataset {
  AttributeLayout layout;
  Eigen::MatrixXd values;
  std::optional<Eigen::MatrixXd> mask;

  int sample_count() const { return static_cast<int>(values.rows()); }
  bool fully_observed() const;
  /// Shape checks, finite values, 0/1 mask.
  void validate() const;
  /// Rows in the given order.
  Dataset select_rows(std::span<const int> rows) const;
};

struct CovEstimate {
  BlockSymMatrix s;
  /// Minimum pairwise co-observation count over each node pair's block.
  Eigen::MatrixXi n_eff;
  /// Number of samples the estimate was built from.
  int n = 0;
};

/// S = n^-1 sum x_i x_i^T, optionally after subtracting column means. The
/// dataset must be fully observed.
CovEstimate sample_covariance(const Dataset& d, bool center = false);

/// Pairwise-complete second moments:
///   s_lk = (sum_i r_il r_ik)^-1 sum_i r_il r_ik x_il x_ik.
/// The result may be indefinite. Throws InputError naming the first column
/// pair with no co-observed sample.
CovEstimate masked_covariance(const Dataset& d);

/// n draws from N(0, precision^-1). Sample i uses Rng::substream(seed, i).
/// Throws NumericalError if precision is not positive definite.
Dataset sample_mvn(const BlockSymMatrix& precision, int n, std::uint64_t seed);

}  // namespace magnet
