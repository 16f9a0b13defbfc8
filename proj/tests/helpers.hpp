#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "magnet/data.hpp"
#include "magnet/layout.hpp"

namespace testing {

using Eigen::MatrixXd;

/// Random sparse precision: blockdiag identity-ish plus random edge blocks,
/// shifted to have smallest eigenvalue `floor`.
inline magnet::BlockSymMatrix random_precision(const magnet::AttributeLayout& layout, double density,
                                               std::uint64_t seed, double floor = 0.3) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  const int d = layout.total_dim();
  MatrixXd m = MatrixXd::Zero(d, d);
  for (int a = 0; a < layout.node_count(); ++a) {
    for (int b = a; b < layout.node_count(); ++b) {
      if (a != b && coin(gen) > density) continue;
      for (int i = 0; i < layout.attr_count(a); ++i)
        for (int j = 0; j < layout.attr_count(b); ++j) {
          const double v = (a == b ? 0.3 : 0.5) * u(gen);
          m(layout.offset(a) + i, layout.offset(b) + j) += v;
          if (a != b || i != j) m(layout.offset(b) + j, layout.offset(a) + i) += v;
        }
    }
  }
  m = 0.5 * (m + m.transpose()).eval();
  const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(m).eigenvalues().minCoeff();
  m.diagonal().array() += floor - lo;
  return magnet::BlockSymMatrix(layout, m);
}

/// Sample covariance of n draws from N(0, precision^-1).
inline magnet::CovEstimate random_cov(const magnet::BlockSymMatrix& precision, int n, std::uint64_t seed) {
  return magnet::sample_covariance(magnet::sample_mvn(precision, n, seed));
}

/// Random layout with p nodes and 1..kmax attributes each.
inline magnet::AttributeLayout random_layout(int p, int kmax, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> k(1, kmax);
  std::vector<int> counts(p);
  for (auto& c : counts) c = k(gen);
  return magnet::AttributeLayout(counts);
}

inline MatrixXd random_matrix(int r, int c, std::mt19937_64& gen) {
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = z(gen);
  return m;
}

/// Wishart-style random PD matrix.
inline MatrixXd random_spd(int d, std::mt19937_64& gen, double ridge = 0.1) {
  const MatrixXd x = random_matrix(d + 3, d, gen);
  MatrixXd m = x.transpose() * x / double(d + 3);
  m.diagonal().array() += ridge;
  return m;
}

}  // namespace testing
