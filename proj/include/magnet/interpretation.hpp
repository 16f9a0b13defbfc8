#pragma once

#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "magnet/data.hpp"
#include "magnet/graph.hpp"
#include "magnet/layout.hpp"

namespace magnet {

/// {c != a, b : c adjacent to a or to b}, ascending.
std::vector<int> markov_blanket(const Graph& graph, int a, int b);

/// Residual correlation structure of an edge given its blanket, as a block
/// matrix over a two-node layout {k_a, k_b}: the diagonal blocks are the
/// correlation matrices of each node's residuals and the off-diagonal block
/// is their cross-correlation.
///
/// Residuals come from least squares of X_a and X_b on the blanket's
/// attributes plus an intercept. A rank-deficient design throws
/// NumericalError unless `ridge` > 0, in which case (X^T X + ridge I) is used.
BlockSymMatrix conditional_cov(const Dataset& d, int a, int b, const std::vector<int>& blanket,
                               double ridge = 0.0);

struct EdgeInterpretation {
  int a = 0;
  int b = 0;
  /// Partial canonical correlation, in [0, 1].
  double rho = 0.0;
  /// Unit weight vectors, largest-magnitude entry positive.
  Eigen::VectorXd w_a;
  Eigen::VectorXd w_b;
  /// rho is zero; weights are then the first standard basis vectors.
  bool degenerate = false;
};

/// Top canonical pair of a two-node block matrix: rho^2 is the largest
/// eigenvalue of  C_aa^-1 C_ab C_bb^-1 C_ba  and w_a, w_b its eigenvectors
/// for the two one-sided systems. Computed as the leading singular triple of
/// L_a^-1 C_ab L_b^-T with C_aa = L_a L_a^T. Throws NumericalError if a
/// marginal block is not positive definite.
EdgeInterpretation pcc_eigensystem(const BlockSymMatrix& c);

/// conditional_cov on the blanket of (a, b) in `graph`, then
/// pcc_eigensystem, with a and b filled in.
EdgeInterpretation interpret_edge(const Dataset& d, const Graph& graph, int a, int b,
                                  double ridge = 0.0);

/// Labels use the weight of a designated attribute: "attribute2" is the
/// designated one, "attribute1" the rest.
enum class EdgeLabel { kAttribute1Influenced, kAttribute2Influenced, kMixed };

const char* to_string(EdgeLabel label);

struct EdgeClass {
  EdgeLabel label = EdgeLabel::kMixed;
  double w_sq = 0.0;
};

/// Squared designated component of w_a (the smaller-index endpoint,
/// renormalized): below T is attribute1-influenced, above 1 - T is
/// attribute2-influenced, otherwise mixed.
EdgeClass classify_edge(const EdgeInterpretation& e, int attr_index, double threshold = 0.25);
std::vector<EdgeClass> classify_edges(const std::vector<EdgeInterpretation>& edges,
                                      int attr_index, double threshold = 0.25);

struct NodeClass {
  /// Proportions (attribute1, attribute2, mixed); empty for isolated nodes.
  std::optional<Eigen::Vector3d> proportions;
  int edge_count = 0;
};

/// Per node, the share of each label among its incident classified edges.
std::vector<NodeClass> classify_nodes(const std::vector<EdgeInterpretation>& edges,
                                      const std::vector<EdgeClass>& classes, int node_count);

struct BlockZeroCheck {
  bool rho_zero = false;
  bool omega_block_zero = false;
  bool agree() const { return rho_zero == omega_block_zero; }
};

/// Compares the population conditional cross-covariance of (a, b) given all
/// other nodes with block (a, b) of Sigma^-1; both zero-tests use
/// max-entry <= tol.
BlockZeroCheck verify_block_zero_equivalence(const BlockSymMatrix& sigma, int a, int b,
                                             double tol = 1e-10);

}  // namespace magnet
