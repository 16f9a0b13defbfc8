#pragma once

#include <cstdint>
#include <string>

#include "magnet/graph.hpp"
#include "magnet/layout.hpp"

namespace magnet {

enum class GraphKind { kChain, kNearestNeighbor };

/// How the off-diagonal block of an edge is filled.
///   kFull          every entry equals the kind's constant (0.2 chain, 0.3/k NN)
///   kDiagonal      the constant on the block diagonal, zeros elsewhere
///   kZeroDiagonal  the constant off the block diagonal, zeros on it
///   kUniformRandom iid uniform on [-0.3,-0.1] U [0.1,0.3]
enum class Regime { kFull, kDiagonal, kZeroDiagonal, kUniformRandom };

std::string to_string(GraphKind kind);
std::string to_string(Regime regime);
GraphKind parse_graph_kind(const std::string& s);
Regime parse_regime(const std::string& s);

/// Nodes per independent component in both generators.
inline constexpr int kComponentSize = 20;

struct GroundTruth {
  Graph graph;
  BlockSymMatrix precision;
  AttributeLayout layout;
  GraphKind kind = GraphKind::kChain;
  Regime regime = Regime::kFull;
  std::uint64_t seed = 0;
  /// Shift added to the diagonal so that the smallest eigenvalue is 0.5.
  double rho = 0.0;
  /// Set when the regime leaves every edge block zero (zero-diagonal, k = 1).
  bool degenerate = false;
  /// Maximum degree the generator targets (2 chain, 4 NN).
  int s = 0;
};

/// p/20 components (a single one when p <= 20); each is a random
/// permutation of its nodes joined in succession.
Graph chain_graph(int p, std::uint64_t seed);

/// Per 20-node component (a single one when p <= 20): points uniform on the
/// unit square, each node joined to its 4 nearest neighbours (ties by node
/// index), then while some node has degree > 4 the nodes are visited in
/// ascending order and each over-full node drops uniformly chosen incident
/// edges (from its sorted neighbour list) until its degree is 4.
Graph nearest_neighbor_graph(int p, std::uint64_t seed);

/// Diagonal blocks are the Toeplitz matrix 0.5^|i-j| (i, j = 1..k); edge
/// blocks follow `regime`; the result is shifted by rho I so its smallest
/// eigenvalue is exactly 0.5 (rho may be negative).
GroundTruth build_precision(const Graph& graph, int k, GraphKind kind, Regime regime,
                            std::uint64_t seed);

GroundTruth gen_chain(int p, int k, std::uint64_t seed, Regime regime = Regime::kFull);
GroundTruth gen_nearest_neighbor(int p, int k, std::uint64_t seed, Regime regime = Regime::kFull);
GroundTruth generate(GraphKind kind, int p, int k, std::uint64_t seed, Regime regime);

/// ceil(theta * s^2 * k^2 * log(p k)).
long long theta_to_n(double theta, int s, int k, int p);

/// Number of node pairs whose edge indicator differs.
int hamming_distance(const Graph& g1, const Graph& g2);

}  // namespace magnet
