#include "magnet/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "magnet/error.hpp"
#include "magnet/rng.hpp"

namespace magnet {

using Eigen::MatrixXd;

namespace {

int components_for(int p, const char* who) {
  if (p < 1) throw InputError(std::string(who) + ": p must be positive");
  if (p <= kComponentSize) return 1;
  if (p % kComponentSize != 0)
    throw InputError(std::string(who) + ": p must be <= 20 or a multiple of 20, got " +
                     std::to_string(p));
  return p / kComponentSize;
}

// Component c draws from its own substream so components are independent of
// how many others there are.
Rng component_rng(std::uint64_t seed, int c) { return Rng::substream(seed, c); }

}  // namespace

std::string to_string(GraphKind kind) {
  return kind == GraphKind::kChain ? "chain" : "nn";
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kFull: return "full";
    case Regime::kDiagonal: return "diagonal";
    case Regime::kZeroDiagonal: return "zero-diagonal";
    case Regime::kUniformRandom: return "uniform-random";
  }
  return "?";
}

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "chain") return GraphKind::kChain;
  if (s == "nn") return GraphKind::kNearestNeighbor;
  throw InputError("unknown graph kind '" + s + "' (expected chain or nn)");
}

Regime parse_regime(const std::string& s) {
  if (s == "full") return Regime::kFull;
  if (s == "diagonal") return Regime::kDiagonal;
  if (s == "zero-diagonal") return Regime::kZeroDiagonal;
  if (s == "uniform-random") return Regime::kUniformRandom;
  throw InputError("unknown regime '" + s +
                   "' (expected full, diagonal, zero-diagonal or uniform-random)");
}

Graph chain_graph(int p, std::uint64_t seed) {
  const int comps = components_for(p, "chain_graph");
  const int size = comps == 1 ? p : kComponentSize;
  Graph g(p);
  for (int c = 0; c < comps; ++c) {
    std::vector<int> nodes(size);
    std::iota(nodes.begin(), nodes.end(), c * size);
    Rng rng = component_rng(seed, c);
    rng.shuffle(nodes);
    for (int i = 0; i + 1 < size; ++i) g.add_edge(nodes[i], nodes[i + 1]);
  }
  return g;
}

Graph nearest_neighbor_graph(int p, std::uint64_t seed) {
  constexpr int kNeighbors = 4;
  const int comps = components_for(p, "nearest_neighbor_graph");
  const int size = comps == 1 ? p : kComponentSize;
  Graph g(p);
  for (int c = 0; c < comps; ++c) {
    Rng rng = component_rng(seed, c);
    std::vector<double> x(size), y(size);
    for (int i = 0; i < size; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.uniform();
    }
    const int base = c * size;
    for (int i = 0; i < size; ++i) {
      std::vector<int> order;
      for (int j = 0; j < size; ++j)
        if (j != i) order.push_back(j);
      auto dist = [&](int j) { return std::hypot(x[i] - x[j], y[i] - y[j]); };
      std::stable_sort(order.begin(), order.end(),
                       [&](int u, int v) { return dist(u) < dist(v); });
      const int take = std::min<int>(kNeighbors, static_cast<int>(order.size()));
      for (int t = 0; t < take; ++t)
        if (!g.has_edge(base + i, base + order[t])) g.add_edge(base + i, base + order[t]);
    }
    for (int a = base; a < base + size; ++a) {
      while (g.degree(a) > kNeighbors) {
        const auto nb = g.neighbors(a);
        g.remove_edge(a, nb[rng.below(nb.size())]);
      }
    }
  }
  return g;
}

GroundTruth build_precision(const Graph& graph, int k, GraphKind kind, Regime regime,
                            std::uint64_t seed) {
  if (k < 1) throw InputError("build_precision: k must be >= 1");
  const int p = graph.node_count();
  const AttributeLayout layout = AttributeLayout::uniform(p, k);
  const double value = kind == GraphKind::kChain ? 0.2 : 0.3 / k;

  MatrixXd diag(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) diag(i, j) = std::pow(0.5, std::abs(i - j));

  BlockSymMatrix m(layout);
  for (int a = 0; a < p; ++a) m.set_block(a, a, diag);

  Rng rng(seed);
  bool any_nonzero = false;
  for (const auto& [a, b] : graph.edges()) {
    MatrixXd block(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        switch (regime) {
          case Regime::kFull: block(i, j) = value; break;
          case Regime::kDiagonal: block(i, j) = i == j ? value : 0.0; break;
          case Regime::kZeroDiagonal: block(i, j) = i == j ? 0.0 : value; break;
          case Regime::kUniformRandom: {
            const double mag = rng.uniform(0.1, 0.3);
            block(i, j) = rng.uniform() < 0.5 ? -mag : mag;
            break;
          }
        }
      }
    }
    any_nonzero = any_nonzero || block.norm() != 0.0;
    m.set_block(a, b, block);
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m.dense(), Eigen::EigenvaluesOnly);
  const double rho = 0.5 - eig.eigenvalues().minCoeff();
  MatrixXd shifted = m.dense();
  shifted.diagonal().array() += rho;

  GroundTruth out;
  out.graph = graph;
  out.precision = BlockSymMatrix(layout, std::move(shifted));
  out.layout = layout;
  out.kind = kind;
  out.regime = regime;
  out.seed = seed;
  out.rho = rho;
  out.degenerate = graph.edge_count() > 0 && !any_nonzero;
  out.s = kind == GraphKind::kChain ? 2 : 4;
  return out;
}

GroundTruth generate(GraphKind kind, int p, int k, std::uint64_t seed, Regime regime) {
  // The graph and the block values use separate streams of the same seed.
  const Graph g = kind == GraphKind::kChain ? chain_graph(p, seed) : nearest_neighbor_graph(p, seed);
  return build_precision(g, k, kind, regime, splitmix64(seed ^ 0x5bd1e995ULL));
}

GroundTruth gen_chain(int p, int k, std::uint64_t seed, Regime regime) {
  return generate(GraphKind::kChain, p, k, seed, regime);
}

GroundTruth gen_nearest_neighbor(int p, int k, std::uint64_t seed, Regime regime) {
  return generate(GraphKind::kNearestNeighbor, p, k, seed, regime);
}

long long theta_to_n(double theta, int s, int k, int p) {
  if (!(theta >= 0.0) || s < 1 || k < 1 || p < 1)
    throw InputError("theta_to_n: theta must be >= 0 and s, k, p positive");
  const double n = theta * s * s * double(k) * k * std::log(double(p) * k);
  return static_cast<long long>(std::ceil(n));
}

int hamming_distance(const Graph& g1, const Graph& g2) {
  if (g1.node_count() != g2.node_count())
    throw InputError("hamming_distance: graphs have " + std::to_string(g1.node_count()) +
                     " and " + std::to_string(g2.node_count()) + " nodes");
  int d = 0;
  for (int a = 0; a < g1.node_count(); ++a)
    for (int b = a + 1; b < g1.node_count(); ++b) d += g1.has_edge(a, b) != g2.has_edge(a, b);
  return d;
}

}  // namespace magnet
