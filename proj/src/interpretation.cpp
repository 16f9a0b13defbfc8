#include "magnet/interpretation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magnet/error.hpp"

namespace magnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> markov_blanket(const Graph& graph, int a, int b) {
  if (a == b) throw InputError("markov_blanket: a and b must differ");
  std::vector<int> out;
  for (int c = 0; c < graph.node_count(); ++c)
    if (c != a && c != b && (graph.has_edge(a, c) || graph.has_edge(b, c))) out.push_back(c);
  return out;
}

namespace {

MatrixXd centered(const MatrixXd& x) { return x.rowwise() - x.colwise().mean(); }

void fix_sign(VectorXd& w) {
  Eigen::Index i;
  w.cwiseAbs().maxCoeff(&i);
  if (w(i) < 0) w = -w;
}

}  // namespace

BlockSymMatrix conditional_cov(const Dataset& d, int a, int b, const std::vector<int>& blanket,
                               double ridge) {
  d.validate();
  if (!d.fully_observed()) throw InputError("conditional_cov needs a fully observed dataset");
  const auto& layout = d.layout;
  const int p = layout.node_count();
  if (a < 0 || a >= p || b < 0 || b >= p || a == b)
    throw InputError("conditional_cov: invalid node pair");
  for (int c : blanket)
    if (c < 0 || c >= p || c == a || c == b)
      throw InputError("conditional_cov: blanket must exclude a and b and be in range");

  const int n = d.sample_count();
  const int ka = layout.attr_count(a), kb = layout.attr_count(b);
  const auto dims_z = layout.dims_of(blanket);
  const int q = static_cast<int>(dims_z.size());
  if (n <= q + ka + kb)
    throw InputError("conditional_cov: need more than " + std::to_string(q + ka + kb) +
                     " samples, have " + std::to_string(n));

  const std::vector<int> ab{a, b};
  MatrixXd y = centered(d.values(Eigen::all, layout.dims_of(ab)));
  if (q > 0) {
    const MatrixXd z = centered(d.values(Eigen::all, dims_z));
    MatrixXd beta;
    if (ridge > 0.0) {
      MatrixXd g = z.transpose() * z;
      g.diagonal().array() += ridge;
      beta = g.ldlt().solve(z.transpose() * y);
    } else {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(z);
      qr.setThreshold(1e-10);
      if (qr.rank() < q)
        throw NumericalError("conditional_cov: blanket design for edge (" + std::to_string(a) +
                             "," + std::to_string(b) +
                             ") is rank deficient; retry with a ridge penalty");
      beta = qr.solve(y);
    }
    y -= z * beta;
  }

  const MatrixXd cov = y.transpose() * y / double(n);
  const VectorXd sd = cov.diagonal().cwiseSqrt();
  const double scale = std::max(1.0, d.values.cwiseAbs().maxCoeff());
  for (int i = 0; i < ka + kb; ++i)
    if (!(sd(i) > 1e-10 * scale))
      throw NumericalError("conditional_cov: residual of node " + std::to_string(i < ka ? a : b) +
                           " has zero variance given the blanket");
  const VectorXd inv = sd.cwiseInverse();
  MatrixXd cor = inv.asDiagonal() * cov * inv.asDiagonal();
  cor.diagonal().setOnes();
  cor = 0.5 * (cor + cor.transpose()).eval();
  return BlockSymMatrix(AttributeLayout({ka, kb}), std::move(cor));
}

EdgeInterpretation pcc_eigensystem(const BlockSymMatrix& c) {
  if (c.node_count() != 2) throw InputError("pcc_eigensystem expects a two-node block matrix");
  const MatrixXd caa = c.block(0, 0), cbb = c.block(1, 1), cab = c.block(0, 1);
  Eigen::LLT<MatrixXd> la(caa), lb(cbb);
  if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
    throw NumericalError("pcc_eigensystem: marginal block is not positive definite");

  // M = L_a^-1 C_ab L_b^-T
  MatrixXd m = la.matrixL().solve(cab);
  m = lb.matrixL().solve(m.transpose()).transpose();
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);

  EdgeInterpretation out;
  out.rho = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  const int ka = static_cast<int>(caa.rows()), kb = static_cast<int>(cbb.rows());
  if (out.rho <= 1e-12) {
    out.degenerate = true;
    out.rho = 0.0;
    out.w_a = VectorXd::Unit(ka, 0);
    out.w_b = VectorXd::Unit(kb, 0);
    return out;
  }
  out.w_a = la.matrixU().solve(svd.matrixU().col(0));
  out.w_b = lb.matrixU().solve(svd.matrixV().col(0));
  out.w_a.normalize();
  out.w_b.normalize();
  fix_sign(out.w_a);
  fix_sign(out.w_b);
  return out;
}

EdgeInterpretation interpret_edge(const Dataset& d, const Graph& graph, int a, int b,
                                  double ridge) {
  EdgeInterpretation out =
      pcc_eigensystem(conditional_cov(d, a, b, markov_blanket(graph, a, b), ridge));
  out.a = a;
  out.b = b;
  return out;
}

const char* to_string(EdgeLabel label) {
  switch (label) {
    case EdgeLabel::kAttribute1Influenced: return "attribute1-influenced";
    case EdgeLabel::kAttribute2Influenced: return "attribute2-influenced";
    case EdgeLabel::kMixed: return "mixed";
  }
  return "?";
}

EdgeClass classify_edge(const EdgeInterpretation& e, int attr_index, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 0.5))
    throw InputError("classify_edge: threshold must lie in [0, 0.5]");
  if (attr_index < 0 || attr_index >= e.w_a.size())
    throw InputError("classify_edge: attribute index " + std::to_string(attr_index) +
                     " out of range for node " + std::to_string(e.a));
  const double norm = e.w_a.norm();
  if (norm == 0.0) throw InputError("classify_edge: zero weight vector");
  EdgeClass out;
  const double w = e.w_a(attr_index) / norm;
  out.w_sq = w * w;
  if (out.w_sq < threshold)
    out.label = EdgeLabel::kAttribute1Influenced;
  else if (out.w_sq > 1.0 - threshold)
    out.label = EdgeLabel::kAttribute2Influenced;
  else
    out.label = EdgeLabel::kMixed;
  return out;
}

std::vector<EdgeClass> classify_edges(const std::vector<EdgeInterpretation>& edges,
                                      int attr_index, double threshold) {
  std::vector<EdgeClass> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(classify_edge(e, attr_index, threshold));
  return out;
}

std::vector<NodeClass> classify_nodes(const std::vector<EdgeInterpretation>& edges,
                                      const std::vector<EdgeClass>& classes, int node_count) {
  if (edges.size() != classes.size())
    throw InputError("classify_nodes: edges and classes differ in length");
  std::vector<Eigen::Vector3d> counts(node_count, Eigen::Vector3d::Zero());
  std::vector<NodeClass> out(node_count);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int slot = static_cast<int>(classes[i].label);
    for (int v : {edges[i].a, edges[i].b}) {
      if (v < 0 || v >= node_count) throw InputError("classify_nodes: edge node out of range");
      counts[v](slot) += 1.0;
      ++out[v].edge_count;
    }
  }
  for (int v = 0; v < node_count; ++v)
    if (out[v].edge_count > 0) out[v].proportions = counts[v] / out[v].edge_count;
  return out;
}

BlockZeroCheck verify_block_zero_equivalence(const BlockSymMatrix& sigma, int a, int b,
                                             double tol) {
  const auto& layout = sigma.layout();
  const int p = layout.node_count();
  if (a < 0 || a >= p || b < 0 || b >= p || a == b)
    throw InputError("verify_block_zero_equivalence: invalid node pair");
  std::vector<int> rest;
  for (int c = 0; c < p; ++c)
    if (c != a && c != b) rest.push_back(c);
  const std::vector<int> ab{a, b};
  const auto d_ab = layout.dims_of(ab);
  const auto d_rest = layout.dims_of(rest);
  const int ka = layout.attr_count(a);

  MatrixXd cond = sigma.dense()(d_ab, d_ab);
  if (!d_rest.empty()) {
    const MatrixXd s_rr = sigma.dense()(d_rest, d_rest);
    const MatrixXd s_ra = sigma.dense()(d_rest, d_ab);
    Eigen::LLT<MatrixXd> llt(s_rr);
    if (llt.info() != Eigen::Success)
      throw NumericalError("verify_block_zero_equivalence: covariance is not positive definite");
    cond -= s_ra.transpose() * llt.solve(s_ra);
  }
  Eigen::LLT<MatrixXd> llt(sigma.dense());
  if (llt.info() != Eigen::Success)
    throw NumericalError("verify_block_zero_equivalence: covariance is not positive definite");
  const MatrixXd omega = llt.solve(MatrixXd::Identity(sigma.total_dim(), sigma.total_dim()));

  BlockZeroCheck out;
  const MatrixXd cross = cond.topRightCorner(ka, layout.attr_count(b));
  out.rho_zero = cross.cwiseAbs().maxCoeff() <= tol;
  out.omega_block_zero =
      omega.block(layout.offset(a), layout.offset(b), ka, layout.attr_count(b)).cwiseAbs().maxCoeff() <=
      tol;
  return out;
}

}  // namespace magnet
