#include "magnet/layout.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "magnet/error.hpp"

namespace magnet {

AttributeLayout::AttributeLayout(std::vector<int> attr_counts) : counts_(std::move(attr_counts)) {
  if (counts_.empty()) throw InputError("layout must have at least one node");
  offsets_.assign(counts_.size() + 1, 0);
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a] < 1)
      throw InputError("attribute count of node " + std::to_string(a) + " must be >= 1");
    offsets_[a + 1] = offsets_[a] + counts_[a];
  }
}

AttributeLayout AttributeLayout::uniform(int nodes, int attrs_per_node) {
  if (nodes < 1) throw InputError("layout must have at least one node");
  return AttributeLayout(std::vector<int>(nodes, attrs_per_node));
}

int AttributeLayout::max_attr_count() const {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

AttributeLayout AttributeLayout::subset(std::span<const int> nodes) const {
  std::vector<int> counts;
  counts.reserve(nodes.size());
  for (int a : nodes) counts.push_back(attr_count(a));
  return AttributeLayout(std::move(counts));
}

std::vector<int> AttributeLayout::dims_of(std::span<const int> nodes) const {
  std::vector<int> dims;
  for (int a : nodes)
    for (int i = 0; i < attr_count(a); ++i) dims.push_back(offset(a) + i);
  return dims;
}

double asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

BlockSymMatrix::BlockSymMatrix(AttributeLayout layout)
    : layout_(std::move(layout)),
      data_(Eigen::MatrixXd::Zero(layout_.total_dim(), layout_.total_dim())) {}

BlockSymMatrix::BlockSymMatrix(AttributeLayout layout, Eigen::MatrixXd dense)
    : layout_(std::move(layout)), data_(std::move(dense)) {
  const int d = layout_.total_dim();
  if (data_.rows() != d || data_.cols() != d)
    throw InputError("matrix is " + std::to_string(data_.rows()) + "x" +
                     std::to_string(data_.cols()) + " but layout has total dimension " +
                     std::to_string(d));
  if (!data_.allFinite()) throw InputError("matrix has non-finite entries");
  const double scale = std::max(1.0, data_.cwiseAbs().maxCoeff());
  const double asym = asymmetry(data_);
  if (asym > kSymmetryTol * scale)
    throw InputError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  if (asym > 0.0) data_ = 0.5 * (data_ + data_.transpose()).eval();
}

BlockSymMatrix BlockSymMatrix::identity(AttributeLayout layout) {
  const int d = layout.total_dim();
  return BlockSymMatrix(std::move(layout), Eigen::MatrixXd::Identity(d, d));
}

void BlockSymMatrix::check_node(int a) const {
  if (a < 0 || a >= layout_.node_count())
    throw InputError("node index " + std::to_string(a) + " out of range [0," +
                     std::to_string(layout_.node_count()) + ")");
}

Eigen::Block<const Eigen::MatrixXd> BlockSymMatrix::block_view(int a, int b) const {
  check_node(a);
  check_node(b);
  return data_.block(layout_.offset(a), layout_.offset(b), layout_.attr_count(a),
                     layout_.attr_count(b));
}

Eigen::MatrixXd BlockSymMatrix::block(int a, int b) const { return block_view(a, b); }

void BlockSymMatrix::set_block(int a, int b, const Eigen::Ref<const Eigen::MatrixXd>& values) {
  check_node(a);
  check_node(b);
  const int ka = layout_.attr_count(a);
  const int kb = layout_.attr_count(b);
  if (values.rows() != ka || values.cols() != kb)
    throw InputError("block (" + std::to_string(a) + "," + std::to_string(b) + ") must be " +
                     std::to_string(ka) + "x" + std::to_string(kb));
  if (!values.allFinite()) throw InputError("block has non-finite entries");
  if (a == b) {
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    if (asymmetry(values) > kSymmetryTol * scale)
      throw InputError("diagonal block " + std::to_string(a) + " must be symmetric");
    data_.block(layout_.offset(a), layout_.offset(a), ka, ka) =
        0.5 * (values + values.transpose());
    return;
  }
  data_.block(layout_.offset(a), layout_.offset(b), ka, kb) = values;
  data_.block(layout_.offset(b), layout_.offset(a), kb, ka) = values.transpose();
}

double BlockSymMatrix::block_norm(int a, int b) const { return block_view(a, b).stableNorm(); }

BlockSymMatrix BlockSymMatrix::restrict_to(std::span<const int> nodes) const {
  for (int a : nodes) check_node(a);
  const std::vector<int> dims = layout_.dims_of(nodes);
  const auto n = static_cast<Eigen::Index>(dims.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = data_(dims[i], dims[j]);
  return BlockSymMatrix(layout_.subset(nodes), std::move(sub));
}

BlockNormMatrix c_operator(const Eigen::Ref<const Eigen::MatrixXd>& m, const AttributeLayout& rows,
                           const AttributeLayout& cols) {
  if (m.rows() != rows.total_dim() || m.cols() != cols.total_dim())
    throw InputError("matrix shape does not match block layouts");
  BlockNormMatrix out(rows.node_count(), cols.node_count());
  for (int a = 0; a < rows.node_count(); ++a)
    for (int b = 0; b < cols.node_count(); ++b)
      out(a, b) = m.block(rows.offset(a), cols.offset(b), rows.attr_count(a), cols.attr_count(b))
                      .stableNorm();
  return out;
}

BlockNormMatrix c_operator(const BlockSymMatrix& m) {
  const int p = m.node_count();
  BlockNormMatrix out(p, p);
  for (int a = 0; a < p; ++a) {
    out(a, a) = m.block_norm(a, a);
    for (int b = a + 1; b < p; ++b) out(a, b) = out(b, a) = m.block_norm(a, b);
  }
  return out;
}

double linf_op_norm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_offdiag_block_norm(const BlockSymMatrix& m) {
  double best = 0.0;
  for (int a = 0; a < m.node_count(); ++a)
    for (int b = a + 1; b < m.node_count(); ++b) best = std::max(best, m.block_norm(a, b));
  return best;
}

}  // namespace magnet
