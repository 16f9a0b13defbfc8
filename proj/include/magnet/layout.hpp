#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace magnet {

/// Maps p nodes onto the stacked attribute space. Node a owns the rows
/// [offset(a), offset(a) + attr_count(a)).
class AttributeLayout {
 public:
  AttributeLayout() = default;
  explicit AttributeLayout(std::vector<int> attr_counts);

  static AttributeLayout uniform(int nodes, int attrs_per_node);

  int node_count() const { return static_cast<int>(counts_.size()); }
  int attr_count(int a) const { return counts_.at(a); }
  int offset(int a) const { return offsets_.at(a); }
  int total_dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int max_attr_count() const;
  const std::vector<int>& attr_counts() const { return counts_; }
  const std::vector<int>& offsets() const { return offsets_; }

  /// Layout of the listed nodes, in the given order.
  AttributeLayout subset(std::span<const int> nodes) const;
  /// Stacked-space indices of the listed nodes, in the given order.
  std::vector<int> dims_of(std::span<const int> nodes) const;

  friend bool operator==(const AttributeLayout&, const AttributeLayout&) = default;

 private:
  std::vector<int> counts_;
  std::vector<int> offsets_;  // size p + 1
};

/// Per-block Frobenius norms, p_rows x p_cols, entries >= 0.
using BlockNormMatrix = Eigen::MatrixXd;

/// Dense symmetric matrix over the stacked space of an AttributeLayout.
/// Off-diagonal block writes are mirrored so the storage stays exactly
/// symmetric.
class BlockSymMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  BlockSymMatrix() = default;
  /// Zero matrix.
  explicit BlockSymMatrix(AttributeLayout layout);
  /// Symmetrizes inputs that are asymmetric within kSymmetryTol (relative to
  /// max(1, max|m|)); throws InputError beyond that.
  BlockSymMatrix(AttributeLayout layout, Eigen::MatrixXd dense);

  static BlockSymMatrix identity(AttributeLayout layout);

  const AttributeLayout& layout() const { return layout_; }
  const Eigen::MatrixXd& dense() const { return data_; }
  int node_count() const { return layout_.node_count(); }
  int total_dim() const { return layout_.total_dim(); }

  Eigen::MatrixXd block(int a, int b) const;
  Eigen::Block<const Eigen::MatrixXd> block_view(int a, int b) const;
  /// Writes block (a,b) and its mirror (b,a). Diagonal blocks must be
  /// symmetric.
  void set_block(int a, int b, const Eigen::Ref<const Eigen::MatrixXd>& values);
  double block_norm(int a, int b) const;

  /// Principal submatrix over the listed nodes, rows in the given order.
  BlockSymMatrix restrict_to(std::span<const int> nodes) const;

 private:
  void check_node(int a) const;

  AttributeLayout layout_;
  Eigen::MatrixXd data_;
};

/// C(m): Frobenius norm of every (a,b) block.
BlockNormMatrix c_operator(const BlockSymMatrix& m);

/// C(m) for a general (possibly rectangular, non-symmetric) block matrix.
BlockNormMatrix c_operator(const Eigen::Ref<const Eigen::MatrixXd>& m, const AttributeLayout& rows,
                           const AttributeLayout& cols);

/// Maximum absolute row sum.
double linf_op_norm(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// max over a != b of ||m_ab||_F; 0 when p = 1.
double max_offdiag_block_norm(const BlockSymMatrix& m);

/// max |m_ij - m_ji|, used to validate "symmetric" inputs.
double asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace magnet
