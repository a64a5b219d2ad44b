#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace rmrp {

enum class ProjectionKind : std::uint8_t { kAchlioptas = 0, kIdentity = 1 };

/// Sparse k x M random projection with entries in {0, +c, -c}.
///
/// Achlioptas construction: each entry is +sqrt(s/k) with probability
/// 1/(2s), -sqrt(s/k) with probability 1/(2s), zero otherwise, giving unit
/// expected column energy. Entries are stored as signs in CSR form with one
/// shared magnitude, so R v costs O(nnz).
class SparseProjection {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    std::int8_t sign;
  };

  static SparseProjection build(int rows, int cols, double density, std::uint64_t seed);

  /// k = M identity (used by terrain fields, whose model has no projection).
  static SparseProjection identity(int dim);

  /// Reassembles a projection from stored entries (checkpoint loading).
  static SparseProjection from_entries(int rows, int cols, double density,
                                       std::uint64_t seed, double magnitude,
                                       ProjectionKind kind,
                                       const std::vector<Entry>& entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double density() const { return density_; }
  std::uint64_t seed() const { return seed_; }
  double magnitude() const { return magnitude_; }
  ProjectionKind kind() const { return kind_; }
  std::size_t nonzeros() const { return col_index_.size(); }

  /// Entries in row-major order.
  std::vector<Entry> entries() const;

  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  void project_into(const Eigen::Ref<const Eigen::VectorXd>& v,
                    Eigen::Ref<Eigen::VectorXd> out) const;

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// R L for a row-major block of lifted columns (M x B). Same summation
  /// order as project_into, so each column matches it bit for bit.
  void project_block(const RowMatrix& lifted, RowMatrix& out) const;

  /// R^T u.
  Eigen::VectorXd project_transpose(const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// R X for a column batch X (M x L).
  Eigen::MatrixXd project_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  Eigen::MatrixXd to_dense() const;

 private:
  SparseProjection() = default;

  int rows_ = 0;
  int cols_ = 0;
  double density_ = 1.0;
  std::uint64_t seed_ = 0;
  double magnitude_ = 1.0;
  ProjectionKind kind_ = ProjectionKind::kAchlioptas;
  std::vector<std::uint32_t> row_start_;
  std::vector<std::uint32_t> col_index_;
  std::vector<std::int8_t> sign_;
};

}  // namespace rmrp
