#include "rmrp/sparse_projection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rmrp/rng.hpp"

namespace rmrp {

SparseProjection SparseProjection::build(int rows, int cols, double density,
                                         std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("projection dimensions must be positive");
  }
  if (rows > cols) {
    throw std::invalid_argument("projection must reduce: k=" + std::to_string(rows) +
                                " > M=" + std::to_string(cols));
  }
  if (!(density >= 1.0) || !std::isfinite(density)) {
    throw std::invalid_argument("sparsity parameter s must be >= 1");
  }
  SparseProjection r;
  r.rows_ = rows;
  r.cols_ = cols;
  r.density_ = density;
  r.seed_ = seed;
  r.magnitude_ = std::sqrt(density / rows);
  r.kind_ = ProjectionKind::kAchlioptas;
  r.row_start_.reserve(static_cast<std::size_t>(rows) + 1);
  r.row_start_.push_back(0);

  const double half = 0.5 / density;
  const double nonzero = 1.0 / density;
  Rng rng(seed);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double u = rng.uniform();
      if (u < nonzero) {
        r.col_index_.push_back(static_cast<std::uint32_t>(j));
        r.sign_.push_back(u < half ? std::int8_t{1} : std::int8_t{-1});
      }
    }
    r.row_start_.push_back(static_cast<std::uint32_t>(r.col_index_.size()));
  }
  return r;
}

SparseProjection SparseProjection::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("identity projection needs dim >= 1");
  SparseProjection r;
  r.rows_ = dim;
  r.cols_ = dim;
  r.density_ = 1.0;
  r.magnitude_ = 1.0;
  r.kind_ = ProjectionKind::kIdentity;
  r.row_start_.resize(static_cast<std::size_t>(dim) + 1);
  for (int i = 0; i <= dim; ++i) r.row_start_[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
  r.col_index_.resize(static_cast<std::size_t>(dim));
  r.sign_.assign(static_cast<std::size_t>(dim), 1);
  for (int i = 0; i < dim; ++i) r.col_index_[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
  return r;
}

SparseProjection SparseProjection::from_entries(int rows, int cols, double density,
                                                std::uint64_t seed, double magnitude,
                                                ProjectionKind kind,
                                                const std::vector<Entry>& entries) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("projection dimensions must be positive");
  }
  SparseProjection r;
  r.rows_ = rows;
  r.cols_ = cols;
  r.density_ = density;
  r.seed_ = seed;
  r.magnitude_ = magnitude;
  r.kind_ = kind;
  r.row_start_.assign(static_cast<std::size_t>(rows) + 1, 0);
  std::uint32_t previous_row = 0;
  for (const Entry& e : entries) {
    if (e.row >= static_cast<std::uint32_t>(rows) || e.col >= static_cast<std::uint32_t>(cols) ||
        (e.sign != 1 && e.sign != -1) || e.row < previous_row) {
      throw std::invalid_argument("projection entries malformed or not row-major");
    }
    previous_row = e.row;
    r.row_start_[e.row + 1]++;
    r.col_index_.push_back(e.col);
    r.sign_.push_back(e.sign);
  }
  for (std::size_t i = 1; i < r.row_start_.size(); ++i) r.row_start_[i] += r.row_start_[i - 1];
  return r;
}

std::vector<SparseProjection::Entry> SparseProjection::entries() const {
  std::vector<Entry> out;
  out.reserve(col_index_.size());
  for (int i = 0; i < rows_; ++i) {
    for (std::uint32_t p = row_start_[static_cast<std::size_t>(i)];
         p < row_start_[static_cast<std::size_t>(i) + 1]; ++p) {
      out.push_back({static_cast<std::uint32_t>(i), col_index_[p], sign_[p]});
    }
  }
  return out;
}

Eigen::VectorXd SparseProjection::project(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd out(rows_);
  project_into(v, out);
  return out;
}

void SparseProjection::project_into(const Eigen::Ref<const Eigen::VectorXd>& v,
                                    Eigen::Ref<Eigen::VectorXd> out) const {
  if (v.size() != cols_) {
    throw std::invalid_argument("project: vector length " + std::to_string(v.size()) +
                                " != M=" + std::to_string(cols_));
  }
  for (int i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::uint32_t p = row_start_[static_cast<std::size_t>(i)];
         p < row_start_[static_cast<std::size_t>(i) + 1]; ++p) {
      acc += static_cast<double>(sign_[p]) * v(col_index_[p]);
    }
    out(i) = magnitude_ * acc;
  }
}

void SparseProjection::project_block(const RowMatrix& lifted, RowMatrix& out) const {
  if (lifted.rows() != cols_) {
    throw std::invalid_argument("project_block: block has " + std::to_string(lifted.rows()) +
                                " rows, expected M=" + std::to_string(cols_));
  }
  out.setZero(rows_, lifted.cols());
  for (int i = 0; i < rows_; ++i) {
    auto acc = out.row(i);
    for (std::uint32_t p = row_start_[static_cast<std::size_t>(i)];
         p < row_start_[static_cast<std::size_t>(i) + 1]; ++p) {
      acc += static_cast<double>(sign_[p]) * lifted.row(col_index_[p]);
    }
    acc *= magnitude_;
  }
}

Eigen::VectorXd SparseProjection::project_transpose(
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != rows_) {
    throw std::invalid_argument("project_transpose: vector length " +
                                std::to_string(u.size()) + " != k=" + std::to_string(rows_));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cols_);
  for (int i = 0; i < rows_; ++i) {
    const double scaled = magnitude_ * u(i);
    for (std::uint32_t p = row_start_[static_cast<std::size_t>(i)];
         p < row_start_[static_cast<std::size_t>(i) + 1]; ++p) {
      out(col_index_[p]) += static_cast<double>(sign_[p]) * scaled;
    }
  }
  return out;
}

Eigen::MatrixXd SparseProjection::project_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.rows() != cols_) {
    throw std::invalid_argument("project_columns: batch has " + std::to_string(x.rows()) +
                                " rows, expected M=" + std::to_string(cols_));
  }
  Eigen::MatrixXd out(rows_, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) project_into(x.col(c), out.col(c));
  return out;
}

Eigen::MatrixXd SparseProjection::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows_, cols_);
  for (const Entry& e : entries()) dense(e.row, e.col) = magnitude_ * e.sign;
  return dense;
}

}  // namespace rmrp
