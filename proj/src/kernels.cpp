#include "rmrp/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace rmrp::kernels {

Eigen::MatrixXd projected_features(const RandomFeatureMap& map, const SparseProjection& projection,
                                   const Eigen::Ref<const Eigen::MatrixXd>& points,
                                   Execution exec) {
  if (points.rows() != map.input_dim()) {
    throw std::invalid_argument("projected_features: point dimension mismatch");
  }
  if (projection.cols() != map.feature_dim()) {
    throw std::invalid_argument("projected_features: projection cols != M");
  }
  // Blocks of columns: lift into a row-major M x B tile, then stream each
  // projection row over contiguous tile rows.
  constexpr Eigen::Index kTile = 16;
  Eigen::MatrixXd out(projection.rows(), points.cols());
  const auto tiles = static_cast<std::size_t>((points.cols() + kTile - 1) / kTile);
  for_each_index(tiles, exec, [&](std::size_t t) {
    const Eigen::Index start = static_cast<Eigen::Index>(t) * kTile;
    const Eigen::Index n = std::min(kTile, points.cols() - start);
    SparseProjection::RowMatrix lifted(map.feature_dim(), n);
    Eigen::VectorXd column(map.feature_dim());
    for (Eigen::Index c = 0; c < n; ++c) {
      map.lift_into(points.col(start + c), column);
      lifted.col(c) = column;
    }
    SparseProjection::RowMatrix projected;
    projection.project_block(lifted, projected);
    out.middleCols(start, n) = projected;
  });
  return out;
}

Eigen::VectorXd field_values(const ParametricField& field,
                             const Eigen::Ref<const Eigen::MatrixXd>& points, Execution exec) {
  Eigen::VectorXd out(points.cols());
  constexpr Eigen::Index kBlock = 1024;
  const auto blocks = static_cast<std::size_t>((points.cols() + kBlock - 1) / kBlock);
  // Blocks run serially; projected_features parallelizes inside each one.
  for (std::size_t b = 0; b < blocks; ++b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index n = std::min(kBlock, points.cols() - start);
    const Eigen::MatrixXd f = projected_features(field.feature_map(), field.projection(),
                                                 points.middleCols(start, n), exec);
    for (Eigen::Index c = 0; c < n; ++c) out(start + c) = field.head().weights.dot(f.col(c));
  }
  return out;
}

NormalEquations accumulate_normal_equations(const RandomFeatureMap& map,
                                            const SparseProjection& projection,
                                            const Eigen::Ref<const Eigen::MatrixXd>& points,
                                            const Eigen::Ref<const Eigen::VectorXd>& targets,
                                            Execution exec, Eigen::Index block) {
  if (points.cols() != targets.size()) {
    throw std::invalid_argument("normal equations: points/targets count mismatch");
  }
  const Eigen::Index k = projection.rows();
  NormalEquations eq{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)};
  for (Eigen::Index start = 0; start < points.cols(); start += block) {
    const Eigen::Index n = std::min(block, points.cols() - start);
    const Eigen::MatrixXd f =
        projected_features(map, projection, points.middleCols(start, n), exec);
    eq.gram.selfadjointView<Eigen::Lower>().rankUpdate(f);
    eq.rhs.noalias() += f * targets.segment(start, n);
  }
  eq.gram = eq.gram.selfadjointView<Eigen::Lower>();
  return eq;
}

namespace reference {

Eigen::MatrixXd projected_features(const RandomFeatureMap& map, const SparseProjection& projection,
                                   const Eigen::Ref<const Eigen::MatrixXd>& points) {
  Eigen::MatrixXd phases = map.weights() * points;
  phases.colwise() += map.biases();
  const Eigen::MatrixXd lifted = phases.array().sin().matrix();
  return projection.to_dense() * lifted;
}

Eigen::VectorXd field_values(const ParametricField& field,
                             const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const Eigen::MatrixXd f = projected_features(field.feature_map(), field.projection(), points);
  return f.transpose() * field.head().weights;
}

NormalEquations normal_equations(const RandomFeatureMap& map, const SparseProjection& projection,
                                 const Eigen::Ref<const Eigen::MatrixXd>& points,
                                 const Eigen::Ref<const Eigen::VectorXd>& targets) {
  const Eigen::MatrixXd f = projected_features(map, projection, points);
  return {f * f.transpose(), f * targets};
}

}  // namespace reference

}  // namespace rmrp::kernels
