#pragma once

#include <Eigen/Dense>

#include "rmrp/field.hpp"
#include "rmrp/parallel.hpp"
#include "rmrp/random_features.hpp"
#include "rmrp/sparse_projection.hpp"

namespace rmrp::kernels {

/// R sin(W X + b) for a point batch X (d x L), one column per point.
Eigen::MatrixXd projected_features(const RandomFeatureMap& map, const SparseProjection& projection,
                                   const Eigen::Ref<const Eigen::MatrixXd>& points,
                                   Execution exec = Execution::kParallel);

/// field.value at every column of points.
Eigen::VectorXd field_values(const ParametricField& field,
                             const Eigen::Ref<const Eigen::MatrixXd>& points,
                             Execution exec = Execution::kParallel);

struct NormalEquations {
  Eigen::MatrixXd gram;  ///< F F^T
  Eigen::VectorXd rhs;   ///< F T
};

/// Accumulates the ridge normal equations over fixed-size column blocks.
/// Feature columns are built in parallel; the block reduction order is
/// fixed, so the result does not depend on the thread count.
NormalEquations accumulate_normal_equations(const RandomFeatureMap& map,
                                            const SparseProjection& projection,
                                            const Eigen::Ref<const Eigen::MatrixXd>& points,
                                            const Eigen::Ref<const Eigen::VectorXd>& targets,
                                            Execution exec = Execution::kParallel,
                                            Eigen::Index block = 4096);

/// Straight-line dense implementations kept as test oracles for the
/// kernels above.
namespace reference {

Eigen::MatrixXd projected_features(const RandomFeatureMap& map, const SparseProjection& projection,
                                   const Eigen::Ref<const Eigen::MatrixXd>& points);

Eigen::VectorXd field_values(const ParametricField& field,
                             const Eigen::Ref<const Eigen::MatrixXd>& points);

NormalEquations normal_equations(const RandomFeatureMap& map, const SparseProjection& projection,
                                 const Eigen::Ref<const Eigen::MatrixXd>& points,
                                 const Eigen::Ref<const Eigen::VectorXd>& targets);

}  // namespace reference

}  // namespace rmrp::kernels
