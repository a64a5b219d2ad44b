#pragma once

#include <Eigen/Dense>

namespace rmrp {

/// Axis-aligned box. Empty when any max < min.
struct Box3 {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool empty() const { return (max.array() < min.array()).any(); }
  Eigen::Vector3d extent() const { return max - min; }
  double volume() const {
    return empty() ? 0.0 : extent().prod();
  }
};

}  // namespace rmrp
