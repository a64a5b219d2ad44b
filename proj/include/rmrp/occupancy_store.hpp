#pragma once

#include <Eigen/Dense>
#include <array>
#include <set>

namespace rmrp {

using CellIndex = std::array<int, 3>;

/// Sparse discrete occupancy map: the set of occupied voxels on a regular
/// grid anchored at origin.
class OccupancyStore {
 public:
  OccupancyStore(double pitch, const Eigen::Vector3d& origin = Eigen::Vector3d::Zero());

  double pitch() const { return pitch_; }
  const Eigen::Vector3d& origin() const { return origin_; }

  CellIndex cell_of(const Eigen::Vector3d& p) const;
  Eigen::Vector3d center_of(const CellIndex& cell) const;

  bool occupied(const CellIndex& cell) const { return cells_.count(cell) != 0; }
  /// Returns true if the cell was not occupied before.
  bool mark_occupied(const CellIndex& cell) { return cells_.insert(cell).second; }

  std::size_t size() const { return cells_.size(); }
  const std::set<CellIndex>& cells() const { return cells_; }

  bool operator==(const OccupancyStore& other) const = default;

 private:
  double pitch_;
  Eigen::Vector3d origin_;
  std::set<CellIndex> cells_;
};

}  // namespace rmrp
