#include "rmrp/occupancy_store.hpp"

#include <cmath>
#include <stdexcept>

namespace rmrp {

OccupancyStore::OccupancyStore(double pitch, const Eigen::Vector3d& origin)
    : pitch_(pitch), origin_(origin) {
  if (!(pitch > 0.0)) throw std::invalid_argument("occupancy store pitch must be > 0");
}

CellIndex OccupancyStore::cell_of(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d r = (p - origin_) / pitch_;
  return {static_cast<int>(std::floor(r.x())), static_cast<int>(std::floor(r.y())),
          static_cast<int>(std::floor(r.z()))};
}

Eigen::Vector3d OccupancyStore::center_of(const CellIndex& cell) const {
  return origin_ + pitch_ * Eigen::Vector3d(cell[0] + 0.5, cell[1] + 0.5, cell[2] + 0.5);
}

}  // namespace rmrp
