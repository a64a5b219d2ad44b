#pragma once

#include <cstddef>
#include <cstdint>

namespace rmrp {

/// Selects between the OpenMP kernel and the plain serial loop. The serial
/// path is the reference the parallel one is tested against; both visit
/// every index exactly once and write disjoint outputs, so results are
/// bit-identical.
enum class Execution { kSerial, kParallel };

template <typename Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
  if (exec == Execution::kParallel) {
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < count; ++i) body(i);
  }
}

int max_threads();

}  // namespace rmrp
