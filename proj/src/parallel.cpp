#include "rmrp/parallel.hpp"

#include <omp.h>

namespace rmrp {

int max_threads() { return omp_get_max_threads(); }

}  // namespace rmrp
