#pragma once

#include <vector>

#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

/// Minimum-cost assignment for a rectangular cost matrix. Returns, for each
/// row, the assigned column or -1 (only when rows > cols).
std::vector<int> hungarian(const MatX& cost);

}  // namespace phtmpc
