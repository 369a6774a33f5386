#pragma once

#include <cstdint>
#include <vector>

#include "phtmpc/geometry/voxel_grid.hpp"

namespace phtmpc {

/// Exact squared Euclidean distance transform (in voxel units) of a binary
/// mask laid out like VoxelGrid (x fastest). Voxels with mask != 0 are
/// sources. Without sources every value is +infinity.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& mask, const Index3& dims);

/// Distance field in metres written into `grid` (same dims as the mask).
void distance_field(const std::vector<std::uint8_t>& mask, VoxelGrid& grid, double empty_value);

}  // namespace phtmpc
