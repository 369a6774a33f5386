#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "phtmpc/geometry/voxel_grid.hpp"

namespace phtmpc {

/// Portable voxel file, little-endian throughout:
///   char[4] "PHVX" | u32 version (1) | i32 dims[3] | f64 origin[3] | f64 voxel_size | f64 values[]
/// Values are ordered with x fastest, then y, then z.
inline constexpr std::uint32_t kVoxelFormatVersion = 1;

void write_voxel_grid(std::ostream& out, const VoxelGrid& grid);
VoxelGrid read_voxel_grid(std::istream& in);

void save_voxel_grid(const std::string& path, const VoxelGrid& grid);
VoxelGrid load_voxel_grid(const std::string& path);

}  // namespace phtmpc
