#include "phtmpc/mapping/voxel_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace phtmpc {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof bits);
  std::array<char, sizeof(T)> bytes{};
  for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("voxel file truncated");
  U bits = 0;
  for (size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

}  // namespace

void write_voxel_grid(std::ostream& out, const VoxelGrid& grid) {
  out.write("PHVX", 4);
  put<std::uint32_t>(out, kVoxelFormatVersion);
  for (int d : grid.dims()) put<std::int32_t>(out, d);
  for (int a = 0; a < 3; ++a) put<double>(out, grid.origin()(a));
  put<double>(out, grid.voxel_size());
  for (double v : grid.values()) put<double>(out, v);
}

VoxelGrid read_voxel_grid(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PHVX", 4) != 0) throw std::runtime_error("not a voxel file");
  const auto version = get<std::uint32_t>(in);
  if (version != kVoxelFormatVersion) throw std::runtime_error("unsupported voxel file version");
  Index3 dims{};
  for (auto& d : dims) {
    d = get<std::int32_t>(in);
    if (d < 0) throw std::runtime_error("negative voxel dimension");
  }
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin(a) = get<double>(in);
  const double h = get<double>(in);
  VoxelGrid grid(origin, h, dims, 0.0);
  for (size_t i = 0; i < grid.size(); ++i) grid[i] = get<double>(in);
  return grid;
}

void save_voxel_grid(const std::string& path, const VoxelGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_voxel_grid(out, grid);
}

VoxelGrid load_voxel_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_voxel_grid(in);
}

}  // namespace phtmpc
