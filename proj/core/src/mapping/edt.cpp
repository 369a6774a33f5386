#include "phtmpc/mapping/edt.hpp"

#include <cmath>
#include <limits>

namespace phtmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas, one line at a time.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.resize(static_cast<size_t>(n));
  z.resize(static_cast<size_t>(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<size_t>(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<size_t>(k)]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<size_t>(j)];
    d[q] = double(q - p) * (q - p) + f[p];
  }
}

}  // namespace

std::vector<double> squared_edt(const std::vector<std::uint8_t>& mask, const Index3& dims) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const size_t total = static_cast<size_t>(nx) * ny * nz;
  std::vector<double> g(total);
  for (size_t i = 0; i < total; ++i) g[i] = mask[i] ? 0.0 : kInf;

  std::vector<int> v;
  std::vector<double> z, f, d;
  const auto pass = [&](int n, int count, auto index) {
    f.resize(static_cast<size_t>(n));
    d.resize(static_cast<size_t>(n));
    for (int line = 0; line < count; ++line) {
      for (int q = 0; q < n; ++q) f[static_cast<size_t>(q)] = g[index(line, q)];
      edt_1d(f.data(), d.data(), n, v, z);
      for (int q = 0; q < n; ++q) g[index(line, q)] = d[static_cast<size_t>(q)];
    }
  };
  const size_t sx = 1, sy = static_cast<size_t>(nx), sz = static_cast<size_t>(nx) * ny;
  pass(nx, ny * nz, [&](int line, int q) { return static_cast<size_t>(line) * sy + q * sx; });
  pass(ny, nx * nz, [&](int line, int q) {
    const size_t i = static_cast<size_t>(line % nx), k = static_cast<size_t>(line / nx);
    return k * sz + static_cast<size_t>(q) * sy + i;
  });
  pass(nz, nx * ny, [&](int line, int q) { return static_cast<size_t>(q) * sz + static_cast<size_t>(line); });
  return g;
}

void distance_field(const std::vector<std::uint8_t>& mask, VoxelGrid& grid, double empty_value) {
  const auto sq = squared_edt(mask, grid.dims());
  const double h = grid.voxel_size();
  for (size_t i = 0; i < sq.size(); ++i) grid[i] = std::isinf(sq[i]) ? empty_value : h * std::sqrt(sq[i]);
}

}  // namespace phtmpc
