#include "phtmpc/mapping/snapshot.hpp"

#include <cstring>

namespace phtmpc {

namespace {

void fnv_mix(std::uint64_t& h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

std::uint64_t MapSnapshot::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_mix(h, &version, sizeof version);
  const auto& v = edf.values();
  if (!v.empty()) fnv_mix(h, v.data(), v.size() * sizeof(double));
  if (library) {
    for (const auto& o : library->objects) {
      fnv_mix(h, &o.id, sizeof o.id);
      fnv_mix(h, &o.params, sizeof o.params);
    }
  }
  return h;
}

}  // namespace phtmpc
