#include "vcdet/voxel_hash.hpp"

#include "vcdet/error.hpp"

#include <cmath>

namespace vcdet {

VoxelHash::VoxelHash(std::span<const Vec3> points, double cell_size)
    : cell_(cell_size), points_(points.begin(), points.end()) {
  if (!(cell_size > 0.0)) throw ConfigError("VoxelHash: cell size must be > 0");
  cells_.reserve(points_.size() / 4 + 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cells_[key_of(points_[i])].push_back(static_cast<std::uint32_t>(i));
  }
}

VoxelHash::Key VoxelHash::pack(std::int64_t x, std::int64_t y, std::int64_t z) {
  // 21 bits per axis, two's complement truncated.
  constexpr std::uint64_t mask = (1ULL << 21) - 1;
  return (static_cast<std::uint64_t>(x) & mask) | ((static_cast<std::uint64_t>(y) & mask) << 21) |
         ((static_cast<std::uint64_t>(z) & mask) << 42);
}

VoxelHash::Key VoxelHash::key_of(const Vec3& p) const {
  return pack(static_cast<std::int64_t>(std::floor(p.x() / cell_)),
              static_cast<std::int64_t>(std::floor(p.y() / cell_)),
              static_cast<std::int64_t>(std::floor(p.z() / cell_)));
}

bool VoxelHash::has_neighbor(const Vec3& q, double radius) const {
  const double r2 = radius * radius;
  const auto cx = static_cast<std::int64_t>(std::floor(q.x() / cell_));
  const auto cy = static_cast<std::int64_t>(std::floor(q.y() / cell_));
  const auto cz = static_cast<std::int64_t>(std::floor(q.z() / cell_));
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (auto idx : it->second) {
          if ((points_[idx] - q).squaredNorm() <= r2) return true;
        }
      }
    }
  }
  return false;
}

double coverage_ratio(const VoxelHash& container, std::span<const Vec3> containee, double radius) {
  if (containee.empty()) throw InputError("containment test: empty containee");
  if (radius > container.cell_size() * (1.0 + 1e-12)) {
    throw ConfigError("containment radius exceeds voxel cell size");
  }
  std::size_t covered = 0;
  for (const auto& p : containee) covered += container.has_neighbor(p, radius);
  return static_cast<double>(covered) / static_cast<double>(containee.size());
}

bool contains(const VoxelHash& container, std::span<const Vec3> containee, double tau_contain, double radius) {
  return coverage_ratio(container, containee, radius) >= tau_contain;
}

bool contains(std::span<const Vec3> container, std::span<const Vec3> containee, double tau_contain,
              double radius) {
  if (containee.empty()) throw InputError("containment test: empty containee");
  if (container.empty()) return false;
  return contains(VoxelHash(container, radius), containee, tau_contain, radius);
}

}  // namespace vcdet
