#pragma once

#include "vcdet/types.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace vcdet {

/// Uniform grid hash over a point set for fixed-radius neighbor queries.
/// With cell size equal to the query radius, any neighbor lies in the 27
/// cells around the query cell.
class VoxelHash {
 public:
  VoxelHash() = default;
  VoxelHash(std::span<const Vec3> points, double cell_size);

  /// True when some indexed point lies within `radius` (<= cell size).
  bool has_neighbor(const Vec3& q, double radius) const;
  double cell_size() const { return cell_; }
  std::size_t size() const { return points_.size(); }

 private:
  using Key = std::uint64_t;
  Key key_of(const Vec3& p) const;
  static Key pack(std::int64_t x, std::int64_t y, std::int64_t z);

  double cell_ = 1.0;
  std::vector<Vec3> points_;
  std::unordered_map<Key, std::vector<std::uint32_t>> cells_;
};

/// Fraction of `containee` points that have a point of `container` within
/// `radius`. Throws InputError on empty containee.
double coverage_ratio(const VoxelHash& container, std::span<const Vec3> containee, double radius);

bool contains(const VoxelHash& container, std::span<const Vec3> containee, double tau_contain,
              double radius);
bool contains(std::span<const Vec3> container, std::span<const Vec3> containee,
              double tau_contain, double radius);

}  // namespace vcdet
