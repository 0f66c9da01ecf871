// 2-D voxel grid with a region-of-interest mask and first-order (4-adjacent)
// neighbourhoods. Voxels are indexed row-major: i = row * nx + col.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace perfkit {

class Lattice {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  /// Throws std::invalid_argument for zero extents or a mask of the wrong length.
  static Lattice build(std::size_t nx, std::size_t ny, std::vector<std::uint8_t> mask);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  bool in_mask(std::size_t i) const { return i < mask_.size() && mask_[i] != 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  /// Masked voxel indices in ascending order.
  std::span<const std::size_t> voxels() const { return voxels_; }

  /// Each unordered neighbour pair once, with first < second.
  std::span<const Edge> edges() const { return edges_; }

  std::span<const std::size_t> neighbours(std::size_t i) const {
    return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> voxels_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
};

/// Sum over edges of (field_i - field_j)^2.
double pair_diff_sumsq(const Lattice& lattice, std::span<const double> field);

/// Sum over j in the neighbourhood of i of (field_i - field_j)^2. Throws
/// std::out_of_range for voxels outside the mask.
double local_diff_sumsq(const Lattice& lattice, std::size_t i, std::span<const double> field);

}  // namespace perfkit
