#include "perfkit/lattice.hpp"

#include <stdexcept>
#include <string>

namespace perfkit {

Lattice Lattice::build(std::size_t nx, std::size_t ny, std::vector<std::uint8_t> mask) {
  if (nx == 0 || ny == 0) throw std::invalid_argument("lattice extents must be >= 1");
  if (mask.size() != nx * ny)
    throw std::invalid_argument("mask length " + std::to_string(mask.size()) + " does not match " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  Lattice lat;
  lat.nx_ = nx;
  lat.ny_ = ny;
  lat.mask_ = std::move(mask);

  const std::size_t n = nx * ny;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t r = 0; r < ny; ++r) {
    for (std::size_t c = 0; c < nx; ++c) {
      const std::size_t i = r * nx + c;
      if (!lat.mask_[i]) continue;
      lat.voxels_.push_back(i);
      // Right and down neighbours only, so each pair is visited once.
      if (c + 1 < nx && lat.mask_[i + 1]) lat.edges_.emplace_back(i, i + 1);
      if (r + 1 < ny && lat.mask_[i + nx]) lat.edges_.emplace_back(i, i + nx);
    }
  }
  for (const auto& [a, b] : lat.edges_) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  lat.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    lat.offsets_[i + 1] = lat.offsets_[i] + adj[i].size();
    lat.adjacency_.insert(lat.adjacency_.end(), adj[i].begin(), adj[i].end());
  }
  return lat;
}

double pair_diff_sumsq(const Lattice& lattice, std::span<const double> field) {
  if (field.size() != lattice.size()) throw std::invalid_argument("field length does not match lattice");
  double sum = 0.0;
  for (const auto& [a, b] : lattice.edges()) {
    const double d = field[a] - field[b];
    sum += d * d;
  }
  return sum;
}

double local_diff_sumsq(const Lattice& lattice, std::size_t i, std::span<const double> field) {
  if (!lattice.in_mask(i)) throw std::out_of_range("voxel " + std::to_string(i) + " is outside the mask");
  double sum = 0.0;
  for (std::size_t j : lattice.neighbours(i)) {
    const double d = field[i] - field[j];
    sum += d * d;
  }
  return sum;
}

}  // namespace perfkit
