#pragma once

#include "perfkit/kinetics.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace perfkit {

/// Observed concentrations on an nx-by-ny slice. `observed` holds one series of
/// length T per voxel (all nx*ny voxels, row-major); rows outside the mask are
/// carried but ignored by the fit.
struct Dataset {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<std::uint8_t> mask;
  TimeGrid grid;
  AifParams aif;
  std::vector<double> observed;

  std::size_t num_voxels() const { return nx * ny; }
  std::size_t num_times() const { return grid.size(); }
  std::size_t masked_count() const;

  std::span<const double> series(std::size_t voxel) const {
    return {observed.data() + voxel * grid.size(), grid.size()};
  }
  std::span<double> series(std::size_t voxel) { return {observed.data() + voxel * grid.size(), grid.size()}; }

  /// Throws DimensionError, EmptyMaskError or std::invalid_argument.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

}  // namespace perfkit
