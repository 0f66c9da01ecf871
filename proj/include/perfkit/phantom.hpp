// Synthetic block phantom: two-compartment blocks (one with a radial k_ep1
// ramp) and two one-compartment blocks, with per-voxel multiplicative
// parameter jitter and additive Gaussian noise.

#pragma once

#include "perfkit/dataset.hpp"
#include "perfkit/kinetics.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace perfkit {

enum class BlockKind {
  TwoComp,      // k_ep = (slow, fast), equal volumes
  TwoCompRamp,  // as TwoComp, k_ep1 rising radially from the block centre
  OneCompSlow,  // only the slow compartment, v_t1 = 1
  OneCompFast,  // only the fast compartment, v_t2 = 1
};

/// Rectangle of voxels; 0-based, half-open row and column ranges.
struct Block {
  char label = '?';
  BlockKind kind = BlockKind::TwoComp;
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;

  bool contains(std::size_t row, std::size_t col) const {
    return row >= row_begin && row < row_end && col >= col_begin && col < col_end;
  }
  bool operator==(const Block&) const = default;
};

/// Five-block layout of the 25x25 reference phantom, scaled to nx x ny:
///   A  rows  1-8,  cols  1-12  two-compartment
///   B  rows  1-12, cols 13-25  two-compartment
///   C  rows  9-25, cols  1-12  two-compartment with k_ep1 ramp to the bottom-left corner
///   D  rows 13-18, cols 13-25  slow one-compartment
///   E  rows 19-25, cols 13-25  fast one-compartment
/// (1-based, inclusive, for 25x25).
std::vector<Block> default_layout(std::size_t nx, std::size_t ny);

struct PhantomConfig {
  std::size_t nx = 25;
  std::size_t ny = 25;
  std::size_t num_times = 40;
  double dt = 0.15;  // min
  AifParams aif{.dose = 0.2};
  double sigma = 0.05;
  double jitter_lo = 0.8;
  double jitter_hi = 1.2;
  double k_ep_slow = 0.2;
  double k_ep_fast = 4.0;
  double ramp_max = 0.5;       // k_ep1 at the ramp block's outer corner
  double volume_two_comp = 0.5;
  std::vector<Block> layout;   // empty: default_layout(nx, ny)
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> k_ep1, k_ep2, k_trans1, k_trans2, v_t1, v_t2;
  std::vector<char> block;

  bool operator==(const GroundTruth&) const = default;
};

struct Phantom {
  Dataset dataset;
  GroundTruth truth;
};

Phantom generate_phantom(const PhantomConfig& config);

}  // namespace perfkit
