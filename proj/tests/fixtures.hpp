#pragma once

#include "perfkit/dataset.hpp"
#include "perfkit/kinetics.hpp"

#include <random>

namespace fixture {

// Dataset whose every masked voxel follows `params` plus Gaussian noise.
inline perfkit::Dataset dataset(std::size_t nx, std::size_t ny, const perfkit::KineticParams& params, double sigma,
                                std::uint64_t seed = 1, std::size_t num_times = 40, double dt = 0.15) {
  perfkit::Dataset ds;
  ds.nx = nx;
  ds.ny = ny;
  ds.mask.assign(nx * ny, 1);
  ds.grid = perfkit::TimeGrid::uniform(num_times, dt);
  ds.aif = perfkit::AifParams{.dose = 0.2};
  const auto curve = perfkit::model_ctc(params, ds.aif, ds.grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  ds.observed.resize(nx * ny * num_times);
  for (std::size_t i = 0; i < nx * ny; ++i)
    for (std::size_t j = 0; j < num_times; ++j)
      ds.observed[i * num_times + j] = curve[j] + (sigma > 0 ? noise(rng) : 0.0);
  return ds;
}

inline perfkit::KineticParams two_comp() {
  return perfkit::TwoComp{std::log(0.2), std::log(4.0), std::log(0.1), std::log(2.0)};
}

}  // namespace fixture
