// Posterior summaries and deviance-based complexity measures.
//
// pD is computed from posterior medians rather than means: the median deviance
// over draws minus the deviance at the componentwise posterior median of the
// kinetic parameters and tau_eps. DIC = median deviance + pD.

#pragma once

#include "perfkit/dataset.hpp"
#include "perfkit/kinetics.hpp"
#include "perfkit/sampler.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace perfkit {

double median(std::vector<double> values);

/// Linear-interpolation sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

double deviance_voxel(const KineticParams& params, double tau_eps, std::span<const double> observed,
                      const TimeGrid& grid, const AifParams& aif);

/// Residual sum of squares of `observed` against the model curve at `params`.
double sse_voxel(const KineticParams& params, std::span<const double> observed, const TimeGrid& grid,
                 const AifParams& aif);

/// Componentwise posterior medians of the log-scale parameters of store voxel k.
KineticParams median_params(const SampleStore& store, std::size_t k);

/// pD of store voxel k.
double pd_voxel(const SampleStore& store, std::size_t k, std::span<const double> observed, const TimeGrid& grid,
                const AifParams& aif);

struct DicResult {
  double global = 0.0;
  std::vector<double> per_voxel;  // indexed like store.voxels
};

DicResult dic(const SampleStore& store, const Dataset& dataset);

/// Median and central 80% interval on the natural scale.
struct Estimate {
  std::vector<double> median;
  std::vector<double> q10;
  std::vector<double> q90;
};

/// Per-voxel maps over the full nx * ny grid. Voxels outside the mask hold NaN
/// in memory and are written as empty cells.
struct FitSummary {
  std::size_t nx = 0;
  std::size_t ny = 0;
  ModelKind model = ModelKind::TwoComp;
  PriorMode prior = PriorMode::Spatial;

  Estimate k_ep1, k_ep2, k_trans1, k_trans2, v_p;  // k_ep2/k_trans2 two-compartment only, v_p ext. Tofts only
  std::vector<double> v_t1, v_t2;
  std::vector<double> sse;
  std::vector<double> median_deviance;
  std::vector<double> pd;
  std::vector<double> dic;
  std::vector<std::vector<double>> acceptance;  // per model parameter
  std::vector<double> mean_acceptance;

  double global_pd = 0.0;
  double global_dic = 0.0;
  double median_tau_eps = 0.0;
};

FitSummary summarize_fit(const SampleStore& store, const Dataset& dataset);

}  // namespace perfkit
