// Metropolis-within-Gibbs sampler for voxelwise and GMRF-regularised
// compartment-model fits.
//
// Each sweep visits the masked voxels in a fresh random order and updates every
// log-parameter of the voxel with a random-walk Metropolis-Hastings step. The
// noise precision and (spatial mode) the field precisions then get one Gibbs
// draw each. Proposal scales adapt during burn-in and are frozen afterwards.

#pragma once

#include "perfkit/dataset.hpp"
#include "perfkit/kinetics.hpp"
#include "perfkit/lattice.hpp"
#include "perfkit/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace perfkit {

enum class PriorMode { Voxelwise, Spatial };

std::string_view prior_mode_name(PriorMode mode);
std::optional<PriorMode> parse_prior_mode(std::string_view name);

/// Elicitation inputs for the noise prior.
struct NoiseSettings {
  double expected_peak = 0.75;
  double target_snr = 15.0;
};

struct SamplerConfig {
  std::size_t burn_in = 5000;
  std::size_t iterations = 5000;  // post burn-in
  std::size_t thin = 3;
  double target_acceptance = 0.20;
  std::size_t adapt_window = 50;
  double initial_proposal_sd = 0.1;
  std::uint64_t seed = 1;
  std::size_t progress_interval = 500;
  // Test hook, not part of the file format: drop the likelihood so the chain samples the prior.
  bool use_likelihood = true;

  std::size_t stored_draws() const { return thin == 0 ? 0 : iterations / thin; }
  void validate() const;
};

struct FitConfig {
  ModelKind model = ModelKind::TwoComp;
  PriorMode prior = PriorMode::Spatial;
  VoxelwisePriorConfig voxelwise;
  SpatialPriorConfig spatial;
  NoiseSettings noise;
  SamplerConfig sampler;

  void validate() const;
};

struct ChainState {
  ModelKind model = ModelKind::TwoComp;
  std::size_t num_voxels = 0;  // nx * ny
  std::size_t num_times = 0;

  // fields[p][i]: log-scale value of parameter p (model_params order) in voxel i.
  std::vector<std::vector<double>> fields;
  std::vector<double> tau_field;  // one per parameter; used in spatial mode
  double tau_eps = 1.0;

  // Indexed [i * P + p].
  std::vector<double> proposal_sd;
  std::vector<std::uint32_t> window_accepts;
  std::vector<std::uint64_t> accepts;
  std::vector<std::uint64_t> proposals;

  // Cache: per-compartment unit responses [(i * C + c) * T + j], total curve
  // [i * T + j] and residual sum of squares per voxel.
  std::vector<double> unit;
  std::vector<double> ctc;
  std::vector<double> sse;

  std::size_t iteration = 0;
  std::mt19937_64 rng;

  // Scratch, sized T.
  std::vector<double> scratch_unit;
  std::vector<double> scratch_ctc;
  std::vector<std::size_t> order;

  std::size_t num_params() const { return fields.size(); }
  double acceptance_rate(std::size_t voxel, std::size_t param) const;
  std::span<const double> cached_ctc(std::size_t voxel) const {
    return {ctc.data() + voxel * num_times, num_times};
  }
};

/// Thinned post burn-in draws.
struct SampleStore {
  ModelKind model = ModelKind::TwoComp;
  PriorMode prior = PriorMode::Spatial;
  std::vector<std::size_t> voxels;  // masked voxel indices; k below indexes this list
  std::size_t num_params = 0;
  std::size_t draws = 0;

  std::vector<double> params;      // [(k * P + p) * draws + d]
  std::vector<double> deviance;    // [k * draws + d]
  std::vector<double> tau_eps;     // [d]
  std::vector<double> tau_field;   // [p * draws + d], spatial mode only
  std::vector<double> acceptance;  // [k * P + p], post burn-in

  std::span<const double> param_draws(std::size_t k, std::size_t p) const {
    return {params.data() + (k * num_params + p) * draws, draws};
  }
  std::span<const double> deviance_draws(std::size_t k) const { return {deviance.data() + k * draws, draws}; }
  std::span<const double> tau_field_draws(std::size_t p) const { return {tau_field.data() + p * draws, draws}; }

  /// Concatenates the draws of several chains fitted to the same dataset and
  /// averages their acceptance rates.
  static SampleStore pool(std::span<const SampleStore> chains);

  bool operator==(const SampleStore&) const = default;
};

/// sd * exp(observed - target), clamped to [1e-4, 10].
double adapt_proposal(double sd, double observed_acceptance, double target);

class Sampler {
 public:
  /// Validates the dataset and configuration; throws EmptyMaskError for an empty mask.
  Sampler(const Dataset& dataset, FitConfig config);

  const FitConfig& config() const { return config_; }
  const Lattice& lattice() const { return lattice_; }
  const AifKernel& kernel() const { return kernel_; }
  const NoisePrior& noise_prior() const { return noise_prior_; }

  ChainState init_state(std::uint64_t seed) const;

  /// Log acceptance ratio of moving parameter `param` of `voxel` to `proposed`.
  double mh_log_ratio(ChainState& state, std::size_t voxel, std::size_t param, double proposed) const;

  /// One random-walk update. Returns true when the proposal was accepted.
  bool mh_update_logparam(ChainState& state, std::size_t voxel, std::size_t param) const;

  /// Overwrites one parameter and refreshes the voxel's cache.
  void set_param(ChainState& state, std::size_t voxel, std::size_t param, double value) const;

  double gibbs_update_tau_eps(ChainState& state) const;

  /// Spatial mode only; throws std::logic_error otherwise.
  double gibbs_update_tau_field(ChainState& state, std::size_t param) const;

  void sweep(ChainState& state) const;

  /// Applies adapt_proposal to every proposal scale from the current window and resets the window.
  void adapt(ChainState& state) const;

  /// init_state, burn-in with adaptation, then thinned post burn-in sampling.
  SampleStore run(std::uint64_t seed, std::ostream* progress = nullptr) const;

 private:
  struct Proposal {
    double log_ratio;
    double sse;
  };
  Proposal propose(ChainState& state, std::size_t voxel, std::size_t param, double value) const;
  void refresh_voxel(ChainState& state, std::size_t voxel) const;
  void commit(ChainState& state, std::size_t voxel, std::size_t param, double value, double sse) const;
  void assemble(const ChainState& state, std::size_t voxel, std::size_t param, double value,
                std::span<const double> unit0, std::span<const double> unit1, std::span<double> out) const;

  const Dataset& dataset_;
  FitConfig config_;
  Lattice lattice_;
  AifKernel kernel_;
  NoisePrior noise_prior_;
  std::vector<ParamId> params_;
  std::size_t compartments_;
};

/// Convenience wrapper: Sampler(dataset, config).run(config.sampler.seed).
SampleStore run_chain(const Dataset& dataset, const FitConfig& config, std::ostream* progress = nullptr);

}  // namespace perfkit
