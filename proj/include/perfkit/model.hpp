// Log-likelihood and log-prior terms of the hierarchical model, plus the
// prior constants.

#pragma once

#include "perfkit/kinetics.hpp"
#include "perfkit/lattice.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace perfkit {

enum class ModelKind { OneComp, TwoComp, ExtTofts };

/// Sampled log-scale quantities. Theta = log k_ep, Gamma = log K_trans.
enum class ParamId { Theta1, Theta2, Gamma1, Gamma2, LogitVp };

/// Parameters of a model in storage order.
std::span<const ParamId> model_params(ModelKind kind);
std::string_view param_name(ParamId id);
std::string_view model_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

/// Builds the variant from values ordered as model_params(kind).
KineticParams make_params(ModelKind kind, std::span<const double> values);

/// Gaussian priors with fixed precisions, independent over voxels.
struct VoxelwisePriorConfig {
  double mu_theta1 = 0.0;
  double mu_theta2 = std::log(5.0);
  double mu_gamma1 = 0.0;
  double mu_gamma2 = 0.0;
  double mu_logit_vp = -2.9444389791664403;  // logit(0.05)
  double tau_theta1 = 1.0;
  double tau_theta2 = 1.0;
  double tau_gamma1 = 1.0;
  double tau_gamma2 = 1.0;
  double tau_logit_vp = 1.0;

  double mean(ParamId id) const;
  double precision(ParamId id) const;
  void validate() const;
};

/// Gamma(shape, rate) hyperpriors on the GMRF field precisions.
struct SpatialPriorConfig {
  double a_theta1 = 1000.0;
  double b_theta1 = 1.0;
  double a_theta2 = 1000.0;
  double b_theta2 = 1.0;
  double a_gamma1 = 0.0001;
  double b_gamma1 = 0.01;
  double a_gamma2 = 0.0001;
  double b_gamma2 = 0.01;
  double a_logit_vp = 0.0001;
  double b_logit_vp = 0.01;

  double shape(ParamId id) const;
  double rate(ParamId id) const;
  void validate() const;
};

/// Inverse-Gamma(a, b) on the shared noise variance, i.e. Gamma(a, rate b)
/// on the noise precision tau_eps.
struct NoisePrior {
  double a = 0.0;
  double b = 0.0;

  double mean_variance() const { return b / (a - 1.0); }
  double mean_precision() const { return a / b; }
};

inline constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_density(double x, double mean, double precision);

/// Gaussian log-likelihood of one voxel's series with noise precision tau_eps.
double log_likelihood_voxel(std::span<const double> observed, std::span<const double> fitted, double tau_eps);

/// Same, from a precomputed residual sum of squares over `count` points.
inline double log_likelihood_from_sse(double sse, std::size_t count, double tau_eps) {
  const double n = static_cast<double>(count);
  return 0.5 * n * (std::log(tau_eps) - kLog2Pi) - 0.5 * tau_eps * sse;
}

double log_prior_voxelwise(const KineticParams& params, const VoxelwisePriorConfig& cfg);

/// GMRF full-conditional kernel of field_i given its neighbours, up to a constant.
double log_prior_spatial_local(const Lattice& lattice, std::size_t i, std::span<const double> field,
                               double tau_field);

/// Inverse-Gamma noise prior whose mean variance is (expected_peak / target_snr)^2
/// and whose shape a = 1 + 0.1 N grows with the number of voxels.
NoisePrior elicit_noise_prior(std::size_t num_voxels, double expected_peak, double target_snr);

}  // namespace perfkit
