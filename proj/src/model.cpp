#include "perfkit/model.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace perfkit {

namespace {

constexpr std::array kOneCompParams{ParamId::Theta1, ParamId::Gamma1};
constexpr std::array kTwoCompParams{ParamId::Theta1, ParamId::Theta2, ParamId::Gamma1, ParamId::Gamma2};
constexpr std::array kExtToftsParams{ParamId::Theta1, ParamId::Gamma1, ParamId::LogitVp};

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument(std::string(name) + " must be positive");
}

}  // namespace

std::span<const ParamId> model_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::OneComp: return kOneCompParams;
    case ModelKind::TwoComp: return kTwoCompParams;
    case ModelKind::ExtTofts: return kExtToftsParams;
  }
  throw std::logic_error("unknown model kind");
}

std::string_view param_name(ParamId id) {
  switch (id) {
    case ParamId::Theta1: return "theta1";
    case ParamId::Theta2: return "theta2";
    case ParamId::Gamma1: return "gamma1";
    case ParamId::Gamma2: return "gamma2";
    case ParamId::LogitVp: return "logit_vp";
  }
  throw std::logic_error("unknown parameter");
}

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::OneComp: return "1comp";
    case ModelKind::TwoComp: return "2comp";
    case ModelKind::ExtTofts: return "exttofts";
  }
  throw std::logic_error("unknown model kind");
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "1comp") return ModelKind::OneComp;
  if (name == "2comp") return ModelKind::TwoComp;
  if (name == "exttofts") return ModelKind::ExtTofts;
  return std::nullopt;
}

KineticParams make_params(ModelKind kind, std::span<const double> v) {
  if (v.size() != model_params(kind).size()) throw std::invalid_argument("wrong parameter count for model");
  switch (kind) {
    case ModelKind::OneComp: return OneComp{v[0], v[1]};
    case ModelKind::TwoComp: return TwoComp{v[0], v[1], v[2], v[3]};
    case ModelKind::ExtTofts: return ExtTofts{v[0], v[1], v[2]};
  }
  throw std::logic_error("unknown model kind");
}

double VoxelwisePriorConfig::mean(ParamId id) const {
  switch (id) {
    case ParamId::Theta1: return mu_theta1;
    case ParamId::Theta2: return mu_theta2;
    case ParamId::Gamma1: return mu_gamma1;
    case ParamId::Gamma2: return mu_gamma2;
    case ParamId::LogitVp: return mu_logit_vp;
  }
  throw std::logic_error("unknown parameter");
}

double VoxelwisePriorConfig::precision(ParamId id) const {
  switch (id) {
    case ParamId::Theta1: return tau_theta1;
    case ParamId::Theta2: return tau_theta2;
    case ParamId::Gamma1: return tau_gamma1;
    case ParamId::Gamma2: return tau_gamma2;
    case ParamId::LogitVp: return tau_logit_vp;
  }
  throw std::logic_error("unknown parameter");
}

void VoxelwisePriorConfig::validate() const {
  for (ParamId id : {ParamId::Theta1, ParamId::Theta2, ParamId::Gamma1, ParamId::Gamma2, ParamId::LogitVp}) {
    if (!std::isfinite(mean(id))) throw std::invalid_argument("prior mean must be finite");
    require_positive(precision(id), "voxelwise prior precision");
  }
}

double SpatialPriorConfig::shape(ParamId id) const {
  switch (id) {
    case ParamId::Theta1: return a_theta1;
    case ParamId::Theta2: return a_theta2;
    case ParamId::Gamma1: return a_gamma1;
    case ParamId::Gamma2: return a_gamma2;
    case ParamId::LogitVp: return a_logit_vp;
  }
  throw std::logic_error("unknown parameter");
}

double SpatialPriorConfig::rate(ParamId id) const {
  switch (id) {
    case ParamId::Theta1: return b_theta1;
    case ParamId::Theta2: return b_theta2;
    case ParamId::Gamma1: return b_gamma1;
    case ParamId::Gamma2: return b_gamma2;
    case ParamId::LogitVp: return b_logit_vp;
  }
  throw std::logic_error("unknown parameter");
}

void SpatialPriorConfig::validate() const {
  for (ParamId id : {ParamId::Theta1, ParamId::Theta2, ParamId::Gamma1, ParamId::Gamma2, ParamId::LogitVp}) {
    require_positive(shape(id), "spatial hyperprior shape");
    require_positive(rate(id), "spatial hyperprior rate");
  }
}

double log_normal_density(double x, double mean, double precision) {
  const double d = x - mean;
  return 0.5 * (std::log(precision) - kLog2Pi) - 0.5 * precision * d * d;
}

double log_likelihood_voxel(std::span<const double> observed, std::span<const double> fitted, double tau_eps) {
  if (observed.size() != fitted.size()) throw std::invalid_argument("observed and fitted series differ in length");
  if (!(tau_eps > 0.0)) throw std::invalid_argument("noise precision must be positive");
  double sse = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    const double r = observed[j] - fitted[j];
    sse += r * r;
  }
  return log_likelihood_from_sse(sse, observed.size(), tau_eps);
}

double log_prior_voxelwise(const KineticParams& params, const VoxelwisePriorConfig& cfg) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OneComp>) {
          return log_normal_density(p.theta, cfg.mu_theta1, cfg.tau_theta1) +
                 log_normal_density(p.gamma, cfg.mu_gamma1, cfg.tau_gamma1);
        } else if constexpr (std::is_same_v<P, TwoComp>) {
          return log_normal_density(p.theta1, cfg.mu_theta1, cfg.tau_theta1) +
                 log_normal_density(p.theta2, cfg.mu_theta2, cfg.tau_theta2) +
                 log_normal_density(p.gamma1, cfg.mu_gamma1, cfg.tau_gamma1) +
                 log_normal_density(p.gamma2, cfg.mu_gamma2, cfg.tau_gamma2);
        } else {
          return log_normal_density(p.theta, cfg.mu_theta1, cfg.tau_theta1) +
                 log_normal_density(p.gamma, cfg.mu_gamma1, cfg.tau_gamma1) +
                 log_normal_density(p.logit_vp, cfg.mu_logit_vp, cfg.tau_logit_vp);
        }
      },
      params);
}

double log_prior_spatial_local(const Lattice& lattice, std::size_t i, std::span<const double> field,
                               double tau_field) {
  return -0.5 * tau_field * local_diff_sumsq(lattice, i, field);
}

NoisePrior elicit_noise_prior(std::size_t num_voxels, double expected_peak, double target_snr) {
  if (num_voxels == 0) throw std::invalid_argument("noise prior needs at least one voxel");
  require_positive(expected_peak, "expected peak concentration");
  require_positive(target_snr, "target SNR");
  const double sigma = expected_peak / target_snr;
  const double a = 1.0 + 0.1 * static_cast<double>(num_voxels);
  return {a, (a - 1.0) * sigma * sigma};
}

}  // namespace perfkit
