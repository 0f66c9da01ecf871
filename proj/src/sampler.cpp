#include "perfkit/sampler.hpp"

#include "perfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace perfkit {

namespace {

constexpr double kMinProposalSd = 1e-4;
constexpr double kMaxProposalSd = 10.0;

double clamp_fraction(double v, double lo) { return std::clamp(v, lo, 1.0 - lo); }

double draw_gamma(std::mt19937_64& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

}  // namespace

std::string_view prior_mode_name(PriorMode mode) {
  return mode == PriorMode::Spatial ? "spatial" : "voxelwise";
}

std::optional<PriorMode> parse_prior_mode(std::string_view name) {
  if (name == "voxelwise") return PriorMode::Voxelwise;
  if (name == "spatial") return PriorMode::Spatial;
  return std::nullopt;
}

void SamplerConfig::validate() const {
  if (burn_in < 1) throw std::invalid_argument("sampler.burn_in must be >= 1");
  if (iterations < 1) throw std::invalid_argument("sampler.iterations must be >= 1");
  if (thin < 1) throw std::invalid_argument("sampler.thin must be >= 1");
  if (stored_draws() == 0) throw std::invalid_argument("sampler configuration stores no draws");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw std::invalid_argument("sampler.target_acceptance must lie in (0, 1)");
  if (adapt_window < 1) throw std::invalid_argument("sampler.adapt_window must be >= 1");
  if (!(initial_proposal_sd > 0.0) || !std::isfinite(initial_proposal_sd))
    throw std::invalid_argument("sampler.initial_proposal_sd must be positive");
  if (progress_interval < 1) throw std::invalid_argument("sampler.progress_interval must be >= 1");
}

void FitConfig::validate() const {
  voxelwise.validate();
  spatial.validate();
  if (!(noise.expected_peak > 0.0) || !(noise.target_snr > 0.0))
    throw std::invalid_argument("noise settings must be positive");
  sampler.validate();
}

double ChainState::acceptance_rate(std::size_t voxel, std::size_t param) const {
  const std::size_t idx = voxel * num_params() + param;
  return proposals[idx] == 0 ? 0.0 : static_cast<double>(accepts[idx]) / static_cast<double>(proposals[idx]);
}

double adapt_proposal(double sd, double observed_acceptance, double target) {
  return std::clamp(sd * std::exp(observed_acceptance - target), kMinProposalSd, kMaxProposalSd);
}

SampleStore SampleStore::pool(std::span<const SampleStore> chains) {
  if (chains.empty()) throw std::invalid_argument("no chains to pool");
  const SampleStore& first = chains.front();
  SampleStore out;
  out.model = first.model;
  out.prior = first.prior;
  out.voxels = first.voxels;
  out.num_params = first.num_params;
  for (const auto& c : chains) {
    if (c.voxels != first.voxels || c.num_params != first.num_params || c.model != first.model ||
        c.prior != first.prior || c.tau_field.empty() != first.tau_field.empty())
      throw std::invalid_argument("chains were fitted with different settings");
    out.draws += c.draws;
  }
  const std::size_t nk = out.voxels.size();
  const std::size_t np = out.num_params;
  out.params.reserve(nk * np * out.draws);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t p = 0; p < np; ++p)
      for (const auto& c : chains) {
        auto d = c.param_draws(k, p);
        out.params.insert(out.params.end(), d.begin(), d.end());
      }
  for (std::size_t k = 0; k < nk; ++k)
    for (const auto& c : chains) {
      auto d = c.deviance_draws(k);
      out.deviance.insert(out.deviance.end(), d.begin(), d.end());
    }
  for (const auto& c : chains) out.tau_eps.insert(out.tau_eps.end(), c.tau_eps.begin(), c.tau_eps.end());
  if (!first.tau_field.empty())
    for (std::size_t p = 0; p < np; ++p)
      for (const auto& c : chains) {
        auto d = c.tau_field_draws(p);
        out.tau_field.insert(out.tau_field.end(), d.begin(), d.end());
      }
  out.acceptance.assign(nk * np, 0.0);
  for (const auto& c : chains)
    for (std::size_t idx = 0; idx < out.acceptance.size(); ++idx)
      out.acceptance[idx] += c.acceptance[idx] / static_cast<double>(chains.size());
  return out;
}

Sampler::Sampler(const Dataset& dataset, FitConfig config)
    : dataset_(dataset),
      config_(std::move(config)),
      lattice_(Lattice::build(dataset.nx, dataset.ny, dataset.mask)),
      kernel_(dataset.aif, dataset.grid) {
  dataset_.validate();
  config_.validate();
  noise_prior_ = elicit_noise_prior(lattice_.voxels().size(), config_.noise.expected_peak, config_.noise.target_snr);
  const auto ids = model_params(config_.model);
  params_.assign(ids.begin(), ids.end());
  compartments_ = config_.model == ModelKind::TwoComp ? 2 : 1;
}

ChainState Sampler::init_state(std::uint64_t seed) const {
  const std::size_t n = lattice_.size();
  const std::size_t np = params_.size();
  const std::size_t nt = dataset_.num_times();

  ChainState s;
  s.model = config_.model;
  s.num_voxels = n;
  s.num_times = nt;
  s.rng.seed(seed);
  s.fields.assign(np, std::vector<double>(n, 0.0));
  s.tau_field.resize(np);
  for (std::size_t p = 0; p < np; ++p)
    s.tau_field[p] = config_.spatial.shape(params_[p]) / config_.spatial.rate(params_[p]);
  s.tau_eps = noise_prior_.mean_precision();
  s.proposal_sd.assign(n * np, config_.sampler.initial_proposal_sd);
  s.window_accepts.assign(n * np, 0);
  s.accepts.assign(n * np, 0);
  s.proposals.assign(n * np, 0);
  s.unit.assign(n * compartments_ * nt, 0.0);
  s.ctc.assign(n * nt, 0.0);
  s.sse.assign(n, 0.0);
  s.scratch_unit.assign(nt, 0.0);
  s.scratch_ctc.assign(nt, 0.0);
  s.order.assign(lattice_.voxels().begin(), lattice_.voxels().end());

  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit01(s.rng); };

  for (std::size_t i : lattice_.voxels()) {
    switch (config_.model) {
      case ModelKind::TwoComp: {
        const double v1 = clamp_fraction(unit01(s.rng), 1e-6);
        const double v2 = 1.0 - v1;
        const double kep1 = uniform(0.1, 0.3);
        const double kep2 = uniform(1.75, 5.25);
        s.fields[0][i] = std::log(kep1);
        s.fields[1][i] = std::log(kep2);
        s.fields[2][i] = std::log(kep1 * v1);
        s.fields[3][i] = std::log(kep2 * v2);
        break;
      }
      case ModelKind::OneComp:
      case ModelKind::ExtTofts: {
        const double kep = uniform(0.1, 5.25);
        const double v = clamp_fraction(unit01(s.rng), 1e-6);
        s.fields[0][i] = std::log(kep);
        s.fields[1][i] = std::log(kep * v);
        if (config_.model == ModelKind::ExtTofts) s.fields[2][i] = logit(std::max(uniform(0.0, 0.1), 1e-4));
        break;
      }
    }
    refresh_voxel(s, i);
  }
  return s;
}

void Sampler::assemble(const ChainState& s, std::size_t voxel, std::size_t param, double value,
                       std::span<const double> unit0, std::span<const double> unit1, std::span<double> out) const {
  auto current = [&](std::size_t p) { return p == param ? value : s.fields[p][voxel]; };
  const std::size_t nt = s.num_times;
  switch (config_.model) {
    case ModelKind::OneComp: {
      const double k = std::exp(current(1));
      for (std::size_t j = 0; j < nt; ++j) out[j] = k * unit0[j];
      break;
    }
    case ModelKind::TwoComp: {
      const double k1 = std::exp(current(2));
      const double k2 = std::exp(current(3));
      for (std::size_t j = 0; j < nt; ++j) out[j] = k1 * unit0[j] + k2 * unit1[j];
      break;
    }
    case ModelKind::ExtTofts: {
      const double k = std::exp(current(1));
      const double vp = logistic(current(2));
      const auto cp = kernel_.plasma();
      for (std::size_t j = 0; j < nt; ++j) out[j] = vp * cp[j] + k * unit0[j];
      break;
    }
  }
}

void Sampler::refresh_voxel(ChainState& s, std::size_t voxel) const {
  const std::size_t nt = s.num_times;
  const std::size_t nc = compartments_;
  std::span<double> unit0(s.unit.data() + (voxel * nc) * nt, nt);
  std::span<double> unit1 = nc > 1 ? std::span<double>(s.unit.data() + (voxel * nc + 1) * nt, nt) : unit0;
  // Rate parameters sit at indices 0 (and 1 for two compartments).
  kernel_.unit_response(std::exp(s.fields[0][voxel]), unit0);
  if (nc > 1) kernel_.unit_response(std::exp(s.fields[1][voxel]), unit1);
  std::span<double> ctc(s.ctc.data() + voxel * nt, nt);
  assemble(s, voxel, params_.size(), 0.0, unit0, unit1, ctc);
  const auto y = dataset_.series(voxel);
  double sse = 0.0;
  for (std::size_t j = 0; j < nt; ++j) {
    const double r = y[j] - ctc[j];
    sse += r * r;
  }
  if (!std::isfinite(sse)) throw SamplerError(voxel, "non-finite likelihood");
  s.sse[voxel] = sse;
}

Sampler::Proposal Sampler::propose(ChainState& s, std::size_t voxel, std::size_t param, double value) const {
  const ParamId id = params_[param];
  const double current = s.fields[param][voxel];

  if (config_.model == ModelKind::TwoComp) {
    if (id == ParamId::Theta1 && !(value < s.fields[1][voxel])) return {-std::numeric_limits<double>::infinity(), 0};
    if (id == ParamId::Theta2 && !(value > s.fields[0][voxel])) return {-std::numeric_limits<double>::infinity(), 0};
  }

  const std::size_t nt = s.num_times;
  const std::size_t nc = compartments_;
  std::span<const double> unit0(s.unit.data() + (voxel * nc) * nt, nt);
  std::span<const double> unit1 = nc > 1 ? std::span<const double>(s.unit.data() + (voxel * nc + 1) * nt, nt) : unit0;
  const bool is_rate = id == ParamId::Theta1 || id == ParamId::Theta2;
  if (is_rate) {
    kernel_.unit_response(std::exp(value), s.scratch_unit);
    if (param == 0)
      unit0 = s.scratch_unit;
    else
      unit1 = s.scratch_unit;
  }
  assemble(s, voxel, param, value, unit0, unit1, s.scratch_ctc);

  const auto y = dataset_.series(voxel);
  double sse = 0.0;
  for (std::size_t j = 0; j < nt; ++j) {
    const double r = y[j] - s.scratch_ctc[j];
    sse += r * r;
  }
  if (std::isnan(sse)) throw SamplerError(voxel, "non-finite likelihood for proposed " + std::string(param_name(id)));

  double log_ratio = 0.0;
  if (config_.sampler.use_likelihood) log_ratio += -0.5 * s.tau_eps * (sse - s.sse[voxel]);

  if (config_.prior == PriorMode::Voxelwise) {
    const double mu = config_.voxelwise.mean(id);
    const double tau = config_.voxelwise.precision(id);
    log_ratio += -0.5 * tau * ((value - mu) * (value - mu) - (current - mu) * (current - mu));
  } else {
    const auto& field = s.fields[param];
    double diff = 0.0;
    for (std::size_t j : lattice_.neighbours(voxel)) {
      const double a = value - field[j];
      const double b = current - field[j];
      diff += a * a - b * b;
    }
    log_ratio += -0.5 * s.tau_field[param] * diff;
  }
  if (std::isnan(log_ratio)) log_ratio = -std::numeric_limits<double>::infinity();
  return {log_ratio, sse};
}

void Sampler::commit(ChainState& s, std::size_t voxel, std::size_t param, double value, double sse) const {
  const std::size_t nt = s.num_times;
  const ParamId id = params_[param];
  s.fields[param][voxel] = value;
  if (id == ParamId::Theta1 || id == ParamId::Theta2) {
    std::copy(s.scratch_unit.begin(), s.scratch_unit.end(),
              s.unit.begin() + static_cast<std::ptrdiff_t>((voxel * compartments_ + param) * nt));
  }
  std::copy(s.scratch_ctc.begin(), s.scratch_ctc.end(), s.ctc.begin() + static_cast<std::ptrdiff_t>(voxel * nt));
  s.sse[voxel] = sse;
}

double Sampler::mh_log_ratio(ChainState& state, std::size_t voxel, std::size_t param, double proposed) const {
  return propose(state, voxel, param, proposed).log_ratio;
}

bool Sampler::mh_update_logparam(ChainState& s, std::size_t voxel, std::size_t param) const {
  if (!lattice_.in_mask(voxel)) throw std::out_of_range("voxel " + std::to_string(voxel) + " is outside the mask");
  if (param >= params_.size()) throw std::out_of_range("parameter index out of range");
  const std::size_t idx = voxel * params_.size() + param;
  const double sd = s.proposal_sd[idx];
  if (!(sd > 0.0)) throw std::invalid_argument("proposal standard deviation must be positive");

  std::normal_distribution<double> step(0.0, sd);
  const double value = s.fields[param][voxel] + step(s.rng);
  const Proposal prop = propose(s, voxel, param, value);

  bool accept = false;
  if (prop.log_ratio >= 0.0) {
    accept = true;
  } else if (prop.log_ratio > -std::numeric_limits<double>::infinity()) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    accept = std::log(u(s.rng)) < prop.log_ratio;
  }
  ++s.proposals[idx];
  if (accept) {
    commit(s, voxel, param, value, prop.sse);
    ++s.accepts[idx];
    ++s.window_accepts[idx];
  }
  return accept;
}

void Sampler::set_param(ChainState& s, std::size_t voxel, std::size_t param, double value) const {
  s.fields[param][voxel] = value;
  refresh_voxel(s, voxel);
}

double Sampler::gibbs_update_tau_eps(ChainState& s) const {
  double total = 0.0;
  for (std::size_t i : lattice_.voxels()) total += s.sse[i];
  const double n = static_cast<double>(lattice_.voxels().size() * s.num_times);
  s.tau_eps = draw_gamma(s.rng, noise_prior_.a + 0.5 * n, noise_prior_.b + 0.5 * total);
  return s.tau_eps;
}

double Sampler::gibbs_update_tau_field(ChainState& s, std::size_t param) const {
  if (config_.prior != PriorMode::Spatial) throw std::logic_error("field precisions exist only in spatial mode");
  const ParamId id = params_.at(param);
  const double edges = static_cast<double>(lattice_.edges().size());
  const double shape = config_.spatial.shape(id) + 0.5 * edges;
  const double rate = config_.spatial.rate(id) + 0.5 * pair_diff_sumsq(lattice_, s.fields[param]);
  s.tau_field[param] = draw_gamma(s.rng, shape, rate);
  return s.tau_field[param];
}

void Sampler::sweep(ChainState& s) const {
  std::shuffle(s.order.begin(), s.order.end(), s.rng);
  for (std::size_t i : s.order)
    for (std::size_t p = 0; p < params_.size(); ++p) mh_update_logparam(s, i, p);
  gibbs_update_tau_eps(s);
  if (config_.prior == PriorMode::Spatial)
    for (std::size_t p = 0; p < params_.size(); ++p) gibbs_update_tau_field(s, p);
  ++s.iteration;
}

void Sampler::adapt(ChainState& s) const {
  const double window = static_cast<double>(config_.sampler.adapt_window);
  const std::size_t np = params_.size();
  for (std::size_t i : lattice_.voxels()) {
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t idx = i * np + p;
      s.proposal_sd[idx] =
          adapt_proposal(s.proposal_sd[idx], s.window_accepts[idx] / window, config_.sampler.target_acceptance);
      s.window_accepts[idx] = 0;
    }
  }
}

namespace {

void report_progress(std::ostream& out, const ChainState& s, std::span<const std::size_t> voxels) {
  std::uint64_t acc = 0;
  std::uint64_t prop = 0;
  const std::size_t np = s.num_params();
  for (std::size_t i : voxels)
    for (std::size_t p = 0; p < np; ++p) {
      acc += s.accepts[i * np + p];
      prop += s.proposals[i * np + p];
    }
  const double rate = prop == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(prop);
  out << "iter " << s.iteration << " tau_eps " << s.tau_eps << " mean_acceptance " << rate << '\n';
}

}  // namespace

SampleStore Sampler::run(std::uint64_t seed, std::ostream* progress) const {
  const SamplerConfig& sc = config_.sampler;
  ChainState s = init_state(seed);
  const auto voxels = lattice_.voxels();
  const std::size_t np = params_.size();

  for (std::size_t it = 1; it <= sc.burn_in; ++it) {
    sweep(s);
    if (it % sc.adapt_window == 0) adapt(s);
    if (progress && s.iteration % sc.progress_interval == 0) report_progress(*progress, s, voxels);
  }
  std::fill(s.accepts.begin(), s.accepts.end(), 0);
  std::fill(s.proposals.begin(), s.proposals.end(), 0);

  SampleStore store;
  store.model = config_.model;
  store.prior = config_.prior;
  store.voxels.assign(voxels.begin(), voxels.end());
  store.num_params = np;
  store.draws = sc.stored_draws();
  const std::size_t nk = voxels.size();
  const std::size_t nd = store.draws;
  const std::size_t nt = s.num_times;
  store.params.resize(nk * np * nd);
  store.deviance.resize(nk * nd);
  store.tau_eps.resize(nd);
  if (config_.prior == PriorMode::Spatial) store.tau_field.resize(np * nd);

  std::size_t d = 0;
  for (std::size_t it = 1; it <= sc.iterations; ++it) {
    sweep(s);
    if (progress && s.iteration % sc.progress_interval == 0) report_progress(*progress, s, voxels);
    if (it % sc.thin != 0 || d >= nd) continue;
    for (std::size_t k = 0; k < nk; ++k) {
      const std::size_t i = voxels[k];
      for (std::size_t p = 0; p < np; ++p) store.params[(k * np + p) * nd + d] = s.fields[p][i];
      store.deviance[k * nd + d] = -2.0 * log_likelihood_from_sse(s.sse[i], nt, s.tau_eps);
    }
    store.tau_eps[d] = s.tau_eps;
    if (!store.tau_field.empty())
      for (std::size_t p = 0; p < np; ++p) store.tau_field[p * nd + d] = s.tau_field[p];
    ++d;
  }

  store.acceptance.resize(nk * np);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t p = 0; p < np; ++p) store.acceptance[k * np + p] = s.acceptance_rate(voxels[k], p);
  return store;
}

SampleStore run_chain(const Dataset& dataset, const FitConfig& config, std::ostream* progress) {
  return Sampler(dataset, config).run(config.sampler.seed, progress);
}

}  // namespace perfkit
