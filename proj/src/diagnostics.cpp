#include "perfkit/diagnostics.hpp"

#include "perfkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perfkit {

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double sse_voxel(const KineticParams& params, std::span<const double> observed, const TimeGrid& grid,
                 const AifParams& aif) {
  const auto fitted = model_ctc(params, aif, grid);
  if (fitted.size() != observed.size()) throw std::invalid_argument("observed series length mismatch");
  double sse = 0.0;
  for (std::size_t j = 0; j < fitted.size(); ++j) {
    const double r = observed[j] - fitted[j];
    sse += r * r;
  }
  return sse;
}

double deviance_voxel(const KineticParams& params, double tau_eps, std::span<const double> observed,
                      const TimeGrid& grid, const AifParams& aif) {
  return -2.0 * log_likelihood_voxel(observed, model_ctc(params, aif, grid), tau_eps);
}

KineticParams median_params(const SampleStore& store, std::size_t k) {
  std::vector<double> values(store.num_params);
  for (std::size_t p = 0; p < store.num_params; ++p) {
    auto d = store.param_draws(k, p);
    values[p] = median({d.begin(), d.end()});
  }
  return make_params(store.model, values);
}

namespace {

struct VoxelDeviance {
  double median_deviance;
  double pd;
};

VoxelDeviance voxel_deviance(const SampleStore& store, std::size_t k, double median_tau,
                             std::span<const double> observed, const TimeGrid& grid, const AifParams& aif) {
  if (store.draws == 0) throw std::invalid_argument("sample store is empty");
  auto dev = store.deviance_draws(k);
  const double med_dev = median({dev.begin(), dev.end()});
  const double plug_in = deviance_voxel(median_params(store, k), median_tau, observed, grid, aif);
  return {med_dev, med_dev - plug_in};
}

}  // namespace

double pd_voxel(const SampleStore& store, std::size_t k, std::span<const double> observed, const TimeGrid& grid,
                const AifParams& aif) {
  if (store.draws == 0) throw std::invalid_argument("sample store is empty");
  const double tau = median(store.tau_eps);
  return voxel_deviance(store, k, tau, observed, grid, aif).pd;
}

DicResult dic(const SampleStore& store, const Dataset& dataset) {
  if (store.draws == 0) throw std::invalid_argument("sample store is empty");
  const double tau = median(store.tau_eps);
  DicResult out;
  out.per_voxel.resize(store.voxels.size());
  for (std::size_t k = 0; k < store.voxels.size(); ++k) {
    const auto vd = voxel_deviance(store, k, tau, dataset.series(store.voxels[k]), dataset.grid, dataset.aif);
    out.per_voxel[k] = vd.median_deviance + vd.pd;
    out.global += out.per_voxel[k];
  }
  return out;
}

FitSummary summarize_fit(const SampleStore& store, const Dataset& dataset) {
  if (store.draws == 0) throw std::invalid_argument("sample store is empty");
  const std::size_t n = dataset.num_voxels();
  const std::size_t np = store.num_params;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto ids = model_params(store.model);

  FitSummary s;
  s.nx = dataset.nx;
  s.ny = dataset.ny;
  s.model = store.model;
  s.prior = store.prior;
  auto blank = [&] { return std::vector<double>(n, nan); };
  auto blank_estimate = [&] { return Estimate{blank(), blank(), blank()}; };
  s.k_ep1 = blank_estimate();
  s.k_trans1 = blank_estimate();
  if (store.model == ModelKind::TwoComp) {
    s.k_ep2 = blank_estimate();
    s.k_trans2 = blank_estimate();
    s.v_t2 = blank();
  }
  if (store.model == ModelKind::ExtTofts) s.v_p = blank_estimate();
  s.v_t1 = blank();
  s.sse = blank();
  s.median_deviance = blank();
  s.pd = blank();
  s.dic = blank();
  s.mean_acceptance = blank();
  s.acceptance.assign(np, blank());
  s.median_tau_eps = median(store.tau_eps);

  auto target_for = [&](ParamId id) -> Estimate* {
    switch (id) {
      case ParamId::Theta1: return &s.k_ep1;
      case ParamId::Theta2: return &s.k_ep2;
      case ParamId::Gamma1: return &s.k_trans1;
      case ParamId::Gamma2: return &s.k_trans2;
      case ParamId::LogitVp: return &s.v_p;
    }
    return nullptr;
  };

  for (std::size_t k = 0; k < store.voxels.size(); ++k) {
    const std::size_t i = store.voxels[k];
    for (std::size_t p = 0; p < np; ++p) {
      auto d = store.param_draws(k, p);
      std::vector<double> draws(d.begin(), d.end());
      // Quantiles commute with monotone maps, so summarise on log scale and transform.
      double (*to_natural)(double) = ids[p] == ParamId::LogitVp ? +[](double x) { return logistic(x); }
                                                                : +[](double x) { return std::exp(x); };
      Estimate* est = target_for(ids[p]);
      est->median[i] = to_natural(median(draws));
      est->q10[i] = to_natural(quantile(draws, 0.1));
      est->q90[i] = to_natural(quantile(std::move(draws), 0.9));
      s.acceptance[p][i] = store.acceptance[k * np + p];
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < np; ++p) acc += store.acceptance[k * np + p];
    s.mean_acceptance[i] = acc / static_cast<double>(np);

    s.v_t1[i] = s.k_trans1.median[i] / s.k_ep1.median[i];
    if (store.model == ModelKind::TwoComp) s.v_t2[i] = s.k_trans2.median[i] / s.k_ep2.median[i];

    const auto observed = dataset.series(i);
    const KineticParams med = median_params(store, k);
    s.sse[i] = sse_voxel(med, observed, dataset.grid, dataset.aif);
    const auto vd = voxel_deviance(store, k, s.median_tau_eps, observed, dataset.grid, dataset.aif);
    s.median_deviance[i] = vd.median_deviance;
    s.pd[i] = vd.pd;
    s.dic[i] = vd.median_deviance + vd.pd;
    s.global_pd += vd.pd;
    s.global_dic += s.dic[i];
  }
  return s;
}

}  // namespace perfkit
