#include "fixtures.hpp"
#include "perfkit/diagnostics.hpp"
#include "perfkit/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace perfkit;

namespace {

// Store over a 1 x n_vox dataset filled with explicit log-parameter draws.
SampleStore make_store(ModelKind model, std::size_t n_vox, std::size_t draws, std::uint64_t seed) {
  SampleStore s;
  s.model = model;
  s.prior = PriorMode::Voxelwise;
  s.num_params = model_params(model).size();
  s.draws = draws;
  for (std::size_t k = 0; k < n_vox; ++k) s.voxels.push_back(k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.05);
  const double centre[] = {std::log(0.2), std::log(4.0), std::log(0.1), std::log(2.0)};
  for (std::size_t k = 0; k < n_vox; ++k)
    for (std::size_t p = 0; p < s.num_params; ++p)
      for (std::size_t d = 0; d < draws; ++d) s.params.push_back(centre[p] + z(rng));
  s.tau_eps.assign(draws, 400.0);
  for (std::size_t d = 0; d < draws; ++d) s.tau_eps[d] += 10.0 * z(rng);
  s.acceptance.assign(n_vox * s.num_params, 0.2);
  return s;
}

void fill_deviance(SampleStore& s, const Dataset& ds) {
  s.deviance.assign(s.voxels.size() * s.draws, 0.0);
  for (std::size_t k = 0; k < s.voxels.size(); ++k)
    for (std::size_t d = 0; d < s.draws; ++d) {
      std::vector<double> v;
      for (std::size_t p = 0; p < s.num_params; ++p) v.push_back(s.param_draws(k, p)[d]);
      s.deviance[k * s.draws + d] =
          deviance_voxel(make_params(s.model, v), s.tau_eps[d], ds.series(s.voxels[k]), ds.grid, ds.aif);
    }
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("quantiles") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(quantile({0.0, 10.0}, 0.1) == doctest::Approx(1.0));
    CHECK(quantile({5.0}, 0.9) == 5.0);
    CHECK_THROWS(median({}));
  }

  TEST_CASE("deviance and SSE") {
    const AifParams aif;
    const TimeGrid g({1.0, 2.0});
    const OneComp p{std::log(0.5), std::log(0.3)};
    const auto fit = model_ctc(p, aif, g);
    CHECK(sse_voxel(p, fit, g, aif) == 0.0);
    CHECK(deviance_voxel(p, 1.0, fit, g, aif) == doctest::Approx(2.0 * std::log(2.0 * std::numbers::pi)));

    const std::vector<double> obs{fit[0] + 0.1, fit[1] - 0.2};
    const double tau = 3.0;
    double prod = 1.0;
    for (int j = 0; j < 2; ++j)
      prod *= std::sqrt(tau / (2 * std::numbers::pi)) * std::exp(-0.5 * tau * (obs[j] - fit[j]) * (obs[j] - fit[j]));
    CHECK(deviance_voxel(p, tau, obs, g, aif) == doctest::Approx(-2.0 * std::log(prod)).epsilon(1e-12));
    CHECK(sse_voxel(p, obs, g, aif) == doctest::Approx(0.05));
    const OneComp q{std::log(0.6), std::log(0.3)};
    CHECK(deviance_voxel(p, tau, obs, g, aif) - deviance_voxel(q, tau, obs, g, aif) ==
          doctest::Approx(-2.0 * (log_likelihood_voxel(obs, fit, tau) -
                                  log_likelihood_voxel(obs, model_ctc(q, aif, g), tau))));
  }

  TEST_CASE("one-draw store gives zero pD and DIC equal to its deviance") {
    const auto ds = fixture::dataset(2, 1, fixture::two_comp(), 0.05);
    auto s = make_store(ModelKind::TwoComp, 2, 1, 4);
    fill_deviance(s, ds);
    CHECK(pd_voxel(s, 0, ds.series(0), ds.grid, ds.aif) == doctest::Approx(0.0).epsilon(1e-12));
    const auto r = dic(s, ds);
    CHECK(r.per_voxel[0] == doctest::Approx(s.deviance[0]));
    CHECK(r.per_voxel[1] == doctest::Approx(s.deviance[1]));
  }

  TEST_CASE("summary identities") {
    const auto ds = fixture::dataset(3, 1, fixture::two_comp(), 0.05);
    auto s = make_store(ModelKind::TwoComp, 3, 101, 6);
    fill_deviance(s, ds);
    const auto sum = summarize_fit(s, ds);
    const auto d = dic(s, ds);
    double global_pd = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(sum.dic[k] - sum.median_deviance[k] == doctest::Approx(sum.pd[k]).epsilon(1e-12));
      CHECK(sum.pd[k] == doctest::Approx(pd_voxel(s, k, ds.series(k), ds.grid, ds.aif)).epsilon(1e-12));
      CHECK(sum.dic[k] == doctest::Approx(d.per_voxel[k]).epsilon(1e-12));
      global_pd += sum.pd[k];
      // Odd draw count: exact monotone invariance.
      auto t1 = s.param_draws(k, 0);
      CHECK(sum.k_ep1.median[k] == std::exp(median({t1.begin(), t1.end()})));
      CHECK(sum.k_ep1.q10[k] <= sum.k_ep1.median[k]);
      CHECK(sum.k_ep1.median[k] <= sum.k_ep1.q90[k]);
      CHECK(sum.v_t1[k] == doctest::Approx(sum.k_trans1.median[k] / sum.k_ep1.median[k]));
      CHECK(sum.sse[k] >= 0.0);
      CHECK(sum.mean_acceptance[k] == doctest::Approx(0.2));
    }
    CHECK(sum.global_pd == doctest::Approx(global_pd));
    CHECK(sum.global_dic == doctest::Approx(d.global));
    CHECK(sum.k_ep2.median.size() == 3);
    CHECK(sum.v_p.median.empty());
  }

  TEST_CASE("identical draws give point medians and zero-width intervals") {
    const auto ds = fixture::dataset(2, 1, OneComp{std::log(0.5), std::log(0.3)}, 0.05);
    SampleStore s;
    s.model = ModelKind::ExtTofts;
    s.prior = PriorMode::Voxelwise;
    s.num_params = 3;
    s.draws = 4;
    s.voxels = {1};
    for (double v : {std::log(0.5), std::log(0.3), logit(0.04)})
      for (int d = 0; d < 4; ++d) s.params.push_back(v);
    s.tau_eps.assign(4, 300.0);
    s.acceptance.assign(3, 0.25);
    fill_deviance(s, ds);
    const auto sum = summarize_fit(s, ds);
    CHECK(sum.k_ep1.median[1] == doctest::Approx(0.5));
    CHECK(sum.k_ep1.q10[1] == sum.k_ep1.q90[1]);
    CHECK(sum.v_p.median[1] == doctest::Approx(0.04));
    CHECK(sum.pd[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isnan(sum.k_ep1.median[0]));  // voxel 0 not in the store
    CHECK(std::isnan(sum.pd[0]));
  }

  TEST_CASE("empty store rejected") {
    const auto ds = fixture::dataset(1, 1, fixture::two_comp(), 0.05);
    SampleStore s;
    s.num_params = 4;
    s.voxels = {0};
    CHECK_THROWS(summarize_fit(s, ds));
    CHECK_THROWS(dic(s, ds));
  }
}
