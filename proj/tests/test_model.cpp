#include "oracles.hpp"
#include "perfkit/lattice.hpp"
#include "perfkit/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace perfkit;

namespace {

// Literal Gaussian density, no logs until the end.
double gauss_pdf(double x, double mean, double precision) {
  return std::sqrt(precision / (2.0 * std::numbers::pi)) * std::exp(-0.5 * precision * (x - mean) * (x - mean));
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("parameter layouts and names") {
    CHECK(model_params(ModelKind::OneComp).size() == 2);
    CHECK(model_params(ModelKind::TwoComp).size() == 4);
    CHECK(model_params(ModelKind::ExtTofts).size() == 3);
    CHECK(param_name(ParamId::Theta2) == "theta2");
    CHECK(parse_model_kind("2comp") == ModelKind::TwoComp);
    CHECK(parse_model_kind("exttofts") == ModelKind::ExtTofts);
    CHECK_FALSE(parse_model_kind("3comp").has_value());
    const double v[] = {0.1, 0.2, 0.3, 0.4};
    const auto p = std::get<TwoComp>(make_params(ModelKind::TwoComp, v));
    CHECK(p.theta1 == 0.1);
    CHECK(p.gamma2 == 0.4);
  }

  TEST_CASE("log-likelihood values") {
    const std::vector<double> y{0.3};
    CHECK(log_likelihood_voxel(y, y, 1.0) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
    CHECK_THROWS_AS(log_likelihood_voxel(y, std::vector<double>{0.3, 0.1}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(log_likelihood_voxel(y, y, 0.0), std::invalid_argument);

    const std::vector<double> fit{1.0, 2.0, 3.0};
    const std::vector<double> obs1{1.1, 1.8, 3.05};
    const std::vector<double> obs2{1.2, 1.6, 3.1};  // residuals doubled
    const double sse = 0.01 + 0.04 + 0.0025;
    const double tau = 7.0;
    CHECK(log_likelihood_voxel(obs1, fit, tau) - log_likelihood_voxel(obs2, fit, tau) ==
          doctest::Approx(tau / 2.0 * 3.0 * sse).epsilon(1e-10));
    CHECK(log_likelihood_from_sse(sse, 3, tau) == doctest::Approx(log_likelihood_voxel(obs1, fit, tau)).epsilon(1e-14));
  }

  TEST_CASE("log-likelihood matches a product of densities") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> tau(0.5, 4.0);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> obs(10), fit(10);
      const double t = tau(rng);
      double prod = 1.0;
      for (int j = 0; j < 10; ++j) {
        fit[j] = z(rng);
        obs[j] = fit[j] + z(rng) / std::sqrt(t);
        prod *= gauss_pdf(obs[j], fit[j], t);
      }
      CHECK(std::abs(log_likelihood_voxel(obs, fit, t) - std::log(prod)) < 1e-12);
    }
  }

  TEST_CASE("log-likelihood is maximised in tau at T / SSE") {
    const std::vector<double> fit{0.0, 0.0, 0.0, 0.0};
    const std::vector<double> obs{0.1, -0.2, 0.3, 0.05};
    double sse = 0.0;
    for (double v : obs) sse += v * v;
    const double best = 4.0 / sse;
    const double h = 1e-4 * best;
    const double d = (log_likelihood_voxel(obs, fit, best + h) - log_likelihood_voxel(obs, fit, best - h)) / (2 * h);
    CHECK(std::abs(d) < 1e-6);
    CHECK(log_likelihood_voxel(obs, fit, best) > log_likelihood_voxel(obs, fit, 1.1 * best));
    CHECK(log_likelihood_voxel(obs, fit, best) > log_likelihood_voxel(obs, fit, 0.9 * best));
  }

  TEST_CASE("voxelwise prior") {
    const VoxelwisePriorConfig cfg;
    const double at_mean = 0.5 * std::log(1.0 / (2.0 * std::numbers::pi));
    CHECK(log_prior_voxelwise(TwoComp{0.0, std::log(5.0), 0.0, 0.0}, cfg) == doctest::Approx(4.0 * at_mean));
    CHECK(log_prior_voxelwise(OneComp{0.0, 0.0}, cfg) == doctest::Approx(2.0 * at_mean));
    CHECK(oracle::norm_cdf(std::log(20.0)) == doctest::Approx(0.9986).epsilon(1e-4));

    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 1.5);
    VoxelwisePriorConfig c2;
    c2.tau_theta2 = 2.5;
    c2.mu_gamma1 = -0.3;
    for (int rep = 0; rep < 50; ++rep) {
      const TwoComp p{z(rng), z(rng), z(rng), z(rng)};
      const double prod = gauss_pdf(p.theta1, 0.0, 1.0) * gauss_pdf(p.theta2, std::log(5.0), 2.5) *
                          gauss_pdf(p.gamma1, -0.3, 1.0) * gauss_pdf(p.gamma2, 0.0, 1.0);
      CHECK(std::abs(log_prior_voxelwise(p, c2) - std::log(prod)) < 1e-12);
      const ExtTofts e{z(rng), z(rng), z(rng)};
      const double eprod = gauss_pdf(e.theta, 0.0, 1.0) * gauss_pdf(e.gamma, -0.3, 1.0) *
                           gauss_pdf(e.logit_vp, c2.mu_logit_vp, c2.tau_logit_vp);
      CHECK(std::abs(log_prior_voxelwise(e, c2) - std::log(eprod)) < 1e-12);
    }

    VoxelwisePriorConfig bad;
    bad.tau_gamma2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("spatial kernel") {
    const auto l = Lattice::build(3, 3, std::vector<std::uint8_t>(9, 1));
    std::vector<double> f{0.2, 0.5, -0.1, 0.9, 0.4, 0.3, -0.6, 0.0, 0.8};
    CHECK(log_prior_spatial_local(l, 4, std::vector<double>(9, 1.3), 10.0) == 0.0);
    CHECK(log_prior_spatial_local(l, 4, f, 6.0) == doctest::Approx(2.0 * log_prior_spatial_local(l, 4, f, 3.0)));

    double total = 0.0;
    for (std::size_t i = 0; i < 9; ++i) total += log_prior_spatial_local(l, i, f, 2.0);
    CHECK(total == doctest::Approx(2.0 * (-0.5 * 2.0 * pair_diff_sumsq(l, f))));

    // Normalised kernel over a grid of f_4 values is Gaussian(mean of neighbours, tau * degree).
    const double tau = 5.0;
    const double nbr_mean = (0.5 + 0.9 + 0.3 + 0.0) / 4.0;
    const double prec = tau * 4.0;
    const double lo = nbr_mean - 3.0, hi = nbr_mean + 3.0;
    const int n = 6001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> w(n);
    double z = 0.0;
    for (int k = 0; k < n; ++k) {
      f[4] = lo + k * h;
      w[k] = std::exp(log_prior_spatial_local(l, 4, f, tau));
      z += w[k] * h;
    }
    double mean = 0.0, var = 0.0;
    for (int k = 0; k < n; ++k) mean += (lo + k * h) * w[k] * h / z;
    for (int k = 0; k < n; ++k) var += (lo + k * h - mean) * (lo + k * h - mean) * w[k] * h / z;
    CHECK(mean == doctest::Approx(nbr_mean).epsilon(1e-8));
    CHECK(var == doctest::Approx(1.0 / prec).epsilon(1e-6));
    for (int k = 0; k < n; k += 500) CHECK(w[k] / z == doctest::Approx(gauss_pdf(lo + k * h, nbr_mean, prec)).epsilon(1e-6));
  }

  TEST_CASE("spatial prior constants") {
    const SpatialPriorConfig s;
    CHECK(s.shape(ParamId::Theta1) == 1000.0);
    CHECK(s.rate(ParamId::Theta2) == 1.0);
    CHECK(s.shape(ParamId::Gamma1) == 0.0001);
    CHECK(s.rate(ParamId::Gamma2) == 0.01);
    SpatialPriorConfig bad;
    bad.a_theta1 = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("noise prior elicitation") {
    const auto p = elicit_noise_prior(10, 0.75, 15.0);
    CHECK(p.a == doctest::Approx(2.0));
    CHECK(p.b == doctest::Approx(0.0025));
    CHECK(p.mean_variance() == doctest::Approx(0.0025));
    for (std::size_t n : {1u, 7u, 625u, 100000u}) {
      const auto q = elicit_noise_prior(n, 0.75, 15.0);
      CHECK(q.a == doctest::Approx(1.0 + 0.1 * static_cast<double>(n)));
      CHECK(q.mean_variance() == doctest::Approx(0.0025).epsilon(1e-12));
    }
    CHECK(std::sqrt(elicit_noise_prior(50, 0.75, 10.0).mean_variance()) == doctest::Approx(0.075));
    CHECK(std::sqrt(elicit_noise_prior(50, 0.75, 20.0).mean_variance()) == doctest::Approx(0.0375));
    CHECK_THROWS_AS(elicit_noise_prior(0, 0.75, 15.0), std::invalid_argument);
    CHECK_THROWS_AS(elicit_noise_prior(5, 0.0, 15.0), std::invalid_argument);
    CHECK_THROWS_AS(elicit_noise_prior(5, 0.75, -1.0), std::invalid_argument);
  }
}
