#include "perfkit/kinetics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perfkit {

double conv_exp_quadrature(const AifParams& aif, double k_trans, double k_ep, double t, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (t <= aif.t0 || k_trans == 0.0) return 0.0;

  auto integrand = [&](double s) { return aif_value(aif, s) * k_trans * std::exp(-k_ep * (t - s)); };

  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr unsigned kMaxDepth = 15;
  // Turn the absolute target into the relative one the integrator expects; a
  // target below rounding would otherwise bisect to the full depth.
  double l1 = 0.0;
  Rule::integrate(integrand, aif.t0, t, 0, 0.0, nullptr, &l1);
  const double rel = l1 > 0.0 ? std::max(0.5 * tol / l1, 64.0 * std::numeric_limits<double>::epsilon()) : 1.0;
  double error = 0.0;
  const double value = Rule::integrate(integrand, aif.t0, t, kMaxDepth, rel, &error);
  if (!(error <= tol)) throw std::runtime_error("conv_exp_quadrature: no convergence within depth budget");
  return value;
}

}  // namespace perfkit
