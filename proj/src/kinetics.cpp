#include "perfkit/kinetics.hpp"

#include <stdexcept>
#include <string>

namespace perfkit {

namespace {

// |k_ep - m_l| below this fraction of m_l switches to the expm1 form.
constexpr double kSingularRelTol = 1e-6;

// scale * (exp(-m u) - exp(-k u)) / (k - m). Near k = m the difference is
// rewritten as exp(-m u) * (1 - exp(-(k - m) u)) / (k - m), which has no
// cancellation and tends to u exp(-m u).
inline double exp_pair(double scale, double m, double k, double u, double decay_m, double decay_k) {
  const double delta = k - m;
  if (std::abs(delta) < kSingularRelTol * m) {
    if (delta == 0.0) return scale * u * decay_m;
    return scale * decay_m * (-std::expm1(-delta * u)) / delta;
  }
  return scale * (decay_m - decay_k) / delta;
}

inline double unit_conv(const AifParams& aif, double k_ep, double u, double decay1, double decay2) {
  if (u <= 0.0) return 0.0;
  const double decay_k = std::exp(-k_ep * u);
  return exp_pair(aif.dose * aif.a1, aif.m1, k_ep, u, decay1, decay_k) +
         exp_pair(aif.dose * aif.a2, aif.m2, k_ep, u, decay2, decay_k);
}

void check_rate(double k_trans, double k_ep) {
  if (!std::isfinite(k_ep) || k_ep < 0.0)
    throw std::invalid_argument("conv_exp: k_ep must be finite and non-negative, got " + std::to_string(k_ep));
  if (!std::isfinite(k_trans) || k_trans < 0.0)
    throw std::invalid_argument("conv_exp: k_trans must be finite and non-negative, got " +
                                std::to_string(k_trans));
}

}  // namespace

void AifParams::validate() const {
  const double pos[] = {dose, a1, a2, m1, m2};
  for (double v : pos) {
    if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument("AIF constants must be finite and positive");
  }
  if (!std::isfinite(t0) || t0 < 0.0) throw std::invalid_argument("AIF onset t0 must be finite and >= 0");
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw std::invalid_argument("time grid needs at least two points");
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!std::isfinite(times_[j]) || times_[j] < 0.0)
      throw std::invalid_argument("time grid entries must be finite and >= 0");
    if (j > 0 && !(times_[j] > times_[j - 1]))
      throw std::invalid_argument("time grid must be strictly increasing (index " + std::to_string(j) + ")");
  }
}

TimeGrid TimeGrid::uniform(std::size_t count, double dt, double start) {
  std::vector<double> t(count);
  for (std::size_t j = 0; j < count; ++j) t[j] = start + static_cast<double>(j + 1) * dt;
  return TimeGrid(std::move(t));
}

DerivedVolumes derived_volumes(const TwoComp& p) {
  return {std::exp(p.gamma1 - p.theta1), std::exp(p.gamma2 - p.theta2)};
}

double aif_value(const AifParams& aif, double t) {
  const double u = t - aif.t0;
  if (u < 0.0) return 0.0;
  return aif.dose * (aif.a1 * std::exp(-aif.m1 * u) + aif.a2 * std::exp(-aif.m2 * u));
}

double conv_exp(const AifParams& aif, double k_trans, double k_ep, double t) {
  check_rate(k_trans, k_ep);
  const double u = t - aif.t0;
  if (u <= 0.0) return 0.0;
  return k_trans * unit_conv(aif, k_ep, u, std::exp(-aif.m1 * u), std::exp(-aif.m2 * u));
}

std::vector<double> model_ctc(const KineticParams& params, const AifParams& aif, const TimeGrid& grid) {
  std::vector<double> out(grid.size());
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        for (std::size_t j = 0; j < grid.size(); ++j) {
          const double t = grid[j];
          if constexpr (std::is_same_v<P, OneComp>) {
            out[j] = conv_exp(aif, std::exp(p.gamma), std::exp(p.theta), t);
          } else if constexpr (std::is_same_v<P, TwoComp>) {
            out[j] = conv_exp(aif, std::exp(p.gamma1), std::exp(p.theta1), t) +
                     conv_exp(aif, std::exp(p.gamma2), std::exp(p.theta2), t);
          } else {
            out[j] = logistic(p.logit_vp) * aif_value(aif, t) + conv_exp(aif, std::exp(p.gamma), std::exp(p.theta), t);
          }
        }
      },
      params);
  return out;
}

AifKernel::AifKernel(const AifParams& aif, const TimeGrid& grid) : aif_(aif) {
  aif.validate();
  const std::size_t n = grid.size();
  elapsed_.resize(n);
  decay1_.resize(n);
  decay2_.resize(n);
  plasma_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = grid[j] - aif.t0;
    elapsed_[j] = u > 0.0 ? u : 0.0;
    decay1_[j] = std::exp(-aif.m1 * u);
    decay2_[j] = std::exp(-aif.m2 * u);
    plasma_[j] = aif_value(aif, grid[j]);
  }
}

void AifKernel::unit_response(double k_ep, std::span<double> out) const {
  for (std::size_t j = 0; j < elapsed_.size(); ++j)
    out[j] = unit_conv(aif_, k_ep, elapsed_[j], decay1_[j], decay2_[j]);
}

}  // namespace perfkit
