// Arterial input function and closed-form tissue concentration curves for the
// one-compartment (Tofts), two-compartment and extended Tofts models.
//
// All times are in minutes, rate constants in 1/min.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace perfkit {

/// Bi-exponential plasma input C_p(t) = D * sum_l a_l exp(-m_l (t - t0)) for t >= t0.
struct AifParams {
  double dose = 0.1;   // mmol / kg body weight
  double a1 = 3.99;    // kg/l
  double a2 = 4.78;    // kg/l
  double m1 = 0.144;   // 1/min
  double m2 = 0.0111;  // 1/min
  double t0 = 0.0;     // bolus arrival, min

  /// Throws std::invalid_argument when any constant is out of range.
  void validate() const;

  bool operator==(const AifParams&) const = default;
};

/// Strictly increasing, non-negative acquisition times.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  /// t_j = start + j * dt for j = 1..count.
  static TimeGrid uniform(std::size_t count, double dt, double start = 0.0);

  std::span<const double> times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t j) const { return times_[j]; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
};

// Kinetic parameters on log scale: theta = log(k_ep), gamma = log(K_trans).
struct OneComp {
  double theta = 0.0;
  double gamma = 0.0;
};

struct TwoComp {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

struct ExtTofts {
  double theta = 0.0;
  double gamma = 0.0;
  double logit_vp = 0.0;  // plasma volume fraction v_p = logistic(logit_vp)
};

using KineticParams = std::variant<OneComp, TwoComp, ExtTofts>;

struct DerivedVolumes {
  double v_t1 = 0.0;
  double v_t2 = 0.0;
};

DerivedVolumes derived_volumes(const TwoComp& p);

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

double aif_value(const AifParams& aif, double t);

/// C_p * K_trans exp(-k_ep t) evaluated in closed form at time t.
double conv_exp(const AifParams& aif, double k_trans, double k_ep, double t);

/// Same convolution integral by adaptive Gauss-Kronrod quadrature, to absolute
/// tolerance `tol`. Test oracle only; throws std::runtime_error when the
/// quadrature does not converge.
double conv_exp_quadrature(const AifParams& aif, double k_trans, double k_ep, double t, double tol);

std::vector<double> model_ctc(const KineticParams& params, const AifParams& aif, const TimeGrid& grid);

/// AIF exponentials tabulated on a fixed grid. Evaluating the unit response of
/// a compartment then costs one exp per time point. Results are bit-identical
/// to conv_exp with k_trans = 1.
class AifKernel {
 public:
  AifKernel(const AifParams& aif, const TimeGrid& grid);

  std::size_t size() const { return elapsed_.size(); }

  /// out[j] = conv_exp(aif, 1, k_ep, t_j).
  void unit_response(double k_ep, std::span<double> out) const;

  /// C_p(t_j).
  std::span<const double> plasma() const { return plasma_; }

 private:
  AifParams aif_;
  std::vector<double> elapsed_;  // t_j - t0, clamped at 0
  std::vector<double> decay1_;   // exp(-m1 u_j)
  std::vector<double> decay2_;   // exp(-m2 u_j)
  std::vector<double> plasma_;
};

}  // namespace perfkit
