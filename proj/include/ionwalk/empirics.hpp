#pragma once

#include <array>
#include <string>
#include <vector>

namespace ionwalk::classical {

/// Empirical scaling laws for driving outside the Lamb-Dicke regime.
///
///   alpha_max ~= (c3 x^3 + c2 x^2 + c1 x + c0) / eta,   x = eta alpha0
///   1 - R     ~= slope (alpha0 - alpha_max) / alpha0 + intercept
///
/// Defaults are the published fit (intercept zero).
struct EmpiricalLaws {
  std::array<double, 4> cubic{0.076827, -0.45539, 1.1352, -0.011266};  // c3, c2, c1, c0
  double slope = 0.82;
  double intercept = 0.0;

  /// Warns (does not throw) for alpha0 <= 1, outside the fitted range.
  double alpha_max(double eta, double alpha0) const;
  double return_reduction(double alpha0, double alpha_max) const;
  /// R(alpha0) with alpha_max taken from the cubic.
  double return_fraction(double eta, double alpha0) const;
};

double alpha_max_empirical(double eta, double alpha0);
double return_reduction_empirical(double alpha0, double alpha_max);

struct EmpiricsGrid {
  std::vector<double> etas{0.15, 0.2, 0.25, 0.3};
  std::vector<double> alpha0s{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0};
  double omega0 = 0.0;  // rad/s; 0 selects 2 pi * 536 kHz
  double Omega = 0.0;   // rad/s; 0 selects 2 pi * 93 kHz. delta = eta Omega / alpha0.
};

struct EmpiricsPoint {
  double eta = 0.0, alpha0 = 0.0, x = 0.0;
  double alpha_max = 0.0, t_r = 0.0, R = 0.0;
  bool ok = false;
  std::string error;
};

struct EmpiricsResult {
  std::vector<EmpiricsPoint> points;
  std::array<double, 4> cubic{};  // c3..c0 fit of eta*alpha_max against x
  double cubic_rms = 0.0;         // RMS residual of eta*alpha_max
  double cubic_loo_rms_rel = 0.0; // leave-one-out relative RMS on alpha_max
  double slope = 0.0;             // ordinary least squares with intercept
  double intercept = 0.0;
  double slope_rms = 0.0;
  double slope_through_origin = 0.0;
  int failures = 0;

  EmpiricalLaws laws() const;
  /// Relative RMS error of `laws.alpha_max` against the simulated points with
  /// x in [x_lo, x_hi].
  double relative_rms(const EmpiricalLaws& laws, double x_lo, double x_hi) const;
};

/// Integrates the classical motion over the grid, measures alpha_max and R
/// per point, and refits both laws. Failing points are counted and skipped.
EmpiricsResult regenerate_empirics(const EmpiricsGrid& grid, double tol = 1e-8);

}  // namespace ionwalk::classical
