#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ionwalk/units.hpp"

namespace ionwalk::classical {

using cplx = std::complex<double>;

enum class Spin { up, down };

const char* to_string(Spin s);

/// Walking-wave drive, all in SI units (rad/s, rad).
///
/// The potential seen by spin m is  hbar Omega cos(k x - omega t + phi_m)
/// with omega = omega0 + delta, plus a spin precession at Delta_pi.
struct DriveParams {
  double Omega = 0.0;
  double delta = 0.0;
  double phi_up = 0.0;
  double phi_down = 0.0;
  double Delta_pi = 0.0;
  UnitSystem units;

  double omega() const { return units.omega0 + delta; }
  double phi(Spin s) const { return s == Spin::up ? phi_up : phi_down; }
  /// |phi_up - phi_down| folded into [0, pi].
  double Phi_w() const;
  /// eta Omega / |delta|: the excursion the same drive would reach in the
  /// Lamb-Dicke limit. Infinite for a resonant drive.
  double alpha0() const;
  /// 2 pi / |delta| (infinite for delta = 0).
  double loop_period() const;

  /// Emits warnings for regimes where the Lamb-Dicke reference formulas are
  /// unreliable (|delta| > 0.1 omega0).
  void check() const;

  /// Convenience constructor from kHz-valued inputs (cycles, not rad/s).
  static DriveParams from_khz(double omega0_khz, double eta, double Omega_khz,
                              double delta_khz, double phi_up, double phi_down,
                              double Delta_pi_khz = 0.0);
};

/// Phase-space path alpha(t) in the frame rotating at omega0.
struct Trajectory {
  std::vector<double> times;  // s
  std::vector<cplx> alphas;
  Spin spin = Spin::up;
  double period = 0.0;  // 2 pi / |delta| of the generating drive; 0 if unknown

  std::size_t size() const { return times.size(); }
  double max_abs() const;
};

struct TrajectoryMetrics {
  double alpha_max = 0.0;  // max |alpha| over the first loop
  double t_r = 0.0;        // s
  double R = 0.0;          // t_r |delta| / 2 pi
  double alpha0 = 0.0;     // eta Omega / |delta|
  std::vector<std::string> flags;
};

/// Integrates
///   d alpha/dt = i Omega eta e^{i omega0 t} sin(k x - omega t + phi_m),
///   k x = 2 eta Re(alpha e^{-i omega0 t}),
/// with an adaptive Dormand-Prince stepper. Samples are uniform with at least
/// `samples_per_loop` points per 2 pi/|delta|. Throws NumericalError if the
/// stepper stalls.
Trajectory integrate_classical(cplx alpha_init, Spin spin, const DriveParams& params,
                               double t_end, double tol = 1e-8, int samples_per_loop = 2000);

/// Lamb-Dicke reference: alpha(t) = (eta Omega / 2 delta) e^{i chi} (1 - e^{-i delta t})
/// with chi = phi_m - pi/2, which is the rotating-wave limit of
/// integrate_classical. Resonant drives grow linearly instead.
cplx ldr_trajectory(const DriveParams& params, Spin spin, double t);

/// Orientation phase chi_m of the Lamb-Dicke circle.
double ldr_orientation(const DriveParams& params, Spin spin);

/// Time of the first close approach to the origin: the deepest sample inside
/// the first excursion below half the peak |alpha| within
/// (0.3, 1.3) * traj.period, refined by a parabola through |alpha|^2.
/// Throws NoReturn if the trajectory never closes.
double return_time(const Trajectory& traj);

/// Im of the integral of conj(alpha) d alpha (trapezoid rule); twice the
/// signed area swept by the path.
double loop_phase(const Trajectory& traj);

/// Return time and peak excursion over the first loop, plus invariant flags.
TrajectoryMetrics trajectory_metrics(const Trajectory& traj, const DriveParams& params);

}  // namespace ionwalk::classical
