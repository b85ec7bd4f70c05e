#pragma once

#include <numbers>

namespace ionwalk {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kAtomicMass = 1.66053906660e-27;  // kg
inline constexpr double kCalcium40Mass = 39.962590866 * kAtomicMass;

/// Cycles-per-second in kHz to angular frequency in rad/s.
constexpr double khz_to_rad_s(double f_khz) { return kTwoPi * 1e3 * f_khz; }
constexpr double rad_s_to_khz(double w) { return w / (kTwoPi * 1e3); }
constexpr double us_to_s(double t_us) { return 1e-6 * t_us; }
constexpr double s_to_us(double t_s) { return 1e6 * t_s; }
constexpr double per_ms_to_per_s(double g) { return 1e3 * g; }
constexpr double per_s_to_per_ms(double g) { return 1e-3 * g; }

/// Trap and walking-wave length/time scales.
///
/// x0 = sqrt(hbar / 2 M omega0) is the ground-state length scale, so the
/// particle mass never appears once x0 is known. eta = k x0 is the
/// Lamb-Dicke parameter.
struct UnitSystem {
  double omega0 = 0.0;  // rad/s
  double x0 = 0.0;      // m
  double eta = 0.0;
  double k = 0.0;  // 1/m

  /// Builds the unit system from trap frequency, Lamb-Dicke parameter and
  /// particle mass; k follows from eta / x0.
  static UnitSystem from_trap(double omega0, double eta,
                              double mass = kCalcium40Mass);

  /// Throws ionwalk::Error when an invariant is violated.
  void validate() const;
};

}  // namespace ionwalk
