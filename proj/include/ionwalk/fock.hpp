#pragma once

// Truncated Fock-space states and operators for a single harmonic mode.
//
// Quadrature convention used throughout the library:
//   X = a + a^dagger,  P = -i (a - a^dagger)
// so the vacuum has unit variance in each quadrature and a coherent state
// |alpha> sits at (X, P) = (2 Re alpha, 2 Im alpha).

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace ionwalk::core {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Levels at the top of the basis that must stay (nearly) empty.
inline constexpr int kGuardLevels = 10;
inline constexpr double kGuardTolerance = 1e-6;

/// Normalized amplitude vector c_n over n = 0..n_max.
class MotionalState {
 public:
  MotionalState() = default;

  /// Takes ownership of the amplitudes and normalizes them.
  explicit MotionalState(Vector amplitudes);

  /// Keeps the amplitudes as given (no renormalization), for propagation
  /// outputs whose norm drift is itself a diagnostic.
  static MotionalState adopt(Vector amplitudes);

  static MotionalState vacuum(int n_max);
  static MotionalState number(int n, int n_max);

  const Vector& amplitudes() const { return amplitudes_; }
  cplx operator[](int n) const { return amplitudes_[n]; }
  int n_max() const { return static_cast<int>(amplitudes_.size()) - 1; }
  int dim() const { return static_cast<int>(amplitudes_.size()); }

  double norm() const { return amplitudes_.norm(); }
  /// Population in the top kGuardLevels levels.
  double edge_population() const;
  bool valid() const { return edge_population() < kGuardTolerance; }
  /// Throws TruncationOverflow when the guard fails.
  void require_valid(double time = -1.0) const;

 private:
  Vector amplitudes_;
};

/// Glauber coherent state. Throws TruncationOverflow if |alpha|^2 >= n_max/4
/// or if the truncated state fails the guard.
MotionalState coherent_state(cplx alpha, int n_max);

/// Matrix of exp(i eta (a + a^dagger)) in the truncated basis, built
/// element-wise from the associated-Laguerre closed form (no truncation of
/// the exponent series).
Matrix displacement_matrix(double eta, int n_max);

struct CosSinOperators {
  Matrix cos;  // cos(eta (a + a^dagger))
  Matrix sin;  // sin(eta (a + a^dagger))
};

CosSinOperators cos_sin_operators(double eta, int n_max);

/// <s1|s2>. Throws DimensionMismatch for different truncations.
cplx overlap(const MotionalState& s1, const MotionalState& s2);

struct QuadratureMoments {
  double mean_x = 0.0;
  double mean_p = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

QuadratureMoments quadrature_moments(const MotionalState& s);

/// sqrt(lambda_max / lambda_min) of the quadrature covariance: the ratio of
/// the principal axes of the uncertainty ellipse.
double squeezing_ratio(const MotionalState& s);
double squeezing_ratio(const QuadratureMoments& m);

/// <a>; equals alpha for a coherent state.
cplx mean_annihilation(const MotionalState& s);
double mean_number(const MotionalState& s);

/// exp(i theta a^dagger a) |s>, a rigid rotation of the phase-space picture.
MotionalState rotate(const MotionalState& s, double theta);

/// Geometric (thermal) distribution over initial Fock levels.
struct ThermalEnsemble {
  double nbar0 = 0.0;
  std::vector<double> weights;  // p_n for n = 0..weights.size()-1
};

/// p_n = nbar0^n / (nbar0 + 1)^(n+1), truncated once the discarded tail
/// drops below tail_tol and renormalized.
ThermalEnsemble thermal_weights(double nbar0, double tail_tol = 1e-8);

/// Normalized associated-Laguerre functions
///   f_n^k(x) = sqrt(n!/(n+k)!) x^(k/2) exp(-x/2) L_n^k(x),  n = 0..count-1,
/// evaluated by the three-term recurrence in n (no factorials formed).
std::vector<double> laguerre_functions(double x, int k, int count);

/// log(n!) for n >= 0.
double log_factorial(int n);

}  // namespace ionwalk::core
