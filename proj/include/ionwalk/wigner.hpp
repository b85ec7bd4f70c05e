#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ionwalk/fock.hpp"

namespace ionwalk::core {

/// Rectangular grid over the (X, P) quadrature plane.
struct PhaseSpaceGrid {
  double x_min = -5.0, x_max = 5.0;
  double p_min = -5.0, p_max = 5.0;
  int nx = 101, np = 101;

  double x(int i) const;
  double p(int j) const;
  double dx() const { return (x_max - x_min) / (nx - 1); }
  double dp() const { return (p_max - p_min) / (np - 1); }

  /// Square grid of half-width `half_width` centred on the origin.
  static PhaseSpaceGrid square(double half_width, int points);
};

/// W(x, p) sampled on a grid; values(j, i) holds the point (x(i), p(j)).
/// Normalized so that the integral over dX dP is one.
struct WignerField {
  PhaseSpaceGrid grid;
  Eigen::MatrixXd values;

  /// Trapezoid-rule integral over the grid.
  double integral() const;
  double max() const { return values.maxCoeff(); }
};

/// Evaluates the Wigner function of a pure state by the Fock-basis Laguerre
/// sum at every grid point. Throws TruncationOverflow for invalid states.
WignerField wigner(const MotionalState& s, const PhaseSpaceGrid& grid);

/// Point evaluation, same convention as wigner().
double wigner_at(const MotionalState& s, double x, double p);

/// Principal axes of the Gaussian-equivalent ellipse at `sigmas` standard
/// deviations (Mahalanobis radius) around the state's centroid.
struct SigmaEllipse {
  double center_x = 0.0, center_p = 0.0;
  double major = 0.0, minor = 0.0;  // semi-axes
  double angle = 0.0;               // major axis vs the X axis (rad)
};

SigmaEllipse sigma_ellipse(const QuadratureMoments& m, double sigmas);

}  // namespace ionwalk::core
