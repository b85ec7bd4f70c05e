#include "ionwalk/wigner.hpp"

#include <cmath>

#include "ionwalk/error.hpp"
#include "ionwalk/units.hpp"

namespace ionwalk::core {

double PhaseSpaceGrid::x(int i) const { return nx == 1 ? x_min : x_min + i * dx(); }
double PhaseSpaceGrid::p(int j) const { return np == 1 ? p_min : p_min + j * dp(); }

PhaseSpaceGrid PhaseSpaceGrid::square(double half_width, int points) {
  return PhaseSpaceGrid{-half_width, half_width, -half_width, half_width, points, points};
}

double WignerField::integral() const {
  double sum = 0.0;
  for (int j = 0; j < grid.np; ++j) {
    const double wj = (j == 0 || j == grid.np - 1) ? 0.5 : 1.0;
    for (int i = 0; i < grid.nx; ++i) {
      const double wi = (i == 0 || i == grid.nx - 1) ? 0.5 : 1.0;
      sum += wi * wj * values(j, i);
    }
  }
  return sum * grid.dx() * grid.dp();
}

namespace {

// Off-diagonal bands of the density matrix, rho(n+k, n) = c_{n+k} c_n^*,
// skipping bands that carry no weight.
struct Bands {
  std::vector<std::vector<cplx>> band;
  std::vector<bool> active;
};

Bands density_bands(const Vector& c) {
  const int d = static_cast<int>(c.size());
  Bands b;
  b.band.resize(d);
  b.active.assign(d, false);
  for (int k = 0; k < d; ++k) {
    auto& row = b.band[k];
    row.resize(d - k);
    double peak = 0.0;
    for (int n = 0; n + k < d; ++n) {
      row[n] = c[n + k] * std::conj(c[n]);
      peak = std::max(peak, std::abs(row[n]));
    }
    b.active[k] = peak > 1e-16;
  }
  return b;
}

double wigner_point(const Bands& b, int d, double x, double p) {
  const cplx alpha(0.5 * x, 0.5 * p);
  const double arg4 = 4.0 * std::norm(alpha);
  const double phase = std::arg(alpha);
  double sum = 0.0;
  for (int k = 0; k < d; ++k) {
    if (!b.active[k]) continue;
    const auto f = laguerre_functions(arg4, k, d - k);
    cplx acc = 0.0;
    double sign = 1.0;
    for (int n = 0; n + k < d; ++n) {
      acc += sign * f[n] * b.band[k][n];
      sign = -sign;
    }
    if (k == 0) {
      sum += acc.real();
    } else {
      sum += 2.0 * (acc * std::polar(1.0, -k * phase)).real();
    }
  }
  // (2/pi) in the alpha plane; dX dP = 4 d^2 alpha.
  return sum / (2.0 * kPi);
}

}  // namespace

double wigner_at(const MotionalState& s, double x, double p) {
  s.require_valid();
  return wigner_point(density_bands(s.amplitudes()), s.dim(), x, p);
}

WignerField wigner(const MotionalState& s, const PhaseSpaceGrid& grid) {
  if (grid.nx < 2 || grid.np < 2) throw Error("wigner: grid needs at least 2x2 points");
  s.require_valid();
  const Bands b = density_bands(s.amplitudes());
  WignerField w{grid, Eigen::MatrixXd(grid.np, grid.nx)};
  for (int j = 0; j < grid.np; ++j) {
    for (int i = 0; i < grid.nx; ++i) w.values(j, i) = wigner_point(b, s.dim(), grid.x(i), grid.p(j));
  }
  return w;
}

SigmaEllipse sigma_ellipse(const QuadratureMoments& m, double sigmas) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.covariance);
  SigmaEllipse e;
  e.center_x = m.mean_x;
  e.center_p = m.mean_p;
  e.minor = sigmas * std::sqrt(std::max(es.eigenvalues()(0), 0.0));
  e.major = sigmas * std::sqrt(std::max(es.eigenvalues()(1), 0.0));
  const Eigen::Vector2d v = es.eigenvectors().col(1);
  e.angle = std::atan2(v(1), v(0));
  return e;
}

}  // namespace ionwalk::core
