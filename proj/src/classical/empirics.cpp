#include "ionwalk/empirics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "ionwalk/classical.hpp"
#include "ionwalk/error.hpp"
#include "ionwalk/log.hpp"

namespace ionwalk::classical {

double EmpiricalLaws::alpha_max(double eta, double alpha0) const {
  if (alpha0 <= 1.0) {
    std::ostringstream os;
    os << "alpha_max law evaluated at alpha0 = " << alpha0 << " (fitted for alpha0 > 1)";
    warn(os.str());
  }
  const double x = eta * alpha0;
  return (((cubic[0] * x + cubic[1]) * x + cubic[2]) * x + cubic[3]) / eta;
}

double EmpiricalLaws::return_reduction(double alpha0, double alpha_max) const {
  return 1.0 - slope * (alpha0 - alpha_max) / alpha0 - intercept;
}

double EmpiricalLaws::return_fraction(double eta, double alpha0) const {
  return return_reduction(alpha0, alpha_max(eta, alpha0));
}

double alpha_max_empirical(double eta, double alpha0) { return EmpiricalLaws{}.alpha_max(eta, alpha0); }

double return_reduction_empirical(double alpha0, double alpha_max) {
  if (!(alpha_max > 0.0 && alpha_max <= alpha0)) {
    warn("return_reduction_empirical: expects 0 < alpha_max <= alpha0");
  }
  return EmpiricalLaws{}.return_reduction(alpha0, alpha_max);
}

EmpiricalLaws EmpiricsResult::laws() const {
  EmpiricalLaws l;
  l.cubic = cubic;
  l.slope = slope;
  l.intercept = intercept;
  return l;
}

double EmpiricsResult::relative_rms(const EmpiricalLaws& laws, double x_lo, double x_hi) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& p : points) {
    if (!p.ok || p.x < x_lo || p.x > x_hi) continue;
    const double rel = (laws.alpha_max(p.eta, p.alpha0) - p.alpha_max) / p.alpha_max;
    sum += rel * rel;
    ++count;
  }
  return count ? std::sqrt(sum / count) : std::nan("");
}

namespace {

// Least-squares cubic; returns c3..c0.
std::array<double, 4> fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[i];
    a(i, 0) = xi * xi * xi;
    a(i, 1) = xi * xi;
    a(i, 2) = xi;
    a(i, 3) = 1.0;
    b(i) = y[i];
  }
  const Eigen::Vector4d c = a.colPivHouseholderQr().solve(b);
  return {c(0), c(1), c(2), c(3)};
}

double eval_cubic(const std::array<double, 4>& c, double x) {
  return ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
}

}  // namespace

EmpiricsResult regenerate_empirics(const EmpiricsGrid& grid, double tol) {
  if (grid.etas.empty() || grid.alpha0s.empty()) throw Error("regenerate_empirics: empty grid");
  const double omega0 = grid.omega0 > 0.0 ? grid.omega0 : khz_to_rad_s(536.0);
  const double Omega = grid.Omega > 0.0 ? grid.Omega : khz_to_rad_s(93.0);

  EmpiricsResult res;
  for (double eta : grid.etas) {
    for (double alpha0 : grid.alpha0s) {
      EmpiricsPoint pt;
      pt.eta = eta;
      pt.alpha0 = alpha0;
      pt.x = eta * alpha0;
      try {
        DriveParams p;
        p.units = UnitSystem::from_trap(omega0, eta);
        p.Omega = Omega;
        p.delta = eta * Omega / alpha0;
        const Trajectory traj = integrate_classical(0.0, Spin::up, p, 1.35 * p.loop_period(), tol);
        const TrajectoryMetrics m = trajectory_metrics(traj, p);
        pt.alpha_max = m.alpha_max;
        pt.t_r = m.t_r;
        pt.R = m.R;
        pt.ok = true;
      } catch (const Error& e) {
        pt.error = e.what();
        ++res.failures;
      }
      res.points.push_back(pt);
    }
  }

  std::vector<double> xs, ys, us, vs;
  for (const auto& p : res.points) {
    if (!p.ok) continue;
    xs.push_back(p.x);
    ys.push_back(p.eta * p.alpha_max);
    us.push_back((p.alpha0 - p.alpha_max) / p.alpha0);
    vs.push_back(1.0 - p.R);
  }
  const std::size_t n = xs.size();
  if (n < 5) throw NumericalError("regenerate_empirics: fewer than 5 usable grid points");

  res.cubic = fit_cubic(xs, ys);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = eval_cubic(res.cubic, xs[i]) - ys[i];
    ss += r * r;
  }
  res.cubic_rms = std::sqrt(ss / n);

  double loo = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> xk, yk;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      xk.push_back(xs[i]);
      yk.push_back(ys[i]);
    }
    const auto c = fit_cubic(xk, yk);
    const double rel = (eval_cubic(c, xs[k]) - ys[k]) / ys[k];
    loo += rel * rel;
  }
  res.cubic_loo_rms_rel = std::sqrt(loo / n);

  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += us[i];
    mv += vs[i];
  }
  mu /= n;
  mv /= n;
  double suu = 0.0, suv = 0.0, uu0 = 0.0, uv0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    suu += (us[i] - mu) * (us[i] - mu);
    suv += (us[i] - mu) * (vs[i] - mv);
    uu0 += us[i] * us[i];
    uv0 += us[i] * vs[i];
  }
  res.slope = suv / suu;
  res.intercept = mv - res.slope * mu;
  res.slope_through_origin = uv0 / uu0;
  double sr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = vs[i] - (res.slope * us[i] + res.intercept);
    sr += r * r;
  }
  res.slope_rms = std::sqrt(sr / n);
  return res;
}

}  // namespace ionwalk::classical
