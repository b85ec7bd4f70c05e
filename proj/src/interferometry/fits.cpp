#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "ionwalk/error.hpp"
#include "ionwalk/interferometry.hpp"

namespace ionwalk::interferometry {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Model value at tau and its gradient with respect to the parameters.
using Model = std::function<double(double tau, const VectorXd& p, double* grad)>;

struct Residuals {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const std::vector<CurvePoint>& pts;
  const Model& model;
  int n;

  int inputs() const { return n; }
  int values() const { return static_cast<int>(pts.size()); }

  int operator()(const VectorXd& p, VectorXd& r) const {
    for (int i = 0; i < values(); ++i) r[i] = (model(pts[i].tau, p, nullptr) - pts[i].value) / pts[i].sigma;
    return 0;
  }
  int df(const VectorXd& p, MatrixXd& jac) const {
    std::vector<double> g(n);
    for (int i = 0; i < values(); ++i) {
      model(pts[i].tau, p, g.data());
      for (int j = 0; j < n; ++j) jac(i, j) = g[j] / pts[i].sigma;
    }
    return 0;
  }
};

struct LsqResult {
  VectorXd p;
  VectorXd sigma;
  double cost = kInf;  // sum of squared weighted residuals
  double rms = 0.0;    // unweighted
  bool converged = false;
};

double weighted_cost(const std::vector<CurvePoint>& pts, const Model& model, const VectorXd& p) {
  double c = 0.0;
  for (const auto& pt : pts) {
    const double r = (model(pt.tau, p, nullptr) - pt.value) / pt.sigma;
    c += r * r;
  }
  return c;
}

/// Parameter standard errors from the Gauss-Newton normal matrix, inflated
/// by the reduced chi-square when it exceeds one. Directions the data do not
/// constrain get infinite errors.
VectorXd parameter_errors(const Residuals& fn, const VectorXd& p, double cost) {
  const int m = fn.values(), n = fn.inputs();
  MatrixXd jac(m, n);
  fn.df(p, jac);
  const MatrixXd normal = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(normal);
  const VectorXd& lam = es.eigenvalues();
  const MatrixXd& v = es.eigenvectors();
  const double top = std::max(lam.maxCoeff(), 0.0);
  const double scale = m > n ? std::max(1.0, cost / (m - n)) : 1.0;
  VectorXd var = VectorXd::Zero(n);
  VectorXd sigma(n);
  std::vector<bool> free(n, false);
  for (int k = 0; k < n; ++k) {
    if (lam[k] > 1e-12 * top && lam[k] > 0.0) {
      var += v.col(k).cwiseAbs2() / lam[k];
    } else {
      for (int j = 0; j < n; ++j) {
        if (std::abs(v(j, k)) > 1e-6) free[j] = true;
      }
    }
  }
  for (int j = 0; j < n; ++j) sigma[j] = free[j] ? kInf : std::sqrt(var[j] * scale);
  return sigma;
}

LsqResult least_squares(const std::vector<CurvePoint>& pts, const Model& model, const VectorXd& p0) {
  Residuals fn{pts, model, static_cast<int>(p0.size())};
  VectorXd p = p0;
  Eigen::LevenbergMarquardt<Residuals> lm(fn);
  lm.parameters.xtol = 1e-8;
  lm.parameters.ftol = 1e-12;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(p);
  LsqResult res;
  res.p = p;
  res.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
  res.cost = weighted_cost(pts, model, p);
  double ss = 0.0;
  for (const auto& pt : pts) {
    const double r = model(pt.tau, p, nullptr) - pt.value;
    ss += r * r;
  }
  res.rms = std::sqrt(ss / pts.size());
  res.sigma = parameter_errors(fn, p, res.cost);
  return res;
}

void check_points(const std::vector<CurvePoint>& pts, std::size_t min_count, const char* who) {
  if (pts.size() < min_count) {
    std::ostringstream os;
    os << who << ": need at least " << min_count << " points, got " << pts.size();
    throw NumericalError(os.str());
  }
  for (const auto& p : pts) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.value) || !std::isfinite(p.tau)) {
      throw NumericalError(std::string(who) + ": invalid point");
    }
  }
}

/// Weighted linear least squares; returns coefficients and the cost.
std::pair<VectorXd, double> linear_fit(const MatrixXd& design, const VectorXd& y, const VectorXd& w) {
  const MatrixXd a = w.asDiagonal() * design;
  const VectorXd b = w.asDiagonal() * y;
  VectorXd c = a.colPivHouseholderQr().solve(b);
  return {c, (a * c - b).squaredNorm()};
}

}  // namespace

double amplitude_model(double tau, double D, double t_r, double gamma) {
  const double s = std::sin(kPi * tau / t_r);
  return std::exp(-gamma * tau - 2.0 * D * D * s * s);
}

double phase_model(double tau, double constant, double Delta_pi, double b2, double t_r) {
  const double s = std::sin(kPi * tau / t_r);
  return constant + Delta_pi * tau + b2 * s * s;
}

AmplitudeFit fit_amplitude_curve(const std::vector<CurvePoint>& input, AmplitudeGuess guess) {
  check_points(input, 6, "fit_amplitude_curve");
  std::vector<CurvePoint> pts = input;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
  const double T = pts.back().tau;
  if (!(T > 0.0)) throw NumericalError("fit_amplitude_curve: tau range is empty");

  // p = (D, t_r / T, gamma T)
  const Model model = [T](double tau, const VectorXd& p, double* g) {
    const double t_r = p[1] * T, gamma = p[2] / T;
    const double arg = kPi * tau / t_r;
    const double s = std::sin(arg), c = std::cos(arg);
    const double a = std::exp(-gamma * tau - 2.0 * p[0] * p[0] * s * s);
    if (g) {
      g[0] = -4.0 * p[0] * s * s * a;
      g[1] = a * 4.0 * p[0] * p[0] * s * c * arg / p[1];
      g[2] = -tau / T * a;
    }
    return a;
  };

  // Return-time seed: the revival after the deepest point.
  double t_r0 = guess.t_r;
  if (!(t_r0 > 0.0)) {
    std::size_t i_min = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].value < pts[i_min].value) i_min = i;
    }
    std::size_t i_rev = i_min;
    for (std::size_t i = i_min + 1; i < pts.size(); ++i) {
      if (pts[i].value > pts[i_rev].value) i_rev = i;
    }
    t_r0 = i_rev > i_min ? pts[i_rev].tau : 2.0 * std::max(pts[i_min].tau, 0.25 * T);
  }

  // For fixed t_r, log A = -gamma tau - 2 D^2 sin^2 is linear in (gamma, D^2).
  std::vector<CurvePoint> usable;
  for (const auto& p : pts) {
    if (p.value > std::max(3.0 * p.sigma, 0.02)) usable.push_back(p);
  }
  auto profile = [&](double t_r) {
    VectorXd p(3);
    p << 0.0, t_r / T, 0.0;
    if (usable.size() >= 3) {
      MatrixXd design(usable.size(), 2);
      VectorXd y(usable.size()), w(usable.size());
      for (std::size_t i = 0; i < usable.size(); ++i) {
        const double s = std::sin(kPi * usable[i].tau / t_r);
        design(i, 0) = -usable[i].tau;
        design(i, 1) = -2.0 * s * s;
        y[i] = std::log(usable[i].value);
        w[i] = usable[i].value / usable[i].sigma;
      }
      const auto [c, cost] = linear_fit(design, y, w);
      p[0] = std::sqrt(std::max(c[1], 0.0));
      p[2] = std::max(c[0], 0.0) * T;
    }
    if (guess.D > 0.0) p[0] = guess.D;
    if (guess.gamma >= 0.0) p[2] = guess.gamma * T;
    return p;
  };

  VectorXd best_start = profile(t_r0);
  double best_cost = weighted_cost(pts, model, best_start);
  if (!(guess.t_r > 0.0)) {
    for (int k = 0; k <= 60; ++k) {
      const double t_r = t_r0 * (0.6 + 0.02 * k);
      const VectorXd p = profile(t_r);
      const double c = weighted_cost(pts, model, p);
      if (c < best_cost) {
        best_cost = c;
        best_start = p;
      }
    }
  }

  LsqResult best;
  for (double f : {1.0, 0.97, 1.03}) {
    VectorXd p0 = best_start;
    p0[1] *= f;
    if (p0[0] == 0.0 && usable.size() < pts.size()) p0[0] = 1.0;
    LsqResult r = least_squares(pts, model, p0);
    if (r.cost < best.cost) best = r;
  }

  AmplitudeFit fit;
  fit.D = std::abs(best.p[0]);
  fit.t_r = best.p[1] * T;
  fit.gamma = best.p[2] / T;
  fit.sigma_D = best.sigma[0];
  fit.sigma_t_r = best.sigma[1] * T;
  fit.sigma_gamma = best.sigma[2] / T;
  fit.residual = best.rms;
  fit.converged = best.converged;
  if (!best.converged) fit.flags.push_back("not converged; best-so-far parameters reported");
  if (fit.gamma < 0.0) {
    fit.flags.push_back("negative gamma clamped to zero");
    fit.gamma = 0.0;
  }
  if (!(fit.t_r > 0.0)) {
    fit.flags.push_back("non-positive t_r");
  }
  if (T < 0.8 * fit.t_r) fit.flags.push_back("tau range shorter than 0.8 t_r");
  return fit;
}

std::vector<double> unwrap_phases(const std::vector<double>& phases, std::vector<std::string>* flags) {
  std::vector<double> out(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i == 0) {
      out[i] = phases[i];
      continue;
    }
    out[i] = phases[i] + kTwoPi * std::round((out[i - 1] - phases[i]) / kTwoPi);
    if (flags && std::abs(out[i] - out[i - 1]) > 0.9 * kPi) {
      std::ostringstream os;
      os << "ambiguous unwrap between points " << i - 1 << " and " << i;
      flags->push_back(os.str());
    }
  }
  return out;
}

PhaseFit fit_phase_curve(std::vector<CurvePoint> pts, double t_r_hint) {
  check_points(pts, 6, "fit_phase_curve");
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
  PhaseFit fit;
  std::vector<double> raw;
  for (const auto& p : pts) raw.push_back(p.value);
  const std::vector<double> un = unwrap_phases(raw, &fit.flags);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].value = un[i];
  const double T = pts.back().tau;
  if (!(T > 0.0)) throw NumericalError("fit_phase_curve: tau range is empty");

  // p = (c, Delta_pi T, b2, t_r / T)
  const Model model = [T](double tau, const VectorXd& p, double* g) {
    const double t_r = p[3] * T;
    const double arg = kPi * tau / t_r;
    const double s = std::sin(arg), c = std::cos(arg);
    if (g) {
      g[0] = 1.0;
      g[1] = tau / T;
      g[2] = s * s;
      g[3] = -2.0 * p[2] * s * c * arg / p[3];
    }
    return p[0] + p[1] * tau / T + p[2] * s * s;
  };

  auto profile = [&](double t_r) {
    MatrixXd design(pts.size(), 3);
    VectorXd y(pts.size()), w(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double s = std::sin(kPi * pts[i].tau / t_r);
      design(i, 0) = 1.0;
      design(i, 1) = pts[i].tau / T;
      design(i, 2) = s * s;
      y[i] = pts[i].value;
      w[i] = 1.0 / pts[i].sigma;
    }
    auto [c, cost] = linear_fit(design, y, w);
    VectorXd p(4);
    p << c[0], c[1], c[2], t_r / T;
    return std::make_pair(p, cost);
  };

  const double centre = t_r_hint > 0.0 ? t_r_hint : T;
  VectorXd start;
  double best_cost = kInf;
  for (int k = 0; k <= 60; ++k) {
    const auto [p, c] = profile(centre * (0.7 + 0.01 * k));
    if (c < best_cost) {
      best_cost = c;
      start = p;
    }
  }
  const LsqResult r = least_squares(pts, model, start);

  fit.constant = r.p[0];
  fit.Delta_pi = r.p[1] / T;
  fit.b2 = r.p[2];
  fit.B = std::sqrt(std::abs(fit.b2));
  fit.t_r = r.p[3] * T;
  fit.sigma_constant = r.sigma[0];
  fit.sigma_Delta_pi = r.sigma[1] / T;
  // sigma_B from sigma_b2: dB/db2 = 1 / (2 B)
  fit.sigma_B = fit.B > 0.0 ? r.sigma[2] / (2.0 * fit.B) : kInf;
  fit.sigma_t_r = r.sigma[3] * T;
  fit.residual = r.rms;
  fit.converged = r.converged;
  if (!r.converged) fit.flags.push_back("not converged; best-so-far parameters reported");
  if (fit.b2 < 0.0) fit.flags.push_back("negative b2: B reported as sqrt|b2|");
  return fit;
}

SinusoidFit fit_sinusoid(const FringeScan& scan) {
  scan.validate();
  const auto m = scan.points.size();
  if (m < 4) throw NumericalError("fit_sinusoid: need at least 4 phases");
  MatrixXd design(m, 3);
  VectorXd y(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& pt = scan.points[i];
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(pt.phi);
    design(i, 2) = std::sin(pt.phi);
    y[i] = pt.p_hat;
    w[i] = std::sqrt(static_cast<double>(pt.shots));
  }

  VectorXd c;
  MatrixXd cov;
  auto solve = [&] {
    const MatrixXd a = w.asDiagonal() * design;
    const MatrixXd normal = a.transpose() * a;
    Eigen::LDLT<MatrixXd> ldlt(normal);
    const double top = normal.diagonal().maxCoeff();
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-10 * top) {
      throw NumericalError("fit_sinusoid: phases do not determine the sinusoid");
    }
    c = ldlt.solve(a.transpose() * (w.asDiagonal() * y));
    cov = ldlt.solve(MatrixXd::Identity(3, 3));
  };
  // Binomial errors evaluated on the first-pass model, not on p_hat itself.
  solve();
  for (std::size_t i = 0; i < m; ++i) {
    const int shots = scan.points[i].shots;
    const double p = std::clamp(design.row(i).dot(c), 0.0, 1.0);
    w[i] = 1.0 / std::max(std::sqrt(p * (1.0 - p) / shots), 0.5 / shots);
  }
  solve();

  // P = c0 + c1 cos phi + c2 sin phi with c1 = -(A/2) cos phi0, c2 = -(A/2) sin phi0
  SinusoidFit fit;
  const double c1 = c[1], c2 = c[2];
  const double r2 = c1 * c1 + c2 * c2;
  fit.A = 2.0 * std::sqrt(r2);
  fit.phi0 = std::atan2(-c2, -c1);
  if (fit.A > 1e-12) {
    fit.sigma_A = 2.0 * std::sqrt((c1 * c1 * cov(1, 1) + c2 * c2 * cov(2, 2) + 2.0 * c1 * c2 * cov(1, 2)) / r2);
    fit.sigma_phi0 = std::sqrt((c2 * c2 * cov(1, 1) + c1 * c1 * cov(2, 2) - 2.0 * c1 * c2 * cov(1, 2))) / r2;
  } else {
    fit.sigma_A = 2.0 * std::sqrt(std::max(cov(1, 1), cov(2, 2)));
    fit.sigma_phi0 = kInf;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = design.row(i).dot(c) - y[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

DatasetFit fit_dataset(const std::vector<FringeScan>& scans, const DatasetFitOptions& opts) {
  DatasetFit out;
  std::vector<CurvePoint> amp, phase;
  for (const auto& scan : scans) {
    const SinusoidFit s = fit_sinusoid(scan);
    out.taus.push_back(scan.tau);
    out.sinusoids.push_back(s);
    amp.push_back({scan.tau, s.A, s.sigma_A});
    if (s.sigma_phi0 <= opts.max_phase_sigma) phase.push_back({scan.tau, s.phi0, s.sigma_phi0});
  }
  out.amplitude = fit_amplitude_curve(amp);
  if (phase.size() >= 6) {
    out.phase = fit_phase_curve(phase, out.amplitude.t_r);
  } else {
    out.phase.flags.push_back("too few well-determined phases for the phase fit");
  }
  return out;
}

}  // namespace ionwalk::interferometry
