#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "ionwalk/empirics.hpp"
#include "ionwalk/error.hpp"
#include "ionwalk/interferometry.hpp"
#include "ionwalk/log.hpp"

namespace ionwalk::interferometry {

namespace {

using classical::Spin;

/// alpha_max / alpha0 from the published cubic. Below the ratio's maximum the
/// cubic's constant term dominates, so the ratio is continued smoothly to the
/// Lamb-Dicke value 1 at x = 0.
class ExcursionRatio {
 public:
  ExcursionRatio() {
    double best = 0.0;
    for (double x = 0.02; x <= 0.6; x += 1e-4) {
      if (cubic_ratio(x) > best) {
        best = cubic_ratio(x);
        x_peak_ = x;
      }
    }
    r_peak_ = best;
  }

  double operator()(double x) const {
    if (x >= x_peak_) return std::min(1.0, cubic_ratio(x));
    const double u = x / x_peak_;
    return 1.0 - (1.0 - r_peak_) * u * u;
  }

 private:
  static double cubic_ratio(double x) {
    const auto& c = classical::EmpiricalLaws{}.cubic;
    return (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) / x;
  }

  double x_peak_ = 0.2;
  double r_peak_ = 1.0;
};

const ExcursionRatio& excursion_ratio() {
  static const ExcursionRatio r;
  return r;
}

double empirical_R(double eta, double alpha0) {
  const double ratio = excursion_ratio()(eta * alpha0);
  return 1.0 - classical::EmpiricalLaws{}.slope * (1.0 - ratio);
}

double branch_separation(const Inference& inf, double eta, double Phi_w, const InferenceOptions& opts) {
  const DriveParams params = inf.drive(eta, opts.omega0, Phi_w);
  const double t_end = 1.05 * std::max(inf.R, 0.3) * params.loop_period();
  if (opts.separation == SeparationSource::quantum) {
    const auto ev = quantum::evolve_cat(core::MotionalState::vacuum(opts.propagator.n_max), params, t_end,
                                        opts.propagator);
    return quantum::max_branch_separation(ev);
  }
  const auto up = classical::integrate_classical(0.0, Spin::up, params, t_end);
  const auto down = classical::integrate_classical(0.0, Spin::down, params, t_end);
  double best = 0.0;
  for (std::size_t i = 0; i < std::min(up.size(), down.size()); ++i) {
    best = std::max(best, std::abs(up.alphas[i] - down.alphas[i]));
  }
  return best;
}

std::vector<CurvePoint> default_tau_grid(double t_r) {
  std::vector<CurvePoint> pts;
  for (double tau : linear_grid(0.02 * t_r, 1.1 * t_r, 48)) pts.push_back({tau, 0.0, 0.02});
  return pts;
}

void calibrate(Inference& inf, const AmplitudeFit& amp, double Phi_w, double nbar0, double eta,
               const InferenceOptions& opts) {
  std::vector<CurvePoint> pts = opts.amplitude_points.empty() ? default_tau_grid(amp.t_r) : opts.amplitude_points;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
  std::vector<double> taus;
  for (const auto& p : pts) taus.push_back(p.tau);
  const auto ensemble = core::thermal_weights(nbar0);

  double abs_delta = std::abs(inf.delta);
  double alpha0 = inf.alpha0;
  double gamma_extra = amp.gamma;
  double prev_log_a = 0.0, prev_log_d = 0.0;
  bool have_prev = false;
  AmplitudeFit model_fit;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    inf.iterations = it;
    Inference trial = inf;
    trial.alpha0 = alpha0;
    trial.delta = opts.detuning_sign * abs_delta;
    trial.Omega = alpha0 * abs_delta / eta;
    const DriveParams params = trial.drive(eta, opts.omega0, Phi_w);
    const auto overlaps = quantum::thermal_branch_overlap(ensemble, params, taus, opts.propagator);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      pts[i].value = std::abs(overlaps[i]) * std::exp(-gamma_extra * pts[i].tau);
    }
    model_fit = fit_amplitude_curve(pts, {amp.D, amp.t_r, amp.gamma});

    const double eD = (model_fit.D - amp.D) / amp.D;
    const double et = (model_fit.t_r - amp.t_r) / amp.t_r;
    inf.alpha0 = alpha0;
    inf.delta = trial.delta;
    inf.Omega = trial.Omega;
    if (std::abs(eD) < opts.tolerance && std::abs(et) < opts.tolerance) return;

    const double log_a = std::log(alpha0), log_d = std::log(model_fit.D);
    double slope = 1.0;
    if (have_prev && std::abs(log_a - prev_log_a) > 1e-9) {
      slope = std::clamp((log_d - prev_log_d) / (log_a - prev_log_a), 0.3, 3.0);
    }
    prev_log_a = log_a;
    prev_log_d = log_d;
    have_prev = true;
    alpha0 = std::exp(log_a + (std::log(amp.D) - log_d) / slope);
    abs_delta *= model_fit.t_r / amp.t_r;
    gamma_extra -= model_fit.gamma - amp.gamma;
  }
  inf.flags.push_back("calibration did not reach tolerance");
}

}  // namespace

DriveParams Inference::drive(double eta, double omega0, double Phi_w) const {
  DriveParams p;
  p.Omega = Omega;
  p.delta = delta;
  p.phi_up = 0.5 * Phi_w;
  p.phi_down = -0.5 * Phi_w;
  p.units = UnitSystem::from_trap(omega0, eta);
  return p;
}

Inference infer_parameters(const AmplitudeFit& amp, const PhaseFit* phase, double Phi_w, double nbar0,
                           double eta, const InferenceOptions& opts) {
  if (!(Phi_w > 0.0 && Phi_w < kPi)) throw Error("infer_parameters: Phi_w must lie in (0, pi)");
  if (!(amp.t_r > 0.0) || !(amp.D > 0.0)) throw Error("infer_parameters: amplitude fit needs D > 0 and t_r > 0");
  if (!(eta > 0.0) || nbar0 < 0.0) throw Error("infer_parameters: invalid eta or nbar0");
  if (opts.detuning_sign != 1 && opts.detuning_sign != -1) throw Error("infer_parameters: detuning sign must be +1 or -1");

  Inference inf;
  if (phase && phase->converged) {
    const double joint = std::hypot(amp.sigma_t_r, phase->sigma_t_r);
    if (std::abs(amp.t_r - phase->t_r) > 2.0 * joint) {
      inf.flags.push_back("amplitude and phase return times disagree");
      warn("infer_parameters: amplitude and phase return times disagree");
    }
  }

  inf.R_alpha0 = amp.D / (std::sqrt(2.0 * nbar0 + 1.0) * std::sin(0.5 * Phi_w));
  const double target = inf.R_alpha0;
  auto g = [&](double a0) { return a0 * empirical_R(eta, a0) - target; };
  const double lo = target;
  double hi = target * 1.25;
  const double hi_cap = 3.0 / eta;
  while (g(hi) < 0.0 && hi < hi_cap) hi = std::min(hi * 1.25, hi_cap);
  if (g(lo) > 0.0 || g(hi) < 0.0) {
    std::ostringstream os;
    os << "infer_parameters: no alpha0 in [" << lo << ", " << hi << "] reproduces R alpha0 = " << target;
    throw NumericalError(os.str());
  }
  if (g(lo) == 0.0) {
    inf.alpha0 = lo;
  } else {
    boost::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    inf.alpha0 = 0.5 * (a + b);
  }
  inf.R = empirical_R(eta, inf.alpha0);
  inf.delta = opts.detuning_sign * kTwoPi * inf.R / amp.t_r;
  inf.Omega = inf.alpha0 * std::abs(inf.delta) / eta;

  if (opts.route == InferenceRoute::calibrated) {
    calibrate(inf, amp, Phi_w, nbar0, eta, opts);
    inf.R = amp.t_r * std::abs(inf.delta) / kTwoPi;
  }

  inf.alpha_max = inf.alpha0 * excursion_ratio()(eta * inf.alpha0);
  if (!opts.skip_separation) inf.delta_alpha_max = branch_separation(inf, eta, Phi_w, opts);
  return inf;
}

}  // namespace ionwalk::interferometry
