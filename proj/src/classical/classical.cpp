#include "ionwalk/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "ionwalk/error.hpp"
#include "ionwalk/log.hpp"

namespace ionwalk::classical {

namespace odeint = boost::numeric::odeint;

const char* to_string(Spin s) { return s == Spin::up ? "up" : "down"; }

double DriveParams::Phi_w() const {
  double d = std::fmod(std::abs(phi_up - phi_down), kTwoPi);
  if (d > kPi) d = kTwoPi - d;
  return d;
}

double DriveParams::alpha0() const {
  if (delta == 0.0) return std::numeric_limits<double>::infinity();
  return units.eta * Omega / std::abs(delta);
}

double DriveParams::loop_period() const {
  if (delta == 0.0) return std::numeric_limits<double>::infinity();
  return kTwoPi / std::abs(delta);
}

void DriveParams::check() const {
  if (std::abs(delta) > 0.1 * units.omega0) {
    std::ostringstream os;
    os << "|delta| = " << rad_s_to_khz(std::abs(delta)) << " kHz exceeds 0.1 omega0;"
       << " Lamb-Dicke reference formulas assume |delta| << omega0";
    warn(os.str());
  }
}

DriveParams DriveParams::from_khz(double omega0_khz, double eta, double Omega_khz,
                                  double delta_khz, double phi_up, double phi_down,
                                  double Delta_pi_khz) {
  DriveParams p;
  p.units = UnitSystem::from_trap(khz_to_rad_s(omega0_khz), eta);
  p.Omega = khz_to_rad_s(Omega_khz);
  p.delta = khz_to_rad_s(delta_khz);
  p.phi_up = phi_up;
  p.phi_down = phi_down;
  p.Delta_pi = khz_to_rad_s(Delta_pi_khz);
  return p;
}

double Trajectory::max_abs() const {
  double m = 0.0;
  for (const auto& a : alphas) m = std::max(m, std::abs(a));
  return m;
}

namespace {

using State = std::array<double, 2>;

struct ForcedOscillator {
  double Omega_eta, omega0, omega, eta, phi;

  void operator()(const State& y, State& dy, double t) const {
    const cplx alpha(y[0], y[1]);
    const cplx rot = std::polar(1.0, omega0 * t);
    const double kx = 2.0 * eta * (alpha * std::conj(rot)).real();
    const cplx da = cplx(0.0, Omega_eta) * rot * std::sin(kx - omega * t + phi);
    dy[0] = da.real();
    dy[1] = da.imag();
  }
};

int sample_count(const DriveParams& p, double t_end, int per_loop) {
  const double period = p.loop_period();
  double n = std::isfinite(period) ? per_loop * t_end / period : per_loop;
  return std::max(200, static_cast<int>(std::ceil(n)));
}

}  // namespace

Trajectory integrate_classical(cplx alpha_init, Spin spin, const DriveParams& params,
                               double t_end, double tol, int samples_per_loop) {
  if (!(tol > 0.0)) throw Error("integrate_classical: tol must be positive");
  if (!(t_end > 0.0)) throw Error("integrate_classical: t_end must be positive");
  params.check();

  const int n = sample_count(params, t_end, samples_per_loop);
  Trajectory traj;
  traj.spin = spin;
  traj.period = std::isfinite(params.loop_period()) ? params.loop_period() : 0.0;
  traj.times.resize(n + 1);
  for (int i = 0; i <= n; ++i) traj.times[i] = t_end * i / n;
  traj.times.back() = t_end;
  traj.alphas.reserve(n + 1);

  ForcedOscillator sys{params.Omega * params.units.eta, params.units.omega0, params.omega(),
                       params.units.eta, params.phi(spin)};
  State y{alpha_init.real(), alpha_init.imag()};
  auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  const double dt0 = 0.05 / params.units.omega0;
  try {
    odeint::integrate_times(
        stepper, sys, y, traj.times.begin(), traj.times.end(), dt0,
        [&](const State& s, double) { traj.alphas.emplace_back(s[0], s[1]); },
        odeint::max_step_checker(100000));
  } catch (const std::exception& e) {
    throw NumericalError(std::string("integrate_classical: stepper failure (stiff drive?): ") + e.what());
  }
  traj.alphas.front() = alpha_init;
  return traj;
}

double ldr_orientation(const DriveParams& params, Spin spin) { return params.phi(spin) - kPi / 2.0; }

cplx ldr_trajectory(const DriveParams& params, Spin spin, double t) {
  const cplx orient = std::polar(1.0, ldr_orientation(params, spin));
  const double drive = params.units.eta * params.Omega;
  if (params.delta == 0.0) return cplx(0.0, 0.5 * drive * t) * orient;
  const cplx loop = 1.0 - std::polar(1.0, -params.delta * t);
  return (drive / (2.0 * params.delta)) * orient * loop;
}

double return_time(const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 3 || !(traj.period > 0.0)) throw NoReturn("return_time: trajectory has no loop period");
  const double lo = 0.3 * traj.period, hi = 1.3 * traj.period;

  double peak = 0.0;
  for (std::size_t i = 0; i < n && traj.times[i] <= hi; ++i) peak = std::max(peak, std::abs(traj.alphas[i]));
  if (peak == 0.0) throw NoReturn("return_time: trajectory never leaves the origin");

  // First excursion below half the peak inside the window; its deepest sample.
  const double threshold = 0.5 * peak;
  std::size_t best = n;
  for (std::size_t i = 1; i + 1 < n && traj.times[i] < hi; ++i) {
    if (traj.times[i] <= lo) continue;
    const double r = std::abs(traj.alphas[i]);
    if (r < threshold) {
      if (best == n || r < std::abs(traj.alphas[best])) best = i;
    } else if (best != n) {
      break;
    }
  }
  if (best == n) {
    std::ostringstream os;
    os << "return_time: |alpha| never drops below " << threshold << " in ("
       << s_to_us(lo) << ", " << s_to_us(hi) << ") us";
    throw NoReturn(os.str());
  }
  if (best + 1 >= n) throw NoReturn("return_time: minimum at the end of the trajectory; extend t_end");

  const double y0 = std::norm(traj.alphas[best - 1]);
  const double y1 = std::norm(traj.alphas[best]);
  const double y2 = std::norm(traj.alphas[best + 1]);
  const double t0 = traj.times[best - 1], t1 = traj.times[best], t2 = traj.times[best + 1];
  // Vertex of the parabola through the three points (non-uniform spacing allowed).
  const double d01 = (y1 - y0) / (t1 - t0), d12 = (y2 - y1) / (t2 - t1);
  const double curv = (d12 - d01) / (t2 - t0);
  if (!(curv > 0.0)) return t1;
  const double tv = 0.5 * (t0 + t1) - d01 / (2.0 * curv);
  return std::clamp(tv, t0, t2);
}

double loop_phase(const Trajectory& traj) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const cplx a = traj.alphas[i], b = traj.alphas[i + 1];
    acc += (0.5 * std::conj(a + b) * (b - a)).imag();
  }
  return acc;
}

TrajectoryMetrics trajectory_metrics(const Trajectory& traj, const DriveParams& params) {
  TrajectoryMetrics m;
  m.t_r = return_time(traj);
  for (std::size_t i = 0; i < traj.size() && traj.times[i] <= m.t_r; ++i) {
    m.alpha_max = std::max(m.alpha_max, std::abs(traj.alphas[i]));
  }
  m.R = m.t_r * std::abs(params.delta) / kTwoPi;
  m.alpha0 = params.alpha0();
  if (!(m.R > 0.0 && m.R <= 1.0 + 1e-6)) {
    m.flags.push_back("R outside (0, 1]: " + std::to_string(m.R));
  }
  if (m.alpha_max > m.alpha0 + 1e-6) {
    m.flags.push_back("alpha_max exceeds alpha0 by " + std::to_string(m.alpha_max - m.alpha0));
  }
  return m;
}

}  // namespace ionwalk::classical
