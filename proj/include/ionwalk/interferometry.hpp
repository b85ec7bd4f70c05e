#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ionwalk/classical.hpp"
#include "ionwalk/quantum.hpp"
#include "ionwalk/units.hpp"

namespace ionwalk::interferometry {

using cplx = std::complex<double>;
using classical::DriveParams;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct FringePoint {
  double phi = 0.0;    // rad
  double p_hat = 0.0;  // measured P(up) fraction
  int shots = 1;
};

/// One phase scan at fixed force duration.
struct FringeScan {
  double tau = 0.0;  // s
  std::vector<FringePoint> points;

  void validate() const;
};

/// P(up) = (1 - Re[O exp(i (phi - Delta_pi tau))]) / 2.
double signal_probability(cplx O, double phi, double Delta_pi, double tau);

/// `count` phases evenly spaced over [0, 2 pi).
std::vector<double> uniform_phases(int count);

/// Binomial shot noise on the exact signal. Deterministic for a given seed.
FringeScan synthesize_scan(cplx O, double Delta_pi, double tau, const std::vector<double>& phis,
                           int shots, std::uint64_t seed);

/// Seed for task `index` derived from a root seed.
std::uint64_t task_seed(std::uint64_t root, std::uint64_t index);

/// P = (1 - A cos(phi - phi0)) / 2.
struct SinusoidFit {
  double A = 0.0;
  double phi0 = 0.0;  // rad, in (-pi, pi]
  double sigma_A = kInf;
  double sigma_phi0 = kInf;
  double residual = 0.0;  // RMS of p_hat - model
};

/// Weighted linear least squares in (1, cos phi, sin phi). Per-point errors
/// are binomial at the first-pass model probability, with a floor of
/// 1/(2 shots). Throws NumericalError when the phases do not determine the fit.
SinusoidFit fit_sinusoid(const FringeScan& scan);

struct CurvePoint {
  double tau = 0.0;    // s
  double value = 0.0;  // A or phi0
  double sigma = 1.0;
};

/// A(tau) = exp(-gamma tau) exp(-2 D^2 sin^2(pi tau / t_r)).
struct AmplitudeFit {
  double D = 0.0;
  double t_r = 0.0;    // s
  double gamma = 0.0;  // 1/s
  double sigma_D = kInf;
  double sigma_t_r = kInf;
  double sigma_gamma = kInf;
  double residual = 0.0;  // RMS of value - model
  bool converged = false;
  std::vector<std::string> flags;
};

/// Starting values for fit_amplitude_curve; zero entries are auto-derived.
struct AmplitudeGuess {
  double D = 0.0;
  double t_r = 0.0;
  double gamma = -1.0;
};

double amplitude_model(double tau, double D, double t_r, double gamma);

AmplitudeFit fit_amplitude_curve(const std::vector<CurvePoint>& points, AmplitudeGuess guess = {});

/// phi0(tau) = c + Delta_pi tau + b2 sin^2(pi tau / t_r), with B = sqrt|b2|.
struct PhaseFit {
  double constant = 0.0;  // rad
  double Delta_pi = 0.0;  // rad/s
  double b2 = 0.0;
  double B = 0.0;
  double t_r = 0.0;  // s
  double sigma_constant = kInf;
  double sigma_Delta_pi = kInf;
  double sigma_B = kInf;
  double sigma_t_r = kInf;
  double residual = 0.0;
  bool converged = false;
  std::vector<std::string> flags;
};

double phase_model(double tau, double constant, double Delta_pi, double b2, double t_r);

/// Sequential nearest-branch unwrapping in the given order. Steps larger
/// than 0.9 pi after unwrapping are reported in `flags`.
std::vector<double> unwrap_phases(const std::vector<double>& phases, std::vector<std::string>* flags = nullptr);

/// Points are unwrapped (in tau order) before fitting. `t_r_hint` seeds the
/// return time, typically from the amplitude fit.
PhaseFit fit_phase_curve(std::vector<CurvePoint> points, double t_r_hint = 0.0);

/// Sinusoid fits for every scan plus the two curve fits.
struct DatasetFit {
  std::vector<double> taus;
  std::vector<SinusoidFit> sinusoids;
  AmplitudeFit amplitude;
  PhaseFit phase;
};

struct DatasetFitOptions {
  /// Scans whose phase uncertainty exceeds this are left out of the phase fit.
  double max_phase_sigma = 0.5;
};

DatasetFit fit_dataset(const std::vector<FringeScan>& scans, const DatasetFitOptions& opts = {});

/// Synthetic experiment: thermal overlaps from the propagator, an extra
/// exponential decay, then binomial fringe scans.
struct SynthConfig {
  std::vector<double> taus;  // s
  std::vector<double> phis;  // rad
  int shots = 500;
  std::uint64_t seed = 1;
  double gamma = 0.0;  // 1/s, applied as exp(-gamma tau)
  double nbar0 = 0.0;
  quantum::PropagatorConfig propagator;
};

/// tau grid over [t_lo, t_hi] with `count` points (t_lo > 0 allowed).
std::vector<double> linear_grid(double t_lo, double t_hi, int count);

struct SynthDataset {
  std::vector<FringeScan> scans;
  std::vector<cplx> overlaps;  // thermal motional overlap before decay
};

SynthDataset synthesize_dataset(const DriveParams& params, const SynthConfig& cfg);

enum class SeparationSource { quantum, classical };

enum class InferenceRoute {
  empirical,   // closed-form laws for alpha_max and R
  calibrated,  // refit simulated overlaps until they reproduce D and t_r
};

struct InferenceOptions {
  /// Sign of the detuning; the fits only determine |delta|.
  int detuning_sign = 1;
  double omega0 = khz_to_rad_s(536.0);
  SeparationSource separation = SeparationSource::quantum;
  InferenceRoute route = InferenceRoute::empirical;
  quantum::PropagatorConfig propagator;
  /// Calibrated route: tau grid and per-point errors reused for the model
  /// refits (normally those of the measured amplitude curve).
  std::vector<CurvePoint> amplitude_points;
  int max_iterations = 12;
  double tolerance = 1e-3;  // relative, on D and t_r
  /// Skip the branch-separation simulation.
  bool skip_separation = false;
};

struct Inference {
  double R_alpha0 = 0.0;
  double R = 0.0;
  double delta = 0.0;   // rad/s, signed
  double alpha0 = 0.0;
  double Omega = 0.0;   // rad/s
  double alpha_max = 0.0;
  double delta_alpha_max = 0.0;
  int iterations = 0;
  std::vector<std::string> flags;

  DriveParams drive(double eta, double omega0, double Phi_w) const;
};

/// Inverts the amplitude-fit results for the drive. The phase fit is only
/// used for a consistency check of t_r and may be null. Throws
/// NumericalError when the alpha0 bracket contains no root.
Inference infer_parameters(const AmplitudeFit& amp, const PhaseFit* phase, double Phi_w, double nbar0,
                           double eta, const InferenceOptions& opts = {});

struct DecoherenceBudget {
  double gamma = 0.0;    // 1/s
  double gamma_s = 0.0;  // 1/s
  double gamma_m = 0.0;  // 1/s
  double a = 1.0;
  double t_r = 0.0;  // s
  double T2 = 0.0;   // s
  std::vector<std::string> flags;
};

DecoherenceBudget decoherence_budget(double gamma, double gamma_s, double a, double t_r);

struct CatMetrics {
  double nbar = 0.0;
  double delta_alpha = 0.0;
  double x_s = 0.0;  // m
};

CatMetrics cat_metrics(double alpha_max, double delta_alpha_max, const UnitSystem& units);

}  // namespace ionwalk::interferometry
