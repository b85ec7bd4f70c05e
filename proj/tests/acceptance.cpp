#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ionwalk/cli.hpp"
#include "ionwalk/empirics.hpp"
#include "ionwalk/interferometry.hpp"
#include "ionwalk/log.hpp"
#include "ionwalk/quantum.hpp"
#include "ionwalk/wigner.hpp"

using namespace ionwalk;
using classical::DriveParams;
using classical::Spin;
using core::cplx;
using core::MotionalState;

namespace {

// Criterion 1
constexpr double kFig1ReturnUs = 192.0;
constexpr double kFig1ReturnTol = 0.05;
constexpr double kFig1Squeezing = 3.0;
constexpr double kFig1SqueezingTol = 0.5;
constexpr double kClosureFraction = 0.15;
// Criterion 2
constexpr double kReturnOverlap = 0.85;
constexpr double kReturnOverlapTol = 0.05;
// Criterion 3
constexpr double kStableSetTol = 0.05;
constexpr double kOtherSetTol = 0.08;
// Criterion 4
constexpr double kSlope = 0.82;
constexpr double kSlopeTol = 0.08;
constexpr double kCubicRmsTol = 0.05;
// Criterion 5
constexpr double kGammaM = 3.0;
constexpr double kGammaMTol = 0.2;
constexpr double kT2Us = 170.0;
constexpr double kT2Tol = 15.0;
// Criterion 6
constexpr int kDraws = 20;
constexpr double kRoundTripTol = 0.05;
// Criterion 7
constexpr double kNormDrift = 1e-6;
constexpr double kUnitarity = 1e-9;
constexpr double kOverlapOracle = 1e-8;
constexpr double kLdrFraction = 1e-3;
constexpr double kWignerNorm = 1e-3;
constexpr double kReversal = 1e-6;

DriveParams fig1() { return DriveParams::from_khz(536.0, 0.244, 93.0, 3.4, 0.705, -0.705); }

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

int report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  return ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

cplx nearest(const std::vector<double>& times, const std::vector<cplx>& values, double t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
  }
  return values[best];
}

int fig1_reproduction() {
  const auto p = fig1();
  const auto cl = classical::integrate_classical(0.0, Spin::up, p, 286e-6);
  const double tr_cl = classical::return_time(cl);
  const double amax_cl = classical::trajectory_metrics(cl, p).alpha_max;
  const double close_cl = std::abs(nearest(cl.times, cl.alphas, tr_cl)) / amax_cl;

  auto times = quantum::sample_grid(p, 286e-6);
  times.push_back(96e-6);
  std::sort(times.begin(), times.end());
  const auto ev = quantum::evolve_cat(MotionalState::vacuum(100), p, times);
  const auto c = quantum::centroid_trajectory(ev);
  const double tr_q = classical::return_time(c.up);
  double amax_q = 0.0;
  for (std::size_t i = 0; i < ev.times.size() && ev.times[i] <= tr_q; ++i) {
    amax_q = std::max(amax_q, std::abs(ev.centroids_up[i]));
  }
  const double close_q = std::abs(nearest(ev.times, ev.centroids_up, tr_q)) / amax_q;
  const auto at96 = std::find(ev.times.begin(), ev.times.end(), 96e-6) - ev.times.begin();
  const double squeeze = core::squeezing_ratio(ev.up[at96]);

  const bool ok = within(s_to_us(tr_cl), kFig1ReturnUs, kFig1ReturnTol) &&
                  within(s_to_us(tr_q), kFig1ReturnUs, kFig1ReturnTol) &&
                  std::abs(squeeze - kFig1Squeezing) <= kFig1SqueezingTol && close_cl < kClosureFraction &&
                  close_q < kClosureFraction;
  return report(1, ok,
                fmt("t_r classical %.1f us, quantum %.1f us (192 +- 5%%); squeezing(96 us) %.2f (3.0 +- 0.5); "
                    "|alpha(t_r)|/alpha_max classical %.3f, quantum %.3f (< 0.15)",
                    s_to_us(tr_cl), s_to_us(tr_q), squeeze, close_cl, close_q));
}

int return_overlap() {
  const auto p = fig1();
  const auto ev = quantum::evolve_cat(MotionalState::vacuum(100), p, 230e-6);
  const double t_r = classical::return_time(quantum::centroid_trajectory(ev).up);
  const auto at = quantum::evolve_cat(MotionalState::vacuum(100), p, std::vector<double>{t_r});
  const double a = std::abs(at.overlaps.back());
  return report(2, std::abs(a - kReturnOverlap) <= kReturnOverlapTol,
                fmt("|O(t_r)| = %.4f at t_r = %.1f us (0.85 +- 0.05)", a, s_to_us(t_r)));
}

int table1_columns() {
  bool ok = true;
  std::string detail;
  for (const auto& row : cli::table_rows()) {
    interferometry::AmplitudeFit amp;
    amp.D = row.D;
    amp.t_r = us_to_s(row.t_r_us);
    amp.gamma = per_ms_to_per_s(row.gamma_per_ms);
    amp.converged = true;
    interferometry::InferenceOptions opts;
    opts.omega0 = khz_to_rad_s(row.omega0_kHz());
    opts.detuning_sign = row.delta_d < 0.0 ? -1 : 1;
    const double tol = row.set <= 3 ? kStableSetTol : kOtherSetTol;
    double worst = 0.0;
    try {
      const auto inf = interferometry::infer_parameters(amp, nullptr, 1.41, row.nbar0, row.eta, opts);
      const double devs[] = {rad_s_to_khz(inf.delta) / row.delta_d - 1.0, inf.alpha0 / row.alpha0_f - 1.0,
                             inf.alpha_max / row.alpha_max - 1.0, inf.delta_alpha_max / row.delta_alpha_max - 1.0};
      for (double d : devs) worst = std::max(worst, std::abs(d));
    } catch (const std::exception&) {
      worst = INFINITY;
    }
    ok = ok && worst <= tol;
    detail += fmt("set %d worst %.1f%% (<= %.0f%%); ", row.set, 100.0 * worst, 100.0 * tol);
  }
  return report(3, ok, detail);
}

int empirical_laws() {
  const auto res = classical::regenerate_empirics(classical::EmpiricsGrid{});
  const double rms = res.relative_rms(classical::EmpiricalLaws{}, 0.3, 1.8);
  const bool ok = std::abs(res.slope - kSlope) <= kSlopeTol && rms < kCubicRmsTol && res.failures == 0;
  return report(4, ok,
                fmt("slope %.3f (0.82 +- 0.08); published cubic relative RMS %.2f%% for x in [0.3, 1.8] (< 5%%); "
                    "%d failed grid points",
                    res.slope, 100.0 * rms, res.failures));
}

int decoherence() {
  const auto b = interferometry::decoherence_budget(5.6e3, 1.7e3, 0.85, 192e-6);
  const double gm = per_s_to_per_ms(b.gamma_m), t2 = s_to_us(b.T2);
  return report(5, std::abs(gm - kGammaM) <= kGammaMTol && std::abs(t2 - kT2Us) <= kT2Tol,
                fmt("gamma_m %.3f /ms (3.0 +- 0.2); T2 %.1f us (170 +- 15)", gm, t2));
}

int round_trip() {
  using namespace interferometry;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_a = 0.0, worst_d = 0.0;
  int failures = 0;
  for (int d = 0; d < kDraws; ++d) {
    const auto start = std::chrono::steady_clock::now();
    const double eta = 0.199 + 0.046 * u(rng);
    const double x = 0.45 + 1.25 * u(rng);
    const double delta_kHz = (3.4 + 6.8 * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
    const double nbar0 = 0.02 + 0.05 * u(rng);
    const double gamma = per_ms_to_per_s(2.0 + 3.0 * u(rng));
    const double omega0_kHz = 536.0 * std::pow(0.244 / eta, 2);
    const double alpha0 = x / eta;
    const auto p = DriveParams::from_khz(omega0_kHz, eta, alpha0 * std::abs(delta_kHz) / eta, delta_kHz, 0.705,
                                         -0.705, 4.46);

    SynthConfig sc;
    sc.taus = linear_grid(2e-6, 1.1 * p.loop_period(), 53);
    sc.phis = uniform_phases(16);
    sc.shots = 500;
    sc.seed = task_seed(7, d);
    sc.gamma = gamma;
    sc.nbar0 = nbar0;
    const auto data = synthesize_dataset(p, sc);

    double ea = INFINITY, ed = INFINITY;
    try {
      const auto fit = fit_dataset(data.scans);
      InferenceOptions io;
      io.omega0 = khz_to_rad_s(omega0_kHz);
      io.detuning_sign = delta_kHz < 0.0 ? -1 : 1;
      io.route = InferenceRoute::calibrated;
      io.skip_separation = true;
      for (std::size_t i = 0; i < fit.taus.size(); ++i) {
        io.amplitude_points.push_back({fit.taus[i], fit.sinusoids[i].A, fit.sinusoids[i].sigma_A});
      }
      const auto inf = infer_parameters(fit.amplitude, &fit.phase, p.Phi_w(), nbar0, eta, io);
      ea = inf.alpha0 / alpha0 - 1.0;
      ed = inf.delta / p.delta - 1.0;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "draw %d: %s\n", d, e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "draw %2d: eta %.3f alpha0 %.2f delta %+.2f kHz -> alpha0 %+.2f%%, delta %+.2f%% (%.0f s)\n",
                 d, eta, alpha0, delta_kHz, 100.0 * ea, 100.0 * ed, secs);
    worst_a = std::max(worst_a, std::abs(ea));
    worst_d = std::max(worst_d, std::abs(ed));
    if (!(std::abs(ea) <= kRoundTripTol && std::abs(ed) <= kRoundTripTol)) ++failures;
  }
  return report(6, failures == 0,
                fmt("%d draws, worst |error| alpha0 %.2f%%, delta %.2f%% (<= 5%%); %d draws outside", kDraws,
                    100.0 * worst_a, 100.0 * worst_d, failures));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invariants() {
  const auto p = fig1();

  const auto h = quantum::propagate_branch(MotionalState::vacuum(100), Spin::up, p, 300e-6);
  const double drift = *std::max_element(h.max_norm_drift.begin(), h.max_norm_drift.end());

  const auto D = core::displacement_matrix(0.244, 100);
  // Levels near the truncation edge couple to the discarded part of the basis.
  const core::Matrix dd = D.adjoint() * D;
  const double unitarity = (dd.topLeftCorner(81, 81) - core::Matrix::Identity(81, 81)).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double oracle = 0.0;
  for (int i = 0; i < 50; ++i) {
    const cplx a(u(rng), u(rng)), b(u(rng), u(rng));
    const cplx exact = std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
    oracle = std::max(oracle, std::abs(core::overlap(core::coherent_state(a, 100), core::coherent_state(b, 100)) - exact));
  }

  const auto weak = DriveParams::from_khz(536.0, 0.01, 25.0, 0.25, 0.705, -0.705);
  quantum::PropagatorConfig small;
  small.n_max = 40;
  const auto ev = quantum::evolve_cat(MotionalState::vacuum(40), weak,
                                      quantum::sample_grid(weak, weak.loop_period(), 50), small);
  double ldr = 0.0;
  for (std::size_t i = 0; i < ev.times.size(); ++i) {
    ldr = std::max(ldr, std::abs(ev.centroids_up[i] - classical::ldr_trajectory(weak, Spin::up, ev.times[i])));
    ldr = std::max(ldr, std::abs(ev.centroids_down[i] - classical::ldr_trajectory(weak, Spin::down, ev.times[i])));
  }
  ldr /= weak.alpha0();

  const auto s96 = quantum::propagate_states({MotionalState::vacuum(100)}, Spin::up, p, {96e-6}).states[0][0];
  const double half = 2.0 * std::abs(core::mean_annihilation(s96)) + 6.0;
  const double wnorm = std::abs(core::wigner(s96, core::PhaseSpaceGrid::square(half, 161)).integral() - 1.0);

  quantum::PropagatorConfig cfg;
  quantum::BranchPropagator prop(p, Spin::up, cfg);
  quantum::BranchPropagator::Block block(1, cfg.n_max + 1);
  block.row(0) = MotionalState::vacuum(cfg.n_max).amplitudes().transpose();
  const auto start = block;
  prop.advance(block, 0.0, 300e-6);
  prop.advance(block, 300e-6, 0.0);
  const double reversal = 1.0 - std::norm(start.row(0).dot(block.row(0)));

  cli::Options o[2];
  std::string files[2];
  for (int k = 0; k < 2; ++k) {
    o[k].config.drive.Omega_kHz = 60.0;
    o[k].config.drive.delta_kHz = 10.0;
    o[k].config.drive.Delta_pi_kHz = 4.46;
    o[k].config.sim.n_max = 60;
    o[k].config.scan.seed = 17;
    o[k].config.scan.gamma_per_ms = 2.0;
    o[k].out = std::filesystem::temp_directory_path() / ("ionwalk_acceptance_" + std::to_string(k));
    std::ostringstream log;
    cli::cmd_synth(o[k], log);
    files[k] = slurp(o[k].out / "scans.csv") + slurp(o[k].out / "overlaps.csv");
  }
  const bool same = !files[0].empty() && files[0] == files[1];

  const bool ok = drift < kNormDrift && unitarity < kUnitarity && oracle < kOverlapOracle && ldr < kLdrFraction &&
                  wnorm < kWignerNorm && reversal < kReversal && same;
  return report(7, ok,
                fmt("norm drift %.1e (< 1e-6); unitarity %.1e (< 1e-9); coherent overlap %.1e (< 1e-8); "
                    "LDR centroid %.1e alpha0 (< 1e-3); Wigner norm %.1e (< 1e-3); reversal deficit %.1e (< 1e-6); "
                    "synth output %s",
                    drift, unitarity, oracle, ldr, wnorm, reversal, same ? "byte-identical" : "differs"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s CRITERION (1-7)\n", argv[0]);
    return 2;
  }
  set_warning_sink({});
  switch (std::atoi(argv[1])) {
    case 1: return fig1_reproduction();
    case 2: return return_overlap();
    case 3: return table1_columns();
    case 4: return empirical_laws();
    case 5: return decoherence();
    case 6: return round_trip();
    case 7: return invariants();
    default:
      std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
      return 2;
  }
}
