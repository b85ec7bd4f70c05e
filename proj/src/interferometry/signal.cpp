#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ionwalk/error.hpp"
#include "ionwalk/interferometry.hpp"
#include "ionwalk/log.hpp"

namespace ionwalk::interferometry {

void FringeScan::validate() const {
  if (!(tau >= 0.0)) throw Error("FringeScan: negative tau");
  for (const auto& p : points) {
    if (!(p.p_hat >= 0.0 && p.p_hat <= 1.0)) throw Error("FringeScan: p_hat outside [0, 1]");
    if (p.shots < 1) throw Error("FringeScan: shots must be at least 1");
  }
}

double signal_probability(cplx O, double phi, double Delta_pi, double tau) {
  const double p = 0.5 * (1.0 - std::real(O * std::polar(1.0, phi - Delta_pi * tau)));
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> uniform_phases(int count) {
  if (count < 1) throw Error("uniform_phases: count must be positive");
  std::vector<double> phis(count);
  for (int i = 0; i < count; ++i) phis[i] = kTwoPi * i / count;
  return phis;
}

std::uint64_t task_seed(std::uint64_t root, std::uint64_t index) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

FringeScan synthesize_scan(cplx O, double Delta_pi, double tau, const std::vector<double>& phis,
                           int shots, std::uint64_t seed) {
  if (shots < 1) throw Error("synthesize_scan: shots must be at least 1");
  std::mt19937_64 rng(seed);
  FringeScan scan;
  scan.tau = tau;
  for (double phi : phis) {
    std::binomial_distribution<int> draw(shots, signal_probability(O, phi, Delta_pi, tau));
    scan.points.push_back({phi, static_cast<double>(draw(rng)) / shots, shots});
  }
  return scan;
}

std::vector<double> linear_grid(double t_lo, double t_hi, int count) {
  if (count < 2 || !(t_hi > t_lo)) throw Error("linear_grid: need count >= 2 and t_hi > t_lo");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = t_lo + (t_hi - t_lo) * i / (count - 1);
  return out;
}

SynthDataset synthesize_dataset(const DriveParams& params, const SynthConfig& cfg) {
  if (cfg.taus.empty() || cfg.phis.empty()) throw Error("synthesize_dataset: empty tau or phi grid");
  SynthDataset ds;
  ds.overlaps = quantum::thermal_branch_overlap(core::thermal_weights(cfg.nbar0), params, cfg.taus,
                                                cfg.propagator);
  for (std::size_t i = 0; i < cfg.taus.size(); ++i) {
    const double tau = cfg.taus[i];
    const cplx O = ds.overlaps[i] * std::exp(-cfg.gamma * tau);
    ds.scans.push_back(synthesize_scan(O, params.Delta_pi, tau, cfg.phis, cfg.shots, task_seed(cfg.seed, i)));
  }
  return ds;
}

DecoherenceBudget decoherence_budget(double gamma, double gamma_s, double a, double t_r) {
  if (!(a > 0.0 && a <= 1.0)) throw Error("decoherence_budget: a must lie in (0, 1]");
  if (!(t_r > 0.0)) throw Error("decoherence_budget: t_r must be positive");
  DecoherenceBudget b{gamma, gamma_s, 0.0, a, t_r, 0.0, {}};
  b.gamma_m = gamma - gamma_s + std::log(a) / t_r;
  if (b.gamma_m < 0.0) {
    b.flags.push_back("negative gamma_m: inputs inconsistent");
    warn("decoherence_budget: negative gamma_m");
  }
  b.T2 = b.gamma_m > 0.0 ? 1.0 / (2.0 * b.gamma_m) : kInf;
  return b;
}

CatMetrics cat_metrics(double alpha_max, double delta_alpha_max, const UnitSystem& units) {
  if (alpha_max < 0.0 || delta_alpha_max < 0.0) throw Error("cat_metrics: negative input");
  return {alpha_max * alpha_max, delta_alpha_max, 2.0 * delta_alpha_max * units.x0};
}

}  // namespace ionwalk::interferometry
