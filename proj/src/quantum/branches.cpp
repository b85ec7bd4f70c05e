#include <algorithm>
#include <cmath>

#include "ionwalk/error.hpp"
#include "ionwalk/quantum.hpp"

namespace ionwalk::quantum {

std::vector<double> sample_grid(const DriveParams& params, double t_end, int per_loop) {
  if (!(t_end > 0.0)) throw Error("sample_grid: t_end must be positive");
  if (per_loop < 2) throw Error("sample_grid: per_loop must be at least 2");
  const double loops = params.delta != 0.0 ? t_end / params.loop_period() : 1.0;
  const int count = std::max(201, static_cast<int>(std::ceil(loops * per_loop)) + 1);
  std::vector<double> times(count);
  for (int i = 0; i < count; ++i) times[i] = t_end * i / (count - 1);
  return times;
}

BranchHistory propagate_states(const std::vector<MotionalState>& psi0, Spin spin,
                               const DriveParams& params, const std::vector<double>& times,
                               const PropagatorConfig& cfg) {
  if (psi0.empty()) throw Error("propagate_states: no initial states");
  if (times.empty()) throw Error("propagate_states: empty time grid");
  params.check();
  check_config(cfg, params);
  const int dim = cfg.n_max + 1;
  const auto rows = static_cast<Eigen::Index>(psi0.size());

  BranchPropagator::Block block(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (psi0[r].dim() != dim) throw DimensionMismatch("propagate_states: initial state truncation differs from n_max");
    block.row(r) = psi0[r].amplitudes().transpose();
  }

  BranchPropagator prop(params, spin, cfg);
  BranchHistory hist;
  hist.times = times;
  hist.states.assign(rows, {});
  for (auto& s : hist.states) s.reserve(times.size());
  const double sign = spin == Spin::up ? -1.0 : 1.0;

  double t = 0.0;
  for (double ti : times) {
    prop.advance(block, t, ti);
    t = ti;
    double drift = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto s = MotionalState::adopt(block.row(r).transpose());
      s.require_valid(ti);
      drift = std::max(drift, std::abs(s.norm() - 1.0));
      hist.states[r].push_back(std::move(s));
    }
    hist.scalar_phase.push_back(sign * 0.5 * params.Delta_pi * ti);
    hist.max_norm_drift.push_back(drift);
  }
  return hist;
}

BranchHistory propagate_branch(const MotionalState& psi0, Spin spin, const DriveParams& params,
                               double t_end, const PropagatorConfig& cfg) {
  return propagate_states({psi0}, spin, params, sample_grid(params, t_end), cfg);
}

BranchEvolution evolve_cat(const MotionalState& psi0, const DriveParams& params,
                           const std::vector<double>& times, const PropagatorConfig& cfg) {
  BranchHistory up = propagate_states({psi0}, Spin::up, params, times, cfg);
  BranchHistory down = propagate_states({psi0}, Spin::down, params, times, cfg);
  BranchEvolution ev;
  ev.times = times;
  ev.up = std::move(up.states[0]);
  ev.down = std::move(down.states[0]);
  ev.phase_up = std::move(up.scalar_phase);
  ev.phase_down = std::move(down.scalar_phase);
  ev.period = params.loop_period();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const cplx o = core::overlap(ev.up[i], ev.down[i]);
    ev.motional_overlaps.push_back(o);
    ev.overlaps.push_back(o * std::polar(1.0, -params.Delta_pi * times[i]));
    ev.centroids_up.push_back(core::mean_annihilation(ev.up[i]));
    ev.centroids_down.push_back(core::mean_annihilation(ev.down[i]));
  }
  return ev;
}

BranchEvolution evolve_cat(const MotionalState& psi0, const DriveParams& params, double t_end,
                           const PropagatorConfig& cfg) {
  return evolve_cat(psi0, params, sample_grid(params, t_end), cfg);
}

std::vector<cplx> thermal_branch_overlap(const core::ThermalEnsemble& ensemble,
                                         const DriveParams& params,
                                         const std::vector<double>& times,
                                         const PropagatorConfig& cfg) {
  const int levels = static_cast<int>(ensemble.weights.size());
  if (levels == 0) throw Error("thermal_branch_overlap: empty ensemble");
  if (levels > cfg.n_max - core::kGuardLevels) throw TruncationOverflow("thermal_branch_overlap: ensemble exceeds basis");
  std::vector<MotionalState> psi0;
  for (int n = 0; n < levels; ++n) psi0.push_back(MotionalState::number(n, cfg.n_max));
  const BranchHistory up = propagate_states(psi0, Spin::up, params, times, cfg);
  const BranchHistory down = propagate_states(psi0, Spin::down, params, times, cfg);
  std::vector<cplx> out(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (int n = 0; n < levels; ++n) {
      out[i] += ensemble.weights[n] * core::overlap(up.states[n][i], down.states[n][i]);
    }
  }
  return out;
}

CentroidTrajectories centroid_trajectory(const BranchEvolution& evolution) {
  CentroidTrajectories c;
  c.up.spin = Spin::up;
  c.down.spin = Spin::down;
  c.up.times = c.down.times = evolution.times;
  c.up.alphas = evolution.centroids_up;
  c.down.alphas = evolution.centroids_down;
  c.up.period = c.down.period = evolution.period;
  return c;
}

double max_branch_separation(const BranchEvolution& evolution) {
  double best = 0.0;
  for (std::size_t i = 0; i < evolution.times.size(); ++i) {
    best = std::max(best, std::abs(evolution.centroids_up[i] - evolution.centroids_down[i]));
  }
  return best;
}

}  // namespace ionwalk::quantum
