#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ionwalk/classical.hpp"
#include "ionwalk/fock.hpp"

namespace ionwalk::quantum {

using classical::DriveParams;
using classical::Spin;
using core::cplx;
using core::MotionalState;

enum class PropagationMode {
  exact,     // all orders in eta, no rotating-wave approximation
  sideband,  // couplings |m - n| <= sideband_order only
};

struct PropagatorConfig {
  int n_max = 100;
  /// Local error per step (state 2-norm). The exact mode uses it for
  /// step-doubling control, the sideband mode as the Runge-Kutta tolerance.
  double rel_tol = 1e-7;
  PropagationMode mode = PropagationMode::exact;
  int sideband_order = 3;
};

/// Warns when n_max looks too small for the drive's expected excursion.
void check_config(const PropagatorConfig& cfg, const DriveParams& params);

/// States are held in the interaction picture of the trap oscillator,
/// psi_I(t) = exp(i omega0 t a^dagger a) psi_lab(t), so <a> is the rotating
/// frame alpha used by the classical module. The spin precession Delta_pi is
/// a scalar and is tracked outside the motional state.
class BranchPropagator {
 public:
  BranchPropagator(const DriveParams& params, Spin spin, const PropagatorConfig& cfg);

  /// Block of states, one per row: block(r, n) is amplitude n of state r.
  /// Column-major, so the amplitudes of one Fock level are contiguous and
  /// the block can be viewed as a real (2 rows) x dim matrix.
  using Block = Eigen::MatrixXcd;

  /// Evolves every row of `block` from t0 to t1; t1 < t0 runs backwards.
  void advance(Block& block, double t0, double t1);

  /// Motional Hamiltonian H(t)/hbar in the interaction picture for the
  /// configured mode (exact mode: full cos/sin operators).
  core::Matrix hamiltonian(double t) const;

  long steps() const { return steps_; }
  long rejected() const { return rejected_; }

 private:
  void strang_step(Block& block, double t, double h);
  void composed_step(Block& block, double t, double h);
  void advance_exact(Block& block, double t0, double t1);
  void advance_sideband(Block& block, double t0, double t1);

  DriveParams params_;
  Spin spin_;
  PropagatorConfig cfg_;
  int dim_;
  // Exact mode: X = a + a^dagger = P diag(lambda) P^T.
  Eigen::MatrixXd basis_;
  Eigen::VectorXd positions_;
  // Sideband mode: band-limited exp(i eta X).
  core::Matrix displacement_;
  Eigen::MatrixXd scratch_;
  Eigen::VectorXcd phases_;
  double h_ = 0.0;
  long steps_ = 0;
  long rejected_ = 0;
};

/// Evolution of one or more initial states under one spin's Hamiltonian.
struct BranchHistory {
  std::vector<double> times;
  std::vector<std::vector<MotionalState>> states;  // states[r][i]: initial state r at times[i]
  std::vector<double> scalar_phase;                // spin precession phase at times[i]
  std::vector<double> max_norm_drift;              // max over r of |norm - 1| at times[i]
};

/// Uniform grid over [0, t_end] with at least `per_loop` points per
/// 2 pi/|delta| (and at least 201 points).
std::vector<double> sample_grid(const DriveParams& params, double t_end, int per_loop = 200);

/// Propagates each initial state (given at t = 0) under spin `spin` and
/// records it at `times`. Throws TruncationOverflow
/// (with the time) if a state reaches the top of the basis.
BranchHistory propagate_states(const std::vector<MotionalState>& psi0, Spin spin,
                               const DriveParams& params, const std::vector<double>& times,
                               const PropagatorConfig& cfg = {});

BranchHistory propagate_branch(const MotionalState& psi0, Spin spin, const DriveParams& params,
                               double t_end, const PropagatorConfig& cfg = {});

/// Both spin branches from the same motional state.
struct BranchEvolution {
  std::vector<double> times;
  std::vector<MotionalState> up, down;
  std::vector<double> phase_up, phase_down;   // -/+ Delta_pi t / 2
  std::vector<cplx> motional_overlaps;        // <psi_up|psi_down>
  /// motional overlap times exp(-i Delta_pi t): the combination that enters
  /// the fringe signal P = (1 - Re[overlaps * e^{i phi}]) / 2.
  std::vector<cplx> overlaps;
  std::vector<cplx> centroids_up, centroids_down;  // <a> per branch
  double period = 0.0;
};

BranchEvolution evolve_cat(const MotionalState& psi0, const DriveParams& params,
                           const std::vector<double>& times, const PropagatorConfig& cfg = {});
BranchEvolution evolve_cat(const MotionalState& psi0, const DriveParams& params, double t_end,
                           const PropagatorConfig& cfg = {});

/// Thermal average sum_n p_n <psi_up^(n)(t)|psi_down^(n)(t)> over initial
/// Fock levels (motional overlap, no Delta_pi phase).
std::vector<cplx> thermal_branch_overlap(const core::ThermalEnsemble& ensemble,
                                         const DriveParams& params,
                                         const std::vector<double>& times,
                                         const PropagatorConfig& cfg = {});

struct CentroidTrajectories {
  classical::Trajectory up, down;
};

CentroidTrajectories centroid_trajectory(const BranchEvolution& evolution);

/// Interaction-picture H(t)/hbar keeping couplings with |m - n| <= order
/// (full eta dependence of each retained element).
core::Matrix sideband_truncated_hamiltonian(double t, const DriveParams& params, Spin spin,
                                            int order, int n_max);

/// Maximum over the grid of |alpha_up - alpha_down|.
double max_branch_separation(const BranchEvolution& evolution);

}  // namespace ionwalk::quantum
