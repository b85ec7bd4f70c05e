#include <cmath>

#include "doctest.h"
#include "ionwalk/error.hpp"
#include "ionwalk/quantum.hpp"

using namespace ionwalk;
using namespace ionwalk::quantum;
using core::MotionalState;

namespace {

DriveParams fig1() { return DriveParams::from_khz(536.0, 0.244, 93.0, 3.4, 0.705, -0.705); }

// eta alpha0 = 0.01, |delta| << omega0
DriveParams weak() { return DriveParams::from_khz(536.0, 0.01, 25.0, 0.25, 0.705, -0.705); }

double fidelity(const MotionalState& a, const MotionalState& b) { return std::norm(core::overlap(a, b)); }

PropagatorConfig small_basis() {
  PropagatorConfig c;
  c.n_max = 40;
  return c;
}

}  // namespace

TEST_CASE("no drive: only the scalar phase evolves") {
  auto p = fig1();
  p.Omega = 0.0;
  p.Delta_pi = khz_to_rad_s(4.46);
  const auto psi0 = core::coherent_state(cplx(1.0, 0.5), 40);
  const auto h = propagate_branch(psi0, Spin::up, p, 100e-6, small_basis());
  CHECK(std::abs(core::overlap(psi0, h.states[0].back()) - 1.0) < 1e-12);
  CHECK(h.scalar_phase.back() == doctest::Approx(-0.5 * p.Delta_pi * 100e-6));
}

TEST_CASE("no drive: vacuum centroid stays at the origin") {
  auto p = fig1();
  p.Omega = 0.0;
  const auto c = centroid_trajectory(evolve_cat(MotionalState::vacuum(40), p, 50e-6, small_basis()));
  for (const auto& a : c.up.alphas) CHECK(std::abs(a) < 1e-12);
  for (const auto& a : c.down.alphas) CHECK(std::abs(a) < 1e-12);
}

TEST_CASE("weak drive: displaced vacuum on the analytic circle") {
  const auto p = weak();
  const auto times = sample_grid(p, p.loop_period(), 50);
  const auto ev = evolve_cat(MotionalState::vacuum(40), p, times, small_basis());
  double worst = 0.0, sq = 0.0, coh = 1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    worst = std::max(worst, std::abs(ev.centroids_up[i] - classical::ldr_trajectory(p, Spin::up, times[i])));
    worst = std::max(worst, std::abs(ev.centroids_down[i] - classical::ldr_trajectory(p, Spin::down, times[i])));
    sq = std::max(sq, core::squeezing_ratio(ev.up[i]));
    coh = std::min(coh, fidelity(core::coherent_state(ev.centroids_up[i], 40), ev.up[i]));
    const cplx d = ev.centroids_up[i] - ev.centroids_down[i];
    CHECK(std::abs(ev.motional_overlaps[i]) == doctest::Approx(std::exp(-0.5 * std::norm(d))).epsilon(1e-4));
  }
  CHECK(worst < 1e-3 * p.alpha0());
  CHECK(sq < 1.0 + 1e-3);
  CHECK(coh > 0.9999);
}

TEST_CASE("identical phases give identical branches") {
  auto p = fig1();
  p.phi_down = p.phi_up;
  const auto ev = evolve_cat(MotionalState::vacuum(60), p, 60e-6, PropagatorConfig{60});
  for (const auto& o : ev.motional_overlaps) CHECK(std::abs(o) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("norm, isometry and time reversal at large drive") {
  const auto p = fig1();
  PropagatorConfig cfg;
  BranchPropagator prop(p, Spin::up, cfg);
  BranchPropagator::Block b = BranchPropagator::Block::Zero(2, cfg.n_max + 1);
  b.row(0) = MotionalState::vacuum(cfg.n_max).amplitudes().transpose();
  b.row(1) = core::coherent_state(cplx(0.5, -0.3), cfg.n_max).amplitudes().transpose();
  const cplx before = b.row(0).dot(b.row(1));
  const auto start = b;
  prop.advance(b, 0.0, 300e-6);
  CHECK(std::abs(b.row(0).norm() - 1.0) < 1e-6);
  CHECK(std::abs(b.row(1).norm() - 1.0) < 1e-6);
  CHECK(std::abs(b.row(0).dot(b.row(1)) - before) < 1e-7);
  prop.advance(b, 300e-6, 0.0);
  for (int r = 0; r < 2; ++r) CHECK(std::norm(start.row(r).dot(b.row(r))) > 1.0 - 1e-6);
}

TEST_CASE("tolerance convergence") {
  const auto p = fig1();
  const std::vector<double> t{150e-6};
  PropagatorConfig a, b;
  a.rel_tol = 1e-6;
  b.rel_tol = 0.5e-6;
  const auto psi0 = MotionalState::vacuum(100);
  PropagatorConfig ref;
  ref.rel_tol = 1e-9;
  const auto sr = propagate_states({psi0}, Spin::up, p, t, ref).states[0][0];
  const double def_a = 1.0 - fidelity(propagate_states({psi0}, Spin::up, p, t, a).states[0][0], sr);
  const double def_b = 1.0 - fidelity(propagate_states({psi0}, Spin::up, p, t, b).states[0][0], sr);
  CHECK(std::abs(def_a - def_b) < 10 * a.rel_tol);
}

TEST_CASE("large drive: return, squeezing and overlap") {
  const auto p = fig1();
  const auto ev = evolve_cat(MotionalState::vacuum(100), p, 230e-6);
  const auto c = centroid_trajectory(ev);
  const double t_r = classical::return_time(c.up);
  CHECK(s_to_us(t_r) == doctest::Approx(192.0).epsilon(0.05));
  CHECK(s_to_us(classical::return_time(c.down)) == doctest::Approx(s_to_us(t_r)).epsilon(1e-3));

  const auto cl = classical::integrate_classical(0.0, Spin::up, p, 230e-6);
  double amax = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < ev.times.size(); ++i) {
    if (ev.times[i] > t_r) break;
    amax = std::max(amax, std::abs(ev.centroids_up[i]));
  }
  for (std::size_t i = 0, j = 0; i < ev.times.size(); ++i) {
    while (j + 1 < cl.size() && cl.times[j] < ev.times[i]) ++j;
    dev = std::max(dev, std::abs(ev.centroids_up[i] - cl.alphas[j]));
  }
  CHECK(dev < 0.1 * amax);

  // Rising with a small ripple; the maximum sits just before t_r / 2.
  double peak = 0.0, peak_time = 0.0;
  for (std::size_t i = 0; i < ev.times.size() && ev.times[i] <= 0.5 * t_r; ++i) {
    const double s = core::squeezing_ratio(ev.up[i]);
    if (ev.times[i] <= 0.45 * t_r) CHECK(s > 0.975 * peak);
    if (s > peak) peak = s, peak_time = ev.times[i];
  }
  CHECK(peak > 2.0);
  CHECK(peak_time > 0.4 * t_r);
  CHECK(max_branch_separation(ev) > 4.5);
  for (const auto& o : ev.overlaps) CHECK(std::abs(o) <= 1.0 + 1e-9);

  std::size_t k = 0;
  while (ev.times[k] < t_r) ++k;
  PropagatorConfig big;
  big.n_max = 140;
  const auto wide = evolve_cat(MotionalState::vacuum(140), p, ev.times, big);
  CHECK(std::abs(std::abs(wide.overlaps[k]) - std::abs(ev.overlaps[k])) < 1e-3);

  PropagatorConfig sb;
  sb.mode = PropagationMode::sideband;
  const auto banded = evolve_cat(MotionalState::vacuum(100), p, ev.times, sb);
  CHECK(fidelity(banded.up.back(), ev.up.back()) > 0.99);
  CHECK(classical::return_time(centroid_trajectory(banded).up) == doctest::Approx(t_r).epsilon(0.02));
}

TEST_CASE("moderate drive follows the classical path") {
  // eta alpha_max ~ 0.5
  const auto p = DriveParams::from_khz(536.0, 0.244, 62.0, 7.0, 0.705, -0.705);
  const double t_end = 1.1 * p.loop_period();
  const auto h = propagate_branch(MotionalState::vacuum(100), Spin::up, p, t_end);
  const auto cl = classical::integrate_classical(0.0, Spin::up, p, t_end);
  double amax = 0.0, dev = 0.0;
  for (std::size_t i = 0, j = 0; i < h.times.size(); ++i) {
    const cplx a = core::mean_annihilation(h.states[0][i]);
    while (j + 1 < cl.size() && cl.times[j] < h.times[i]) ++j;
    amax = std::max(amax, std::abs(a));
    dev = std::max(dev, std::abs(a - cl.alphas[j]));
  }
  CHECK(amax * 0.244 == doctest::Approx(0.5).epsilon(0.15));
  CHECK(dev < 0.05 * amax);
}

TEST_CASE("thermal overlaps") {
  const auto p = weak();
  const std::vector<double> times{0.25 * p.loop_period(), 0.5 * p.loop_period()};
  const auto cold = thermal_branch_overlap(core::thermal_weights(0.0), p, times, small_basis());
  const auto ev = evolve_cat(MotionalState::vacuum(40), p, times, small_basis());
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(cold[i] - ev.motional_overlaps[i]) < 1e-12);

  const auto c7 = thermal_branch_overlap(core::thermal_weights(0.07), p, times, small_basis());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::log(std::abs(c7[i])) == doctest::Approx(1.14 * std::log(std::abs(cold[i]))).epsilon(0.02));
  }
}

TEST_CASE("sideband-limited couplings") {
  const auto p = fig1();
  const auto h = sideband_truncated_hamiltonian(40e-6, p, Spin::up, 3, 60);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(h(0, 4) == cplx(0.0));
  CHECK(std::abs(h(0, 3)) > 0.0);

  auto tiny = p;
  tiny.units = UnitSystem::from_trap(p.units.omega0, 1e-9);
  const auto h0 = sideband_truncated_hamiltonian(40e-6, tiny, Spin::up, 0, 20);
  CHECK((h0 - h0(0, 0).real() * core::Matrix::Identity(21, 21)).cwiseAbs().maxCoeff() < 1e-6 * p.Omega);

  PropagatorConfig sb = small_basis();
  sb.mode = PropagationMode::sideband;
  sb.sideband_order = 1;
  sb.rel_tol = 1e-9;
  const auto w = weak();
  const auto psi0 = MotionalState::vacuum(40);
  const std::vector<double> t{0.6 * w.loop_period()};
  const auto a = propagate_states({psi0}, Spin::up, w, t, small_basis()).states[0][0];
  const auto b = propagate_states({psi0}, Spin::up, w, t, sb).states[0][0];
  CHECK(fidelity(a, b) > 0.9999);

  BranchPropagator exact(p, Spin::up, small_basis());
  CHECK((exact.hamiltonian(1e-6) - sideband_truncated_hamiltonian(1e-6, p, Spin::up, 40, 40)).cwiseAbs().maxCoeff() < 1e-9 * p.Omega);
}

TEST_CASE("truncation guard") {
  const auto p = fig1();
  PropagatorConfig cfg;
  cfg.n_max = 24;
  try {
    propagate_branch(MotionalState::vacuum(24), Spin::up, p, 150e-6, cfg);
    FAIL("expected a truncation overflow");
  } catch (const TruncationOverflow& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 150e-6);
  }
  CHECK_THROWS_AS(propagate_branch(MotionalState::vacuum(30), Spin::up, p, 10e-6, PropagatorConfig{40}),
                  DimensionMismatch);
}
