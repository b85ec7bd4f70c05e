#include <cmath>

#include "doctest.h"
#include "ionwalk/classical.hpp"
#include "ionwalk/empirics.hpp"
#include "ionwalk/error.hpp"

using namespace ionwalk;
using namespace ionwalk::classical;

namespace {

DriveParams fig1() { return DriveParams::from_khz(536.0, 0.244, 93.0, 3.4, 0.705, -0.705); }

// |delta| << omega0 keeps the counter-rotating part of the motion below 1e-3 alpha0.
DriveParams weak() { return DriveParams::from_khz(536.0, 0.005, 100.0, 0.5, 0.705, -0.705); }

}  // namespace

TEST_CASE("drive parameters") {
  const auto p = fig1();
  CHECK(p.alpha0() == doctest::Approx(0.244 * 93.0 / 3.4));
  CHECK(s_to_us(p.loop_period()) == doctest::Approx(1e3 / 3.4));
  CHECK(p.Phi_w() == doctest::Approx(1.41));
  auto q = p;
  q.phi_up = 3.0;
  q.phi_down = -3.0;
  CHECK(q.Phi_w() == doctest::Approx(kTwoPi - 6.0));
}

TEST_CASE("no force leaves alpha fixed") {
  auto p = fig1();
  p.Omega = 0.0;
  const auto tr = integrate_classical(cplx(0.3, -0.2), Spin::up, p, 100e-6);
  CHECK(tr.alphas.front() == cplx(0.3, -0.2));
  for (const auto& a : tr.alphas) CHECK(std::abs(a - cplx(0.3, -0.2)) < 1e-14);
}

TEST_CASE("weak drive follows the analytic circle") {
  const auto p = weak();
  const double period = p.loop_period();
  CHECK(s_to_us(period) == doctest::Approx(2000.0));
  for (Spin s : {Spin::up, Spin::down}) {
    const auto tr = integrate_classical(0.0, s, p, 1.3 * period);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size() && tr.times[i] <= period; ++i) {
      worst = std::max(worst, std::abs(tr.alphas[i] - ldr_trajectory(p, s, tr.times[i])));
    }
    CHECK(worst < 1e-3 * p.alpha0());
    CHECK(tr.max_abs() == doctest::Approx(1.0).epsilon(0.005));
    CHECK(return_time(tr) == doctest::Approx(period).epsilon(0.005));
  }
}

TEST_CASE("analytic circle") {
  const auto p = DriveParams::from_khz(536.0, 0.244, 139.0, 10.0, 0.705, -0.705);
  CHECK(std::abs(ldr_trajectory(p, Spin::up, 0.0)) == 0.0);
  CHECK(std::abs(ldr_trajectory(p, Spin::up, p.loop_period())) < 1e-12);
  CHECK(std::abs(ldr_trajectory(p, Spin::up, 0.5 * p.loop_period())) == doctest::Approx(3.39).epsilon(0.002));

  auto res = p;
  res.delta = 0.0;
  const double t = 10e-6;
  CHECK(std::abs(ldr_trajectory(res, Spin::up, t)) == doctest::Approx(0.5 * 0.244 * res.Omega * t));
}

TEST_CASE("large drive: tear-drop loop") {
  const auto p = fig1();
  const auto tr = integrate_classical(0.0, Spin::up, p, 1.35 * p.loop_period());
  const auto m = trajectory_metrics(tr, p);
  CHECK(s_to_us(m.t_r) == doctest::Approx(192.0).epsilon(0.05));
  CHECK(m.alpha_max < m.alpha0);
  CHECK(m.R < 1.0);
  CHECK(m.flags.empty());

  const auto fine = integrate_classical(0.0, Spin::up, p, 1.35 * p.loop_period(), 0.5e-8);
  const auto mf = trajectory_metrics(fine, p);
  CHECK(std::abs(mf.t_r / m.t_r - 1.0) < 1e-3);
  CHECK(std::abs(mf.alpha_max / m.alpha_max - 1.0) < 1e-3);
  CHECK(std::abs(fine.alphas.back() - tr.alphas.back()) < 10 * 1e-8 * tr.max_abs() + 1e-7);

  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(std::abs(tr.alphas[i] - tr.alphas[i - 1]) < 0.05 * tr.max_abs());
  }
}

TEST_CASE("negating the detuning and phases mirrors the path") {
  // Exact up to counter-rotating terms, which shrink as 1/omega0.
  double worst[2];
  for (int j = 0; j < 2; ++j) {
    const auto p = DriveParams::from_khz(j == 0 ? 536.0 : 53600.0, 0.244, 93.0, 3.4, 0.705, -0.705);
    auto q = p;
    q.delta = -p.delta;
    q.phi_up = -p.phi_up;
    q.phi_down = -p.phi_down;
    const auto a = integrate_classical(0.0, Spin::up, p, 200e-6);
    const auto b = integrate_classical(0.0, Spin::up, q, 200e-6);
    REQUIRE(a.size() == b.size());
    worst[j] = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst[j] = std::max(worst[j], std::abs(a.alphas[i] - std::conj(b.alphas[i])));
    }
  }
  CHECK(worst[0] < 0.025 * 4.0);
  CHECK(worst[1] < 0.02 * worst[0]);
}

TEST_CASE("resonant and never-closing drives") {
  auto p = fig1();
  p.delta = 0.0;
  const auto tr = integrate_classical(0.0, Spin::up, p, 20e-6);
  CHECK_THROWS_AS(return_time(tr), NoReturn);
}

TEST_CASE("loop phase") {
  auto p = weak();
  p.Omega = 0.0;
  CHECK(loop_phase(integrate_classical(0.0, Spin::up, p, 50e-6)) == 0.0);

  // radius 0.5 circle: alpha0 = 1
  auto q = weak();
  q.Omega = 1.0 * std::abs(q.delta) / q.units.eta;
  const double period = q.loop_period();
  const auto one = integrate_classical(0.0, Spin::up, q, period);
  const auto two = integrate_classical(0.0, Spin::up, q, 2.0 * period);
  CHECK(std::abs(loop_phase(one)) == doctest::Approx(kPi / 2.0).epsilon(0.01));
  CHECK(loop_phase(two) == doctest::Approx(2.0 * loop_phase(one)).epsilon(0.01));
}

TEST_CASE("empirical laws") {
  CHECK(alpha_max_empirical(0.244, 6.8) == doctest::Approx(3.97).epsilon(0.003));
  CHECK(alpha_max_empirical(0.244, 2.4) == doctest::Approx(2.10).epsilon(0.003));
  CHECK(alpha_max_empirical(1.0, 0.2) / 0.2 == doctest::Approx(0.99).epsilon(0.002));
  CHECK(return_reduction_empirical(6.8, 6.8) == doctest::Approx(1.0));
  CHECK(return_reduction_empirical(6.8, 4.0) == doctest::Approx(0.662).epsilon(0.001));
  const double R = return_reduction_empirical(2.4, 2.1);
  CHECK(R == doctest::Approx(0.8975).epsilon(1e-4));
  CHECK(R * 1e3 / 10.1 == doctest::Approx(88.9).epsilon(0.001));
}

TEST_CASE("regenerated laws on a small grid") {
  EmpiricsGrid g;
  g.etas = {0.15, 0.3};
  g.alpha0s = {2.0, 3.0, 10.0 / 3.0, 4.0, 5.0, 6.0, 20.0 / 3.0};
  const auto res = regenerate_empirics(g);
  CHECK(res.failures == 0);
  const EmpiricsPoint* a = nullptr;
  const EmpiricsPoint* b = nullptr;
  for (const auto& p : res.points) {
    CHECK(p.t_r * std::abs(g.etas[0]) > 0.0);
    CHECK(p.R <= 1.0 + 1e-6);
    if (p.eta == 0.15 && std::abs(p.x - 1.0) < 1e-9) a = &p;
    if (p.eta == 0.3 && std::abs(p.x - 1.0) < 1e-9) b = &p;
  }
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->alpha_max * a->eta == doctest::Approx(b->alpha_max * b->eta).epsilon(0.02));

  for (double eta : g.etas) {
    double last = 2.0;
    for (const auto& p : res.points) {
      if (p.eta != eta) continue;
      CHECK(p.alpha_max / p.alpha0 <= last + 1e-9);
      last = p.alpha_max / p.alpha0;
    }
  }
  CHECK(res.cubic_loo_rms_rel < 0.03);
}
