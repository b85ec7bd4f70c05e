#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "ionwalk/empirics.hpp"
#include "ionwalk/error.hpp"
#include "ionwalk/log.hpp"
#include "ionwalk/quantum.hpp"

namespace ionwalk::quantum {

namespace odeint = boost::numeric::odeint;

void check_config(const PropagatorConfig& cfg, const DriveParams& params) {
  if (cfg.n_max < core::kGuardLevels + 2) throw Error("PropagatorConfig: n_max too small");
  if (!(cfg.rel_tol > 0.0)) throw Error("PropagatorConfig: rel_tol must be positive");
  if (cfg.mode == PropagationMode::sideband && (cfg.sideband_order < 0 || cfg.sideband_order > 3)) {
    throw Error("PropagatorConfig: sideband order must be in 0..3");
  }
  const double a0 = params.alpha0();
  if (!std::isfinite(a0)) return;
  double expected = a0;
  if (a0 > 1.0) {
    expected = std::min(a0, classical::EmpiricalLaws{}.alpha_max(params.units.eta, a0));
  }
  if (cfg.n_max < 4.0 * expected * expected) {
    std::ostringstream os;
    os << "n_max = " << cfg.n_max << " is below 4 alpha_max^2 = " << 4.0 * expected * expected;
    warn(os.str());
  }
}

BranchPropagator::BranchPropagator(const DriveParams& params, Spin spin, const PropagatorConfig& cfg)
    : params_(params), spin_(spin), cfg_(cfg), dim_(cfg.n_max + 1) {
  if (cfg_.mode == PropagationMode::exact) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int n = 0; n + 1 < dim_; ++n) x(n, n + 1) = x(n + 1, n) = std::sqrt(n + 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    basis_ = es.eigenvectors();
    positions_ = es.eigenvalues();
  } else {
    const core::Matrix d = core::displacement_matrix(params_.units.eta, cfg_.n_max);
    displacement_ = core::Matrix::Zero(dim_, dim_);
    for (int m = 0; m < dim_; ++m) {
      for (int n = std::max(0, m - cfg_.sideband_order); n <= std::min(dim_ - 1, m + cfg_.sideband_order); ++n) {
        displacement_(m, n) = d(m, n);
      }
    }
  }
  h_ = kTwoPi / params_.units.omega0 / 16.0;
}

core::Matrix BranchPropagator::hamiltonian(double t) const {
  const int order = cfg_.mode == PropagationMode::exact ? cfg_.n_max : cfg_.sideband_order;
  return sideband_truncated_hamiltonian(t, params_, spin_, order, cfg_.n_max);
}

// One symmetric splitting step of the lab-frame evolution
//   exp(-i w0 N h/2) exp(-i V(t+h/2) h) exp(-i w0 N h/2),
// written in the interaction picture. V is diagonal in the eigenbasis of the
// position quadrature, so its exponential is exact there.
void BranchPropagator::strang_step(Block& block, double t, double h) {
  const double tm = t + 0.5 * h;
  const double w0 = params_.units.omega0;
  const auto rows = block.rows();

  const cplx step = std::polar(1.0, -w0 * tm);
  cplx ph = 1.0;
  phases_.resize(dim_);
  for (int n = 0; n < dim_; ++n) {
    phases_[n] = ph;
    ph *= step;
  }
  for (int n = 0; n < dim_; ++n) block.col(n) *= phases_[n];

  Eigen::Map<Eigen::MatrixXd> real(reinterpret_cast<double*>(block.data()), 2 * rows, dim_);
  scratch_.noalias() = real * basis_;

  const double theta = params_.omega() * tm - params_.phi(spin_);
  const double eta = params_.units.eta;
  const double kick = params_.Omega * h;
  Eigen::Map<Eigen::MatrixXcd> pos(reinterpret_cast<cplx*>(scratch_.data()), rows, dim_);
  for (int j = 0; j < dim_; ++j) {
    pos.col(j) *= std::polar(1.0, -kick * std::cos(eta * positions_[j] - theta));
  }

  real.noalias() = scratch_ * basis_.transpose();
  for (int n = 0; n < dim_; ++n) block.col(n) *= std::conj(phases_[n]);
}

// Fourth-order triple-jump composition of the symmetric step.
void BranchPropagator::composed_step(Block& block, double t, double h) {
  static const double g1 = 1.0 / (2.0 - std::cbrt(2.0));
  static const double g2 = 1.0 - 2.0 * g1;
  strang_step(block, t, g1 * h);
  strang_step(block, t + g1 * h, g2 * h);
  strang_step(block, t + (g1 + g2) * h, g1 * h);
}

void BranchPropagator::advance_exact(Block& block, double t0, double t1) {
  const double period = kTwoPi / params_.units.omega0;
  const double h_max = period / 2.0;
  const double h_min = 1e-7 * period;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double done = 0.0;
  Block full, half;
  while (span - done > 1e-12 * period) {
    const double remaining = span - done;
    const bool truncated = h_ >= remaining;
    const double h = std::min(h_, remaining);
    const double t = t0 + dir * done;

    full = block;
    composed_step(full, t, dir * h);
    half = block;
    composed_step(half, t, 0.5 * dir * h);
    composed_step(half, t + 0.5 * dir * h, 0.5 * dir * h);

    double err = 0.0;
    for (Eigen::Index r = 0; r < block.rows(); ++r) err = std::max(err, (full.row(r) - half.row(r)).norm());
    err /= 15.0;  // Richardson estimate for a fourth-order step

    const double factor = err > 0.0 ? std::clamp(0.9 * std::pow(cfg_.rel_tol / err, 0.2), 0.2, 2.0) : 2.0;
    if (err <= cfg_.rel_tol) {
      block.swap(half);
      done += h;
      ++steps_;
      if (!truncated) h_ = std::min(h_max, h * factor);
    } else {
      ++rejected_;
      h_ = h * factor;
      if (h_ < h_min) {
        throw NumericalError("BranchPropagator: step size underflow");
      }
    }
  }
}

namespace {

struct SidebandRhs {
  const core::Matrix& d;
  double Omega, omega0, omega, phi;
  int order, dim;

  void operator()(const std::vector<double>& y, std::vector<double>& dy, double t) const {
    const cplx* psi = reinterpret_cast<const cplx*>(y.data());
    cplx* out = reinterpret_cast<cplx*>(dy.data());
    std::vector<cplx> u(dim), rot(dim);
    const cplx step = std::polar(1.0, -omega0 * t);
    cplx ph = 1.0;
    for (int n = 0; n < dim; ++n) {
      rot[n] = ph;
      u[n] = ph * psi[n];
      ph *= step;
    }
    const double theta = omega * t - phi;
    const cplx em = std::polar(0.5 * Omega, -theta), ep = std::polar(0.5 * Omega, theta);
    for (int m = 0; m < dim; ++m) {
      cplx v = 0.0, w = 0.0;
      const int lo = std::max(0, m - order), hi = std::min(dim - 1, m + order);
      for (int n = lo; n <= hi; ++n) {
        v += d(m, n) * u[n];
        w += std::conj(d(n, m)) * u[n];
      }
      // -i * conj(rot_m) * (em v + ep w)
      out[m] = cplx(0.0, -1.0) * std::conj(rot[m]) * (em * v + ep * w);
    }
  }
};

}  // namespace

void BranchPropagator::advance_sideband(Block& block, double t0, double t1) {
  SidebandRhs rhs{displacement_, params_.Omega, params_.units.omega0, params_.omega(),
                  params_.phi(spin_), cfg_.sideband_order, dim_};
  const double dt0 = (t1 >= t0 ? 1.0 : -1.0) * kTwoPi / params_.units.omega0 / 64.0;
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    std::vector<double> y(2 * dim_);
    for (int n = 0; n < dim_; ++n) {
      y[2 * n] = block(r, n).real();
      y[2 * n + 1] = block(r, n).imag();
    }
    try {
      steps_ += static_cast<long>(odeint::integrate_adaptive(
          odeint::make_controlled(cfg_.rel_tol, cfg_.rel_tol, odeint::runge_kutta_dopri5<std::vector<double>>()),
          rhs, y, t0, t1, dt0));
    } catch (const std::exception& e) {
      throw NumericalError(std::string("sideband propagation failed: ") + e.what());
    }
    for (int n = 0; n < dim_; ++n) block(r, n) = cplx(y[2 * n], y[2 * n + 1]);
  }
}

void BranchPropagator::advance(Block& block, double t0, double t1) {
  if (block.cols() != dim_) throw DimensionMismatch("BranchPropagator: block width differs from n_max + 1");
  if (t0 == t1) return;
  if (cfg_.mode == PropagationMode::exact) {
    advance_exact(block, t0, t1);
  } else {
    advance_sideband(block, t0, t1);
  }
}

core::Matrix sideband_truncated_hamiltonian(double t, const DriveParams& params, Spin spin, int order,
                                            int n_max) {
  if (order < 0) throw Error("sideband_truncated_hamiltonian: negative order");
  const int dim = n_max + 1;
  const core::Matrix d = core::displacement_matrix(params.units.eta, n_max);
  const double theta = params.omega() * t - params.phi(spin);
  const cplx em = std::polar(0.5 * params.Omega, -theta);
  core::Matrix h = core::Matrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) {
    for (int n = std::max(0, m - order); n <= std::min(dim - 1, m + order); ++n) {
      // D_I(t)_{mn} = D_{mn} exp(i omega0 (m - n) t)
      h(m, n) = em * d(m, n) * std::polar(1.0, params.units.omega0 * (m - n) * t);
    }
  }
  const core::Matrix herm = h + h.adjoint();
  return herm;
}

}  // namespace ionwalk::quantum
