#include "ionwalk/fock.hpp"

#include <cmath>
#include <string>

#include "ionwalk/error.hpp"

namespace ionwalk::core {

MotionalState::MotionalState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw Error("MotionalState: empty amplitude vector");
  const double n = amplitudes_.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("MotionalState: zero or non-finite norm");
  amplitudes_ /= n;
}

MotionalState MotionalState::adopt(Vector amplitudes) {
  if (amplitudes.size() == 0 || !amplitudes.allFinite()) throw Error("MotionalState: invalid amplitudes");
  MotionalState s;
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

MotionalState MotionalState::vacuum(int n_max) { return number(0, n_max); }

MotionalState MotionalState::number(int n, int n_max) {
  if (n < 0 || n > n_max) throw Error("number state outside basis");
  Vector v = Vector::Zero(n_max + 1);
  v[n] = 1.0;
  return MotionalState(std::move(v));
}

double MotionalState::edge_population() const {
  const int d = dim();
  const int first = std::max(0, d - kGuardLevels);
  return amplitudes_.tail(d - first).squaredNorm();
}

void MotionalState::require_valid(double time) const {
  const double edge = edge_population();
  if (!(edge < kGuardTolerance)) {
    std::string msg = "truncation guard tripped: top-level population " + std::to_string(edge) +
                      " at n_max=" + std::to_string(n_max());
    if (time >= 0.0) msg += " (t=" + std::to_string(time * 1e6) + " us)";
    throw TruncationOverflow(msg, time);
  }
}

MotionalState coherent_state(cplx alpha, int n_max) {
  const double a2 = std::norm(alpha);
  if (!(a2 < n_max / 4.0)) {
    throw TruncationOverflow("coherent_state: |alpha|^2 must be below n_max/4");
  }
  Vector c(n_max + 1);
  c[0] = std::exp(-a2 / 2.0);
  for (int n = 1; n <= n_max; ++n) c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  MotionalState s(std::move(c));
  s.require_valid();
  return s;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

std::vector<double> laguerre_functions(double x, int k, int count) {
  std::vector<double> f(static_cast<std::size_t>(std::max(count, 0)), 0.0);
  if (count <= 0) return f;
  if (x == 0.0) {
    // x^(k/2) kills every k > 0 entry; L_n(0) = 1.
    if (k == 0) std::fill(f.begin(), f.end(), 1.0);
    return f;
  }
  f[0] = std::exp(0.5 * k * std::log(x) - 0.5 * x - 0.5 * log_factorial(k));
  if (count == 1) return f;
  f[1] = f[0] * (1.0 + k - x) / std::sqrt(1.0 + k);
  for (int n = 1; n + 1 < count; ++n) {
    const double dn = n, dk = k;
    const double r1 = std::sqrt((dn + 1.0) / (dn + 1.0 + dk));
    const double r2 = std::sqrt(dn * (dn + 1.0) / ((dn + dk) * (dn + 1.0 + dk)));
    f[n + 1] = ((2.0 * dn + 1.0 + dk - x) * r1 * f[n] - (dn + dk) * r2 * f[n - 1]) / (dn + 1.0);
  }
  return f;
}

Matrix displacement_matrix(double eta, int n_max) {
  if (eta < 0.0) throw Error("displacement_matrix: eta must be non-negative");
  const int d = n_max + 1;
  Matrix m = Matrix::Zero(d, d);
  const double x = eta * eta;
  cplx ik = 1.0;  // i^k
  for (int k = 0; k < d; ++k) {
    const auto f = laguerre_functions(x, k, d - k);
    for (int n = 0; n + k < d; ++n) {
      const cplx v = ik * f[n];
      m(n, n + k) = v;
      m(n + k, n) = v;
    }
    ik *= cplx(0.0, 1.0);
  }
  return m;
}

CosSinOperators cos_sin_operators(double eta, int n_max) {
  const Matrix d = displacement_matrix(eta, n_max);
  const Matrix dh = d.adjoint();
  CosSinOperators ops;
  ops.cos = 0.5 * (d + dh);
  ops.sin = (d - dh) / cplx(0.0, 2.0);
  // Enforce exact Hermiticity against rounding in the sum.
  ops.cos = 0.5 * (ops.cos + ops.cos.adjoint()).eval();
  ops.sin = 0.5 * (ops.sin + ops.sin.adjoint()).eval();
  return ops;
}

cplx overlap(const MotionalState& s1, const MotionalState& s2) {
  if (s1.dim() != s2.dim()) throw DimensionMismatch("overlap: states have different n_max");
  return s1.amplitudes().dot(s2.amplitudes());  // conjugates the first argument
}

namespace {

struct LadderMoments {
  cplx a = 0.0;   // <a>
  cplx a2 = 0.0;  // <a^2>
  double n = 0.0; // <a^dagger a>
};

LadderMoments ladder_moments(const Vector& c) {
  LadderMoments m;
  const auto d = c.size();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double dk = static_cast<double>(k);
    m.n += dk * std::norm(c[k]);
    if (k + 1 < d) m.a += std::sqrt(dk + 1.0) * std::conj(c[k]) * c[k + 1];
    if (k + 2 < d) m.a2 += std::sqrt((dk + 1.0) * (dk + 2.0)) * std::conj(c[k]) * c[k + 2];
  }
  return m;
}

}  // namespace

QuadratureMoments quadrature_moments(const MotionalState& s) {
  const LadderMoments l = ladder_moments(s.amplitudes());
  QuadratureMoments q;
  q.mean_x = 2.0 * l.a.real();
  q.mean_p = 2.0 * l.a.imag();
  const double xx = 2.0 * l.a2.real() + 2.0 * l.n + 1.0;
  const double pp = -2.0 * l.a2.real() + 2.0 * l.n + 1.0;
  const double xp = 2.0 * l.a2.imag();
  q.covariance(0, 0) = xx - q.mean_x * q.mean_x;
  q.covariance(1, 1) = pp - q.mean_p * q.mean_p;
  q.covariance(0, 1) = q.covariance(1, 0) = xp - q.mean_x * q.mean_p;
  return q;
}

double squeezing_ratio(const QuadratureMoments& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.covariance, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
  if (!(lo > 0.0)) throw NumericalError("squeezing_ratio: covariance not positive definite");
  return std::sqrt(hi / lo);
}

double squeezing_ratio(const MotionalState& s) { return squeezing_ratio(quadrature_moments(s)); }

cplx mean_annihilation(const MotionalState& s) { return ladder_moments(s.amplitudes()).a; }

double mean_number(const MotionalState& s) { return ladder_moments(s.amplitudes()).n; }

MotionalState rotate(const MotionalState& s, double theta) {
  Vector c = s.amplitudes();
  for (Eigen::Index n = 0; n < c.size(); ++n) c[n] *= std::polar(1.0, theta * static_cast<double>(n));
  return MotionalState(std::move(c));
}

ThermalEnsemble thermal_weights(double nbar0, double tail_tol) {
  if (nbar0 < 0.0) throw Error("thermal_weights: nbar0 must be non-negative");
  ThermalEnsemble e;
  e.nbar0 = nbar0;
  if (nbar0 == 0.0) {
    e.weights = {1.0};
    return e;
  }
  const double q = nbar0 / (nbar0 + 1.0);
  double p = 1.0 / (nbar0 + 1.0);
  double tail = q;  // sum of p_m for m > n, here n = 0
  e.weights.push_back(p);
  while (tail >= tail_tol) {
    p *= q;
    tail *= q;
    e.weights.push_back(p);
  }
  double sum = 0.0;
  for (double w : e.weights) sum += w;
  for (double& w : e.weights) w /= sum;
  return e;
}

}  // namespace ionwalk::core
