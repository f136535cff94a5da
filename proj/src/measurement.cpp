#include "spinctl/measurement.hpp"

#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kProbFloor = 1e-12;

double fisher_sum(const Eigen::VectorXd& probs, const Eigen::VectorXd& dprobs) {
  double fc = 0.0;
  for (int k = 0; k < probs.size(); ++k) {
    if (probs[k] > kProbFloor) {
      fc += dprobs[k] * dprobs[k] / probs[k];
    }
  }
  return fc;
}

}  // namespace

NoiseModel build_noise_kernel(int n_particles, double sigma) {
  if (n_particles < 1) {
    throw std::invalid_argument("build_noise_kernel: n_particles must be >= 1");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("build_noise_kernel: sigma must be >= 0");
  }
  const int dim = n_particles + 1;
  NoiseModel noise;
  noise.sigma = sigma;
  if (sigma == 0.0) {
    noise.kernel = Eigen::MatrixXd::Identity(dim, dim);
    return noise;
  }
  noise.kernel.resize(dim, dim);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (int col = 0; col < dim; ++col) {
    double sum = 0.0;
    for (int row = 0; row < dim; ++row) {
      const double d = row - col;
      const double g = std::exp(-d * d * inv_two_sigma2);
      noise.kernel(row, col) = g;
      sum += g;
    }
    noise.kernel.col(col) /= sum;
  }
  return noise;
}

MeasurementDistribution apply_noise(const MeasurementDistribution& dist,
                                    const NoiseModel& noise) {
  if (dist.probs.size() != dist.dprobs.size() ||
      dist.probs.size() != noise.kernel.cols()) {
    throw std::invalid_argument("apply_noise: dimension mismatch");
  }
  if (noise.is_identity()) return dist;
  MeasurementDistribution out;
  out.probs.noalias() = noise.kernel * dist.probs;
  out.dprobs.noalias() = noise.kernel * dist.dprobs;
  return out;
}

double classical_fisher(const MeasurementDistribution& dist) {
  if (dist.probs.size() != dist.dprobs.size()) {
    throw std::invalid_argument("classical_fisher: dimension mismatch");
  }
  return fisher_sum(dist.probs, dist.dprobs);
}

JxMeasurement::JxMeasurement(const CollectiveOperators& ops)
    : n_particles_(ops.n_particles) {
  const int dim = ops.dim();
  const double j = ops.spin();
  m_values_.resize(dim);
  for (int k = 0; k < dim; ++k) m_values_[k] = k - j;

  // R = exp(+i pi/2 Jy) = D1 V exp(+i pi/2 d) V^T D2 with D1 = diag(e^{-i pi/2 m}),
  // D2 = diag(e^{+i pi/2 m}); real in exact arithmetic.
  const auto& v = ops.jx_eigvecs;
  Eigen::MatrixXcd mid = v.cast<Complex>();
  for (int c = 0; c < dim; ++c) {
    mid.col(c) *= std::exp(kI * 0.5 * M_PI * ops.jx_eigvals[c]);
  }
  Eigen::MatrixXcd r = mid * v.transpose().cast<Complex>();
  for (int row = 0; row < dim; ++row) {
    r.row(row) *= std::exp(-kI * 0.5 * M_PI * m_values_[row]);
  }
  for (int c = 0; c < dim; ++c) {
    r.col(c) *= std::exp(kI * 0.5 * M_PI * m_values_[c]);
  }
  if (r.imag().cwiseAbs().maxCoeff() > 1e-10) {
    throw std::logic_error("JxMeasurement: basis change failed to come out real");
  }
  to_x_ = r.real();
}

MeasurementDistribution JxMeasurement::distribution(const CVector& state,
                                                    const CVector& deriv,
                                                    double phase_offset) const {
  const int dim = n_particles_ + 1;
  if (state.size() != dim || deriv.size() != dim) {
    throw std::invalid_argument("JxMeasurement: state size mismatch");
  }
  CVector s(dim), d(dim);
  for (int k = 0; k < dim; ++k) {
    const Complex phase = std::exp(kI * phase_offset * m_values_[k]);
    s[k] = phase * state[k];
    d[k] = phase * deriv[k];
  }
  CVector a(dim), b(dim);
  a.real() = to_x_ * s.real();
  a.imag() = to_x_ * s.imag();
  b.real() = to_x_ * d.real();
  b.imag() = to_x_ * d.imag();

  MeasurementDistribution dist;
  dist.probs.resize(dim);
  dist.dprobs.resize(dim);
  for (int k = 0; k < dim; ++k) {
    dist.probs[k] = std::norm(a[k]);
    dist.dprobs[k] = 2.0 * (std::conj(a[k]) * b[k]).real();
  }
  return dist;
}

double JxMeasurement::fisher_at(const CVector& state, const CVector& deriv,
                                const NoiseModel& noise,
                                double phase_offset) const {
  const MeasurementDistribution raw = distribution(state, deriv, phase_offset);
  if (noise.is_identity()) return fisher_sum(raw.probs, raw.dprobs);
  const MeasurementDistribution noisy = apply_noise(raw, noise);
  return fisher_sum(noisy.probs, noisy.dprobs);
}

PhaseOptimum JxMeasurement::optimize_phase(const CVector& state,
                                           const CVector& deriv,
                                           const NoiseModel& noise, int n_grid,
                                           double phi_tol) const {
  if (n_grid < 4) {
    throw std::invalid_argument("optimize_phase: grid too small");
  }
  const int dim = n_particles_ + 1;
  if (state.size() != dim || deriv.size() != dim) {
    throw std::invalid_argument("JxMeasurement: state size mismatch");
  }
  const bool noisy = !noise.is_identity();

  // Batched grid scan: columns are the phase-rotated state/deriv.
  Eigen::MatrixXcd s(dim, n_grid), d(dim, n_grid);
  for (int g = 0; g < n_grid; ++g) {
    const double phi = -M_PI + 2.0 * M_PI * g / n_grid;
    for (int k = 0; k < dim; ++k) {
      const Complex phase = std::exp(kI * phi * m_values_[k]);
      s(k, g) = phase * state[k];
      d(k, g) = phase * deriv[k];
    }
  }
  Eigen::MatrixXd ar = to_x_ * s.real(), ai = to_x_ * s.imag();
  Eigen::MatrixXd br = to_x_ * d.real(), bi = to_x_ * d.imag();
  Eigen::MatrixXd probs = ar.cwiseAbs2() + ai.cwiseAbs2();
  Eigen::MatrixXd dprobs = 2.0 * (ar.cwiseProduct(br) + ai.cwiseProduct(bi));
  if (noisy) {
    probs = noise.kernel * probs;
    dprobs = noise.kernel * dprobs;
  }

  int best_g = 0;
  double best_fc = -1.0;
  for (int g = 0; g < n_grid; ++g) {
    const double fc = fisher_sum(probs.col(g), dprobs.col(g));
    if (fc > best_fc) {
      best_fc = fc;
      best_g = g;
    }
  }
  const double spacing = 2.0 * M_PI / n_grid;
  const double phi_best = -M_PI + spacing * best_g;

  // Golden-section refinement in the bracketing bin pair.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = phi_best - spacing, hi = phi_best + spacing;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = fisher_at(state, deriv, noise, x1);
  double f2 = fisher_at(state, deriv, noise, x2);
  PhaseOptimum best{phi_best, best_fc};
  auto consider = [&](double phi, double fc) {
    if (fc > best.fc) {
      // report phi inside [-pi, pi)
      double p = std::remainder(phi, 2.0 * M_PI);
      if (p >= M_PI) p -= 2.0 * M_PI;
      best = {p, fc};
    }
  };
  consider(x1, f1);
  consider(x2, f2);
  while (hi - lo > phi_tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = fisher_at(state, deriv, noise, x2);
      consider(x2, f2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = fisher_at(state, deriv, noise, x1);
      consider(x1, f1);
    }
  }
  return best;
}

MeasurementDistribution jx_distribution(const DickeState& state,
                                        const CVector& deriv,
                                        double phase_offset) {
  JxMeasurement meas(build_operators(state.n_particles));
  return meas.distribution(state.amplitudes, deriv, phase_offset);
}

PhaseOptimum optimize_phase_offset(const DickeState& state, const CVector& deriv,
                                   const NoiseModel& noise, int n_grid) {
  JxMeasurement meas(build_operators(state.n_particles));
  return meas.optimize_phase(state.amplitudes, deriv, noise, n_grid);
}

}  // namespace spinctl
