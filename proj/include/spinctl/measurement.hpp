#pragma once

#include <Eigen/Dense>

#include "spinctl/spin.hpp"

namespace spinctl {

// Outcome distribution of a Jx-basis measurement, indexed like the Dicke
// amplitudes (k = m + N/2), together with its derivative in omega*T.
struct MeasurementDistribution {
  Eigen::VectorXd probs;
  Eigen::VectorXd dprobs;
};

// Gaussian detection-noise kernel. kernel is column-stochastic:
// Gamma(m,m') = exp(-(m-m')^2 / 2 sigma^2) / sum_m exp(-(m-m')^2 / 2 sigma^2).
// sigma = 0 stands for a perfect detector (identity kernel).
struct NoiseModel {
  double sigma = 0.0;
  Eigen::MatrixXd kernel;

  bool is_identity() const { return sigma == 0.0; }
};

NoiseModel build_noise_kernel(int n_particles, double sigma);

MeasurementDistribution apply_noise(const MeasurementDistribution& dist,
                                    const NoiseModel& noise);

// sum_m (dP_m)^2 / P_m over entries with P_m > 1e-12.
double classical_fisher(const MeasurementDistribution& dist);

struct PhaseOptimum {
  double phi = 0.0;
  double fc = 0.0;
};

// Measurement machinery for a fixed particle number. Holds the real
// orthogonal change of basis R = exp(+i pi/2 Jy) that maps Jx eigenstates
// onto the Jz labels (max-Jx CSS lands on m = +N/2).
class JxMeasurement {
 public:
  explicit JxMeasurement(const CollectiveOperators& ops);

  int n_particles() const { return n_particles_; }

  // Applies exp(i phi Jz) to state and deriv, then projects onto the Jx
  // basis: P_m = |<m_x|Psi>|^2, dP_m = 2 Re[<Psi|m_x><m_x|dPsi>].
  MeasurementDistribution distribution(const CVector& state, const CVector& deriv,
                                       double phase_offset) const;

  // Maximizes the (noisy) classical Fisher information over the phase
  // offset: grid scan over [-pi, pi) refined by golden section. The result
  // is never below the best grid point.
  PhaseOptimum optimize_phase(const CVector& state, const CVector& deriv,
                              const NoiseModel& noise, int n_grid = 256,
                              double phi_tol = 1e-6) const;

  double fisher_at(const CVector& state, const CVector& deriv,
                   const NoiseModel& noise, double phase_offset) const;

 private:
  int n_particles_;
  Eigen::MatrixXd to_x_;      // R, real orthogonal
  Eigen::VectorXd m_values_;
};

// Convenience wrappers matching the one-shot call signatures; they build the
// operator table internally.
MeasurementDistribution jx_distribution(const DickeState& state,
                                        const CVector& deriv,
                                        double phase_offset);
PhaseOptimum optimize_phase_offset(const DickeState& state, const CVector& deriv,
                                   const NoiseModel& noise, int n_grid = 256);

}  // namespace spinctl
