#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "spinctl/spin.hpp"

namespace spinctl {

// Dimensionless model: time is tau = t/T in [0,1] and only the products
// chi*T, omega*T, Omega*T enter. omega_T is the evaluation point of the
// estimated parameter (0 unless doing sensitivity studies).
struct ModelParams {
  int n_particles = 0;
  double chi_T = 0.0;
  double omega_T = 0.0;
};

// Instantaneous Jx rotation exp(-i angle Jx) fired at tau = time.
struct Pulse {
  double time = 0.0;
  double angle = 0.0;
};

// Omega(tau) = -Lambda(tau) N chi / 2 with Lambda piecewise constant on a
// uniform grid of segments.size() equal slices of [0,1], plus optional
// delta pulses.
struct ControlProfile {
  std::vector<double> segments{0.0};
  std::vector<Pulse> pulses;

  static ControlProfile constant(double lambda, int n_segments = 1);
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DickeState> states;
  std::vector<CVector> deriv_states;  // |d Psi / d(omega T)>, unnormalized
  std::vector<double> fq;             // F_Q / T^2
  std::vector<double> f0;             // 4 Var(Jz)
};

// (chi T) Jz^2 + (omega T) Jz + (Omega T) Jx with Omega T = -lambda N (chi T)/2.
Eigen::MatrixXd hamiltonian_matrix(const ModelParams& params, double lambda_value);

// F_Q/T^2 = 4 [ <d|d> - |<s|d>|^2 ], clamped at 0.
double qfi_of(const CVector& state, const CVector& deriv);
double qfi_of(const DickeState& state, const CVector& deriv);

// f0 = 4 Var(Jz); needs no operator table since Jz is diagonal.
double f0_of(const CVector& state, double spin_j);

// Exact propagation engine for one ModelParams value. Each constant-lambda
// segment Hamiltonian is diagonalized once and cached; the derivative state
// is advanced with the closed-form divided-difference kernel in the
// eigenbasis. Not safe for concurrent use; give each thread its own Evolver.
class Evolver {
 public:
  explicit Evolver(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  const CollectiveOperators& ops() const { return ops_; }
  int dim() const { return params_.n_particles + 1; }

  // Advances |state> and the derivative state across dtau at fixed lambda.
  void advance(CVector& state, CVector& deriv, double lambda_value, double dtau) const;

  // exp(-i angle Jx) applied in place.
  void apply_pulse(CVector& v, double angle) const;

  Eigen::MatrixXd hamiltonian(double lambda_value) const;

 private:
  struct Propagator {
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    Eigen::MatrixXd jz_eig;  // evecs^T Jz evecs
  };

  const Propagator& propagator_for(double lambda_value) const;

  ModelParams params_;
  CollectiveOperators ops_;
  Eigen::VectorXd h_diag_;   // chi_T m^2 + omega_T m
  Eigen::VectorXd jx_sub_;   // subdiagonal of Jx
  Eigen::VectorXd m_values_;
  mutable std::unordered_map<double, Propagator> cache_;
};

// Propagates (state, deriv) across one constant segment. Duration 0 returns
// the inputs untouched.
std::pair<DickeState, CVector> evolve_segment(const DickeState& state,
                                              const CVector& deriv,
                                              const ModelParams& params,
                                              double lambda_value,
                                              double duration);
std::pair<DickeState, CVector> evolve_segment(const Evolver& evolver,
                                              const DickeState& state,
                                              const CVector& deriv,
                                              double lambda_value,
                                              double duration);

// Full run from tau=0 (deriv = 0) to tau=1 with n_samples uniform samples
// including both endpoints. Pulses fire before the sample taken at the same
// time.
Trajectory evolve_profile(const DickeState& initial, const ModelParams& params,
                          const ControlProfile& profile, int n_samples = 201);
Trajectory evolve_profile(const Evolver& evolver, const DickeState& initial,
                          const ControlProfile& profile, int n_samples = 201);

// Endpoint-only evolution (the optimizer's inner loop).
struct EvolvedEndpoint {
  CVector state;
  CVector deriv;
};
EvolvedEndpoint evolve_endpoint(const Evolver& evolver, const DickeState& initial,
                                const ControlProfile& profile);

// States and derivative states at arbitrary (sorted) times in [0,1].
std::vector<EvolvedEndpoint> evolve_snapshots(const Evolver& evolver,
                                              const DickeState& initial,
                                              const ControlProfile& profile,
                                              const std::vector<double>& times);

}  // namespace spinctl
