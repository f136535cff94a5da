#include "spinctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kTimeEps = 1e-12;
constexpr size_t kPropagatorCacheCap = 384;

void validate_profile(const ControlProfile& profile) {
  if (profile.segments.empty()) {
    throw std::invalid_argument("ControlProfile: needs at least one segment");
  }
  double prev = 0.0;
  for (const Pulse& p : profile.pulses) {
    if (!(p.time >= 0.0 && p.time <= 1.0)) {
      throw std::invalid_argument("ControlProfile: pulse time outside [0,1]");
    }
    if (p.time < prev) {
      throw std::invalid_argument("ControlProfile: pulse times must be sorted");
    }
    prev = p.time;
  }
}

// Walks tau from 0 to 1, stopping at segment boundaries, pulses and sample
// times. Sample times must be sorted.
class ProfileWalker {
 public:
  ProfileWalker(const Evolver& evolver, const DickeState& initial,
                const ControlProfile& profile)
      : evolver_(evolver), profile_(profile),
        n_segments_(static_cast<int>(profile.segments.size())) {
    validate_profile(profile);
    if (initial.n_particles != evolver.params().n_particles) {
      throw std::invalid_argument("evolve: initial state does not match params");
    }
    state_ = initial.amplitudes;
    deriv_ = CVector::Zero(initial.dim());
  }

  // visit(tau, state, deriv) is called at each sample time.
  template <typename Visitor>
  void run(const std::vector<double>& sample_times, Visitor&& visit) {
    size_t si = 0, pi = 0;
    const auto& pulses = profile_.pulses;
    while (si < sample_times.size() || pi < pulses.size()) {
      double t;
      if (pi >= pulses.size()) {
        t = sample_times[si];
      } else if (si >= sample_times.size()) {
        t = pulses[pi].time;
      } else {
        t = std::min(sample_times[si], pulses[pi].time);
      }
      advance_to(t);
      while (pi < pulses.size() && pulses[pi].time <= t + kTimeEps) {
        evolver_.apply_pulse(state_, pulses[pi].angle);
        evolver_.apply_pulse(deriv_, pulses[pi].angle);
        ++pi;
      }
      while (si < sample_times.size() && sample_times[si] <= t + kTimeEps) {
        visit(sample_times[si], state_, deriv_);
        ++si;
      }
    }
  }

  CVector& state() { return state_; }
  CVector& deriv() { return deriv_; }

 private:
  void advance_to(double t) {
    while (t - cur_ > kTimeEps) {
      const double boundary = (seg_ + 1) / static_cast<double>(n_segments_);
      const double end = std::min(t, boundary);
      evolver_.advance(state_, deriv_, profile_.segments[seg_], end - cur_);
      cur_ = end;
      if (seg_ + 1 < n_segments_ && boundary - cur_ <= kTimeEps) ++seg_;
    }
  }

  const Evolver& evolver_;
  const ControlProfile& profile_;
  int n_segments_;
  CVector state_, deriv_;
  double cur_ = 0.0;
  int seg_ = 0;
};

std::vector<double> uniform_samples(int n_samples) {
  if (n_samples < 2) {
    throw std::invalid_argument("evolve_profile: n_samples must be >= 2");
  }
  std::vector<double> times(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    times[i] = i / static_cast<double>(n_samples - 1);
  }
  return times;
}

}  // namespace

ControlProfile ControlProfile::constant(double lambda, int n_segments) {
  if (n_segments < 1) {
    throw std::invalid_argument("ControlProfile: segment count must be >= 1");
  }
  ControlProfile profile;
  profile.segments.assign(n_segments, lambda);
  return profile;
}

Eigen::MatrixXd hamiltonian_matrix(const ModelParams& params, double lambda_value) {
  if (params.n_particles < 1) {
    throw std::invalid_argument("hamiltonian_matrix: n_particles must be >= 1");
  }
  const CollectiveOperators ops = build_operators(params.n_particles);
  const int dim = params.n_particles + 1;
  const double j = 0.5 * params.n_particles;
  const double omega_x = -0.5 * lambda_value * params.n_particles * params.chi_T;
  Eigen::MatrixXd h = omega_x * ops.jx;
  for (int k = 0; k < dim; ++k) {
    const double m = k - j;
    h(k, k) = params.chi_T * m * m + params.omega_T * m;
  }
  return h;
}

double qfi_of(const CVector& state, const CVector& deriv) {
  const double raw = 4.0 * (deriv.squaredNorm() - std::norm(state.dot(deriv)));
  return std::max(0.0, raw);
}

double qfi_of(const DickeState& state, const CVector& deriv) {
  return qfi_of(state.amplitudes, deriv);
}

double f0_of(const CVector& state, double spin_j) {
  double ez = 0, ez2 = 0;
  for (int k = 0; k < state.size(); ++k) {
    const double m = k - spin_j;
    const double p = std::norm(state[k]);
    ez += m * p;
    ez2 += m * m * p;
  }
  return std::max(0.0, 4.0 * (ez2 - ez * ez));
}

Evolver::Evolver(const ModelParams& params)
    : params_(params), ops_(build_operators(params.n_particles)) {
  const int dim = params_.n_particles + 1;
  const double j = 0.5 * params_.n_particles;
  h_diag_.resize(dim);
  m_values_.resize(dim);
  jx_sub_.resize(dim - 1);
  for (int k = 0; k < dim; ++k) {
    const double m = k - j;
    m_values_[k] = m;
    h_diag_[k] = params_.chi_T * m * m + params_.omega_T * m;
    if (k + 1 < dim) {
      jx_sub_[k] = ops_.jx(k + 1, k);
    }
  }
}

Eigen::MatrixXd Evolver::hamiltonian(double lambda_value) const {
  return hamiltonian_matrix(params_, lambda_value);
}

const Evolver::Propagator& Evolver::propagator_for(double lambda_value) const {
  auto it = cache_.find(lambda_value);
  if (it != cache_.end()) return it->second;
  if (cache_.size() >= kPropagatorCacheCap) cache_.clear();

  const double coupling = -0.5 * lambda_value * params_.n_particles * params_.chi_T;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(h_diag_, coupling * jx_sub_,
                            Eigen::ComputeEigenvectors);

  Propagator prop;
  prop.evals = es.eigenvalues();
  prop.evecs = es.eigenvectors();
  prop.jz_eig.noalias() =
      prop.evecs.transpose() * (m_values_.asDiagonal() * prop.evecs);
  return cache_.emplace(lambda_value, std::move(prop)).first->second;
}

void Evolver::advance(CVector& state, CVector& deriv, double lambda_value,
                      double dtau) const {
  if (!(dtau >= 0.0) || !std::isfinite(dtau) || !std::isfinite(lambda_value)) {
    throw std::invalid_argument("Evolver::advance: bad duration or lambda");
  }
  if (dtau == 0.0) return;
  const int n = dim();
  if (state.size() != n || deriv.size() != n) {
    throw std::invalid_argument("Evolver::advance: state size mismatch");
  }
  const Propagator& prop = propagator_for(lambda_value);

  Eigen::MatrixXd x(n, 4);
  x.col(0) = state.real();
  x.col(1) = state.imag();
  x.col(2) = deriv.real();
  x.col(3) = deriv.imag();
  Eigen::MatrixXd y(n, 4);
  y.noalias() = prop.evecs.transpose() * x;

  std::vector<Complex> u(n);
  for (int k = 0; k < n; ++k) {
    u[k] = std::exp(-kI * prop.evals[k] * dtau);
  }

  // a' = u.a ; b' = u.b - i (K o Jz') a with the divided-difference kernel
  // K_jk = (e^{-i l_k dt} - e^{-i l_j dt}) / (i (l_j - l_k)), K_jj = dt u_j.
  Eigen::MatrixXd x2(n, 4);
  for (int a = 0; a < n; ++a) {
    Complex inhom{0.0, 0.0};
    const double la = prop.evals[a];
    for (int b = 0; b < n; ++b) {
      const double delta = la - prop.evals[b];
      const Complex kab = (std::abs(delta) < 1e-9)
                              ? dtau * u[a]
                              : -kI * (u[b] - u[a]) / delta;
      inhom += kab * prop.jz_eig(a, b) * Complex(y(b, 0), y(b, 1));
    }
    const Complex sa = u[a] * Complex(y(a, 0), y(a, 1));
    const Complex da = u[a] * Complex(y(a, 2), y(a, 3)) - kI * inhom;
    x2(a, 0) = sa.real();
    x2(a, 1) = sa.imag();
    x2(a, 2) = da.real();
    x2(a, 3) = da.imag();
  }

  x.noalias() = prop.evecs * x2;
  state.real() = x.col(0);
  state.imag() = x.col(1);
  deriv.real() = x.col(2);
  deriv.imag() = x.col(3);
}

void Evolver::apply_pulse(CVector& v, double angle) const {
  const auto& vecs = ops_.jx_eigvecs;
  const int n = dim();
  CVector w(n);
  w.real() = vecs.transpose() * v.real();
  w.imag() = vecs.transpose() * v.imag();
  for (int k = 0; k < n; ++k) {
    w[k] *= std::exp(-kI * angle * ops_.jx_eigvals[k]);
  }
  v.real() = vecs * w.real();
  v.imag() = vecs * w.imag();
}

std::pair<DickeState, CVector> evolve_segment(const Evolver& evolver,
                                              const DickeState& state,
                                              const CVector& deriv,
                                              double lambda_value,
                                              double duration) {
  if (duration == 0.0) return {state, deriv};
  DickeState out_state = state;
  CVector out_deriv = deriv;
  evolver.advance(out_state.amplitudes, out_deriv, lambda_value, duration);
  return {std::move(out_state), std::move(out_deriv)};
}

std::pair<DickeState, CVector> evolve_segment(const DickeState& state,
                                              const CVector& deriv,
                                              const ModelParams& params,
                                              double lambda_value,
                                              double duration) {
  Evolver evolver(params);
  return evolve_segment(evolver, state, deriv, lambda_value, duration);
}

Trajectory evolve_profile(const Evolver& evolver, const DickeState& initial,
                          const ControlProfile& profile, int n_samples) {
  const std::vector<double> times = uniform_samples(n_samples);
  const double j = initial.spin();

  Trajectory traj;
  traj.times.reserve(times.size());
  traj.states.reserve(times.size());
  traj.deriv_states.reserve(times.size());
  traj.fq.reserve(times.size());
  traj.f0.reserve(times.size());

  ProfileWalker walker(evolver, initial, profile);
  walker.run(times, [&](double tau, const CVector& state, const CVector& deriv) {
    traj.times.push_back(tau);
    traj.states.push_back(DickeState{initial.n_particles, state});
    traj.deriv_states.push_back(deriv);
    traj.fq.push_back(qfi_of(state, deriv));
    traj.f0.push_back(f0_of(state, j));
  });
  return traj;
}

Trajectory evolve_profile(const DickeState& initial, const ModelParams& params,
                          const ControlProfile& profile, int n_samples) {
  Evolver evolver(params);
  return evolve_profile(evolver, initial, profile, n_samples);
}

EvolvedEndpoint evolve_endpoint(const Evolver& evolver, const DickeState& initial,
                                const ControlProfile& profile) {
  ProfileWalker walker(evolver, initial, profile);
  EvolvedEndpoint end;
  walker.run({1.0}, [&](double, const CVector& state, const CVector& deriv) {
    end.state = state;
    end.deriv = deriv;
  });
  return end;
}

std::vector<EvolvedEndpoint> evolve_snapshots(const Evolver& evolver,
                                              const DickeState& initial,
                                              const ControlProfile& profile,
                                              const std::vector<double>& times) {
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > 1.0 ||
        (i > 0 && times[i] < times[i - 1])) {
      throw std::invalid_argument("evolve_snapshots: times must be sorted, in [0,1]");
    }
  }
  std::vector<EvolvedEndpoint> out;
  out.reserve(times.size());
  ProfileWalker walker(evolver, initial, profile);
  walker.run(times, [&](double, const CVector& state, const CVector& deriv) {
    out.push_back({state, deriv});
  });
  return out;
}

}  // namespace spinctl
