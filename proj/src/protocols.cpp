#include "spinctl/protocols.hpp"

#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {

ControlProfile oat_profile(const OatScheme& scheme) {
  ControlProfile profile = ControlProfile::constant(0.0, 1);
  profile.pulses.push_back({scheme.tau_prep, scheme.theta0});
  return profile;
}

SchemeReport finish_report(const Evolver& evolver, Trajectory traj,
                           ControlProfile profile, const NoiseModel* noise) {
  SchemeReport report;
  report.fq_final = traj.fq.back();
  report.profile = std::move(profile);
  if (noise != nullptr) {
    JxMeasurement meas(evolver.ops());
    const PhaseOptimum opt = meas.optimize_phase(
        traj.states.back().amplitudes, traj.deriv_states.back(), *noise);
    report.fc_final = opt.fc;
    report.phase_offset = opt.phi;
  }
  report.trajectory = std::move(traj);
  return report;
}

}  // namespace

SchemeReport run_oat(const ModelParams& params, const OatScheme& scheme,
                     const NoiseModel* noise, int n_samples) {
  if (!(scheme.tau_prep > 0.0 && scheme.tau_prep < 1.0)) {
    throw std::invalid_argument("run_oat: tau_prep must lie strictly inside (0,1)");
  }
  Evolver evolver(params);
  const DickeState initial = css_max_jx(evolver.ops());
  const ControlProfile profile = oat_profile(scheme);
  Trajectory traj = evolve_profile(evolver, initial, profile, n_samples);
  return finish_report(evolver, std::move(traj), profile, noise);
}

std::pair<OatScheme, SchemeReport> optimize_oat(const ModelParams& params,
                                                const OatSearchSettings& settings,
                                                const NoiseModel* noise) {
  if (settings.n_tau < 2 || settings.n_theta < 2) {
    throw std::invalid_argument("optimize_oat: grid must be at least 2x2");
  }
  Evolver evolver(params);
  const DickeState initial = css_max_jx(evolver.ops());

  const double tau_min = 1e-6, tau_max = 1.0 - 1e-6;
  auto objective = [&](double tau_prep, double theta0) {
    ControlProfile profile = ControlProfile::constant(0.0, 1);
    profile.pulses.push_back({tau_prep, theta0});
    const EvolvedEndpoint end = evolve_endpoint(evolver, initial, profile);
    return qfi_of(end.state, end.deriv);
  };

  // Coarse scan over interior tau values and theta midpoints of (-pi, pi),
  // with (0.5, 0) added so the do-nothing pulse is always in the pool.
  double best_tau = 0.5, best_theta = 0.0;
  double best_fq = objective(best_tau, best_theta);
  for (int a = 0; a < settings.n_tau; ++a) {
    const double tau = (a + 1) / static_cast<double>(settings.n_tau + 1);
    for (int b = 0; b < settings.n_theta; ++b) {
      const double theta = -M_PI + (b + 0.5) * 2.0 * M_PI / settings.n_theta;
      const double fq = objective(tau, theta);
      if (fq > best_fq) {
        best_fq = fq;
        best_tau = tau;
        best_theta = theta;
      }
    }
  }

  // Deterministic compass refinement from the best grid point.
  double step_tau = 1.0 / (settings.n_tau + 1);
  double step_theta = 2.0 * M_PI / settings.n_theta;
  while (step_tau > settings.refine_tol || step_theta > settings.refine_tol) {
    bool improved = false;
    const double cand_tau[2] = {
        std::clamp(best_tau - step_tau, tau_min, tau_max),
        std::clamp(best_tau + step_tau, tau_min, tau_max)};
    for (double tau : cand_tau) {
      const double fq = objective(tau, best_theta);
      if (fq > best_fq) {
        best_fq = fq;
        best_tau = tau;
        improved = true;
      }
    }
    for (double theta : {best_theta - step_theta, best_theta + step_theta}) {
      const double fq = objective(best_tau, theta);
      if (fq > best_fq) {
        best_fq = fq;
        best_theta = theta;
        improved = true;
      }
    }
    if (!improved) {
      step_tau *= 0.5;
      step_theta *= 0.5;
    }
  }

  const OatScheme best{best_tau, best_theta};
  const ControlProfile profile = oat_profile(best);
  Trajectory traj = evolve_profile(evolver, initial, profile);
  return {best, finish_report(evolver, std::move(traj), profile, noise)};
}

SchemeReport run_tnt(const ModelParams& params, const NoiseModel* noise,
                     int n_samples, int n_segments) {
  Evolver evolver(params);
  const DickeState initial = css_max_jx(evolver.ops());
  const ControlProfile profile = ControlProfile::constant(1.0, n_segments);
  Trajectory traj = evolve_profile(evolver, initial, profile, n_samples);
  return finish_report(evolver, std::move(traj), profile, noise);
}

SchemeReport run_profile(const ModelParams& params, const ControlProfile& profile,
                         const NoiseModel* noise, int n_samples) {
  Evolver evolver(params);
  const DickeState initial = css_max_jx(evolver.ops());
  Trajectory traj = evolve_profile(evolver, initial, profile, n_samples);
  return finish_report(evolver, std::move(traj), profile, noise);
}

ReferenceLines reference_lines(const ModelParams& params) {
  const double n = params.n_particles;
  return {n, n * n};
}

}  // namespace spinctl
