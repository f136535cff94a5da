#pragma once

#include <optional>
#include <utility>

#include "spinctl/dynamics.hpp"
#include "spinctl/measurement.hpp"

namespace spinctl {

// Traditional one-axis-twisting scheme: free evolution with a single
// instantaneous Jx pulse of angle theta0 at tau = tau_prep.
struct OatScheme {
  double tau_prep = 0.5;
  double theta0 = 0.0;
};

struct SchemeReport {
  Trajectory trajectory;
  double fq_final = 0.0;
  std::optional<double> fc_final;       // present when a noise model was given
  std::optional<double> phase_offset;   // phi that produced fc_final
  ControlProfile profile;
};

struct ReferenceLines {
  double snl_fq = 0.0;        // N
  double heisenberg_f0 = 0.0; // N^2
};

// Deterministic grid + pattern-search settings for optimize_oat.
struct OatSearchSettings {
  int n_tau = 50;
  int n_theta = 50;
  double refine_tol = 1e-4;
};

SchemeReport run_oat(const ModelParams& params, const OatScheme& scheme,
                     const NoiseModel* noise = nullptr, int n_samples = 201);

// Maximizes fq_final over (tau_prep, theta0): coarse grid on
// (0,1) x (-pi, pi) followed by deterministic pattern-search refinement.
std::pair<OatScheme, SchemeReport> optimize_oat(
    const ModelParams& params, const OatSearchSettings& settings = {},
    const NoiseModel* noise = nullptr);

// Twist-and-turn reference: all segments at Lambda = 1, no pulses.
SchemeReport run_tnt(const ModelParams& params, const NoiseModel* noise = nullptr,
                     int n_samples = 201, int n_segments = 20);

// CSS start under an arbitrary profile.
SchemeReport run_profile(const ModelParams& params, const ControlProfile& profile,
                         const NoiseModel* noise = nullptr, int n_samples = 201);

ReferenceLines reference_lines(const ModelParams& params);

}  // namespace spinctl
