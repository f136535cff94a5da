#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "spinctl/dynamics.hpp"
#include "spinctl/measurement.hpp"

namespace spinctl {

struct StepRule {
  double initial = 0.5;
  double backtrack = 0.5;
  double growth = 1.6;
  double min_step = 1e-14;
};

struct OptimizerSettings {
  int n_segments = 20;
  int n_restarts = 32;
  double lambda_bound = 10.0;   // box |Lambda_k| <= bound
  double fd_step = 1e-4;
  StepRule step_rule;
  double tol = 1e-7;            // relative objective gain that stops a restart
  int max_iters = 500;
  std::uint64_t rng_seed = 1234;
  int threads = 0;              // 0 = hardware concurrency
  int phase_grid = 256;         // phi scan resolution inside the CFI objective
};

struct RestartRecord {
  std::uint64_t seed = 0;
  std::vector<double> init_segments;
  double objective = 0.0;
  int iterations = 0;
};

struct OptimizationResult {
  ControlProfile best_profile;
  double best_objective = 0.0;
  int best_restart = 0;
  std::optional<double> phase_offset;   // CFI runs only
  std::vector<RestartRecord> restarts;
  OptimizerSettings settings;
};

// Objective over control profiles. gradient() defaults to central finite
// differences through value(); subclasses may exploit structure as long as
// they evaluate the same differences.
class ProfileObjective {
 public:
  virtual ~ProfileObjective() = default;
  virtual double value(const ControlProfile& profile) = 0;
  virtual std::vector<double> gradient(const ControlProfile& profile,
                                       double fd_step);
};

// F_Q(T)/T^2 from a CSS start under the given profile.
class QfiObjective : public ProfileObjective {
 public:
  explicit QfiObjective(const ModelParams& params);
  double value(const ControlProfile& profile) override;
  std::vector<double> gradient(const ControlProfile& profile,
                               double fd_step) override;

 protected:
  virtual double endpoint_value(const CVector& state, const CVector& deriv);

  Evolver evolver_;
  DickeState initial_;
};

// Phase-offset-maximized noisy classical Fisher information at tau = 1.
class CfiObjective final : public QfiObjective {
 public:
  CfiObjective(const ModelParams& params, const NoiseModel& noise,
               int phase_grid = 256);
  const NoiseModel& noise() const { return noise_; }
  PhaseOptimum phase_optimum(const ControlProfile& profile);

 private:
  double endpoint_value(const CVector& state, const CVector& deriv) override;

  NoiseModel noise_;
  JxMeasurement measurement_;
  int phase_grid_;
};

using ObjectiveFn = std::function<double(const ControlProfile&)>;
using ObjectiveFactory = std::function<std::unique_ptr<ProfileObjective>()>;

double objective_qfi(const ModelParams& params, const ControlProfile& profile);
double objective_cfi(const ModelParams& params, const ControlProfile& profile,
                     const NoiseModel& noise, int phase_grid = 256);

std::vector<double> finite_diff_gradient(const ObjectiveFn& objective,
                                         const ControlProfile& profile,
                                         double fd_step);

struct AscentOutcome {
  ControlProfile profile;
  double objective = 0.0;
  int iterations = 0;
};

// Projected gradient ascent with backtracking line search; accepted
// objective values are strictly increasing and iterates stay inside the box.
AscentOutcome ascend(ProfileObjective& objective, const ControlProfile& init,
                     const OptimizerSettings& settings);
AscentOutcome ascend(const ObjectiveFn& objective, const ControlProfile& init,
                     const OptimizerSettings& settings);

// Gradient ascent from n_restarts starting profiles: restart 0 is Lambda=1
// (TNT), restart 1 is Lambda=0 (free evolution), the rest are uniform in
// [-bound, bound]^S from the seeded generator. Restarts run in parallel;
// the outcome is reproducible for a fixed seed and settings.
OptimizationResult multi_start(const ObjectiveFactory& factory,
                               const OptimizerSettings& settings);
OptimizationResult multi_start(const ObjectiveFn& objective,
                               const OptimizerSettings& settings);
OptimizationResult multi_start_qfi(const ModelParams& params,
                                   const OptimizerSettings& settings);
OptimizationResult multi_start_cfi(const ModelParams& params,
                                   const NoiseModel& noise,
                                   const OptimizerSettings& settings);

}  // namespace spinctl
