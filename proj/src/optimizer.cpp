#include "spinctl/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace spinctl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t restart_seed(std::uint64_t base, int restart) {
  return splitmix64(base ^ (0xA24BAED4963EE407ull * (restart + 1)));
}

// Portable uniform double in [0, 1) from raw 64-bit draws.
double u01(std::uint64_t bits) { return (bits >> 11) * 0x1.0p-53; }

void validate_settings(const OptimizerSettings& s) {
  if (s.n_segments < 1 || s.n_restarts < 1 || s.max_iters < 1 ||
      !(s.lambda_bound > 0) || !(s.fd_step > 0) || !(s.tol > 0) ||
      !(s.step_rule.initial > 0) || !(s.step_rule.backtrack > 0) ||
      s.step_rule.backtrack >= 1.0 || !(s.step_rule.growth >= 1.0)) {
    throw std::invalid_argument("OptimizerSettings: values out of range");
  }
}

// Segment durations exactly as the profile walker slices [0,1]; keeping the
// same floating-point values makes the structured gradient identical to a
// naive finite difference through value().
std::vector<double> segment_durations(int n_segments) {
  std::vector<double> durations(n_segments);
  for (int k = 0; k < n_segments; ++k) {
    durations[k] = (k + 1) / static_cast<double>(n_segments) -
                   k / static_cast<double>(n_segments);
  }
  return durations;
}

class FunctionObjective final : public ProfileObjective {
 public:
  explicit FunctionObjective(ObjectiveFn fn) : fn_(std::move(fn)) {}
  double value(const ControlProfile& profile) override { return fn_(profile); }

 private:
  ObjectiveFn fn_;
};

}  // namespace

std::vector<double> ProfileObjective::gradient(const ControlProfile& profile,
                                               double fd_step) {
  return finite_diff_gradient(
      [this](const ControlProfile& p) { return value(p); }, profile, fd_step);
}

QfiObjective::QfiObjective(const ModelParams& params)
    : evolver_(params), initial_(css_max_jx(evolver_.ops())) {}

double QfiObjective::endpoint_value(const CVector& state, const CVector& deriv) {
  return qfi_of(state, deriv);
}

double QfiObjective::value(const ControlProfile& profile) {
  if (!profile.pulses.empty()) {
    const EvolvedEndpoint end = evolve_endpoint(evolver_, initial_, profile);
    return endpoint_value(end.state, end.deriv);
  }
  const int n_segments = static_cast<int>(profile.segments.size());
  const std::vector<double> durations = segment_durations(n_segments);
  CVector state = initial_.amplitudes;
  CVector deriv = CVector::Zero(state.size());
  for (int k = 0; k < n_segments; ++k) {
    evolver_.advance(state, deriv, profile.segments[k], durations[k]);
  }
  return endpoint_value(state, deriv);
}

std::vector<double> QfiObjective::gradient(const ControlProfile& profile,
                                           double fd_step) {
  if (!profile.pulses.empty()) {
    return ProfileObjective::gradient(profile, fd_step);
  }
  const int n_segments = static_cast<int>(profile.segments.size());
  const std::vector<double> durations = segment_durations(n_segments);

  // Forward pass caching the pair before each segment; each perturbed
  // evaluation then only re-propagates the tail.
  std::vector<CVector> states(n_segments), derivs(n_segments);
  CVector state = initial_.amplitudes;
  CVector deriv = CVector::Zero(state.size());
  for (int k = 0; k < n_segments; ++k) {
    states[k] = state;
    derivs[k] = deriv;
    evolver_.advance(state, deriv, profile.segments[k], durations[k]);
  }

  auto tail_value = [&](int k, double lambda_k) {
    CVector s = states[k];
    CVector d = derivs[k];
    evolver_.advance(s, d, lambda_k, durations[k]);
    for (int j = k + 1; j < n_segments; ++j) {
      evolver_.advance(s, d, profile.segments[j], durations[j]);
    }
    return endpoint_value(s, d);
  };

  std::vector<double> grad(n_segments);
  for (int k = 0; k < n_segments; ++k) {
    const double plus = tail_value(k, profile.segments[k] + fd_step);
    const double minus = tail_value(k, profile.segments[k] - fd_step);
    grad[k] = (plus - minus) / (2.0 * fd_step);
  }
  return grad;
}

CfiObjective::CfiObjective(const ModelParams& params, const NoiseModel& noise,
                           int phase_grid)
    : QfiObjective(params),
      noise_(noise),
      measurement_(evolver_.ops()),
      phase_grid_(phase_grid) {
  if (noise.kernel.rows() != params.n_particles + 1) {
    throw std::invalid_argument("CfiObjective: noise kernel size mismatch");
  }
}

double CfiObjective::endpoint_value(const CVector& state, const CVector& deriv) {
  return measurement_.optimize_phase(state, deriv, noise_, phase_grid_).fc;
}

PhaseOptimum CfiObjective::phase_optimum(const ControlProfile& profile) {
  const EvolvedEndpoint end = evolve_endpoint(evolver_, initial_, profile);
  return measurement_.optimize_phase(end.state, end.deriv, noise_, phase_grid_);
}

double objective_qfi(const ModelParams& params, const ControlProfile& profile) {
  QfiObjective objective(params);
  return objective.value(profile);
}

double objective_cfi(const ModelParams& params, const ControlProfile& profile,
                     const NoiseModel& noise, int phase_grid) {
  CfiObjective objective(params, noise, phase_grid);
  return objective.value(profile);
}

std::vector<double> finite_diff_gradient(const ObjectiveFn& objective,
                                         const ControlProfile& profile,
                                         double fd_step) {
  if (!(fd_step > 0)) {
    throw std::invalid_argument("finite_diff_gradient: fd_step must be > 0");
  }
  std::vector<double> grad(profile.segments.size());
  for (size_t k = 0; k < profile.segments.size(); ++k) {
    ControlProfile plus = profile, minus = profile;
    plus.segments[k] += fd_step;
    minus.segments[k] -= fd_step;
    grad[k] = (objective(plus) - objective(minus)) / (2.0 * fd_step);
  }
  return grad;
}

AscentOutcome ascend(ProfileObjective& objective, const ControlProfile& init,
                     const OptimizerSettings& settings) {
  validate_settings(settings);
  if (init.segments.empty()) {
    throw std::invalid_argument("ascend: init profile needs segments");
  }
  const double bound = settings.lambda_bound;
  auto clamp_profile = [bound](ControlProfile& p) {
    for (double& v : p.segments) v = std::clamp(v, -bound, bound);
  };

  ControlProfile x = init;
  clamp_profile(x);
  double f = objective.value(x);
  double step = settings.step_rule.initial;
  bool step_calibrated = false;
  int iterations = 0;

  // When progress stalls at the current difference resolution, the step is
  // refined (down to 1e-3 of the configured value) and the ascent resumes;
  // near ridges the coarse central difference misreads the local slope.
  double fd_step = settings.fd_step;
  const double fd_floor = 2e-3 * settings.fd_step;
  auto refine = [&]() {
    if (fd_step <= fd_floor) return false;
    fd_step *= 0.1;
    step_calibrated = false;
    return true;
  };

  for (int it = 1; it <= settings.max_iters; ++it) {
    const std::vector<double> grad = objective.gradient(x, fd_step);
    double ginf = 0.0;
    for (double g : grad) ginf = std::max(ginf, std::abs(g));
    if (!(ginf > 1e-14)) {
      if (refine()) continue;
      break;
    }
    if (!step_calibrated) {
      step = settings.step_rule.initial / std::max(1.0, ginf);
      step_calibrated = true;
    }

    bool accepted = false;
    ControlProfile trial = x;
    double f_trial = f;
    while (step >= settings.step_rule.min_step) {
      trial = x;
      for (size_t k = 0; k < trial.segments.size(); ++k) {
        trial.segments[k] =
            std::clamp(x.segments[k] + step * grad[k], -bound, bound);
      }
      if (trial.segments == x.segments) {
        step *= settings.step_rule.backtrack;
        continue;
      }
      f_trial = objective.value(trial);
      if (f_trial > f) {
        accepted = true;
        break;
      }
      step *= settings.step_rule.backtrack;
    }
    if (!accepted) {
      if (refine()) continue;
      break;
    }

    const double gain = f_trial - f;
    x = std::move(trial);
    f = f_trial;
    iterations = it;
    step = std::min(step * settings.step_rule.growth, 1e6);
    if (gain < settings.tol * std::max(1.0, std::abs(f))) {
      if (refine()) continue;
      break;
    }
  }
  return {std::move(x), f, iterations};
}

AscentOutcome ascend(const ObjectiveFn& objective, const ControlProfile& init,
                     const OptimizerSettings& settings) {
  FunctionObjective wrapped(objective);
  return ascend(wrapped, init, settings);
}

OptimizationResult multi_start(const ObjectiveFactory& factory,
                               const OptimizerSettings& settings) {
  validate_settings(settings);
  const int n_restarts = settings.n_restarts;
  std::vector<AscentOutcome> outcomes(n_restarts);
  std::vector<RestartRecord> records(n_restarts);

  std::atomic<int> next{0};
  auto worker = [&]() {
    std::unique_ptr<ProfileObjective> objective = factory();
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_restarts) break;
      const std::uint64_t seed = restart_seed(settings.rng_seed, i);
      ControlProfile init;
      if (i == 0) {
        init = ControlProfile::constant(1.0, settings.n_segments);
      } else if (i == 1) {
        init = ControlProfile::constant(0.0, settings.n_segments);
      } else {
        init.segments.resize(settings.n_segments);
        std::uint64_t s = seed;
        for (double& v : init.segments) {
          s = splitmix64(s);
          v = settings.lambda_bound * (2.0 * u01(s) - 1.0);
        }
      }
      AscentOutcome out = ascend(*objective, init, settings);
      records[i] = {seed, init.segments, out.objective, out.iterations};
      outcomes[i] = std::move(out);
    }
  };

  int n_threads = settings.threads > 0
                      ? settings.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, n_restarts);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  int best = 0;
  for (int i = 1; i < n_restarts; ++i) {
    if (outcomes[i].objective > outcomes[best].objective) best = i;
  }

  OptimizationResult result;
  result.best_profile = std::move(outcomes[best].profile);
  result.best_objective = outcomes[best].objective;
  result.best_restart = best;
  result.restarts = std::move(records);
  result.settings = settings;
  return result;
}

OptimizationResult multi_start(const ObjectiveFn& objective,
                               const OptimizerSettings& settings) {
  return multi_start(
      [&objective]() -> std::unique_ptr<ProfileObjective> {
        return std::make_unique<FunctionObjective>(objective);
      },
      settings);
}

OptimizationResult multi_start_qfi(const ModelParams& params,
                                   const OptimizerSettings& settings) {
  return multi_start(
      [&params]() -> std::unique_ptr<ProfileObjective> {
        return std::make_unique<QfiObjective>(params);
      },
      settings);
}

OptimizationResult multi_start_cfi(const ModelParams& params,
                                   const NoiseModel& noise,
                                   const OptimizerSettings& settings) {
  OptimizationResult result = multi_start(
      [&]() -> std::unique_ptr<ProfileObjective> {
        return std::make_unique<CfiObjective>(params, noise, settings.phase_grid);
      },
      settings);
  CfiObjective best_eval(params, noise, settings.phase_grid);
  result.phase_offset = best_eval.phase_optimum(result.best_profile).phi;
  return result;
}

}  // namespace spinctl
