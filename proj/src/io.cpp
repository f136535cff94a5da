#include "spinctl/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace spinctl {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const CollectiveOperators& ops) {
  std::string out = "tau,fq_over_T2,f0,mean_x,mean_y,mean_z\n";
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const SpinMoments mom = moments(traj.states[i], ops);
    out += fmt(traj.times[i]) + "," + fmt(traj.fq[i]) + "," + fmt(traj.f0[i]) +
           "," + fmt(mom.mean_x) + "," + fmt(mom.mean_y) + "," +
           fmt(mom.mean_z) + "\n";
  }
  return out;
}

std::string profile_csv(const ControlProfile& profile) {
  const int n = static_cast<int>(profile.segments.size());
  std::string out = "segment_index,tau_start,tau_end,lambda\n";
  for (int k = 0; k < n; ++k) {
    out += std::to_string(k) + "," + fmt(k / static_cast<double>(n)) + "," +
           fmt((k + 1) / static_cast<double>(n)) + "," +
           fmt(profile.segments[k]) + "\n";
  }
  return out;
}

std::string distribution_csv(const MeasurementDistribution& raw,
                             const MeasurementDistribution& noisy,
                             double spin_j) {
  if (raw.probs.size() != noisy.probs.size()) {
    throw std::invalid_argument("distribution_csv: dimension mismatch");
  }
  std::string out = "m,P,dP,P_tilde,dP_tilde\n";
  for (int k = 0; k < raw.probs.size(); ++k) {
    out += fmt(k - spin_j) + "," + fmt(raw.probs[k]) + "," +
           fmt(raw.dprobs[k]) + "," + fmt(noisy.probs[k]) + "," +
           fmt(noisy.dprobs[k]) + "\n";
  }
  return out;
}

std::string husimi_csv(const std::vector<BlochDirection>& grid,
                       const std::vector<double>& values) {
  if (grid.size() != values.size()) {
    throw std::invalid_argument("husimi_csv: grid/value size mismatch");
  }
  std::string out = "theta,phi,Q\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    out += fmt(grid[i].theta) + "," + fmt(grid[i].phi) + "," + fmt(values[i]) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<ChiSweepRow>& rows) {
  std::string out = "chiT,fq_oat,fq_machine,ratio\n";
  for (const ChiSweepRow& r : rows) {
    out += fmt(r.chi_T) + "," + fmt(r.fq_oat) + "," + fmt(r.fq_machine) + "," +
           fmt(r.ratio) + "\n";
  }
  return out;
}

nlohmann::json husimi_json(int n_theta, int n_phi,
                           const std::vector<double>& values) {
  return nlohmann::json{
      {"n_theta", n_theta}, {"n_phi", n_phi}, {"values", values}};
}

nlohmann::json state_json(const DickeState& state) {
  nlohmann::json amps = nlohmann::json::array();
  for (int k = 0; k < state.amplitudes.size(); ++k) {
    amps.push_back({state.amplitudes[k].real(), state.amplitudes[k].imag()});
  }
  return nlohmann::json{{"n_particles", state.n_particles}, {"amplitudes", amps}};
}

nlohmann::json profile_json(const ControlProfile& profile) {
  nlohmann::json pulses = nlohmann::json::array();
  for (const Pulse& p : profile.pulses) {
    pulses.push_back({{"time", p.time}, {"angle", p.angle}});
  }
  return nlohmann::json{{"segments", profile.segments}, {"pulses", pulses}};
}

nlohmann::json scheme_report_json(const SchemeReport& report) {
  nlohmann::json j{{"fq_final", report.fq_final},
                   {"profile", profile_json(report.profile)}};
  if (report.fc_final) j["fc_final"] = *report.fc_final;
  if (report.phase_offset) j["phase_offset"] = *report.phase_offset;
  return j;
}

nlohmann::json optimizer_settings_json(const OptimizerSettings& s) {
  return nlohmann::json{{"n_segments", s.n_segments},
                        {"n_restarts", s.n_restarts},
                        {"lambda_bound", s.lambda_bound},
                        {"fd_step", s.fd_step},
                        {"initial_step", s.step_rule.initial},
                        {"backtrack", s.step_rule.backtrack},
                        {"growth", s.step_rule.growth},
                        {"tol", s.tol},
                        {"max_iters", s.max_iters},
                        {"phase_grid", s.phase_grid},
                        {"rng_seed", s.rng_seed},
                        {"threads", s.threads}};
}

nlohmann::json optimization_result_json(const OptimizationResult& result) {
  nlohmann::json restarts = nlohmann::json::array();
  for (const RestartRecord& r : result.restarts) {
    restarts.push_back({{"seed", r.seed},
                        {"init_segments", r.init_segments},
                        {"objective", r.objective},
                        {"iterations", r.iterations}});
  }
  nlohmann::json j{{"best_profile", profile_json(result.best_profile)},
                   {"best_objective", result.best_objective},
                   {"best_restart", result.best_restart},
                   {"restarts", restarts},
                   {"settings", optimizer_settings_json(result.settings)}};
  if (result.phase_offset) j["phase_offset"] = *result.phase_offset;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace spinctl
