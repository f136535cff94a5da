#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "spinctl/dynamics.hpp"
#include "spinctl/measurement.hpp"
#include "spinctl/optimizer.hpp"
#include "spinctl/protocols.hpp"

namespace spinctl {

// CSV emitters. Doubles are printed with %.17g so files round-trip exactly.

// tau,fq_over_T2,f0,mean_x,mean_y,mean_z
std::string trajectory_csv(const Trajectory& traj, const CollectiveOperators& ops);

// segment_index,tau_start,tau_end,lambda
std::string profile_csv(const ControlProfile& profile);

// m,P,dP,P_tilde,dP_tilde
std::string distribution_csv(const MeasurementDistribution& raw,
                             const MeasurementDistribution& noisy, double spin_j);

// theta,phi,Q
std::string husimi_csv(const std::vector<BlochDirection>& grid,
                       const std::vector<double>& values);

// chiT,fq_oat,fq_machine,ratio
struct ChiSweepRow {
  double chi_T = 0.0;
  double fq_oat = 0.0;
  double fq_machine = 0.0;
  double ratio = 0.0;
};
std::string sweep_csv(const std::vector<ChiSweepRow>& rows);

// JSON emitters.
nlohmann::json husimi_json(int n_theta, int n_phi, const std::vector<double>& values);
nlohmann::json state_json(const DickeState& state);  // arrays of (re, im) pairs
nlohmann::json profile_json(const ControlProfile& profile);
nlohmann::json scheme_report_json(const SchemeReport& report);
nlohmann::json optimization_result_json(const OptimizationResult& result);
nlohmann::json optimizer_settings_json(const OptimizerSettings& settings);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace spinctl
