#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spinctl/optimizer.hpp"
#include "spinctl/protocols.hpp"

namespace spinctl {

// Raised for malformed or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a run violates a documented invariant (CLI exit code 3).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SchemeKind { Oat, Tnt, Profile, OptimizeQfi, OptimizeCfi, Husimi, SweepChi };

std::string to_string(SchemeKind kind);
SchemeKind scheme_from_string(const std::string& name);

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool json_files = true;
};

// The underlying run whose snapshots a husimi command renders.
struct HusimiBase {
  SchemeKind kind = SchemeKind::Oat;  // Oat, Tnt or Profile
  OatScheme oat;
  ControlProfile profile;
};

struct HusimiConfig {
  int n_theta = 100;
  int n_phi = 100;
  std::vector<double> times{1.0};
  HusimiBase base;
};

struct SweepConfig {
  std::vector<double> chi_values;
};

struct RunConfig {
  ModelParams model;
  SchemeKind scheme = SchemeKind::Oat;
  OatScheme oat;                       // scheme == Oat
  ControlProfile profile;              // scheme == Profile
  OptimizerSettings optimizer;         // scheme == Optimize* / SweepChi
  std::optional<double> noise_sigma;   // oat/tnt/profile/optimize-cfi
  HusimiConfig husimi;                 // scheme == Husimi
  SweepConfig sweep;                   // scheme == SweepChi
  int n_samples = 201;
  std::uint64_t seed = 1234;
  int threads = 0;
  OutputConfig output;
};

// Strict parser: unknown keys, missing scheme blocks, or more than one
// scheme block raise ConfigError.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config_file(const std::filesystem::path& path);

// Searches SPINCTL_PRESET_DIR, ./configs, and configs/ next to the
// executable (and one level up) for "<name>.json".
std::filesystem::path find_preset(const std::string& name,
                                  const std::filesystem::path& exe_dir);

}  // namespace spinctl
