#include "spinctl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace spinctl {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed,
                  const std::set<std::string>& required = {}) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  for (const std::string& key : required) {
    if (!j.contains(key)) {
      throw ConfigError(where + ": missing key '" + key + "'");
    }
  }
}

double get_number(const json& j, const std::string& where, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  if (!j.at(key).is_number()) {
    throw ConfigError(where + ": '" + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& where, const std::string& key,
            std::optional<int> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(where + ": '" + key + "' must be an integer");
  }
  return j.at(key).get<int>();
}

ModelParams parse_model(const json& j) {
  require_keys(j, "model", {"n_particles", "chi_T", "omega_T"},
               {"n_particles", "chi_T"});
  ModelParams model;
  model.n_particles = get_int(j, "model", "n_particles");
  model.chi_T = get_number(j, "model", "chi_T");
  model.omega_T = get_number(j, "model", "omega_T", 0.0);
  if (model.n_particles < 1) throw ConfigError("model: n_particles must be >= 1");
  if (model.chi_T < 0) throw ConfigError("model: chi_T must be >= 0");
  return model;
}

OatScheme parse_oat(const json& j) {
  require_keys(j, "oat", {"tau_prep", "theta0"}, {"tau_prep", "theta0"});
  OatScheme oat;
  oat.tau_prep = get_number(j, "oat", "tau_prep");
  oat.theta0 = get_number(j, "oat", "theta0");
  if (!(oat.tau_prep > 0.0 && oat.tau_prep < 1.0)) {
    throw ConfigError("oat: tau_prep must lie strictly inside (0,1)");
  }
  return oat;
}

ControlProfile parse_profile(const json& j, const std::string& where) {
  require_keys(j, where, {"segments", "pulses"}, {"segments"});
  ControlProfile profile;
  if (!j.at("segments").is_array() || j.at("segments").empty()) {
    throw ConfigError(where + ": segments must be a non-empty array");
  }
  profile.segments = j.at("segments").get<std::vector<double>>();
  if (j.contains("pulses")) {
    if (!j.at("pulses").is_array()) {
      throw ConfigError(where + ": pulses must be an array");
    }
    for (const json& p : j.at("pulses")) {
      require_keys(p, where + ".pulses[]", {"time", "angle"}, {"time", "angle"});
      Pulse pulse;
      pulse.time = get_number(p, where + ".pulses[]", "time");
      pulse.angle = get_number(p, where + ".pulses[]", "angle");
      if (pulse.time < 0.0 || pulse.time > 1.0) {
        throw ConfigError(where + ": pulse time outside [0,1]");
      }
      if (!profile.pulses.empty() && pulse.time < profile.pulses.back().time) {
        throw ConfigError(where + ": pulse times must be sorted");
      }
      profile.pulses.push_back(pulse);
    }
  }
  return profile;
}

OptimizerSettings parse_optimizer(const json& j, const std::string& where) {
  require_keys(j, where,
               {"n_segments", "n_restarts", "lambda_bound", "fd_step",
                "initial_step", "backtrack", "growth", "tol", "max_iters",
                "phase_grid"});
  OptimizerSettings s;
  s.n_segments = get_int(j, where, "n_segments", s.n_segments);
  s.n_restarts = get_int(j, where, "n_restarts", s.n_restarts);
  s.lambda_bound = get_number(j, where, "lambda_bound", s.lambda_bound);
  s.fd_step = get_number(j, where, "fd_step", s.fd_step);
  s.step_rule.initial = get_number(j, where, "initial_step", s.step_rule.initial);
  s.step_rule.backtrack = get_number(j, where, "backtrack", s.step_rule.backtrack);
  s.step_rule.growth = get_number(j, where, "growth", s.step_rule.growth);
  s.tol = get_number(j, where, "tol", s.tol);
  s.max_iters = get_int(j, where, "max_iters", s.max_iters);
  s.phase_grid = get_int(j, where, "phase_grid", s.phase_grid);
  return s;
}

HusimiConfig parse_husimi(const json& j) {
  require_keys(j, "husimi", {"n_theta", "n_phi", "times", "base", "oat", "profile"},
               {"times", "base"});
  HusimiConfig h;
  h.n_theta = get_int(j, "husimi", "n_theta", h.n_theta);
  h.n_phi = get_int(j, "husimi", "n_phi", h.n_phi);
  if (h.n_theta < 1 || h.n_phi < 1) {
    throw ConfigError("husimi: grid sizes must be >= 1");
  }
  if (!j.at("times").is_array() || j.at("times").empty()) {
    throw ConfigError("husimi: times must be a non-empty array");
  }
  h.times = j.at("times").get<std::vector<double>>();
  for (size_t i = 0; i < h.times.size(); ++i) {
    if (h.times[i] < 0.0 || h.times[i] > 1.0 ||
        (i > 0 && h.times[i] < h.times[i - 1])) {
      throw ConfigError("husimi: times must be sorted, in [0,1]");
    }
  }
  const std::string base = j.at("base").get<std::string>();
  if (base == "oat") {
    h.base.kind = SchemeKind::Oat;
    if (!j.contains("oat")) throw ConfigError("husimi: base 'oat' needs an oat block");
    h.base.oat = parse_oat(j.at("oat"));
  } else if (base == "tnt") {
    h.base.kind = SchemeKind::Tnt;
  } else if (base == "profile") {
    h.base.kind = SchemeKind::Profile;
    if (!j.contains("profile")) {
      throw ConfigError("husimi: base 'profile' needs a profile block");
    }
    h.base.profile = parse_profile(j.at("profile"), "husimi.profile");
  } else {
    throw ConfigError("husimi: base must be oat, tnt or profile");
  }
  return h;
}

OutputConfig parse_output(const json& j) {
  require_keys(j, "output", {"dir", "formats"});
  OutputConfig out;
  if (j.contains("dir")) out.dir = j.at("dir").get<std::string>();
  if (j.contains("formats")) {
    if (!j.at("formats").is_array()) {
      throw ConfigError("output: formats must be an array");
    }
    out.csv = false;
    out.json_files = false;
    for (const json& f : j.at("formats")) {
      const std::string name = f.get<std::string>();
      if (name == "csv") {
        out.csv = true;
      } else if (name == "json") {
        out.json_files = true;
      } else {
        throw ConfigError("output: format must be csv or json");
      }
    }
    if (!out.csv && !out.json_files) {
      throw ConfigError("output: formats must not be empty");
    }
  }
  return out;
}

}  // namespace

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Oat: return "oat";
    case SchemeKind::Tnt: return "tnt";
    case SchemeKind::Profile: return "profile";
    case SchemeKind::OptimizeQfi: return "optimize-qfi";
    case SchemeKind::OptimizeCfi: return "optimize-cfi";
    case SchemeKind::Husimi: return "husimi";
    case SchemeKind::SweepChi: return "sweep-chi";
  }
  throw std::logic_error("unreachable scheme kind");
}

SchemeKind scheme_from_string(const std::string& name) {
  if (name == "oat") return SchemeKind::Oat;
  if (name == "tnt") return SchemeKind::Tnt;
  if (name == "profile") return SchemeKind::Profile;
  if (name == "optimize-qfi") return SchemeKind::OptimizeQfi;
  if (name == "optimize-cfi") return SchemeKind::OptimizeCfi;
  if (name == "husimi") return SchemeKind::Husimi;
  if (name == "sweep-chi") return SchemeKind::SweepChi;
  throw ConfigError("unknown scheme '" + name + "'");
}

RunConfig parse_config(const nlohmann::json& j) {
  require_keys(j, "config",
               {"model", "scheme", "oat", "tnt", "profile", "optimizer",
                "noise", "husimi", "sweep", "n_samples", "seed", "threads",
                "output"},
               {"model", "scheme"});

  RunConfig config;
  config.model = parse_model(j.at("model"));
  if (!j.at("scheme").is_string()) {
    throw ConfigError("scheme must be a string");
  }
  config.scheme = scheme_from_string(j.at("scheme").get<std::string>());

  // Exactly one scheme block, and it must match the declared scheme.
  const char* block_names[] = {"oat", "tnt", "profile", "optimizer", "husimi", "sweep"};
  std::string present;
  int n_present = 0;
  for (const char* name : block_names) {
    if (j.contains(name)) {
      ++n_present;
      present = name;
    }
  }
  std::string expected;
  switch (config.scheme) {
    case SchemeKind::Oat: expected = "oat"; break;
    case SchemeKind::Tnt: expected = "tnt"; break;
    case SchemeKind::Profile: expected = "profile"; break;
    case SchemeKind::OptimizeQfi:
    case SchemeKind::OptimizeCfi: expected = "optimizer"; break;
    case SchemeKind::Husimi: expected = "husimi"; break;
    case SchemeKind::SweepChi: expected = "sweep"; break;
  }
  if (n_present > 1) {
    throw ConfigError("exactly one scheme block must be present");
  }
  if (n_present == 1 && present != expected) {
    throw ConfigError("scheme '" + to_string(config.scheme) +
                      "' does not match block '" + present + "'");
  }
  if (n_present == 0 && config.scheme != SchemeKind::Tnt) {
    throw ConfigError("scheme '" + to_string(config.scheme) +
                      "' needs a '" + expected + "' block");
  }

  switch (config.scheme) {
    case SchemeKind::Oat:
      config.oat = parse_oat(j.at("oat"));
      break;
    case SchemeKind::Tnt:
      if (j.contains("tnt")) require_keys(j.at("tnt"), "tnt", {});
      break;
    case SchemeKind::Profile:
      config.profile = parse_profile(j.at("profile"), "profile");
      break;
    case SchemeKind::OptimizeQfi:
    case SchemeKind::OptimizeCfi:
      config.optimizer = parse_optimizer(j.at("optimizer"), "optimizer");
      break;
    case SchemeKind::Husimi:
      config.husimi = parse_husimi(j.at("husimi"));
      break;
    case SchemeKind::SweepChi: {
      const json& sj = j.at("sweep");
      require_keys(sj, "sweep", {"chi_values", "optimizer"}, {"chi_values"});
      if (!sj.at("chi_values").is_array() || sj.at("chi_values").empty()) {
        throw ConfigError("sweep: chi_values must be a non-empty array");
      }
      config.sweep.chi_values = sj.at("chi_values").get<std::vector<double>>();
      for (double c : config.sweep.chi_values) {
        if (c < 0) throw ConfigError("sweep: chi_values must be >= 0");
      }
      if (sj.contains("optimizer")) {
        config.optimizer = parse_optimizer(sj.at("optimizer"), "sweep.optimizer");
      }
      break;
    }
  }

  if (j.contains("noise")) {
    const bool allowed = config.scheme == SchemeKind::Oat ||
                         config.scheme == SchemeKind::Tnt ||
                         config.scheme == SchemeKind::Profile ||
                         config.scheme == SchemeKind::OptimizeCfi;
    if (!allowed) {
      throw ConfigError("noise block is not used by scheme '" +
                        to_string(config.scheme) + "'");
    }
    require_keys(j.at("noise"), "noise", {"sigma"}, {"sigma"});
    const double sigma = get_number(j.at("noise"), "noise", "sigma");
    if (sigma < 0) throw ConfigError("noise: sigma must be >= 0");
    config.noise_sigma = sigma;
  }
  if (config.scheme == SchemeKind::OptimizeCfi && !config.noise_sigma) {
    throw ConfigError("optimize-cfi needs a noise block");
  }

  config.n_samples = get_int(j, "config", "n_samples", config.n_samples);
  if (config.n_samples < 2) throw ConfigError("n_samples must be >= 2");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) {
      throw ConfigError("seed must be an integer");
    }
    config.seed = j.at("seed").get<std::uint64_t>();
  }
  config.threads = get_int(j, "config", "threads", config.threads);
  if (config.threads < 0) throw ConfigError("threads must be >= 0");
  if (j.contains("output")) config.output = parse_output(j.at("output"));

  config.optimizer.rng_seed = config.seed;
  config.optimizer.threads = config.threads;
  return config;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["model"] = {{"n_particles", config.model.n_particles},
                {"chi_T", config.model.chi_T},
                {"omega_T", config.model.omega_T}};
  j["scheme"] = to_string(config.scheme);

  auto oat_json = [](const OatScheme& o) {
    return nlohmann::json{{"tau_prep", o.tau_prep}, {"theta0", o.theta0}};
  };
  auto profile_block = [](const ControlProfile& p) {
    nlohmann::json pulses = nlohmann::json::array();
    for (const Pulse& pulse : p.pulses) {
      pulses.push_back({{"time", pulse.time}, {"angle", pulse.angle}});
    }
    return nlohmann::json{{"segments", p.segments}, {"pulses", pulses}};
  };
  auto optimizer_block = [](const OptimizerSettings& s) {
    return nlohmann::json{{"n_segments", s.n_segments},
                          {"n_restarts", s.n_restarts},
                          {"lambda_bound", s.lambda_bound},
                          {"fd_step", s.fd_step},
                          {"initial_step", s.step_rule.initial},
                          {"backtrack", s.step_rule.backtrack},
                          {"growth", s.step_rule.growth},
                          {"tol", s.tol},
                          {"max_iters", s.max_iters},
                          {"phase_grid", s.phase_grid}};
  };

  switch (config.scheme) {
    case SchemeKind::Oat:
      j["oat"] = oat_json(config.oat);
      break;
    case SchemeKind::Tnt:
      j["tnt"] = nlohmann::json::object();
      break;
    case SchemeKind::Profile:
      j["profile"] = profile_block(config.profile);
      break;
    case SchemeKind::OptimizeQfi:
    case SchemeKind::OptimizeCfi:
      j["optimizer"] = optimizer_block(config.optimizer);
      break;
    case SchemeKind::Husimi: {
      nlohmann::json h{{"n_theta", config.husimi.n_theta},
                       {"n_phi", config.husimi.n_phi},
                       {"times", config.husimi.times},
                       {"base", to_string(config.husimi.base.kind)}};
      if (config.husimi.base.kind == SchemeKind::Oat) {
        h["oat"] = oat_json(config.husimi.base.oat);
      } else if (config.husimi.base.kind == SchemeKind::Profile) {
        h["profile"] = profile_block(config.husimi.base.profile);
      }
      j["husimi"] = h;
      break;
    }
    case SchemeKind::SweepChi:
      j["sweep"] = {{"chi_values", config.sweep.chi_values},
                    {"optimizer", optimizer_block(config.optimizer)}};
      break;
  }

  if (config.noise_sigma) j["noise"] = {{"sigma", *config.noise_sigma}};
  j["n_samples"] = config.n_samples;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  nlohmann::json formats = nlohmann::json::array();
  if (config.output.csv) formats.push_back("csv");
  if (config.output.json_files) formats.push_back("json");
  j["output"] = {{"dir", config.output.dir}, {"formats", formats}};
  return j;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

std::filesystem::path find_preset(const std::string& name,
                                  const std::filesystem::path& exe_dir) {
  if (name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
    throw ConfigError("preset name must be a bare name, not a path");
  }
  std::vector<std::filesystem::path> roots;
  if (const char* env = std::getenv("SPINCTL_PRESET_DIR")) {
    roots.emplace_back(env);
  }
  roots.emplace_back("configs");
  if (!exe_dir.empty()) {
    roots.push_back(exe_dir / "configs");
    roots.push_back(exe_dir.parent_path() / "configs");
  }
  for (const auto& root : roots) {
    const std::filesystem::path candidate = root / (name + ".json");
    std::error_code ec;
    if (std::filesystem::exists(candidate, ec)) return candidate;
  }
  throw ConfigError("preset '" + name + "' not found (looked for configs/" +
                    name + ".json)");
}

}  // namespace spinctl
