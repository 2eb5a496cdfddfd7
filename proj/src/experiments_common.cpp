#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "elastobeam/parallel.hpp"
#include "elastobeam/simd.hpp"
#include "experiments_detail.hpp"

namespace elastobeam {

namespace fs = std::filesystem;
using Eigen::Vector3d;
using nlohmann::json;

namespace detail {

Params::Params(const json& j, std::set<std::string> allowed) : j_(j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  allowed.insert("medium");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

const json& Params::raw(const std::string& key) const { return j_.at(key); }

double Params::num(const std::string& key, double def) const {
  if (!has(key)) return def;
  if (!j_[key].is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j_[key].get<double>();
}

double Params::positive(const std::string& key, double def) const {
  const double v = num(key, def);
  if (!(v > 0.0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

int Params::integer(const std::string& key, int def) const {
  if (!has(key)) return def;
  if (!j_[key].is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j_[key].get<int>();
}

std::string Params::str(const std::string& key, const std::string& def) const {
  if (!has(key)) return def;
  if (!j_[key].is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j_[key].get<std::string>();
}

Vector3d as_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be an array of three numbers");
  Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ConfigError(what + " must be an array of three numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Vector3d Params::vec3(const std::string& key, const Vector3d& def) const {
  return has(key) ? as_vec3(j_[key], "config key '" + key + "'") : def;
}

std::vector<double> Params::list(const std::string& key, const std::vector<double>& def) const {
  if (!has(key)) return def;
  const json& a = j_[key];
  if (!a.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const json& e : a) {
    if (!e.is_number()) throw ConfigError("config key '" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<Vector3d> Params::vec3_list(const std::string& key, const std::vector<Vector3d>& def) const {
  if (!has(key)) return def;
  const json& a = j_[key];
  if (!a.is_array()) throw ConfigError("config key '" + key + "' must be an array of 3-vectors");
  std::vector<Vector3d> out;
  for (const json& e : a) out.push_back(as_vec3(e, "entries of config key '" + key + "'"));
  return out;
}

MaterialModel load_medium(const ExperimentContext& ctx, const Params& p, bool require_valid) {
  const std::string rel = p.str("medium", "");
  if (rel.empty()) throw ConfigError("config key 'medium' (path to a medium file) is required");
  fs::path path(rel);
  if (path.is_relative()) path = ctx.config_dir / path;
  try {
    MaterialModel m = MaterialModel::load(path.string());
    if (require_valid) {
      const ValidationReport v = m.validate();
      if (!v.pass) throw ConfigError("medium failed validation: " + v.reason);
    }
    return m;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("cannot load medium '" + path.string() + "': " + e.what());
  }
}

WaveMode parse_mode(const std::string& s) {
  if (s == "P") return WaveMode::P;
  if (s == "S") return WaveMode::S;
  throw ConfigError("mode must be \"P\" or \"S\"");
}

Check make_check(const std::string& name, double value, double threshold, bool pass) {
  return {name, value, threshold, pass};
}

std::ofstream open_output(const ExperimentContext& ctx, ExperimentResult& r, const std::string& name) {
  std::ofstream f(ctx.out_dir / name);
  if (!f) throw std::runtime_error("cannot write " + (ctx.out_dir / name).string());
  f << std::setprecision(17);
  r.outputs.push_back(name);
  return f;
}

}  // namespace detail

bool ExperimentResult::passed() const {
  for (const Check& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"validate",      "trace",     "riccati-check", "beam-residual",
                                              "recover-ab",    "recover-c", "transform"};
  return names;
}

ExperimentResult run_experiment(const std::string& name, const ExperimentContext& ctx) {
  if (name == "validate") return detail::run_validate(ctx);
  if (name == "trace") return detail::run_trace(ctx);
  if (name == "riccati-check") return detail::run_riccati_check(ctx);
  if (name == "beam-residual") return detail::run_beam_residual(ctx);
  if (name == "recover-ab") return detail::run_recover_ab(ctx);
  if (name == "recover-c") return detail::run_recover_c(ctx);
  if (name == "transform") return detail::run_transform(ctx);
  throw ConfigError("unknown experiment '" + name + "'");
}

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json check_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}};
}

}  // namespace

int run_cli(const std::string& experiment, const fs::path& config_path, const fs::path& out_dir, unsigned seed) {
  const auto start = std::chrono::steady_clock::now();
  json manifest;
  manifest["tool"] = "elastobeam";
  manifest["version"] = ELASTOBEAM_VERSION;
  manifest["experiment"] = experiment;
  manifest["seed"] = seed;
  manifest["config_path"] = config_path.string();
  manifest["build"] = {{"compiler", __VERSION__},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"simd", simd::to_string(simd::active_isa())},
                       {"threads", thread_count()}};
  const std::string started = utc_now();

  int status = 0;
  ExperimentResult result;
  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw std::runtime_error("cannot create output directory " + out_dir.string());
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path.string());
    json config;
    try {
      config = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    manifest["config"] = config;
    ExperimentContext ctx{config, config_path.parent_path(), out_dir, seed};
    if (ctx.config_dir.empty()) ctx.config_dir = ".";
    if (config.is_object() && config.contains("medium") && config["medium"].is_string()) {
      fs::path mp(config["medium"].get<std::string>());
      if (mp.is_relative()) mp = ctx.config_dir / mp;
      std::ifstream ms(mp);
      if (ms) {
        try {
          manifest["medium"] = json::parse(ms);
        } catch (const json::exception&) {
        }
      }
    }
    result = run_experiment(experiment, ctx);
    status = result.passed() ? 0 : 1;
    manifest["status"] = status == 0 ? "ok" : "check_failure";
  } catch (const ConfigError& e) {
    status = 2;
    manifest["status"] = "config_error";
    manifest["error"] = e.what();
  } catch (const std::exception& e) {
    status = 3;
    manifest["status"] = "runtime_error";
    manifest["error"] = e.what();
  }
  manifest["exit_status"] = status;
  manifest["checks"] = json::array();
  for (const Check& c : result.checks) manifest["checks"].push_back(check_json(c));
  manifest["results"] = result.results;
  manifest["outputs"] = result.outputs;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["timestamp"] = {{"started_utc", started}, {"wall_time_s", wall}};

  std::ofstream mf(out_dir / "manifest.json");
  if (mf) {
    mf << manifest.dump(2) << '\n';
  } else if (status == 0 || status == 1) {
    status = 3;
  }
  if (status >= 2) std::cerr << "elastobeam: " << manifest["error"].get<std::string>() << '\n';
  for (const Check& c : result.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " threshold=" << c.threshold << '\n';
  }
  return status;
}

}  // namespace elastobeam
