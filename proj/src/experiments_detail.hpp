#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "elastobeam/experiments.hpp"
#include "elastobeam/medium.hpp"

namespace elastobeam::detail {

/// Typed, key-checked view of an experiment configuration object.
class Params {
 public:
  Params(const nlohmann::json& j, std::set<std::string> allowed);

  bool has(const std::string& key) const { return j_.contains(key); }
  double num(const std::string& key, double def) const;
  double positive(const std::string& key, double def) const;
  int integer(const std::string& key, int def) const;
  std::string str(const std::string& key, const std::string& def) const;
  Eigen::Vector3d vec3(const std::string& key, const Eigen::Vector3d& def) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& def) const;
  std::vector<Eigen::Vector3d> vec3_list(const std::string& key, const std::vector<Eigen::Vector3d>& def) const;
  const nlohmann::json& raw(const std::string& key) const;

 private:
  const nlohmann::json& j_;
};

MaterialModel load_medium(const ExperimentContext& ctx, const Params& p, bool require_valid = true);
WaveMode parse_mode(const std::string& s);
Eigen::Vector3d as_vec3(const nlohmann::json& j, const std::string& what);

Check make_check(const std::string& name, double value, double threshold, bool pass);
/// Opens a CSV in the output directory and records it in the result.
std::ofstream open_output(const ExperimentContext& ctx, ExperimentResult& r, const std::string& name);

ExperimentResult run_validate(const ExperimentContext& ctx);
ExperimentResult run_trace(const ExperimentContext& ctx);
ExperimentResult run_riccati_check(const ExperimentContext& ctx);
ExperimentResult run_beam_residual(const ExperimentContext& ctx);
ExperimentResult run_recover_ab(const ExperimentContext& ctx);
ExperimentResult run_recover_c(const ExperimentContext& ctx);
ExperimentResult run_transform(const ExperimentContext& ctx);

}  // namespace elastobeam::detail
