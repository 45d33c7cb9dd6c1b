#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "phi43/error.hpp"
#include "phi43/paracontrolled.hpp"
#include "phi43/stochastic.hpp"

namespace phi43 {

enum class Study { renorm_scaling, ou_law, block_variance, enhanced_norms, converge, simulate };
enum class BlockObject { u1_diff, wick2_diff, u2_diff };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::renorm_scaling: return "renorm-scaling";
    case Study::ou_law: return "ou-law";
    case Study::block_variance: return "block-variance";
    case Study::enhanced_norms: return "enhanced-norms";
    case Study::converge: return "converge";
    case Study::simulate: return "simulate";
  }
  return "unknown";
}

inline const char* to_string(BlockObject o) {
  switch (o) {
    case BlockObject::u1_diff: return "u1_diff";
    case BlockObject::wick2_diff: return "wick2_diff";
    case BlockObject::u2_diff: return "u2_diff";
  }
  return "unknown";
}

inline const char* to_string(Variant v) { return v == Variant::lattice ? "lattice" : "galerkin"; }

inline Study parse_study(const std::string& s) {
  for (Study v : {Study::renorm_scaling, Study::ou_law, Study::block_variance, Study::enhanced_norms,
                  Study::converge, Study::simulate})
    if (s == to_string(v)) return v;
  throw Error(Errc::invalid_parameter, "unknown study '" + s + "'");
}

inline BlockObject parse_block_object(const std::string& s) {
  for (BlockObject v : {BlockObject::u1_diff, BlockObject::wick2_diff, BlockObject::u2_diff})
    if (s == to_string(v)) return v;
  throw Error(Errc::invalid_parameter, "unknown block object '" + s + "'");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "lattice") return Variant::lattice;
  if (s == "galerkin") return Variant::galerkin;
  throw Error(Errc::invalid_parameter, "unknown variant '" + s + "'");
}

/// Experiment parameters. Every field has a flat JSON key of the same name;
/// analysis exponents use "analysis.z" and so on.
struct StudyConfig {
  Study study = Study::converge;
  std::vector<int> N_list{2, 4, 8};
  int N_ref = 16;
  double T = 0.1;
  double dt = 2e-4;
  int samples = 20;
  std::uint64_t seed = 1;
  AnalysisParams analysis;
  double L = 50.0;
  std::string output = "results";

  // dynamics
  Variant reference = Variant::galerkin;
  int substeps = 1;
  int monitor_every = 25;
  int init_band = 2;
  double init_amplitude = 0.25;
  bool renormalize = true;
  int working_factor = 3;
  bool save_fields = false;

  // diagnostics
  BlockObject object = BlockObject::u1_diff;
  double block_time = 0.5;
  int probes = 8;
  double lag = 0.05;
  double norm_delta = 0.4;
  double continuum_scale = 1.0;  // heat-symbol scale of the barred constants in the renorm table

  void validate() const {
    require(!N_list.empty(), Errc::invalid_parameter, "N_list must be nonempty");
    for (int N : N_list) require(N >= 1, Errc::invalid_parameter, "every N must be >= 1");
    require(N_ref >= 1, Errc::invalid_parameter, "N_ref must be >= 1");
    require(T > 0.0 && dt > 0.0 && dt <= T, Errc::invalid_parameter, "need 0 < dt <= T");
    require(samples >= 1, Errc::invalid_parameter, "samples must be >= 1");
    require(L > 0.0, Errc::invalid_parameter, "L must be > 0");
    require(substeps >= 1 && monitor_every >= 1, Errc::invalid_parameter, "substeps and monitor_every must be >= 1");
    require(init_band >= 0 && init_amplitude >= 0.0, Errc::invalid_parameter, "bad initial data parameters");
    require(working_factor >= 1, Errc::invalid_parameter, "working_factor must be >= 1");
    require(block_time > 0.0 && probes >= 1 && lag > 0.0, Errc::invalid_parameter,
            "block_time, probes and lag must be positive");
    require(norm_delta > 0.0 && continuum_scale > 0.0, Errc::invalid_parameter,
            "norm_delta and continuum_scale must be positive");
    analysis.validate();
  }
};

/// Defaults of each study, matching the documented runs.
inline StudyConfig defaults_for(Study s) {
  StudyConfig c;
  c.study = s;
  switch (s) {
    case Study::renorm_scaling:
      c.N_list = {4, 8, 16, 32};
      c.samples = 1;
      break;
    case Study::ou_law:
      c.N_list = {1, 2, 4};
      c.samples = 4000;
      break;
    case Study::block_variance:
      c.N_list = {4, 8, 16};
      c.N_ref = 32;
      c.samples = 500;
      c.T = 0.5;
      c.dt = 0.005;
      break;
    case Study::enhanced_norms:
      c.N_list = {4, 8};
      c.samples = 200;
      c.T = 0.5;
      c.dt = 0.005;
      break;
    case Study::converge:
      break;
    case Study::simulate:
      c.N_list = {4};
      c.samples = 1;
      break;
  }
  return c;
}

inline nlohmann::json to_json(const StudyConfig& c) {
  nlohmann::json j;
  j["study"] = to_string(c.study);
  j["N_list"] = c.N_list;
  j["N_ref"] = c.N_ref;
  j["T"] = c.T;
  j["dt"] = c.dt;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["L"] = c.L;
  j["output"] = c.output;
  j["analysis.z"] = c.analysis.z;
  j["analysis.delta"] = c.analysis.delta;
  j["analysis.beta"] = c.analysis.beta;
  j["analysis.kappa"] = c.analysis.kappa;
  j["analysis.gamma"] = c.analysis.gamma;
  j["analysis.rho"] = c.analysis.rho;
  j["reference"] = to_string(c.reference);
  j["substeps"] = c.substeps;
  j["monitor_every"] = c.monitor_every;
  j["init_band"] = c.init_band;
  j["init_amplitude"] = c.init_amplitude;
  j["renormalize"] = c.renormalize;
  j["working_factor"] = c.working_factor;
  j["save_fields"] = c.save_fields;
  j["object"] = to_string(c.object);
  j["block_time"] = c.block_time;
  j["probes"] = c.probes;
  j["lag"] = c.lag;
  j["norm_delta"] = c.norm_delta;
  j["continuum_scale"] = c.continuum_scale;
  return j;
}

/// Overlays the keys present in j onto c. Unknown keys and wrong types are rejected.
inline void apply_json(StudyConfig& c, const nlohmann::json& j) {
  require(j.is_object(), Errc::invalid_parameter, "config must be a JSON object");
  const std::set<std::string> known = [] {
    std::set<std::string> k;
    const auto defaults = to_json(StudyConfig{});
    for (const auto& [key, v] : defaults.items()) k.insert(key);
    k.insert("N");
    return k;
  }();
  for (const auto& [key, v] : j.items())
    require(known.count(key) > 0, Errc::invalid_parameter, "unknown config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    if (j.contains("study")) c.study = parse_study(j.at("study").get<std::string>());
    if (j.contains("N")) c.N_list = {j.at("N").get<int>()};
    get("N_list", c.N_list);
    get("N_ref", c.N_ref);
    get("T", c.T);
    get("dt", c.dt);
    get("samples", c.samples);
    get("seed", c.seed);
    get("L", c.L);
    get("output", c.output);
    get("analysis.z", c.analysis.z);
    get("analysis.delta", c.analysis.delta);
    get("analysis.beta", c.analysis.beta);
    get("analysis.kappa", c.analysis.kappa);
    get("analysis.gamma", c.analysis.gamma);
    get("analysis.rho", c.analysis.rho);
    if (j.contains("reference")) c.reference = parse_variant(j.at("reference").get<std::string>());
    get("substeps", c.substeps);
    get("monitor_every", c.monitor_every);
    get("init_band", c.init_band);
    get("init_amplitude", c.init_amplitude);
    get("renormalize", c.renormalize);
    get("working_factor", c.working_factor);
    get("save_fields", c.save_fields);
    if (j.contains("object")) c.object = parse_block_object(j.at("object").get<std::string>());
    get("block_time", c.block_time);
    get("probes", c.probes);
    get("lag", c.lag);
    get("norm_delta", c.norm_delta);
    get("continuum_scale", c.continuum_scale);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_parameter, std::string("config value has the wrong type: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::invalid_parameter, "cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_parameter, "cannot parse config file '" + path + "': " + e.what());
  }
}

}  // namespace phi43
