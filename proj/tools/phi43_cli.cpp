// phi43: study drivers. Exit 0 on success (blow-ups included), 1 on bad configuration, 2 on runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phi43/experiments.hpp"
#include "phi43/field_io.hpp"

namespace {

using namespace phi43;

struct Overrides {
  std::string config;
  std::vector<int> N;
  std::optional<int> N_ref, samples, threads;
  std::optional<double> T, dt, z, L;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, object, reference;
};

void add_flags(CLI::App* sub, Overrides& o, Study s) {
  sub->add_option("--config", o.config, "JSON config file (flat keys)");
  sub->add_option("--N", o.N, "lattice cut(s), overrides N_list");
  sub->add_option("--N-ref", o.N_ref, "reference cut");
  sub->add_option("--T", o.T, "final time");
  sub->add_option("--dt", o.dt, "time step");
  sub->add_option("--samples", o.samples, "Monte Carlo replicas");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--z", o.z, "negative regularity of the error norm");
  sub->add_option("--L", o.L, "blow-up threshold");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.threads, "worker threads (default: PHI43_THREADS or 1)");
  if (s == Study::block_variance) sub->add_option("--object", o.object, "u1_diff, wick2_diff or u2_diff");
  if (s == Study::converge || s == Study::simulate || s == Study::block_variance)
    sub->add_option("--reference", o.reference, "galerkin or lattice");
}

StudyConfig resolve(Study s, const Overrides& o) {
  auto c = defaults_for(s);
  if (!o.config.empty()) apply_json(c, read_json_file(o.config));
  c.study = s;
  if (!o.N.empty()) c.N_list = o.N;
  if (o.N_ref) c.N_ref = *o.N_ref;
  if (o.T) c.T = *o.T;
  if (o.dt) c.dt = *o.dt;
  if (o.samples) c.samples = *o.samples;
  if (o.seed) c.seed = *o.seed;
  if (o.z) c.analysis.z = *o.z;
  if (o.L) c.L = *o.L;
  if (o.out) c.output = *o.out;
  if (o.object) c.object = parse_block_object(*o.object);
  if (o.reference) c.reference = parse_variant(*o.reference);
  c.validate();
  return c;
}

const char* command_name(Study s) {
  switch (s) {
    case Study::renorm_scaling: return "renorm";
    case Study::ou_law: return "ou-law";
    case Study::block_variance: return "blocks";
    case Study::enhanced_norms: return "enhance";
    case Study::converge: return "converge";
    case Study::simulate: return "simulate";
  }
  return "?";
}

int run(Study s, const Overrides& o) {
  const auto cfg = resolve(s, o);
  const int threads = resolve_threads(o.threads.value_or(0));
  const auto json = to_json(cfg);
  auto table_json = json;
  table_json.erase("output");  // result files do not depend on where they are written
  StudyReport rep;
  CoupledResult sim;
  switch (s) {
    case Study::renorm_scaling: rep = renorm_scaling_study(cfg); break;
    case Study::ou_law: rep = ou_law_study(cfg, threads); break;
    case Study::block_variance: rep = block_variance_study(cfg, threads); break;
    case Study::enhanced_norms: rep = enhanced_norms_study(cfg, threads); break;
    case Study::converge: rep = convergence_study(cfg, threads); break;
    case Study::simulate: rep = simulate_study(cfg, &sim); break;
  }
  const std::filesystem::path dir(cfg.output);
  std::vector<std::filesystem::path> outputs;
  for (const auto& t : rep.tables) outputs.push_back(write_table(dir, t, table_json));
  if (s == Study::simulate && cfg.save_fields) {
    std::filesystem::create_directories(dir / "fields");
    const auto ref = dir / "fields" / ("reference_N" + std::to_string(cfg.N_ref) + ".phi43");
    io::save_spectral(ref.string(), sim.reference_field, cfg.N_ref);
    outputs.push_back(ref);
    for (const auto& l : sim.lattice) {
      const auto p = dir / "fields" / ("lattice_N" + std::to_string(l.N) + ".phi43");
      io::save_spectral(p.string(), l.final_field, l.N);
      outputs.push_back(p);
    }
  }
  std::string summary;
  for (const auto& line : rep.summary) summary += line + "\n";
  const auto sp = dir / "summary.txt";
  write_text_file(sp, summary);
  outputs.push_back(sp);
  write_manifest(dir, command_name(s), json, outputs, threads);
  std::cout << summary;
  std::cout << "results written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phi43 lattice/continuum study driver"};
  app.require_subcommand(1);
  const std::vector<Study> studies{Study::renorm_scaling, Study::ou_law,   Study::block_variance,
                                   Study::enhanced_norms, Study::converge, Study::simulate};
  std::vector<Overrides> over(studies.size());
  std::vector<CLI::App*> subs;
  const char* help[] = {"renormalisation constants and their scaling",
                        "stationary OU law per mode",
                        "Littlewood-Paley block variance of coupled differences",
                        "enhanced-noise norms and the renormalised resonant product",
                        "coupled convergence against the reference",
                        "one coupled trajectory"};
  for (std::size_t i = 0; i < studies.size(); ++i) {
    subs.push_back(app.add_subcommand(command_name(studies[i]), help[i]));
    add_flags(subs.back(), over[i], studies[i]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  for (std::size_t i = 0; i < studies.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return run(studies[i], over[i]);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      const bool config = e.code() == Errc::invalid_parameter || e.code() == Errc::unsupported_band;
      return config ? 1 : 2;
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "error: io-failure: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
