// Run configuration: a small JSON schema covering model, posterior backend,
// experiment plan, and output location.
//
// Parsing is all-or-nothing: every problem in the file (unknown keys with
// nearest-key suggestions, type mismatches, out-of-range values) is
// collected into one ConfigError instead of failing at the first. The
// serializer emits a normalized form with defaults filled in; parsing that
// form and serializing again reproduces it byte for byte.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slt/experiments.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"

namespace slt {

struct RunConfig {
  int version = 1;
  std::string mode = "experiment";  // evaluate | experiment | sweep | oracle-check
  ModelConfig model;                // model.name required except for oracle-check
  Backend backend;
  int n = 200;
  int replicates = 50;
  double beta = 1.0;
  int test_size = 20000;
  bool compute_cv1 = false;
  double neff_floor_frac = 0.01;
  std::vector<int> n_sweep;
  bool free_energy = false;   // evaluate mode: also integrate the ladder
  bool save_ensemble = false; // evaluate mode: persist the ensemble
  std::string output_dir = "runs/out";
  std::uint64_t master_seed = 1;
};

// Parses a JSON document; throws ConfigError carrying every problem found.
RunConfig parse_config(const std::string& json_text);

// Reads and parses a config file (file errors also become ConfigError).
RunConfig load_config_file(const std::string& path);

// Normalized serialization: stable key order, defaults materialized.
// parse_config(config_to_json(c)) round-trips to the same bytes.
std::string config_to_json(const RunConfig& cfg);

ExperimentPlan plan_from_config(const RunConfig& cfg);

}  // namespace slt
