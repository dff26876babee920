#include "slt/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace slt {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

int levenshtein(const std::string& a, const std::string& b) {
  const std::size_t la = a.size(), lb = b.size();
  std::vector<int> prev(lb + 1), cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= lb; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

std::string suggest(const std::string& got,
                    const std::vector<std::string>& known) {
  int best = 4;  // only suggest close matches
  std::string pick;
  for (const auto& k : known) {
    const int d = levenshtein(got, k);
    if (d < best) {
      best = d;
      pick = k;
    }
  }
  return pick.empty() ? std::string() : " (did you mean '" + pick + "'?)";
}

struct Parser {
  std::vector<std::string> problems;

  void fail(const std::string& msg) { problems.push_back(msg); }

  void check_keys(const json& obj, const std::string& where,
                  const std::vector<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
        fail("unknown key '" + it.key() + "' in " + where +
             suggest(it.key(), allowed));
    }
  }

  template <class T>
  bool get(const json& obj, const std::string& where, const char* key, T& out,
           const char* type_name, bool (json::*is_type)() const) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!((*it).*is_type)()) {
      fail("key '" + std::string(key) + "' in " + where + " must be " +
           type_name);
      return false;
    }
    out = it->get<T>();
    return true;
  }

  bool get_number(const json& obj, const std::string& where, const char* key,
                  double& out) {
    return get(obj, where, key, out, "a number", &json::is_number);
  }
  bool get_int(const json& obj, const std::string& where, const char* key,
               int& out) {
    return get(obj, where, key, out, "an integer", &json::is_number_integer);
  }
  bool get_u64(const json& obj, const std::string& where, const char* key,
               std::uint64_t& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number_integer()) {
      fail("key '" + std::string(key) + "' in " + where +
           " must be a non-negative integer");
      return false;
    }
    if (it->is_number_unsigned()) {
      out = it->get<std::uint64_t>();
      return true;
    }
    const std::int64_t v = it->get<std::int64_t>();
    if (v < 0) {
      fail("key '" + std::string(key) + "' in " + where + " must be >= 0");
      return false;
    }
    out = static_cast<std::uint64_t>(v);
    return true;
  }
  bool get_bool(const json& obj, const std::string& where, const char* key,
                bool& out) {
    return get(obj, where, key, out, "a boolean", &json::is_boolean);
  }
  bool get_string(const json& obj, const std::string& where, const char* key,
                  std::string& out) {
    return get(obj, where, key, out, "a string", &json::is_string);
  }
};

void parse_model(Parser& p, const json& obj, ModelConfig& model) {
  p.check_keys(obj, "model",
               {"name", "prior_scale", "box_halfwidth", "w0", "h", "h0",
                "sigma"});
  if (!p.get_string(obj, "model", "name", model.name))
    p.fail("key 'name' in model is required");
  else if (std::find(model_names().begin(), model_names().end(), model.name) ==
           model_names().end())
    p.fail("unknown model '" + model.name + "'" +
           suggest(model.name, model_names()));
  p.get_number(obj, "model", "prior_scale", model.prior_scale);
  p.get_number(obj, "model", "box_halfwidth", model.box_halfwidth);
  if (auto it = obj.find("w0"); it != obj.end()) {
    if (!it->is_array() ||
        !std::all_of(it->begin(), it->end(),
                     [](const json& v) { return v.is_number(); }))
      p.fail("key 'w0' in model must be an array of numbers");
    else
      model.w0 = it->get<std::vector<double>>();
  }
  p.get_int(obj, "model", "h", model.h);
  p.get_int(obj, "model", "h0", model.h0);
  p.get_number(obj, "model", "sigma", model.sigma);
  if (model.prior_scale < 0) p.fail("model.prior_scale must be positive");
  if (model.box_halfwidth < 0) p.fail("model.box_halfwidth must be positive");
}

void parse_posterior(Parser& p, const json& obj, Backend& backend) {
  p.check_keys(obj, "posterior",
               {"backend", "chains", "burn_in_steps", "thin",
                "draws_per_chain", "proposal_scale", "points_per_dim"});
  std::string kind;
  if (!p.get_string(obj, "posterior", "backend", kind)) {
    p.fail("key 'backend' in posterior is required");
    return;
  }
  if (kind == "mcmc") {
    backend.kind = Backend::Kind::mcmc;
    if (obj.contains("points_per_dim"))
      p.fail("key 'points_per_dim' applies to the quadrature backend only");
  } else if (kind == "quadrature") {
    backend.kind = Backend::Kind::quadrature;
    for (const char* k :
         {"chains", "burn_in_steps", "thin", "draws_per_chain",
          "proposal_scale"})
      if (obj.contains(k))
        p.fail("key '" + std::string(k) +
               "' applies to the mcmc backend only");
  } else {
    p.fail("posterior.backend must be 'mcmc' or 'quadrature', got '" + kind +
           "'" + suggest(kind, {"mcmc", "quadrature"}));
    return;
  }
  p.get_int(obj, "posterior", "chains", backend.mcmc.chains);
  p.get_int(obj, "posterior", "burn_in_steps", backend.mcmc.burn_in_steps);
  p.get_int(obj, "posterior", "thin", backend.mcmc.thin);
  p.get_int(obj, "posterior", "draws_per_chain", backend.mcmc.draws_per_chain);
  p.get_number(obj, "posterior", "proposal_scale", backend.mcmc.proposal_scale);
  p.get_int(obj, "posterior", "points_per_dim", backend.quad.points_per_dim);
  if (backend.kind == Backend::Kind::mcmc) {
    if (backend.mcmc.chains < 1 || backend.mcmc.burn_in_steps < 1 ||
        backend.mcmc.thin < 1 || backend.mcmc.draws_per_chain < 1)
      p.fail("posterior chain counts must all be >= 1");
    if (!(backend.mcmc.proposal_scale > 0))
      p.fail("posterior.proposal_scale must be positive");
  } else if (backend.quad.points_per_dim < 1) {
    p.fail("posterior.points_per_dim must be >= 1");
  }
}

void parse_plan(Parser& p, const json& obj, RunConfig& cfg) {
  p.check_keys(obj, "plan",
               {"n", "replicates", "beta", "test_size", "compute_cv1",
                "neff_floor_frac", "n_sweep", "free_energy"});
  p.get_int(obj, "plan", "n", cfg.n);
  p.get_int(obj, "plan", "replicates", cfg.replicates);
  p.get_number(obj, "plan", "beta", cfg.beta);
  p.get_int(obj, "plan", "test_size", cfg.test_size);
  p.get_bool(obj, "plan", "compute_cv1", cfg.compute_cv1);
  p.get_number(obj, "plan", "neff_floor_frac", cfg.neff_floor_frac);
  p.get_bool(obj, "plan", "free_energy", cfg.free_energy);
  if (auto it = obj.find("n_sweep"); it != obj.end()) {
    if (!it->is_array() ||
        !std::all_of(it->begin(), it->end(),
                     [](const json& v) { return v.is_number_integer(); }))
      p.fail("key 'n_sweep' in plan must be an array of integers");
    else
      cfg.n_sweep = it->get<std::vector<int>>();
  }
  if (cfg.n < 1) p.fail("plan.n must be >= 1");
  if (cfg.replicates < 1) p.fail("plan.replicates must be >= 1");
  if (!(cfg.beta > 0)) p.fail("plan.beta must be positive");
  if (cfg.test_size < 0) p.fail("plan.test_size must be >= 0");
  if (!(cfg.neff_floor_frac >= 0 && cfg.neff_floor_frac < 1))
    p.fail("plan.neff_floor_frac must lie in [0, 1)");
  for (int n : cfg.n_sweep)
    if (n < 1) p.fail("plan.n_sweep entries must be >= 1");
}

const std::vector<std::string> kModes = {"evaluate", "experiment", "sweep",
                                         "oracle-check"};

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded())
    throw ConfigError({"config is not valid JSON"});
  if (!root.is_object()) throw ConfigError({"config must be a JSON object"});

  Parser p;
  RunConfig cfg;
  p.check_keys(root, "config",
               {"version", "mode", "model", "posterior", "plan", "output_dir",
                "master_seed", "save_ensemble"});
  if (p.get(root, "config", "version", cfg.version, "an integer",
            &json::is_number_integer) &&
      cfg.version != 1)
    p.fail("unsupported config version " + std::to_string(cfg.version));
  if (p.get_string(root, "config", "mode", cfg.mode) &&
      std::find(kModes.begin(), kModes.end(), cfg.mode) == kModes.end())
    p.fail("unknown mode '" + cfg.mode + "'" + suggest(cfg.mode, kModes));

  const bool needs_model = cfg.mode != "oracle-check";
  if (auto it = root.find("model"); it != root.end()) {
    if (it->is_object())
      parse_model(p, *it, cfg.model);
    else
      p.fail("'model' must be an object");
  } else if (needs_model) {
    p.fail("'model' section is required for mode '" + cfg.mode + "'");
  }
  if (auto it = root.find("posterior"); it != root.end()) {
    if (it->is_object())
      parse_posterior(p, *it, cfg.backend);
    else
      p.fail("'posterior' must be an object");
  } else if (needs_model) {
    p.fail("'posterior' section is required for mode '" + cfg.mode + "'");
  }
  if (auto it = root.find("plan"); it != root.end()) {
    if (it->is_object())
      parse_plan(p, *it, cfg);
    else
      p.fail("'plan' must be an object");
  }
  p.get_string(root, "config", "output_dir", cfg.output_dir);
  p.get_u64(root, "config", "master_seed", cfg.master_seed);
  p.get_bool(root, "config", "save_ensemble", cfg.save_ensemble);
  if (cfg.mode == "sweep" && cfg.n_sweep.size() < 2)
    p.fail("mode 'sweep' needs plan.n_sweep with at least two sizes");

  if (!p.problems.empty()) throw ConfigError(std::move(p.problems));
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["version"] = cfg.version;
  j["mode"] = cfg.mode;
  if (!cfg.model.name.empty()) {
    ordered_json m;
    m["name"] = cfg.model.name;
    if (cfg.model.prior_scale > 0) m["prior_scale"] = cfg.model.prior_scale;
    if (cfg.model.box_halfwidth > 0)
      m["box_halfwidth"] = cfg.model.box_halfwidth;
    if (!cfg.model.w0.empty()) m["w0"] = cfg.model.w0;
    if (cfg.model.name == "tanh_network") {
      m["h"] = cfg.model.h;
      m["h0"] = cfg.model.h0;
      m["sigma"] = cfg.model.sigma;
    }
    j["model"] = std::move(m);

    ordered_json b;
    if (cfg.backend.kind == Backend::Kind::mcmc) {
      b["backend"] = "mcmc";
      b["chains"] = cfg.backend.mcmc.chains;
      b["burn_in_steps"] = cfg.backend.mcmc.burn_in_steps;
      b["thin"] = cfg.backend.mcmc.thin;
      b["draws_per_chain"] = cfg.backend.mcmc.draws_per_chain;
      b["proposal_scale"] = cfg.backend.mcmc.proposal_scale;
    } else {
      b["backend"] = "quadrature";
      b["points_per_dim"] = cfg.backend.quad.points_per_dim;
    }
    j["posterior"] = std::move(b);
  }
  ordered_json plan;
  plan["n"] = cfg.n;
  plan["replicates"] = cfg.replicates;
  plan["beta"] = cfg.beta;
  plan["test_size"] = cfg.test_size;
  plan["compute_cv1"] = cfg.compute_cv1;
  plan["neff_floor_frac"] = cfg.neff_floor_frac;
  plan["n_sweep"] = cfg.n_sweep;
  plan["free_energy"] = cfg.free_energy;
  j["plan"] = std::move(plan);
  j["output_dir"] = cfg.output_dir;
  j["master_seed"] = cfg.master_seed;
  j["save_ensemble"] = cfg.save_ensemble;
  return j.dump(2) + "\n";
}

ExperimentPlan plan_from_config(const RunConfig& cfg) {
  ExperimentPlan plan;
  plan.model_cfg = cfg.model;
  plan.n = cfg.n;
  plan.replicates = cfg.replicates;
  plan.beta = cfg.beta;
  plan.backend = cfg.backend;
  plan.test_size = cfg.test_size;
  plan.compute_cv1 = cfg.compute_cv1;
  plan.neff_floor_frac = cfg.neff_floor_frac;
  plan.master_seed = cfg.master_seed;
  plan.n_sweep = cfg.n_sweep;
  return plan;
}

}  // namespace slt
