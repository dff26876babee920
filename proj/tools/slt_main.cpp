// Command-line front end.
//
//   slt --config run.json                 run the mode named in the config
//   slt --mode oracle-check               built-in closed-form self-test
//
// Flags --out/--seed/--mode/--workers override the corresponding config
// fields. Every file the tool writes lands under the resolved output
// directory; relative output directories are resolved against $SLT_OUT_ROOT
// when that variable is set. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 an oracle check failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oracle_check.hpp"
#include "slt/common.hpp"
#include "slt/config.hpp"
#include "slt/criteria.hpp"
#include "slt/experiments.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"
#include "slt/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

fs::path resolve_out_dir(const std::string& configured) {
  fs::path p(configured);
  if (p.is_relative()) {
    if (const char* root = std::getenv("SLT_OUT_ROOT"); root && *root)
      p = fs::path(root) / p;
  }
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw slt::ValidationError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw slt::ValidationError("short write: " + path.string());
}

void write_manifest(const fs::path& dir, const slt::RunConfig& cfg,
                    const std::vector<std::string>& outputs,
                    int replicates_requested, int replicates_completed,
                    const std::vector<std::string>& failures) {
  ordered_json m;
  m["tool"] = "slt";
  m["version"] = slt::kVersion;
  m["build"] = slt::kGitDescribe;
  m["mode"] = cfg.mode;
  m["config"] = ordered_json::parse(slt::config_to_json(cfg));
  m["outputs"] = outputs;
  m["replicates_requested"] = replicates_requested;
  m["replicates_completed"] = replicates_completed;
  m["failures"] = failures;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

ordered_json report_to_json(const slt::CriteriaReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["beta"] = r.beta;
  j["ln"] = r.ln;
  j["btl"] = r.btl;
  j["gtl"] = r.gtl;
  j["waic"] = r.waic;
  j["cv2"] = r.cv2;
  if (r.cv1) j["cv1"] = *r.cv1;
  j["dic1"] = r.dic1;
  j["dic2"] = r.dic2;
  if (r.bgl) {
    j["bgl"] = r.bgl->value;
    j["bgl_stderr"] = r.bgl->stderr_;
  }
  if (r.bg) j["bg"] = *r.bg;
  if (r.se) {
    j["se"] = r.se->value;
    j["se_stderr"] = r.se->stderr_;
  }
  j["bt"] = r.bt;
  j["cv"] = r.cv;
  j["y1"] = r.y1;
  j["y2"] = r.y2;
  j["y3"] = r.y3;
  j["y4"] = r.y4;
  j["v_n"] = r.v_n;
  j["min_n_eff"] = r.min_n_eff;
  j["acc_rate"] = r.acc_rate;
  j["warnings"] = r.warnings;
  return j;
}

int run_evaluate(const slt::RunConfig& cfg, const fs::path& out_dir) {
  const slt::ModelBundle bundle = slt::make_model(cfg.model);
  const slt::Dataset data = slt::sample_truth(
      bundle.truth, cfg.n, slt::replicate_data_seed(cfg.master_seed, 0));
  const slt::PosteriorEnsemble ens = slt::build_posterior(
      bundle.model, data, cfg.beta,
      slt::with_seed(cfg.backend,
                     slt::replicate_posterior_seed(cfg.master_seed, 0)));

  slt::EvalOptions opts;
  opts.test_size = cfg.test_size;
  opts.test_seed = slt::replicate_test_seed(cfg.master_seed, 0);
  opts.neff_floor_frac = cfg.neff_floor_frac;
  opts.compute_cv1 = cfg.compute_cv1;
  if (cfg.compute_cv1)
    opts.refit_backend = slt::with_seed(
        cfg.backend, slt::replicate_refit_seed(cfg.master_seed, 0));
  const slt::TruthSpec* truth = cfg.test_size > 0 ? &bundle.truth : nullptr;
  const slt::CriteriaReport report =
      slt::evaluate_criteria(bundle.model, truth, data, ens, opts);

  std::vector<std::string> outputs;
  {
    slt::ExperimentResult single;
    single.plan = slt::plan_from_config(cfg);
    single.plan.replicates = 1;
    single.reports.push_back(report);
    single.replicate_ids.push_back(0);
    slt::write_reports_csv((out_dir / "report.csv").string(), single);
    outputs.push_back("report.csv");
  }
  write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  outputs.push_back("report.json");

  if (cfg.save_ensemble) {
    slt::save_ensemble((out_dir / "ensemble.txt").string(), ens);
    outputs.push_back("ensemble.txt");
  }
  if (cfg.free_energy) {
    const auto grid = slt::default_beta_grid();
    const slt::FreeEnergyResult fe = slt::free_energy(
        bundle.model, data, grid, cfg.backend, cfg.master_seed);
    std::string csv = "beta,integrand\n";
    for (std::size_t k = 0; k < fe.betas.size(); ++k)
      csv += slt::format_double(fe.betas[k]) + "," +
             slt::format_double(fe.integrand[k]) + "\n";
    csv += "free_energy," + slt::format_double(fe.value) + "\n";
    write_text(out_dir / "free_energy.csv", csv);
    outputs.push_back("free_energy.csv");
    std::cout << "free energy F(1) = " << slt::format_double(fe.value) << "\n";
    for (const auto& w : fe.warnings) std::cout << "warning: " << w << "\n";
  }
  write_manifest(out_dir, cfg, outputs, 1, 1, {});

  std::cout << "n=" << report.n << " beta=" << slt::format_double(report.beta)
            << "\n"
            << "btl=" << slt::format_double(report.btl)
            << " waic=" << slt::format_double(report.waic)
            << " cv2=" << slt::format_double(report.cv2)
            << " dic1=" << slt::format_double(report.dic1)
            << " dic2=" << slt::format_double(report.dic2) << "\n";
  if (report.bg)
    std::cout << "bg=" << slt::format_double(*report.bg)
              << " bt=" << slt::format_double(report.bt)
              << " cv=" << slt::format_double(report.cv) << "\n";
  for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << outputs.size() + 1 << " files to " << out_dir.string()
            << "\n";
  return 0;
}

int run_experiment_mode(const slt::RunConfig& cfg, const fs::path& out_dir) {
  const slt::ExperimentPlan plan = slt::plan_from_config(cfg);
  const slt::ExperimentResult res = slt::run_experiment(plan);

  slt::write_reports_csv((out_dir / "reports.csv").string(), res);
  slt::write_summary_csv((out_dir / "summary.csv").string(), res);
  slt::write_correlations_csv((out_dir / "correlations.csv").string(), res);
  slt::write_invariants_json((out_dir / "invariants.json").string(), res);
  const std::vector<std::string> outputs = {"reports.csv", "summary.csv",
                                            "correlations.csv",
                                            "invariants.json"};
  write_manifest(out_dir, cfg, outputs, plan.replicates,
                 static_cast<int>(res.reports.size()), res.failures);

  std::cout << "replicates: " << res.reports.size() << "/" << plan.replicates
            << " completed\n";
  for (const auto& q : res.summary)
    if (q.count > 0)
      std::cout << "  " << q.name << ": avr " << slt::format_double(q.avr)
                << ", std " << slt::format_double(q.std_) << " (count "
                << q.count << ")\n";
  if (res.invariants) {
    const auto& inv = *res.invariants;
    std::cout << "lambda_hat = " << slt::format_double(inv.lambda_hat)
              << " +- " << slt::format_double(inv.lambda_se) << "\n"
              << "lambda_alt = " << slt::format_double(inv.lambda_alt)
              << " +- " << slt::format_double(inv.lambda_alt_se) << "\n"
              << "nu_hat     = " << slt::format_double(inv.nu_hat) << " +- "
              << slt::format_double(inv.nu_se) << "\n";
  }
  for (const auto& f : res.failures) std::cout << "failed " << f << "\n";
  std::cout << "wrote " << outputs.size() + 1 << " files to "
            << out_dir.string() << "\n";
  return 0;
}

int run_sweep_mode(const slt::RunConfig& cfg, const fs::path& out_dir) {
  const slt::ExperimentPlan plan = slt::plan_from_config(cfg);
  const slt::SweepResult sweep = slt::cv_waic_gap_sweep(plan);
  slt::write_sweep_csv((out_dir / "sweep.csv").string(), sweep);
  write_manifest(out_dir, cfg, {"sweep.csv"}, plan.replicates,
                 plan.replicates, {});
  for (const auto& p : sweep.points)
    std::cout << "n=" << p.n << " median |cv2 - waic| = "
              << slt::format_double(p.median_abs_gap) << " (count " << p.count
              << ")\n";
  std::cout << "log-log slope = " << slt::format_double(sweep.slope)
            << ", intercept = " << slt::format_double(sweep.intercept) << "\n";
  return 0;
}

int run_oracle_mode(const slt::RunConfig& cfg, const fs::path& out_dir) {
  std::vector<std::string> lines;
  const bool ok = slt::tools::run_oracle_check(lines);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::cout << text;
  write_text(out_dir / "oracle_check.txt", text);
  write_manifest(out_dir, cfg, {"oracle_check.txt"}, 0, 0, {});
  return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian model-evaluation toolkit for tempered posteriors"};
  app.set_version_flag("--version", std::string(slt::kVersion) + " (" +
                                        slt::kGitDescribe + ")");

  std::string config_path, out_override, mode_override;
  std::uint64_t seed_override = 0;
  int workers = 0;
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--out", out_override,
                 "output directory (overrides the config)");
  auto* seed_opt =
      app.add_option("--seed", seed_override, "master seed (overrides)");
  app.add_option("--mode", mode_override,
                 "evaluate | experiment | sweep | oracle-check (overrides)");
  app.add_option("--workers", workers,
                 "max worker threads (0 = hardware default)");
  CLI11_PARSE(app, argc, argv);

  try {
    slt::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = slt::load_config_file(config_path);
    } else if (mode_override == "oracle-check") {
      cfg.mode = "oracle-check";
      cfg.output_dir = "runs/oracle-check";
    } else {
      throw slt::ConfigError(
          {"--config is required (only --mode oracle-check runs without one)"});
    }
    if (!mode_override.empty()) {
      if (mode_override != "evaluate" && mode_override != "experiment" &&
          mode_override != "sweep" && mode_override != "oracle-check")
        throw slt::ConfigError({"unknown --mode '" + mode_override +
                                "'; expected evaluate, experiment, sweep or "
                                "oracle-check"});
      cfg.mode = mode_override;
      if (cfg.mode != "oracle-check" && cfg.model.name.empty())
        throw slt::ConfigError(
            {"mode '" + cfg.mode + "' needs a config with a model section"});
    }
    if (seed_opt->count() > 0) cfg.master_seed = seed_override;
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (workers > 0) slt::set_max_threads(workers);

    const fs::path out_dir = resolve_out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    if (cfg.mode == "evaluate") return run_evaluate(cfg, out_dir);
    if (cfg.mode == "experiment") return run_experiment_mode(cfg, out_dir);
    if (cfg.mode == "sweep") return run_sweep_mode(cfg, out_dir);
    return run_oracle_mode(cfg, out_dir);
  } catch (const slt::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const slt::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const slt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
