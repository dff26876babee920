// Replicated experiments and the estimators built on top of them.
//
// A plan fixes (model, n, beta, backend, replicates, master_seed). Each
// replicate draws its own dataset and posterior from seeds derived off the
// master seed, evaluates the full criteria battery, and the summary layer
// aggregates: averages and spreads, correlation structure of the centered
// quantities, and the invariant estimators
//
//   lambda_hat     (beta/2) * mean[ n*(bg + bt) + v_n ]
//   lambda_alt     (beta/2) * mean[ n*(bg + cv) - (beta-1)*v_n ]
//   nu_hat         (beta/2) * mean[ v_n ]
//   nu_prime_hat   d/dbeta of nu_hat by central difference on rebuilt
//                  posteriors at beta +- h over the same datasets
//
// with bootstrap standard errors. Replicates that die with a numerical
// error are recorded and skipped; summaries disclose the survivor count.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slt/criteria.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"

namespace slt {

struct ExperimentPlan {
  ModelConfig model_cfg;
  int n = 200;
  int replicates = 50;
  double beta = 1.0;
  Backend backend;
  // test_size = 0 skips the truth-side Monte Carlo pass entirely (no bgl,
  // bg, se); useful for sweeps that only need training-side quantities.
  int test_size = 20000;
  bool compute_cv1 = false;
  double neff_floor_frac = 0.01;
  std::uint64_t master_seed = 1;
  std::vector<int> n_sweep;  // consumed by cv_waic_gap_sweep
};

struct QuantityStat {
  std::string name;
  double avr = 0.0;
  double std_ = 0.0;
  int count = 0;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  // Row-major; nullopt marks entries that are undefined (missing quantity or
  // zero variance), never NaN.
  std::vector<std::optional<double>> entries;

  std::optional<double> at(int r, int c) const {
    return entries[static_cast<std::size_t>(r) * names.size() + c];
  }
};

struct InvariantEstimate {
  double lambda_hat = 0.0, lambda_se = 0.0;
  double lambda_alt = 0.0, lambda_alt_se = 0.0;
  double nu_hat = 0.0, nu_se = 0.0;
  int n_used = 0;
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<CriteriaReport> reports;  // survivors, in replicate order
  std::vector<int> replicate_ids;
  std::vector<std::string> failures;
  std::vector<QuantityStat> summary;
  CorrelationMatrix corr;
  std::optional<InvariantEstimate> invariants;
};

struct SweepPoint {
  int n = 0;
  double median_abs_gap = 0.0;  // median over replicates of |cv2 - waic|
  int count = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;      // least-squares slope of log gap vs log n
  double intercept = 0.0;
};

// Seed paths used by run_experiment for replicate r. Exposed so callers can
// rebuild a replicate's exact dataset/posterior/test stream (matched-seed
// comparisons, single-shot evaluation).
std::uint64_t replicate_data_seed(std::uint64_t master_seed, int r);
std::uint64_t replicate_posterior_seed(std::uint64_t master_seed, int r);
std::uint64_t replicate_test_seed(std::uint64_t master_seed, int r);
std::uint64_t replicate_refit_seed(std::uint64_t master_seed, int r);

// Runs plan.replicates independent replicates; throws NumericalError only
// when every replicate fails.
ExperimentResult run_experiment(const ExperimentPlan& plan);

// Estimators over per-replicate reports; requires >= 3 reports carrying bg.
// Standard errors come from a fixed-seed bootstrap (1000 resamples).
InvariantEstimate estimate_invariants(std::span<const CriteriaReport> reports,
                                      double beta);

// Central-difference derivative of nu_hat at plan.beta with half-width h in
// (0, beta/2]: both tempered ensembles are rebuilt per replicate over the
// same datasets the plan would draw.
ValueWithError estimate_nu_prime(const ModelBundle& bundle,
                                 const ExperimentPlan& plan, double h);

// Per-replicate residuals of the two asymptotic identities.
double residual_cv_vs_waic(const CriteriaReport& r);
double residual_bg_cv(const CriteriaReport& r, double lambda);

// Runs the plan at every n in plan.n_sweep (training-side only) and fits
// the decay rate of the median |cv2 - waic| gap.
SweepResult cv_waic_gap_sweep(const ExperimentPlan& plan);

// Correlations between the centered quantities
// [bg, bt, cv, waic - ln, dic1 - ln, dic2 - ln, bg + cv].
CorrelationMatrix correlation_matrix(std::span<const CriteriaReport> reports);

// CSV emitters. Fixed column order; absent values are empty fields; doubles
// are written in shortest round-trip form so identical runs are
// byte-identical.
void write_reports_csv(const std::string& path, const ExperimentResult& res);
void write_summary_csv(const std::string& path, const ExperimentResult& res);
void write_correlations_csv(const std::string& path,
                            const ExperimentResult& res);
void write_invariants_json(const std::string& path,
                           const ExperimentResult& res);
void write_sweep_csv(const std::string& path, const SweepResult& sweep);

}  // namespace slt
