#include "slt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include <json.hpp>

namespace slt {
namespace {

// Stream tags for seed derivation. estimate_nu_prime reuses kData so its
// datasets match the ones run_experiment drew for the same plan.
constexpr std::uint64_t kData = 0xd047u;
constexpr std::uint64_t kPosterior = 0xe27au;
constexpr std::uint64_t kTestSet = 0x7e57u;
constexpr std::uint64_t kRefit = 0x2ef1u;
constexpr std::uint64_t kNuPlus = 0x6e95u;
constexpr std::uint64_t kNuMinus = 0x6e96u;
constexpr std::uint64_t kSweep = 0x57eeu;
constexpr std::uint64_t kBootstrap = 0x1a77b007u;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  if (k == 0) throw ValidationError("median of empty set");
  return (k % 2 == 1) ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::optional<double> finite_or_none(double v) {
  if (std::isnan(v)) return std::nullopt;
  return v;
}

struct Field {
  const char* name;
  std::function<std::optional<double>(const CriteriaReport&)> get;
};

// Order fixed: summary rows and the correlation matrix derive from it.
const std::vector<Field>& report_fields() {
  static const std::vector<Field> fields = {
      {"btl", [](const CriteriaReport& r) { return finite_or_none(r.btl); }},
      {"bgl",
       [](const CriteriaReport& r) -> std::optional<double> {
         if (!r.bgl) return std::nullopt;
         return r.bgl->value;
       }},
      {"gtl", [](const CriteriaReport& r) { return finite_or_none(r.gtl); }},
      {"waic", [](const CriteriaReport& r) { return finite_or_none(r.waic); }},
      {"cv1",
       [](const CriteriaReport& r) -> std::optional<double> { return r.cv1; }},
      {"cv2", [](const CriteriaReport& r) { return finite_or_none(r.cv2); }},
      {"dic1", [](const CriteriaReport& r) { return finite_or_none(r.dic1); }},
      {"dic2", [](const CriteriaReport& r) { return finite_or_none(r.dic2); }},
      {"se",
       [](const CriteriaReport& r) -> std::optional<double> {
         if (!r.se) return std::nullopt;
         return r.se->value;
       }},
      {"bg",
       [](const CriteriaReport& r) -> std::optional<double> { return r.bg; }},
      {"bt", [](const CriteriaReport& r) { return finite_or_none(r.bt); }},
      {"cv", [](const CriteriaReport& r) { return finite_or_none(r.cv); }},
      {"bg_cv",
       [](const CriteriaReport& r) -> std::optional<double> {
         if (!r.bg) return std::nullopt;
         return *r.bg + r.cv;
       }},
      {"y1", [](const CriteriaReport& r) { return finite_or_none(r.y1); }},
      {"y2", [](const CriteriaReport& r) { return finite_or_none(r.y2); }},
      {"y3", [](const CriteriaReport& r) { return finite_or_none(r.y3); }},
      {"y4", [](const CriteriaReport& r) { return finite_or_none(r.y4); }},
      {"v_n", [](const CriteriaReport& r) { return finite_or_none(r.v_n); }},
      {"min_neff",
       [](const CriteriaReport& r) { return finite_or_none(r.min_n_eff); }},
      {"acc_rate",
       [](const CriteriaReport& r) { return finite_or_none(r.acc_rate); }},
  };
  return fields;
}

std::vector<QuantityStat> make_summary(
    std::span<const CriteriaReport> reports) {
  std::vector<QuantityStat> out;
  for (const Field& f : report_fields()) {
    std::vector<double> vals;
    for (const auto& r : reports)
      if (auto v = f.get(r)) vals.push_back(*v);
    QuantityStat qs;
    qs.name = f.name;
    qs.count = static_cast<int>(vals.size());
    if (!vals.empty()) {
      qs.avr = pairwise_mean(vals);
      qs.std_ = sample_sd(vals);
    }
    out.push_back(std::move(qs));
  }
  return out;
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.n < 1) throw ValidationError("run_experiment: n must be >= 1");
  if (plan.replicates < 1)
    throw ValidationError("run_experiment: replicates must be >= 1");
  if (!(plan.beta > 0))
    throw ValidationError("run_experiment: beta must be positive");
  if (plan.test_size < 0)
    throw ValidationError("run_experiment: test_size must be >= 0");
}

}  // namespace

std::uint64_t replicate_data_seed(std::uint64_t master_seed, int r) {
  return derive_seed(master_seed, kData, r);
}
std::uint64_t replicate_posterior_seed(std::uint64_t master_seed, int r) {
  return derive_seed(master_seed, kPosterior, r);
}
std::uint64_t replicate_test_seed(std::uint64_t master_seed, int r) {
  return derive_seed(master_seed, kTestSet, r);
}
std::uint64_t replicate_refit_seed(std::uint64_t master_seed, int r) {
  return derive_seed(master_seed, kRefit, r);
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  validate_plan(plan);
  const ModelBundle bundle = make_model(plan.model_cfg);
  ExperimentResult res;
  res.plan = plan;

  for (int r = 0; r < plan.replicates; ++r) {
    try {
      const Dataset data = sample_truth(
          bundle.truth, plan.n, replicate_data_seed(plan.master_seed, r));
      const PosteriorEnsemble ens = build_posterior(
          bundle.model, data, plan.beta,
          with_seed(plan.backend, replicate_posterior_seed(plan.master_seed, r)));
      EvalOptions opts;
      opts.test_size = plan.test_size;
      opts.test_seed = replicate_test_seed(plan.master_seed, r);
      opts.neff_floor_frac = plan.neff_floor_frac;
      opts.compute_cv1 = plan.compute_cv1;
      if (plan.compute_cv1)
        opts.refit_backend = with_seed(
            plan.backend, replicate_refit_seed(plan.master_seed, r));
      const TruthSpec* truth = plan.test_size > 0 ? &bundle.truth : nullptr;
      res.reports.push_back(
          evaluate_criteria(bundle.model, truth, data, ens, opts));
      res.replicate_ids.push_back(r);
    } catch (const NumericalError& e) {
      res.failures.push_back("replicate " + std::to_string(r) + ": " +
                             e.what());
    }
  }
  if (res.reports.empty())
    throw NumericalError(
        "run_experiment: all " + std::to_string(plan.replicates) +
        " replicates failed; first failure: " +
        (res.failures.empty() ? std::string("unknown") : res.failures.front()));

  res.summary = make_summary(res.reports);
  res.corr = correlation_matrix(res.reports);
  int with_bg = 0;
  for (const auto& r : res.reports) with_bg += r.bg.has_value();
  if (with_bg >= 3)
    res.invariants = estimate_invariants(res.reports, plan.beta);
  return res;
}

InvariantEstimate estimate_invariants(std::span<const CriteriaReport> reports,
                                      double beta) {
  if (!(beta > 0))
    throw ValidationError("estimate_invariants: beta must be positive");
  std::vector<double> q_lam, q_nu, q_alt;
  for (const auto& r : reports) {
    if (!r.bg) continue;
    const double n = static_cast<double>(r.n);
    q_lam.push_back(n * (*r.bg + r.bt) + r.v_n);
    q_nu.push_back(r.v_n);
    q_alt.push_back(n * (*r.bg + r.cv) - (beta - 1.0) * r.v_n);
  }
  const int k = static_cast<int>(q_lam.size());
  if (k < 3)
    throw ValidationError(
        "estimate_invariants: need at least 3 replicates with a "
        "generalization estimate, got " + std::to_string(k));

  InvariantEstimate est;
  est.n_used = k;
  const double half_beta = 0.5 * beta;
  est.lambda_hat = half_beta * pairwise_mean(q_lam);
  est.nu_hat = half_beta * pairwise_mean(q_nu);
  est.lambda_alt = half_beta * pairwise_mean(q_alt);

  constexpr int kResamples = 1000;
  auto rng = make_rng(derive_seed(kBootstrap, static_cast<std::uint64_t>(k)));
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<double> b_lam(kResamples), b_nu(kResamples), b_alt(kResamples);
  for (int b = 0; b < kResamples; ++b) {
    double s_lam = 0.0, s_nu = 0.0, s_alt = 0.0;
    for (int j = 0; j < k; ++j) {
      const int idx = pick(rng);
      s_lam += q_lam[idx];
      s_nu += q_nu[idx];
      s_alt += q_alt[idx];
    }
    b_lam[b] = half_beta * s_lam / k;
    b_nu[b] = half_beta * s_nu / k;
    b_alt[b] = half_beta * s_alt / k;
  }
  est.lambda_se = sample_sd(b_lam);
  est.nu_se = sample_sd(b_nu);
  est.lambda_alt_se = sample_sd(b_alt);
  return est;
}

ValueWithError estimate_nu_prime(const ModelBundle& bundle,
                                 const ExperimentPlan& plan, double h) {
  validate_plan(plan);
  if (!(h > 0) || !(h <= plan.beta / 2))
    throw ValidationError(
        "estimate_nu_prime: h must lie in (0, beta/2], got h = " +
        format_double(h));

  std::vector<double> vp, vm;
  std::vector<std::string> failures;
  for (int r = 0; r < plan.replicates; ++r) {
    try {
      const Dataset data = sample_truth(
          bundle.truth, plan.n, derive_seed(plan.master_seed, kData, r));
      const PosteriorEnsemble up = build_posterior(
          bundle.model, data, plan.beta + h,
          with_seed(plan.backend, derive_seed(plan.master_seed, kNuPlus, r)));
      const PosteriorEnsemble dn = build_posterior(
          bundle.model, data, plan.beta - h,
          with_seed(plan.backend, derive_seed(plan.master_seed, kNuMinus, r)));
      vp.push_back(functional_variance(up));
      vm.push_back(functional_variance(dn));
    } catch (const NumericalError& e) {
      failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
    }
  }
  const int k = static_cast<int>(vp.size());
  if (k < 3)
    throw NumericalError(
        "estimate_nu_prime: fewer than 3 replicates survived (" +
        std::to_string(k) + " of " + std::to_string(plan.replicates) + ")");

  const double cp = 0.5 * (plan.beta + h), cm = 0.5 * (plan.beta - h);
  ValueWithError out;
  out.value = (cp * pairwise_mean(vp) - cm * pairwise_mean(vm)) / (2.0 * h);

  constexpr int kResamples = 1000;
  auto rng = make_rng(derive_seed(kBootstrap, 0x69u, static_cast<std::uint64_t>(k)));
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<double> stats(kResamples);
  for (int b = 0; b < kResamples; ++b) {
    double sp = 0.0, sm = 0.0;
    for (int j = 0; j < k; ++j) {
      const int idx = pick(rng);  // paired resample
      sp += vp[idx];
      sm += vm[idx];
    }
    stats[b] = (cp * sp / k - cm * sm / k) / (2.0 * h);
  }
  out.stderr_ = sample_sd(stats);
  return out;
}

double residual_cv_vs_waic(const CriteriaReport& r) { return r.cv2 - r.waic; }

double residual_bg_cv(const CriteriaReport& r, double lambda) {
  if (!r.bg)
    throw ValidationError("residual_bg_cv: report carries no bg estimate");
  const double n = static_cast<double>(r.n);
  return *r.bg + r.cv - (r.beta - 1.0) * r.v_n / n -
         2.0 * lambda / (r.beta * n);
}

SweepResult cv_waic_gap_sweep(const ExperimentPlan& plan) {
  if (plan.n_sweep.size() < 2)
    throw ValidationError("cv_waic_gap_sweep: n_sweep needs >= 2 sizes");
  for (std::size_t k = 0; k + 1 < plan.n_sweep.size(); ++k)
    if (!(plan.n_sweep[k] < plan.n_sweep[k + 1]))
      throw ValidationError("cv_waic_gap_sweep: n_sweep must be increasing");

  SweepResult sweep;
  for (int n : plan.n_sweep) {
    ExperimentPlan sub = plan;
    sub.n = n;
    sub.n_sweep.clear();
    sub.test_size = 0;  // training-side quantities only
    sub.compute_cv1 = false;
    sub.master_seed =
        derive_seed(plan.master_seed, kSweep, static_cast<std::uint64_t>(n));
    const ExperimentResult res = run_experiment(sub);
    std::vector<double> gaps;
    for (const auto& r : res.reports)
      gaps.push_back(std::abs(residual_cv_vs_waic(r)));
    SweepPoint pt;
    pt.n = n;
    pt.median_abs_gap = median_of(gaps);
    pt.count = static_cast<int>(gaps.size());
    sweep.points.push_back(pt);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(sweep.points.size());
  for (const auto& pt : sweep.points) {
    if (!(pt.median_abs_gap > 0))
      throw NumericalError("cv_waic_gap_sweep: zero median gap at n = " +
                           std::to_string(pt.n));
    const double x = std::log(static_cast<double>(pt.n));
    const double y = std::log(pt.median_abs_gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  sweep.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  sweep.intercept = (sy - sweep.slope * sx) / k;
  return sweep;
}

CorrelationMatrix correlation_matrix(std::span<const CriteriaReport> reports) {
  CorrelationMatrix cm;
  cm.names = {"bg", "bt", "cv", "waic", "dic1", "dic2", "bg_cv"};
  const int q = static_cast<int>(cm.names.size());
  cm.entries.assign(static_cast<std::size_t>(q) * q, std::nullopt);

  // Centered against the replicate's own empirical truth loss; bg-based
  // columns exist only when the truth-side pass ran.
  std::vector<std::vector<double>> cols(q);
  std::vector<bool> complete(q, true);
  for (const auto& r : reports) {
    const std::optional<double> vals[] = {
        r.bg,
        r.bt,
        r.cv,
        r.waic - r.ln,
        r.dic1 - r.ln,
        r.dic2 - r.ln,
        r.bg ? std::optional<double>(*r.bg + r.cv) : std::nullopt};
    for (int c = 0; c < q; ++c) {
      if (vals[c])
        cols[c].push_back(*vals[c]);
      else
        complete[c] = false;
    }
  }
  std::vector<bool> usable(q);
  for (int c = 0; c < q; ++c)
    usable[c] = complete[c] && cols[c].size() >= 2 && sample_sd(cols[c]) > 0;

  for (int a = 0; a < q; ++a) {
    if (!usable[a]) continue;
    cm.entries[static_cast<std::size_t>(a) * q + a] = 1.0;
    for (int b = a + 1; b < q; ++b) {
      if (!usable[b]) continue;
      const double c = pearson_corr(cols[a], cols[b]);
      cm.entries[static_cast<std::size_t>(a) * q + b] = c;
      cm.entries[static_cast<std::size_t>(b) * q + a] = c;
    }
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path, const char* who) {
  std::ofstream out(path);
  if (!out)
    throw ValidationError(std::string(who) + ": cannot open " + path);
  return out;
}

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void write_reports_csv(const std::string& path, const ExperimentResult& res) {
  auto out = open_out(path, "write_reports_csv");
  out << "n,beta,btl,bgl,gtl,waic,cv1,cv2,dic1,dic2,se,bg,bt,cv,"
         "y1,y2,y3,y4,v_n,min_neff,acc_rate\n";
  for (const auto& r : res.reports) {
    out << r.n << ',' << format_double(r.beta) << ',' << format_double(r.btl)
        << ',' << cell(r.bgl ? std::optional<double>(r.bgl->value) : std::nullopt)
        << ',' << format_double(r.gtl) << ',' << format_double(r.waic) << ','
        << cell(r.cv1) << ',' << format_double(r.cv2) << ','
        << format_double(r.dic1) << ',' << format_double(r.dic2) << ','
        << cell(r.se ? std::optional<double>(r.se->value) : std::nullopt) << ','
        << cell(r.bg) << ',' << format_double(r.bt) << ','
        << format_double(r.cv) << ',' << format_double(r.y1) << ','
        << format_double(r.y2) << ',' << format_double(r.y3) << ','
        << format_double(r.y4) << ',' << format_double(r.v_n) << ','
        << format_double(r.min_n_eff) << ','
        << cell(finite_or_none(r.acc_rate)) << '\n';
  }
  if (!out) throw ValidationError("write_reports_csv: write failed: " + path);
}

void write_summary_csv(const std::string& path, const ExperimentResult& res) {
  auto out = open_out(path, "write_summary_csv");
  out << "quantity,avr,std,count\n";
  for (const auto& qs : res.summary) {
    if (qs.count == 0) {
      out << qs.name << ",,," << 0 << '\n';
    } else {
      out << qs.name << ',' << format_double(qs.avr) << ','
          << format_double(qs.std_) << ',' << qs.count << '\n';
    }
  }
  out << "failures,,," << res.failures.size() << '\n';
  if (!out) throw ValidationError("write_summary_csv: write failed: " + path);
}

void write_correlations_csv(const std::string& path,
                            const ExperimentResult& res) {
  auto out = open_out(path, "write_correlations_csv");
  const auto& cm = res.corr;
  out << "quantity";
  for (const auto& n : cm.names) out << ',' << n;
  out << '\n';
  const int q = static_cast<int>(cm.names.size());
  for (int a = 0; a < q; ++a) {
    out << cm.names[a];
    for (int b = 0; b < q; ++b) out << ',' << cell(cm.at(a, b));
    out << '\n';
  }
  if (!out)
    throw ValidationError("write_correlations_csv: write failed: " + path);
}

void write_invariants_json(const std::string& path,
                           const ExperimentResult& res) {
  nlohmann::json j;
  if (res.invariants) {
    const auto& e = *res.invariants;
    j["available"] = true;
    j["lambda_hat"] = e.lambda_hat;
    j["lambda_se"] = e.lambda_se;
    j["lambda_alt"] = e.lambda_alt;
    j["lambda_alt_se"] = e.lambda_alt_se;
    j["nu_hat"] = e.nu_hat;
    j["nu_se"] = e.nu_se;
    j["n_used"] = e.n_used;
  } else {
    j["available"] = false;
  }
  auto out = open_out(path, "write_invariants_json");
  out << j.dump(2) << '\n';
  if (!out)
    throw ValidationError("write_invariants_json: write failed: " + path);
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  auto out = open_out(path, "write_sweep_csv");
  out << "n,median_abs_gap,count\n";
  for (const auto& pt : sweep.points)
    out << pt.n << ',' << format_double(pt.median_abs_gap) << ',' << pt.count
        << '\n';
  out << "slope," << format_double(sweep.slope) << ",\n";
  out << "intercept," << format_double(sweep.intercept) << ",\n";
  if (!out) throw ValidationError("write_sweep_csv: write failed: " + path);
}

}  // namespace slt
