#include "slt/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slt {
namespace {

// Shared builders: the standalone criteria and evaluate_criteria both call
// these, so a quantity computed twice is computed identically.

double btl_of(const PosteriorEnsemble& ens) {
  return -generating_function(ens, 1.0);
}

double waic_of(double btl, double beta, int n, double v_n) {
  return btl + (beta / static_cast<double>(n)) * v_n;
}

CvResult cv_of(const PosteriorEnsemble& ens, double neff_floor_frac) {
  const kernels::LooTerms lt =
      kernels::loo_terms(ens.loglik, ens.nw.log_w, ens.beta);
  CvResult out;
  out.value = -pairwise_mean(lt.log_ratio);
  out.min_n_eff = *std::min_element(lt.n_eff.begin(), lt.n_eff.end());
  const double floor = neff_floor_frac * static_cast<double>(ens.m);
  out.n_low = static_cast<int>(
      std::count_if(lt.n_eff.begin(), lt.n_eff.end(),
                    [floor](double v) { return v < floor; }));
  return out;
}

double dic1_of(const PosteriorEnsemble& ens, const ModelSpec& model,
               const Dataset& data, double btl,
               std::span<const double> ell1) {
  const std::vector<double> wbar =
      kernels::weighted_param_mean(ens.draws, ens.m, ens.d, ens.nw.w);
  std::vector<double> t(static_cast<std::size_t>(data.n));
  for (int i = 0; i < data.n; ++i)
    t[i] = model.log_density_fn(data.sample(i), wbar) - ell1[i];
  return btl + 2.0 * pairwise_mean(t);
}

double dic2_of(const PosteriorEnsemble& ens, double btl) {
  const std::vector<double> totals = kernels::per_draw_total(ens.loglik);
  double mean = 0.0;
  for (int mm = 0; mm < ens.m; ++mm) mean += ens.nw.w[mm] * totals[mm];
  double var = 0.0;
  for (int mm = 0; mm < ens.m; ++mm) {
    const double d = totals[mm] - mean;
    var += ens.nw.w[mm] * d * d;
  }
  return btl + (2.0 / static_cast<double>(ens.loglik.n)) * var;
}

struct TruthSide {
  ValueWithError bgl;
  std::optional<ValueWithError> se;
};

TruthSide truth_side(const PosteriorEnsemble& ens, const ModelSpec& model,
                     const TruthSpec& truth, int test_size,
                     std::uint64_t seed) {
  if (test_size < 2)
    throw ValidationError("bayes_generalization_loss: test_size must be >= 2");
  const Dataset test = sample_truth(truth, test_size, seed);
  const kernels::PredictiveBatch pb = kernels::predictive_batch(
      model, ens.draws, ens.m, ens.nw, test, &truth);
  // Differencing against the known truth density cancels the O(1) spread of
  // -log p*(X); what remains fluctuates on the scale of the excess loss.
  std::vector<double> terms(static_cast<std::size_t>(test_size));
  for (int t = 0; t < test_size; ++t)
    terms[t] = truth.log_p0(test.sample(t)) - pb.log_pred[t];
  const double root_t = std::sqrt(static_cast<double>(test_size));
  TruthSide out;
  out.bgl.value = truth.l0 + pairwise_mean(terms);
  out.bgl.stderr_ = sample_sd(terms) / root_t;
  if (!pb.reg_sq_err.empty()) {
    const double s = model.regression->noise_sigma;
    const double scale = 1.0 / (2.0 * s * s);
    ValueWithError se;
    se.value = scale * pairwise_mean(pb.reg_sq_err);
    se.stderr_ = scale * sample_sd(pb.reg_sq_err) / root_t;
    out.se = se;
  }
  return out;
}

void check_pair(const Dataset& data, const PosteriorEnsemble& ens,
                const char* who) {
  if (data.n != ens.loglik.n)
    throw ValidationError(std::string(who) +
                          ": ensemble was built on a different dataset (n = " +
                          std::to_string(ens.loglik.n) + " vs " +
                          std::to_string(data.n) + ")");
}

}  // namespace

double bayes_training_loss(const PosteriorEnsemble& ens) { return btl_of(ens); }

double gibbs_training_loss(const PosteriorEnsemble& ens) {
  return -functional_cumulants(ens).y1;
}

double functional_variance(const PosteriorEnsemble& ens) {
  return functional_cumulants(ens).v_n;
}

double waic(const PosteriorEnsemble& ens) {
  const CumulantSet cs = functional_cumulants(ens);
  return waic_of(btl_of(ens), ens.beta, cs.n, cs.v_n);
}

CvResult cv_importance(const PosteriorEnsemble& ens, double neff_floor_frac) {
  if (ens.loglik.n < 1)
    throw ValidationError("cv_importance: ensemble was built on an empty dataset");
  return cv_of(ens, neff_floor_frac);
}

double cv_refit(const ModelSpec& model, const Dataset& data, double beta,
                const Backend& backend) {
  if (data.n < 2)
    throw ValidationError("cv_refit: need at least two samples");
  std::vector<double> terms(static_cast<std::size_t>(data.n));
  std::vector<double> col;
  for (int i = 0; i < data.n; ++i) {
    const Dataset loo = leave_one_out(data, i);
    const Backend b =
        with_seed(backend, derive_seed(backend.mcmc.seed, 0x10eu,
                                       static_cast<std::uint64_t>(i)));
    const PosteriorEnsemble ens = build_posterior(model, loo, beta, b);
    col.resize(static_cast<std::size_t>(ens.m));
    const auto x = data.sample(i);
    for (int mm = 0; mm < ens.m; ++mm)
      col[mm] = model.log_density_fn(x, ens.draw(mm));
    terms[i] = logsumexp_shifted(ens.nw.log_w, col, 1.0);
    if (!std::isfinite(terms[i]))
      throw NumericalError("cv_refit: non-finite held-out predictive at "
                           "sample " + std::to_string(i));
  }
  return -pairwise_mean(terms);
}

ValueWithError bayes_generalization_loss(const PosteriorEnsemble& ens,
                                         const ModelSpec& model,
                                         const TruthSpec& truth, int test_size,
                                         std::uint64_t seed) {
  return truth_side(ens, model, truth, test_size, seed).bgl;
}

ValueWithError square_error(const PosteriorEnsemble& ens,
                            const ModelSpec& model, const TruthSpec& truth,
                            int test_size, std::uint64_t seed) {
  if (!model.regression.has_value())
    throw ValidationError("square_error: model has no regression view");
  if (!truth.regression_true)
    throw ValidationError("square_error: truth has no regression function");
  const TruthSide ts = truth_side(ens, model, truth, test_size, seed);
  return *ts.se;
}

double dic1(const PosteriorEnsemble& ens, const ModelSpec& model,
            const Dataset& data) {
  check_pair(data, ens, "dic1");
  if (data.n < 1) throw ValidationError("dic1: empty dataset");
  const CumulantSet cs = functional_cumulants(ens);
  return dic1_of(ens, model, data, btl_of(ens), cs.ell1);
}

double dic2(const PosteriorEnsemble& ens) {
  if (ens.loglik.n < 1) throw ValidationError("dic2: empty dataset");
  return dic2_of(ens, btl_of(ens));
}

std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  const double b0 = 1e-4, bmid = 0.1;
  const int geo = 16;
  const double ratio = std::pow(bmid / b0, 1.0 / (geo - 1));
  for (int k = 0; k < geo; ++k) grid.push_back(b0 * std::pow(ratio, k));
  grid[geo - 1] = bmid;  // kill accumulated rounding at the joint
  for (double b : {0.28, 0.46, 0.64, 0.82, 1.0}) grid.push_back(b);
  return grid;
}

FreeEnergyResult free_energy(const ModelSpec& model, const Dataset& data,
                             std::span<const double> beta_grid,
                             const Backend& backend, std::uint64_t seed) {
  if (beta_grid.size() < 2)
    throw ValidationError("free_energy: beta grid needs at least two nodes");
  if (!(beta_grid.front() > 0) || beta_grid.front() > 0.01)
    throw ValidationError("free_energy: first grid node must lie in (0, 0.01]");
  if (std::abs(beta_grid.back() - 1.0) > 1e-12)
    throw ValidationError("free_energy: last grid node must be 1");
  for (std::size_t k = 0; k + 1 < beta_grid.size(); ++k)
    if (!(beta_grid[k] < beta_grid[k + 1]))
      throw ValidationError("free_energy: grid must be strictly increasing");

  FreeEnergyResult out;
  out.betas.assign(beta_grid.begin(), beta_grid.end());
  out.integrand.assign(beta_grid.size(), 0.0);
  if (data.n == 0) return out;  // the marginal likelihood of nothing is 1

  for (std::size_t k = 0; k < beta_grid.size(); ++k) {
    const Backend b = with_seed(
        backend, derive_seed(backend.mcmc.seed == 0 ? seed : backend.mcmc.seed,
                             0xf3eu, static_cast<std::uint64_t>(k)));
    const PosteriorEnsemble ens =
        build_posterior(model, data, beta_grid[k], b);
    out.integrand[k] =
        static_cast<double>(data.n) * (-functional_cumulants(ens).y1);
    for (const auto& w : ens.warnings)
      out.warnings.push_back("beta = " + format_double(beta_grid[k]) + ": " + w);
  }
  int bumps = 0;
  for (std::size_t k = 0; k + 1 < out.integrand.size(); ++k)
    if (out.integrand[k + 1] > out.integrand[k] +
                                   1e-9 * (1.0 + std::abs(out.integrand[k])))
      ++bumps;
  if (bumps > 0)
    out.warnings.push_back("integrand not monotone at " +
                           std::to_string(bumps) +
                           " ladder step(s); sampler noise likely");

  double total = beta_grid.front() * out.integrand.front();
  for (std::size_t k = 0; k + 1 < beta_grid.size(); ++k)
    total += 0.5 * (beta_grid[k + 1] - beta_grid[k]) *
             (out.integrand[k] + out.integrand[k + 1]);
  out.value = total;
  return out;
}

CriteriaReport evaluate_criteria(const ModelSpec& model, const TruthSpec* truth,
                                 const Dataset& data,
                                 const PosteriorEnsemble& ens,
                                 const EvalOptions& opts) {
  check_pair(data, ens, "evaluate_criteria");
  if (data.n < 1) throw ValidationError("evaluate_criteria: empty dataset");

  CriteriaReport r;
  r.n = data.n;
  r.beta = ens.beta;
  r.ln = data.ln;
  r.warnings = ens.warnings;

  const CumulantSet cs = functional_cumulants(ens);
  r.y1 = cs.y1;
  r.y2 = cs.y2;
  r.y3 = cs.y3;
  r.y4 = cs.y4;
  r.v_n = cs.v_n;

  r.btl = btl_of(ens);
  r.gtl = -cs.y1;
  r.waic = waic_of(r.btl, ens.beta, cs.n, cs.v_n);

  const CvResult cv = cv_of(ens, opts.neff_floor_frac);
  r.cv2 = cv.value;
  r.min_n_eff = cv.min_n_eff;
  if (cv.n_low > 0)
    r.warnings.push_back(
        "leave-one-out tilt left " + std::to_string(cv.n_low) +
        " sample(s) under the effective-sample floor (min n_eff = " +
        format_double(cv.min_n_eff) + " of " + std::to_string(ens.m) + ")");

  r.dic1 = dic1_of(ens, model, data, r.btl, cs.ell1);
  r.dic2 = dic2_of(ens, r.btl);

  r.bt = r.btl - data.ln;
  r.cv = r.cv2 - data.ln;

  r.acc_rate = ens.provenance == Provenance::mcmc
                   ? sample_mean(ens.chain_accept)
                   : std::numeric_limits<double>::quiet_NaN();

  if (truth != nullptr) {
    const TruthSide ts = truth_side(ens, model, *truth, opts.test_size,
                                    opts.test_seed);
    r.bgl = ts.bgl;
    r.bg = ts.bgl.value - truth->l0;
    r.se = ts.se;
  }

  if (opts.compute_cv1)
    r.cv1 = cv_refit(model, data, ens.beta, opts.refit_backend);

  return r;
}

}  // namespace slt
