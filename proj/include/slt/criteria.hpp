// Model-evaluation criteria over a tempered posterior ensemble.
//
// Losses (all per-sample, in nats):
//   btl   Bayes training loss      -(1/n) sum_i log E_w[p(X_i|w)]
//   gtl   Gibbs training loss      -(1/n) sum_i E_w[log p(X_i|w)]
//   waic  btl + (beta/n) * V_n, with V_n the summed posterior variance of
//         the per-sample log likelihood
//   cv2   importance-sampled leave-one-out loss from the single ensemble
//   cv1   leave-one-out loss from n refitted posteriors
//   dic1  plug-in deviance criterion at the posterior-mean parameter
//   dic2  variance-penalty deviance criterion
//   bgl   Bayes generalization loss, Monte Carlo over fresh truth draws
//   se    scaled predictive square error of the posterior-mean regression
//
// Centered quantities subtract the dataset's empirical truth loss (bt, cv)
// or the minimum achievable loss (bg). The free-energy routine integrates
// n * gtl over an inverse-temperature ladder from 0 to 1.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slt/cumulants.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"

namespace slt {

struct ValueWithError {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct CvResult {
  double value = 0.0;
  double min_n_eff = 0.0;
  int n_low = 0;  // samples whose tilted weights fell below the n_eff floor
};

struct FreeEnergyResult {
  double value = 0.0;
  std::vector<double> betas;
  std::vector<double> integrand;  // n * gtl at each ladder node
  std::vector<std::string> warnings;
};

struct EvalOptions {
  int test_size = 20000;
  std::uint64_t test_seed = 0;
  double neff_floor_frac = 0.01;  // warn when n_eff < frac * m
  bool compute_cv1 = false;
  Backend refit_backend;  // used only when compute_cv1 is set
};

struct CriteriaReport {
  int n = 0;
  double beta = 1.0;
  double ln = 0.0;  // empirical truth loss of the training set
  double btl = 0.0, gtl = 0.0, waic = 0.0, cv2 = 0.0;
  double dic1 = 0.0, dic2 = 0.0;
  double y1 = 0.0, y2 = 0.0, y3 = 0.0, y4 = 0.0, v_n = 0.0;
  double bt = 0.0, cv = 0.0;  // btl - ln, cv2 - ln
  double min_n_eff = 0.0;
  double acc_rate = 0.0;  // mean chain acceptance; NaN for quadrature
  std::optional<double> cv1;
  std::optional<ValueWithError> bgl;
  std::optional<double> bg;  // bgl - l0
  std::optional<ValueWithError> se;
  std::vector<std::string> warnings;
};

double bayes_training_loss(const PosteriorEnsemble& ens);
double gibbs_training_loss(const PosteriorEnsemble& ens);
// Summed per-sample posterior variance V_n = n * y2.
double functional_variance(const PosteriorEnsemble& ens);
double waic(const PosteriorEnsemble& ens);

// Leave-one-out by reweighting the single ensemble with p(X_i|w)^{-beta}.
CvResult cv_importance(const PosteriorEnsemble& ens,
                       double neff_floor_frac = 0.01);

// Leave-one-out with n freshly built posteriors (mcmc refits are sub-seeded
// per held-out index). Expensive: n backend constructions.
double cv_refit(const ModelSpec& model, const Dataset& data, double beta,
                const Backend& backend);

// Monte Carlo generalization loss over test_size fresh truth draws. The
// estimator pairs each test point against the (known) truth density, which
// cancels most of the Monte Carlo variance of the plain mean.
ValueWithError bayes_generalization_loss(const PosteriorEnsemble& ens,
                                         const ModelSpec& model,
                                         const TruthSpec& truth, int test_size,
                                         std::uint64_t seed);

// (1/(2 sigma^2)) E_X |R_true(X) - E_w[R(X,w)]|^2; requires the model's
// regression view.
ValueWithError square_error(const PosteriorEnsemble& ens,
                            const ModelSpec& model, const TruthSpec& truth,
                            int test_size, std::uint64_t seed);

double dic1(const PosteriorEnsemble& ens, const ModelSpec& model,
            const Dataset& data);
double dic2(const PosteriorEnsemble& ens);

// Free energy F(1) = -log marginal likelihood, by integrating n * gtl(beta)
// over the grid with a trapezoid rule (plus a left rectangle on [0, b0]).
// The grid must be strictly increasing, start at b0 in (0, 0.01], and end
// at 1. An empty dataset integrates to exactly 0.
FreeEnergyResult free_energy(const ModelSpec& model, const Dataset& data,
                             std::span<const double> beta_grid,
                             const Backend& backend, std::uint64_t seed);

// 21-node ladder: geometric from 1e-4 to 0.1, then linear to 1.
std::vector<double> default_beta_grid();

// One-stop evaluation; shares the cumulant set, the loo pass, and the
// truth-side Monte Carlo pass across all criteria so repeated quantities are
// bit-identical to their standalone counterparts.
CriteriaReport evaluate_criteria(const ModelSpec& model, const TruthSpec* truth,
                                 const Dataset& data,
                                 const PosteriorEnsemble& ens,
                                 const EvalOptions& opts);

}  // namespace slt
