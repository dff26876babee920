// Tempered posterior construction and reuse.
//
// A PosteriorEnsemble is a weighted set of parameter draws targeting
// pi_beta(w) proportional to prod_i p(X_i | w)^beta * phi(w), together with
// the cached log-likelihood matrix against its training dataset. Two
// backends produce ensembles: random-walk Metropolis (uniform weights) and a
// deterministic tensor-product midpoint grid (cell-mass weights, d <= 2).
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slt/kernels.hpp"
#include "slt/models.hpp"

namespace slt {

enum class Provenance { mcmc, quadrature };

struct McmcConfig {
  int chains = 10;
  int burn_in_steps = 20000;
  int thin = 100;
  int draws_per_chain = 200;
  double proposal_scale = 0.005;  // isotropic random-walk step
  std::uint64_t seed = 0;
};

struct QuadratureConfig {
  int points_per_dim = 201;
};

struct PosteriorEnsemble {
  int d = 0;
  int m = 0;          // total draws
  double beta = 1.0;  // inverse temperature
  Provenance provenance = Provenance::quadrature;
  std::vector<double> draws;        // m x d row-major, all inside the box
  std::vector<double> log_weights;  // raw (unnormalized); all zero for mcmc
  kernels::LoglikMatrix loglik;     // against the training dataset
  kernels::NormalizedWeights nw;    // cached normalization of log_weights
  std::vector<double> chain_accept;  // per-chain acceptance rates (mcmc)
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;

  std::span<const double> draw(int mm) const {
    return std::span<const double>(draws.data() +
                                       static_cast<std::size_t>(mm) * d,
                                   static_cast<std::size_t>(d));
  }
};

struct LooExpect {
  double value = 0.0;
  double n_eff = 0.0;
  bool low_n_eff = false;
};

// Closed choice of posterior backend, for callers that construct posteriors
// repeatedly (refit cross-validation, the free-energy temperature ladder).
struct Backend {
  enum class Kind { mcmc, quadrature };
  Kind kind = Kind::quadrature;
  McmcConfig mcmc;
  QuadratureConfig quad;
};

PosteriorEnsemble build_posterior(const ModelSpec& model, const Dataset& data,
                                  double beta, const Backend& backend);

// Copy of the backend with the mcmc seed replaced (no-op for quadrature,
// which is deterministic).
Backend with_seed(Backend backend, std::uint64_t seed);

// Random-walk Metropolis over the tempered posterior; requires beta > 0.
// Chains are independent streams derived from cfg.seed and run in parallel;
// proposals falling outside the domain box are rejected. A chain whose
// initial prior draw has a non-finite target is a fatal NumericalError.
PosteriorEnsemble metropolis_sample(const ModelSpec& model,
                                    const Dataset& data, double beta,
                                    const McmcConfig& cfg);

// Deterministic midpoint grid over the domain box; requires beta >= 0 and
// d <= 2. Weights are beta-tempered likelihood times prior mass per cell;
// points_per_dim = 1 degenerates to a point mass at the box center.
PosteriorEnsemble quadrature_posterior(const ModelSpec& model,
                                       const Dataset& data, double beta,
                                       const QuadratureConfig& cfg);

// Posterior expectation E_w[g(w)] under the ensemble weights.
double posterior_expect(const PosteriorEnsemble& ens,
                        const std::function<double(std::span<const double>)>& g);

// Leave-one-out expectation E^(i)[g] by importance reweighting with
// p(X_i | w)^{-beta}; g_values holds g(w_m) for every draw. n_eff below
// neff_floor sets the warning flag (never throws for that).
LooExpect loo_expect(const PosteriorEnsemble& ens,
                     std::span<const double> g_values, int i,
                     double neff_floor = 0.0);

// Text snapshot of an ensemble (version-tagged; see docs/file-formats.md).
// Draws and weights round-trip bit-exactly; the log-likelihood cache is
// rebuilt against (model, data) on load and chain diagnostics are not
// persisted.
void save_ensemble(const std::string& path, const PosteriorEnsemble& ens);
PosteriorEnsemble load_ensemble(const std::string& path,
                                const ModelSpec& model, const Dataset& data);

}  // namespace slt
