// Data-parallel kernels over an ensemble of posterior draws.
//
// Every kernel ships in two builds: the default OpenMP-parallel one in
// slt::kernels, and a plain serial loop in slt::kernels::ref. Both call the
// same per-item worker on the same slot layout, so their outputs are
// bit-identical; the reference build exists to pin that down in tests and to
// baseline the benchmark target.
//
// Log-likelihood values are stored sample-major: row i holds
// log p(X_i | w_m) for all draws m contiguously, which keeps the per-sample
// reductions streaming.
#pragma once

#include <span>
#include <vector>

#include "slt/models.hpp"

namespace slt::kernels {

struct LoglikMatrix {
  int m = 0;  // draws
  int n = 0;  // samples
  std::vector<double> data;  // n rows of length m

  double at(int draw, int i) const {
    return data[static_cast<std::size_t>(i) * m + draw];
  }
  std::span<const double> row(int i) const {
    return std::span<const double>(
        data.data() + static_cast<std::size_t>(i) * m,
        static_cast<std::size_t>(m));
  }
};

// Per-sample weighted central moments of log p(X_i | w) under the ensemble
// weights: c = E[ll], sk = E[(ll - c)^k] for k = 2, 3, 4.
struct SampleMoments {
  std::vector<double> c, s2, s3, s4;  // each of length n
};

// Per-sample leave-one-out reweighting terms.
struct LooTerms {
  std::vector<double> log_ratio;  // lse(lwn + (1-beta) ll_i) - lse(lwn - beta ll_i)
  std::vector<double> n_eff;      // effective sample size of the tilted weights
};

// Predictive evaluation over a batch of test points.
struct PredictiveBatch {
  std::vector<double> log_pred;    // log E_w[p(x_t | w)] per test point
  std::vector<double> reg_sq_err;  // |R_true(x_t) - E_w[R(x_t, w)]|^2; empty
                                   // when the model has no regression view
};

struct NormalizedWeights {
  std::vector<double> log_w;  // log_weights - log_norm
  std::vector<double> w;      // exp(log_w); sums to 1 up to rounding
  double log_norm = 0.0;      // logsumexp of the raw log weights
};

// draws: m x d row-major. Evaluates log p(X_i | w_m) for every (i, m).
LoglikMatrix fill_loglik(const ModelSpec& model, const Dataset& data,
                         std::span<const double> draws, int m);

// Throws NumericalError when the raw weights have no finite mass.
NormalizedWeights normalize_log_weights(std::span<const double> log_weights);

// Per-draw total log likelihood: T_m = sum_i ll(m, i).
std::vector<double> per_draw_total(const LoglikMatrix& ll);

// t_i = logsumexp_m(lwn_m + alpha * ll(m, i)); throws NumericalError naming
// the sample index if a term is non-finite.
std::vector<double> per_sample_alpha_lse(const LoglikMatrix& ll,
                                         std::span<const double> lwn,
                                         double alpha);

SampleMoments per_sample_moments(const LoglikMatrix& ll,
                                 std::span<const double> w);

LooTerms loo_terms(const LoglikMatrix& ll, std::span<const double> lwn,
                   double beta);

// Weighted mean of the draws coordinate-wise (length d).
std::vector<double> weighted_param_mean(std::span<const double> draws, int m,
                                        int d, std::span<const double> w);

// For each test point: log predictive density, and (when both the model
// regression view and truth regression are present) the squared deviation of
// the posterior-mean regression from the true one.
PredictiveBatch predictive_batch(const ModelSpec& model,
                                 std::span<const double> draws, int m,
                                 const NormalizedWeights& nw,
                                 const Dataset& test_points,
                                 const TruthSpec* truth);

namespace ref {
LoglikMatrix fill_loglik(const ModelSpec& model, const Dataset& data,
                         std::span<const double> draws, int m);
std::vector<double> per_sample_alpha_lse(const LoglikMatrix& ll,
                                         std::span<const double> lwn,
                                         double alpha);
SampleMoments per_sample_moments(const LoglikMatrix& ll,
                                 std::span<const double> w);
LooTerms loo_terms(const LoglikMatrix& ll, std::span<const double> lwn,
                   double beta);
PredictiveBatch predictive_batch(const ModelSpec& model,
                                 std::span<const double> draws, int m,
                                 const NormalizedWeights& nw,
                                 const Dataset& test_points,
                                 const TruthSpec* truth);
}  // namespace ref

}  // namespace slt::kernels
