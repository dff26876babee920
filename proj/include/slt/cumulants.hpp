// Cumulants of the per-sample log-likelihood under the posterior.
//
// The generating function is F(alpha) = (1/n) sum_i log E_w[p(X_i|w)^alpha],
// a convex function of alpha with F(0) = 0. Its derivatives at 0 are the
// per-sample cumulants Y_k averaged over the dataset; the toolkit computes
// them from centered moments, which is numerically far better conditioned
// than differencing raw moments. The raw-moment route is kept as an
// independent cross-check.
#pragma once

#include <vector>

#include "slt/posterior.hpp"

namespace slt {

struct CumulantSet {
  int n = 0;
  double y1 = 0.0;  // mean_i E_w[ll_i]
  double y2 = 0.0;  // mean_i E_w[(ll_i - c_i)^2]
  double y3 = 0.0;  // mean_i E_w[(ll_i - c_i)^3]
  double y4 = 0.0;  // mean_i { E_w[(ll_i - c_i)^4] - 3 E_w[(ll_i - c_i)^2]^2 }
  double v_n = 0.0;  // n * y2, bit-identical to that product
  // Per-sample values: ell1 = c_i, ellk = k-th centered moment (k = 2..4).
  std::vector<double> ell1, ell2, ell3, ell4;
};

// Centered-moment evaluation (the primary path). Requires a non-empty
// training dataset behind the ensemble's log-likelihood cache.
CumulantSet functional_cumulants(const PosteriorEnsemble& ens);

// Same quantities from raw power sums E_w[ll^k]; used to cross-check the
// centered path. Identical in exact arithmetic, not bit-identical.
CumulantSet functional_cumulants_uncentered(const PosteriorEnsemble& ens);

// F(alpha); alpha must lie in [-(1+beta), 1+beta]. F(0) is exactly the mean
// of n zero terms, and -F(1) is the Bayes training loss.
double generating_function(const PosteriorEnsemble& ens, double alpha);

}  // namespace slt
