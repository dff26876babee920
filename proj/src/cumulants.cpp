#include "slt/cumulants.hpp"

#include <cmath>
#include <string>

#include "slt/detail/parallel.hpp"

namespace slt {
namespace {

void require_training_data(const PosteriorEnsemble& ens, const char* who) {
  if (ens.loglik.n < 1)
    throw ValidationError(std::string(who) +
                          ": ensemble was built on an empty dataset");
}

}  // namespace

CumulantSet functional_cumulants(const PosteriorEnsemble& ens) {
  require_training_data(ens, "functional_cumulants");
  const kernels::SampleMoments sm =
      kernels::per_sample_moments(ens.loglik, ens.nw.w);
  CumulantSet cs;
  cs.n = ens.loglik.n;
  cs.ell1 = sm.c;
  cs.ell2 = sm.s2;
  cs.ell3 = sm.s3;
  cs.ell4 = sm.s4;
  std::vector<double> k4(cs.ell4.size());
  for (std::size_t i = 0; i < k4.size(); ++i)
    k4[i] = cs.ell4[i] - 3.0 * cs.ell2[i] * cs.ell2[i];
  cs.y1 = pairwise_mean(cs.ell1);
  cs.y2 = pairwise_mean(cs.ell2);
  cs.y3 = pairwise_mean(cs.ell3);
  cs.y4 = pairwise_mean(k4);
  cs.v_n = static_cast<double>(cs.n) * cs.y2;
  return cs;
}

CumulantSet functional_cumulants_uncentered(const PosteriorEnsemble& ens) {
  require_training_data(ens, "functional_cumulants_uncentered");
  const int n = ens.loglik.n, m = ens.m;
  CumulantSet cs;
  cs.n = n;
  cs.ell1.resize(n);
  cs.ell2.resize(n);
  cs.ell3.resize(n);
  cs.ell4.resize(n);
  std::vector<double> k4(static_cast<std::size_t>(n));
  detail::parallel_for(n, [&](int i) {
    const auto row = ens.loglik.row(i);
    double u1 = 0.0, u2 = 0.0, u3 = 0.0, u4 = 0.0;
    for (int mm = 0; mm < m; ++mm) {
      const double v = row[mm], w = ens.nw.w[mm];
      const double v2 = v * v;
      u1 += w * v;
      u2 += w * v2;
      u3 += w * v2 * v;
      u4 += w * v2 * v2;
    }
    cs.ell1[i] = u1;
    cs.ell2[i] = u2 - u1 * u1;
    cs.ell3[i] = u3 - 3.0 * u2 * u1 + 2.0 * u1 * u1 * u1;
    cs.ell4[i] = u4 - 4.0 * u3 * u1 + 6.0 * u2 * u1 * u1 - 3.0 * u1 * u1 * u1 * u1;
    k4[i] = cs.ell4[i] - 3.0 * cs.ell2[i] * cs.ell2[i];
  });
  cs.y1 = pairwise_mean(cs.ell1);
  cs.y2 = pairwise_mean(cs.ell2);
  cs.y3 = pairwise_mean(cs.ell3);
  cs.y4 = pairwise_mean(k4);
  cs.v_n = static_cast<double>(cs.n) * cs.y2;
  return cs;
}

double generating_function(const PosteriorEnsemble& ens, double alpha) {
  require_training_data(ens, "generating_function");
  const double window = 1.0 + ens.beta;
  if (!(std::abs(alpha) <= window + 1e-12))
    throw ValidationError("generating_function: alpha = " +
                          format_double(alpha) +
                          " outside the supported window [-(1+beta), 1+beta]"
                          " with beta = " + format_double(ens.beta));
  const std::vector<double> terms =
      kernels::per_sample_alpha_lse(ens.loglik, ens.nw.log_w, alpha);
  return pairwise_mean(terms);
}

}  // namespace slt
