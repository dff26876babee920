#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "slt/common.hpp"
#include "slt/cumulants.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"

using namespace slt;

namespace {

// Synthetic ensemble with O(1) log-likelihood values, small enough that the
// oracle below can work in long double without cancellation trouble.
PosteriorEnsemble small_ensemble(std::uint64_t seed, int m = 48, int n = 12,
                                 double beta = 0.9) {
  PosteriorEnsemble ens;
  ens.d = 1;
  ens.m = m;
  ens.beta = beta;
  ens.provenance = Provenance::quadrature;
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ens.draws.resize(static_cast<std::size_t>(m));
  for (auto& v : ens.draws) v = gauss(rng);
  ens.log_weights.resize(static_cast<std::size_t>(m));
  for (auto& v : ens.log_weights) v = 0.4 * gauss(rng);
  ens.loglik.m = m;
  ens.loglik.n = n;
  ens.loglik.data.resize(static_cast<std::size_t>(m) * n);
  for (auto& v : ens.loglik.data) v = -1.0 + 0.6 * gauss(rng);
  ens.nw = kernels::normalize_log_weights(ens.log_weights);
  return ens;
}

// Long-double evaluation of K_i(alpha) = log E_w[exp(alpha * ll_i)], the
// per-sample cumulant generating function of the weighted draw distribution.
long double k_alpha(const PosteriorEnsemble& ens, int i, long double alpha) {
  const auto row = ens.loglik.row(i);
  long double mx = -1e400L;
  for (int m = 0; m < ens.m; ++m) {
    const long double t = static_cast<long double>(ens.nw.log_w[m]) +
                          alpha * static_cast<long double>(row[m]);
    if (t > mx) mx = t;
  }
  long double s = 0.0L;
  for (int m = 0; m < ens.m; ++m) {
    const long double t = static_cast<long double>(ens.nw.log_w[m]) +
                          alpha * static_cast<long double>(row[m]);
    s += expl(t - mx);
  }
  return mx + logl(s);
}

// Finite-difference cumulants of sample i: central stencils on K_i around 0.
struct FdCumulants {
  double k1, k2, k3, k4;
};

FdCumulants fd_cumulants(const PosteriorEnsemble& ens, int i, long double h) {
  const long double k0 = k_alpha(ens, i, 0.0L);
  const long double kp1 = k_alpha(ens, i, h), km1 = k_alpha(ens, i, -h);
  const long double kp2 = k_alpha(ens, i, 2 * h), km2 = k_alpha(ens, i, -2 * h);
  FdCumulants out;
  out.k1 = static_cast<double>((kp1 - km1) / (2 * h));
  out.k2 = static_cast<double>((kp1 - 2 * k0 + km1) / (h * h));
  out.k3 = static_cast<double>((kp2 - 2 * kp1 + 2 * km1 - km2) / (2 * h * h * h));
  out.k4 =
      static_cast<double>((kp2 - 4 * kp1 + 6 * k0 - 4 * km1 + km2) / (h * h * h * h));
  return out;
}

}  // namespace

TEST_CASE("cumulants are the derivatives of the generating function") {
  // The centered-moment implementation must match high-precision finite
  // differences of K_i at the origin: k1 = mean, k2 = variance, k3 = third
  // central moment, k4 = fourth minus three variance-squared. Tolerances sit
  // orders of magnitude below the size of any formula mistake (which would
  // show at the scale of the moments themselves, ~0.1).
  const PosteriorEnsemble ens = small_ensemble(1234);
  const CumulantSet cs = functional_cumulants(ens);
  const long double h = 3e-3L;

  double fd_y1 = 0.0, fd_y2 = 0.0, fd_y3 = 0.0, fd_y4 = 0.0;
  for (int i = 0; i < cs.n; ++i) {
    const FdCumulants fd = fd_cumulants(ens, i, h);
    CHECK(cs.ell1[i] == doctest::Approx(fd.k1).epsilon(1e-6).scale(1));
    CHECK(cs.ell2[i] == doctest::Approx(fd.k2).epsilon(1e-6).scale(1));
    CHECK(cs.ell3[i] == doctest::Approx(fd.k3).epsilon(1e-5).scale(1));
    CHECK(cs.ell4[i] - 3.0 * cs.ell2[i] * cs.ell2[i] ==
          doctest::Approx(fd.k4).epsilon(1e-4).scale(1));
    fd_y1 += fd.k1;
    fd_y2 += fd.k2;
    fd_y3 += fd.k3;
    fd_y4 += fd.k4;
  }
  const double n = cs.n;
  CHECK(cs.y1 == doctest::Approx(fd_y1 / n).epsilon(1e-6).scale(1));
  CHECK(cs.y2 == doctest::Approx(fd_y2 / n).epsilon(1e-6).scale(1));
  CHECK(cs.y3 == doctest::Approx(fd_y3 / n).epsilon(1e-5).scale(1));
  CHECK(cs.y4 == doctest::Approx(fd_y4 / n).epsilon(1e-4).scale(1));
  CHECK(cs.v_n == n * cs.y2);
}

TEST_CASE("centered and raw-moment paths agree on many random ensembles") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    CAPTURE(seed);
    const PosteriorEnsemble ens = small_ensemble(derive_seed(5, seed));
    const CumulantSet a = functional_cumulants(ens);
    const CumulantSet b = functional_cumulants_uncentered(ens);
    CHECK(a.y1 == doctest::Approx(b.y1).epsilon(1e-12));
    CHECK(a.y2 == doctest::Approx(b.y2).epsilon(1e-10));
    CHECK(a.y3 == doctest::Approx(b.y3).epsilon(1e-9));
    CHECK(a.y4 == doctest::Approx(b.y4).epsilon(1e-9).scale(1));
  }
}

TEST_CASE("generating function is convex over its window") {
  auto rng = make_rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const PosteriorEnsemble ens = small_ensemble(derive_seed(6, trial));
    std::uniform_real_distribution<double> unif(-(1.0 + ens.beta),
                                                1.0 + ens.beta);
    const double a1 = unif(rng), a2 = unif(rng);
    const double mid = 0.5 * (a1 + a2);
    const double lhs = generating_function(ens, mid);
    const double rhs = 0.5 * (generating_function(ens, a1) +
                              generating_function(ens, a2));
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("generating function window and guards") {
  const PosteriorEnsemble ens = small_ensemble(9);
  CHECK(generating_function(ens, 0.0) == doctest::Approx(0.0).epsilon(1e-14).scale(1));
  CHECK_NOTHROW((void)generating_function(ens, 1.0 + ens.beta));
  CHECK_NOTHROW((void)generating_function(ens, -(1.0 + ens.beta)));
  CHECK_THROWS_AS((void)generating_function(ens, 1.0 + ens.beta + 0.1),
                  ValidationError);

  PosteriorEnsemble empty = ens;
  empty.loglik.n = 0;
  empty.loglik.data.clear();
  CHECK_THROWS_AS((void)functional_cumulants(empty), ValidationError);
  CHECK_THROWS_AS((void)generating_function(empty, 0.5), ValidationError);
}

TEST_CASE("y2 decays like 1/n on the conjugate family") {
  // For the unit-variance location family the summed functional variance
  // V_n stays O(1), i.e. y2 = V_n / n shrinks like 1/n. Matched seeds make
  // the n = 100 dataset a prefix of the n = 400 one.
  ModelConfig cfg;
  cfg.name = "regular_normal";
  const ModelBundle b = make_model(cfg);
  Backend be;
  be.kind = Backend::Kind::quadrature;
  be.quad.points_per_dim = 2001;

  const Dataset d100 = sample_truth(b.truth, 100, 55);
  const Dataset d400 = sample_truth(b.truth, 400, 55);
  const CumulantSet c100 =
      functional_cumulants(build_posterior(b.model, d100, 1.0, be));
  const CumulantSet c400 =
      functional_cumulants(build_posterior(b.model, d400, 1.0, be));
  const double ratio = c100.y2 / c400.y2;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.3);
  // And V_n itself stays put (the 2 nu invariant, here 2 * 1/2 = 1).
  CHECK(c100.v_n == doctest::Approx(1.0).epsilon(0.3).scale(1));
  CHECK(c400.v_n == doctest::Approx(1.0).epsilon(0.3).scale(1));
}
