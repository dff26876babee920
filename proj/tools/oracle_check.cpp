#include "oracle_check.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "slt/common.hpp"
#include "slt/criteria.hpp"
#include "slt/cumulants.hpp"
#include "slt/models.hpp"
#include "slt/posterior.hpp"

namespace slt::tools {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Checker {
  std::vector<std::string>& lines;
  bool all_ok = true;

  void check(const std::string& name, bool ok, const std::string& detail) {
    lines.push_back(std::string(ok ? "[PASS] " : "[FAIL] ") + name + ": " +
                    detail);
    all_ok = all_ok && ok;
  }

  void close(const std::string& name, double got, double want, double rel_tol) {
    const double scale = std::max(1.0, std::abs(want));
    const double rel = std::abs(got - want) / scale;
    char buf[160];
    std::snprintf(buf, sizeof buf, "got %.10g, want %.10g (rel err %.2e, tol %.0e)",
                  got, want, rel, rel_tol);
    check(name, std::isfinite(got) && rel <= rel_tol, buf);
  }
};

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Closed-form criteria for the normal-location model x ~ N(w, 1) with a
// truncated N(0, s^2) prior on [-B, B], tempered at beta. Box truncation of
// the posterior itself is below double precision for these scales and is
// dropped; the prior's truncation constant is kept where it matters (free
// energy).
struct ConjugateForms {
  double beta, s, box;
  std::vector<double> x;

  double tau() const {
    return beta * static_cast<double>(x.size()) + 1.0 / (s * s);
  }
  double mu() const {
    double sx = 0.0;
    for (double v : x) sx += v;
    return beta * sx / tau();
  }
  double var() const { return 1.0 / tau(); }

  double log_e_pow(double xi, double alpha) const {
    // log E_w[p(xi|w)^alpha] under N(mu, var); needs 1 + alpha*var > 0.
    const double v = var();
    const double d = xi - mu();
    const double c = 1.0 + alpha * v;
    return -0.5 * alpha * kLog2Pi - 0.5 * std::log(c) - alpha * d * d / (2.0 * c);
  }

  double btl() const {
    double acc = 0.0;
    for (double xi : x) acc += log_e_pow(xi, 1.0);
    return -acc / static_cast<double>(x.size());
  }
  double gtl() const {
    const double v = var(), m = mu();
    double acc = 0.0;
    for (double xi : x) acc += (xi - m) * (xi - m);
    return 0.5 * kLog2Pi + 0.5 * v +
           acc / (2.0 * static_cast<double>(x.size()));
  }
  double v_n() const {
    const double v = var(), m = mu();
    double acc = 0.0;
    for (double xi : x) acc += v * v / 2.0 + (xi - m) * (xi - m) * v;
    return acc;
  }
  double waic() const {
    return btl() + beta * v_n() / static_cast<double>(x.size());
  }
  double cv() const {
    double acc = 0.0;
    for (double xi : x)
      acc += log_e_pow(xi, 1.0 - beta) - log_e_pow(xi, -beta);
    return -acc / static_cast<double>(x.size());
  }
  double dic1() const { return btl() + var(); }
  double dic2() const {
    const double v = var(), m = mu();
    double xbar = 0.0;
    for (double xi : x) xbar += xi;
    const double n = static_cast<double>(x.size());
    xbar /= n;
    const double e = xbar - m;
    return btl() + n * v * v + 2.0 * n * e * e * v;
  }
  // -log of the integral of prod p(xi|w)^beta * prior(w) over the box.
  double minus_log_marginal() const {
    const double n = static_cast<double>(x.size());
    double sxx = 0.0;
    for (double xi : x) sxx += xi * xi;
    const double t = tau(), m = mu();
    const double k = 0.5 * beta * sxx - 0.5 * t * m * m;
    const double c_prior = phi_cdf(box / s) - phi_cdf(-box / s);
    const double c_post =
        phi_cdf((box - m) * std::sqrt(t)) - phi_cdf((-box - m) * std::sqrt(t));
    return 0.5 * beta * n * kLog2Pi + k + std::log(s) + 0.5 * std::log(t) -
           std::log(c_post) + std::log(c_prior);
  }
};

void conjugate_checks(Checker& ck, double beta) {
  ModelConfig mc;
  mc.name = "regular_normal";
  const ModelBundle bundle = make_model(mc);
  const int n = 20;
  const Dataset data = sample_truth(bundle.truth, n, 123);

  Backend be;
  be.kind = Backend::Kind::quadrature;
  be.quad.points_per_dim = 4001;
  const PosteriorEnsemble ens = build_posterior(bundle.model, data, beta, be);

  ConjugateForms cf;
  cf.beta = beta;
  cf.s = bundle.model.prior_scale;
  cf.box = bundle.model.box_hi[0];
  cf.x.assign(data.samples.begin(), data.samples.end());

  const std::string tag = " (beta=" + std::to_string(beta).substr(0, 4) + ")";
  ck.close("conjugate btl" + tag, bayes_training_loss(ens), cf.btl(), 1e-6);
  ck.close("conjugate gtl" + tag, gibbs_training_loss(ens), cf.gtl(), 1e-6);
  ck.close("conjugate v_n" + tag, functional_variance(ens), cf.v_n(), 1e-6);
  ck.close("conjugate waic" + tag, waic(ens), cf.waic(), 1e-6);
  ck.close("conjugate cv2" + tag, cv_importance(ens).value, cf.cv(), 1e-6);
  ck.close("conjugate dic1" + tag, dic1(ens, bundle.model, data), cf.dic1(),
           1e-6);
  ck.close("conjugate dic2" + tag, dic2(ens), cf.dic2(), 1e-6);
  ck.close("refit cv1 matches cv2 on the grid" + tag,
           cv_refit(bundle.model, data, beta, be), cv_importance(ens).value,
           1e-8);

  if (beta == 1.0) {
    const FreeEnergyResult fe = free_energy(
        bundle.model, data, default_beta_grid(), be, /*seed=*/7);
    const double want = cf.minus_log_marginal();
    const double rel = std::abs(fe.value - want) / std::abs(want);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "ladder %.6g vs exact %.6g (rel err %.2e, tol 1e-02)",
                  fe.value, want, rel);
    ck.check("free energy ladder", rel <= 1e-2, buf);
  }
}

PosteriorEnsemble synthetic_ensemble(int m, int n, double beta,
                                     bool uniform_weights) {
  PosteriorEnsemble ens;
  ens.d = 1;
  ens.m = m;
  ens.beta = beta;
  ens.provenance =
      uniform_weights ? Provenance::mcmc : Provenance::quadrature;
  auto rng = make_rng(derive_seed(99, 0x0c1e, uniform_weights ? 1 : 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  ens.draws.resize(static_cast<std::size_t>(m));
  for (auto& v : ens.draws) v = gauss(rng);
  ens.log_weights.assign(static_cast<std::size_t>(m), 0.0);
  if (!uniform_weights)
    for (auto& v : ens.log_weights) v = 0.7 * gauss(rng);
  ens.loglik.m = m;
  ens.loglik.n = n;
  ens.loglik.data.resize(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      ens.loglik.data[static_cast<std::size_t>(i) * m + j] =
          -1.1 - 0.9 * std::abs(gauss(rng)) + 0.3 * gauss(rng);
  ens.nw = kernels::normalize_log_weights(ens.log_weights);
  return ens;
}

void identity_checks(Checker& ck) {
  const double beta = 0.8;
  const int m = 64, n = 25;
  PosteriorEnsemble ens = synthetic_ensemble(m, n, beta, false);

  const CumulantSet cum = functional_cumulants(ens);
  ck.close("generating function vanishes at 0", generating_function(ens, 0.0),
           0.0, 1e-14);
  ck.close("waic assembles from btl and v_n", waic(ens),
           bayes_training_loss(ens) + beta * cum.v_n / n, 1e-15);
  ck.close("v_n is n times y2", cum.v_n, static_cast<double>(n) * cum.y2, 0.0);
  ck.close("cv2 equals the generating-function difference",
           cv_importance(ens).value,
           generating_function(ens, -beta) - generating_function(ens, 1.0 - beta),
           1e-10);

  const CumulantSet raw = functional_cumulants_uncentered(ens);
  ck.close("centered vs raw-moment y2", cum.y2, raw.y2, 1e-10);
  ck.close("centered vs raw-moment y3", cum.y3, raw.y3, 1e-10);
  ck.close("centered vs raw-moment y4", cum.y4, raw.y4, 1e-10);

  // Adding a per-sample constant to the log likelihood shifts y1 by the mean
  // constant and leaves y2..y4 unchanged.
  PosteriorEnsemble shifted = ens;
  std::vector<double> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i)] = 0.2 * std::sin(1.0 + i);
    for (int j = 0; j < m; ++j)
      shifted.loglik.data[static_cast<std::size_t>(i) * m + j] +=
          c[static_cast<std::size_t>(i)];
  }
  const CumulantSet cs = functional_cumulants(shifted);
  ck.close("shift moves y1 by the mean shift", cs.y1,
           cum.y1 + sample_mean(c), 1e-12);
  ck.close("shift leaves y2 alone", cs.y2, cum.y2, 1e-10);
  ck.close("shift leaves y3 alone", cs.y3, cum.y3, 1e-10);
  ck.close("shift leaves y4 alone", cs.y4, cum.y4, 1e-10);
}

void backend_checks(Checker& ck) {
  ModelConfig mc;
  mc.name = "regular_normal";
  const ModelBundle bundle = make_model(mc);
  const Dataset data = sample_truth(bundle.truth, 10, 7);

  Backend point;
  point.kind = Backend::Kind::quadrature;
  point.quad.points_per_dim = 1;
  const PosteriorEnsemble p = build_posterior(bundle.model, data, 1.0, point);
  ck.check("one-cell grid sits at the box center",
           p.m == 1 && p.draws.size() == 1 && p.draws[0] == 0.0 &&
               p.nw.w.size() == 1 && std::abs(p.nw.w[0] - 1.0) < 1e-15,
           "m=1, center draw, unit weight");

  Backend mcmc;
  mcmc.kind = Backend::Kind::mcmc;
  mcmc.mcmc.chains = 2;
  mcmc.mcmc.burn_in_steps = 200;
  mcmc.mcmc.thin = 5;
  mcmc.mcmc.draws_per_chain = 50;
  mcmc.mcmc.proposal_scale = 0.5;
  mcmc.mcmc.seed = 11;
  const PosteriorEnsemble s = build_posterior(bundle.model, data, 1.0, mcmc);
  double acc = sample_mean(s.chain_accept);
  bool uniform = true;
  for (double lw : s.log_weights) uniform = uniform && lw == 0.0;
  char buf[120];
  std::snprintf(buf, sizeof buf, "acceptance %.3f, uniform weights %s", acc,
                uniform ? "yes" : "no");
  ck.check("sampler produces usable chains",
           s.m == 100 && uniform && acc > 0.05 && acc < 0.95, buf);
}

}  // namespace

bool run_oracle_check(std::vector<std::string>& lines) {
  Checker ck{lines};
  conjugate_checks(ck, 1.0);
  conjugate_checks(ck, 0.7);
  identity_checks(ck);
  backend_checks(ck);
  lines.push_back(ck.all_ok ? "oracle check: all checks passed"
                            : "oracle check: FAILURES PRESENT");
  return ck.all_ok;
}

}  // namespace slt::tools
