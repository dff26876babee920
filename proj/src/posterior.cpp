#include "slt/posterior.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "slt/detail/parallel.hpp"

namespace slt {
namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double log_target(const ModelSpec& model, const Dataset& data, double beta,
                  std::span<const double> w) {
  double total = 0.0;
  for (int i = 0; i < data.n; ++i) total += model.log_density_fn(data.sample(i), w);
  return beta * total + model.log_prior_fn(w);
}

bool in_box(const ModelSpec& model, std::span<const double> w) {
  for (int j = 0; j < model.d; ++j)
    if (!(w[j] >= model.box_lo[j] && w[j] <= model.box_hi[j])) return false;
  return true;
}

std::string format_param(std::span<const double> w) {
  std::string s = "(";
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j) s += ", ";
    s += format_double(w[j]);
  }
  return s + ")";
}

void finish_ensemble(PosteriorEnsemble& ens, const ModelSpec& model,
                     const Dataset& data) {
  ens.loglik = kernels::fill_loglik(model, data, ens.draws, ens.m);
  ens.nw = kernels::normalize_log_weights(ens.log_weights);
}

std::uint64_t hash_config(const ModelSpec& model, const Dataset& data,
                          double beta, const std::string& backend_desc) {
  std::string s = model.name + "|beta=" + format_double(beta) + "|" +
                  backend_desc + "|data_seed=" + std::to_string(data.seed) +
                  "|n=" + std::to_string(data.n);
  return fnv1a64(s);
}

}  // namespace

PosteriorEnsemble metropolis_sample(const ModelSpec& model,
                                    const Dataset& data, double beta,
                                    const McmcConfig& cfg) {
  if (!(beta > 0))
    throw ValidationError("metropolis_sample: beta must be positive");
  if (cfg.chains < 1 || cfg.burn_in_steps < 1 || cfg.thin < 1 ||
      cfg.draws_per_chain < 1)
    throw ValidationError("metropolis_sample: all chain counts must be >= 1");
  if (!(cfg.proposal_scale > 0))
    throw ValidationError("metropolis_sample: proposal_scale must be positive");

  PosteriorEnsemble ens;
  ens.d = model.d;
  ens.m = cfg.chains * cfg.draws_per_chain;
  ens.beta = beta;
  ens.provenance = Provenance::mcmc;
  ens.draws.resize(static_cast<std::size_t>(ens.m) * ens.d);
  ens.log_weights.assign(static_cast<std::size_t>(ens.m), 0.0);
  ens.chain_accept.resize(cfg.chains);

  detail::parallel_for(cfg.chains, [&](int c) {
    auto rng = make_rng(derive_seed(cfg.seed, 0xc4a1u, static_cast<std::uint64_t>(c)));
    std::vector<double> w(model.d), prop(model.d);
    sample_prior(model, rng, w);
    double lt = log_target(model, data, beta, w);
    if (!std::isfinite(lt))
      throw NumericalError(
          "metropolis_sample: non-finite target at initial state " +
          format_param(w) + " (chain " + std::to_string(c) + ")");

    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const long total =
        cfg.burn_in_steps + static_cast<long>(cfg.draws_per_chain) * cfg.thin;
    long accepted = 0;
    int recorded = 0;
    double* out = ens.draws.data() +
                  static_cast<std::size_t>(c) * cfg.draws_per_chain * model.d;
    for (long s = 1; s <= total; ++s) {
      for (int j = 0; j < model.d; ++j)
        prop[j] = w[j] + cfg.proposal_scale * nd(rng);
      if (in_box(model, prop)) {
        const double ltp = log_target(model, data, beta, prop);
        if (ltp >= lt || std::log(unif(rng)) < ltp - lt) {
          w.swap(prop);
          lt = ltp;
          ++accepted;
        }
      }
      if (s > cfg.burn_in_steps && (s - cfg.burn_in_steps) % cfg.thin == 0) {
        for (int j = 0; j < model.d; ++j)
          out[static_cast<std::size_t>(recorded) * model.d + j] = w[j];
        ++recorded;
      }
    }
    ens.chain_accept[c] = static_cast<double>(accepted) / static_cast<double>(total);
  });

  for (int c = 0; c < cfg.chains; ++c) {
    if (ens.chain_accept[c] < 0.05)
      ens.warnings.push_back("chain " + std::to_string(c) +
                             " acceptance rate very low: " +
                             format_double(ens.chain_accept[c]));
    else if (ens.chain_accept[c] > 0.95)
      ens.warnings.push_back("chain " + std::to_string(c) +
                             " acceptance rate very high: " +
                             format_double(ens.chain_accept[c]));
  }

  finish_ensemble(ens, model, data);
  ens.config_hash = hash_config(
      model, data, beta,
      "mcmc|chains=" + std::to_string(cfg.chains) +
          "|burn=" + std::to_string(cfg.burn_in_steps) +
          "|thin=" + std::to_string(cfg.thin) +
          "|draws=" + std::to_string(cfg.draws_per_chain) +
          "|step=" + format_double(cfg.proposal_scale) +
          "|seed=" + std::to_string(cfg.seed));
  return ens;
}

PosteriorEnsemble quadrature_posterior(const ModelSpec& model,
                                       const Dataset& data, double beta,
                                       const QuadratureConfig& cfg) {
  if (!(beta >= 0))
    throw ValidationError("quadrature_posterior: beta must be >= 0");
  if (model.d > 2)
    throw ValidationError("quadrature_posterior: grids are supported for "
                          "d <= 2 only (model has d = " +
                          std::to_string(model.d) + "); use the mcmc backend");
  if (cfg.points_per_dim < 1)
    throw ValidationError("quadrature_posterior: points_per_dim must be >= 1");

  const int g = cfg.points_per_dim;
  const long m_long = (model.d == 1) ? g : static_cast<long>(g) * g;
  const double bytes =
      static_cast<double>(m_long) * (model.d + std::max(data.n, 1)) * 8.0;
  if (bytes > 3.5e9)
    throw ValidationError("quadrature_posterior: grid would need about " +
                          std::to_string(static_cast<long>(bytes / 1e6)) +
                          " MB; reduce points_per_dim or n");
  const int m = static_cast<int>(m_long);

  PosteriorEnsemble ens;
  ens.d = model.d;
  ens.m = m;
  ens.beta = beta;
  ens.provenance = Provenance::quadrature;
  ens.draws.resize(static_cast<std::size_t>(m) * model.d);

  double log_vol = 0.0;
  std::vector<double> h(model.d);
  for (int j = 0; j < model.d; ++j) {
    h[j] = (model.box_hi[j] - model.box_lo[j]) / g;
    log_vol += std::log(h[j]);
  }
  if (model.d == 1) {
    for (int k = 0; k < g; ++k)
      ens.draws[k] = model.box_lo[0] + (k + 0.5) * h[0];
  } else {
    std::size_t idx = 0;
    for (int k0 = 0; k0 < g; ++k0) {
      const double w0 = model.box_lo[0] + (k0 + 0.5) * h[0];
      for (int k1 = 0; k1 < g; ++k1) {
        ens.draws[idx++] = w0;
        ens.draws[idx++] = model.box_lo[1] + (k1 + 0.5) * h[1];
      }
    }
  }

  ens.loglik = kernels::fill_loglik(model, data, ens.draws, m);
  const std::vector<double> totals = kernels::per_draw_total(ens.loglik);
  ens.log_weights.resize(m);
  for (int mm = 0; mm < m; ++mm)
    ens.log_weights[mm] =
        beta * totals[mm] + model.log_prior_fn(ens.draw(mm)) + log_vol;
  ens.nw = kernels::normalize_log_weights(ens.log_weights);
  ens.config_hash =
      hash_config(model, data, beta,
                  "quadrature|g=" + std::to_string(cfg.points_per_dim));
  return ens;
}

PosteriorEnsemble build_posterior(const ModelSpec& model, const Dataset& data,
                                  double beta, const Backend& backend) {
  if (backend.kind == Backend::Kind::mcmc)
    return metropolis_sample(model, data, beta, backend.mcmc);
  return quadrature_posterior(model, data, beta, backend.quad);
}

Backend with_seed(Backend backend, std::uint64_t seed) {
  backend.mcmc.seed = seed;
  return backend;
}

double posterior_expect(
    const PosteriorEnsemble& ens,
    const std::function<double(std::span<const double>)>& g) {
  double acc = 0.0;
  for (int mm = 0; mm < ens.m; ++mm) acc += ens.nw.w[mm] * g(ens.draw(mm));
  return acc;
}

LooExpect loo_expect(const PosteriorEnsemble& ens,
                     std::span<const double> g_values, int i,
                     double neff_floor) {
  if (static_cast<int>(g_values.size()) != ens.m)
    throw ValidationError("loo_expect: g_values must have one entry per draw");
  if (i < 0 || i >= ens.loglik.n)
    throw ValidationError("loo_expect: sample index out of range");
  const auto row = ens.loglik.row(i);
  double mx = -std::numeric_limits<double>::infinity();
  for (int mm = 0; mm < ens.m; ++mm)
    mx = std::max(mx, ens.nw.log_w[mm] - ens.beta * row[mm]);
  double s = 0.0, s2 = 0.0, acc = 0.0;
  for (int mm = 0; mm < ens.m; ++mm) {
    const double e = std::exp(ens.nw.log_w[mm] - ens.beta * row[mm] - mx);
    s += e;
    s2 += e * e;
    acc += e * g_values[mm];
  }
  if (!(s > 0) || !std::isfinite(s))
    throw NumericalError("loo_expect: tilted weights carry no finite mass at "
                         "sample " + std::to_string(i));
  LooExpect out;
  out.value = acc / s;
  out.n_eff = (s * s) / s2;
  out.low_n_eff = out.n_eff < neff_floor;
  return out;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_file(const std::string& path, const std::string& why) {
  throw ValidationError("load_ensemble: " + path + ": " + why);
}

}  // namespace

void save_ensemble(const std::string& path, const PosteriorEnsemble& ens) {
  std::ofstream out(path);
  if (!out) throw ValidationError("save_ensemble: cannot open " + path);
  out << "sltens 1\n";
  out << "beta " << format_double(ens.beta) << "\n";
  out << "provenance "
      << (ens.provenance == Provenance::mcmc ? "mcmc" : "quadrature") << "\n";
  out << "d " << ens.d << "\n";
  out << "m " << ens.m << "\n";
  out << "n " << ens.loglik.n << "\n";
  out << "config_hash " << ens.config_hash << "\n";
  out << "draws\n";
  for (int mm = 0; mm < ens.m; ++mm) {
    const auto w = ens.draw(mm);
    for (int j = 0; j < ens.d; ++j)
      out << (j ? " " : "") << format_double(w[j]);
    out << "\n";
  }
  out << "log_weights\n";
  for (int mm = 0; mm < ens.m; ++mm)
    out << format_double(ens.log_weights[mm]) << "\n";
  out << "end\n";
  if (!out) throw ValidationError("save_ensemble: write to " + path + " failed");
}

PosteriorEnsemble load_ensemble(const std::string& path,
                                const ModelSpec& model, const Dataset& data) {
  std::ifstream in(path);
  if (!in) bad_file(path, "cannot open file");
  std::string tok;
  int version = 0;
  if (!(in >> tok >> version) || tok != "sltens")
    bad_file(path, "not an ensemble file (missing 'sltens' header)");
  if (version != 1)
    bad_file(path, "unsupported format version " + std::to_string(version));

  PosteriorEnsemble ens;
  std::string prov;
  int n_stored = -1;
  auto expect_key = [&](const char* key, auto& value) {
    if (!(in >> tok >> value) || tok != key)
      bad_file(path, std::string("expected '") + key + "' field");
  };
  expect_key("beta", ens.beta);
  if (!(in >> tok >> prov) || tok != "provenance")
    bad_file(path, "expected 'provenance' field");
  if (prov == "mcmc")
    ens.provenance = Provenance::mcmc;
  else if (prov == "quadrature")
    ens.provenance = Provenance::quadrature;
  else
    bad_file(path, "unknown provenance '" + prov + "'");
  expect_key("d", ens.d);
  expect_key("m", ens.m);
  expect_key("n", n_stored);
  expect_key("config_hash", ens.config_hash);

  if (ens.d != model.d)
    bad_file(path, "parameter dimension " + std::to_string(ens.d) +
                       " does not match the model (d = " +
                       std::to_string(model.d) + ")");
  if (n_stored != data.n)
    bad_file(path, "stored training size n = " + std::to_string(n_stored) +
                       " does not match the dataset (n = " +
                       std::to_string(data.n) + ")");
  if (ens.m < 1) bad_file(path, "ensemble must contain at least one draw");
  if (!(ens.beta >= 0) || !std::isfinite(ens.beta))
    bad_file(path, "invalid beta");

  if (!(in >> tok) || tok != "draws") bad_file(path, "expected 'draws' block");
  ens.draws.resize(static_cast<std::size_t>(ens.m) * ens.d);
  for (std::size_t k = 0; k < ens.draws.size(); ++k)
    if (!(in >> ens.draws[k])) bad_file(path, "truncated draws block");
  for (int mm = 0; mm < ens.m; ++mm)
    if (!in_box(model, ens.draw(mm)))
      bad_file(path, "draw " + std::to_string(mm) +
                         " lies outside the model domain box");

  if (!(in >> tok) || tok != "log_weights")
    bad_file(path, "expected 'log_weights' block");
  ens.log_weights.resize(static_cast<std::size_t>(ens.m));
  for (int mm = 0; mm < ens.m; ++mm) {
    if (!(in >> ens.log_weights[mm])) bad_file(path, "truncated log_weights block");
    if (std::isnan(ens.log_weights[mm]))
      bad_file(path, "log weight " + std::to_string(mm) + " is NaN");
  }
  if (ens.provenance == Provenance::mcmc) {
    for (int mm = 1; mm < ens.m; ++mm)
      if (ens.log_weights[mm] != ens.log_weights[0])
        bad_file(path, "mcmc ensembles must carry uniform weights");
  }
  if (!(in >> tok) || tok != "end") bad_file(path, "missing 'end' marker");

  finish_ensemble(ens, model, data);
  return ens;
}

}  // namespace slt
