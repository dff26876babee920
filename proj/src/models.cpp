#include "slt/models.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace slt {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Box-truncated isotropic Gaussian prior. The normalization is exact
// (per-coordinate Gaussian mass inside [lo, hi]).
std::function<double(std::span<const double>)> make_truncated_gauss_prior(
    std::vector<double> lo, std::vector<double> hi, double scale) {
  const int d = static_cast<int>(lo.size());
  double log_norm = 0.0;
  for (int j = 0; j < d; ++j) {
    const double z =
        std_normal_cdf(hi[j] / scale) - std_normal_cdf(lo[j] / scale);
    log_norm += 0.5 * (kLog2Pi + 2.0 * std::log(scale)) + std::log(z);
  }
  return [d, scale, log_norm](std::span<const double> w) {
    double q = 0.0;
    for (int j = 0; j < d; ++j) q += w[j] * w[j];
    return -q / (2.0 * scale * scale) - log_norm;
  };
}

void tanh_regress(std::span<const double> w, int h, std::span<const double> x,
                  std::span<double> out) {
  out[0] = out[1] = out[2] = 0.0;
  for (int u = 0; u < h; ++u) {
    const double* a = w.data() + 6 * u;
    const double* b = a + 3;
    const double t = std::tanh(b[0] * x[0] + b[1] * x[1] + b[2] * x[2]);
    out[0] += a[0] * t;
    out[1] += a[1] * t;
    out[2] += a[2] * t;
  }
}

struct FamilyDefaults {
  double prior_scale;
  double box_halfwidth;
};

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

ModelBundle make_regular_normal(const ModelConfig& cfg) {
  const FamilyDefaults def{10.0, 40.0};
  const double scale = cfg.prior_scale > 0 ? cfg.prior_scale : def.prior_scale;
  const double b = cfg.box_halfwidth > 0 ? cfg.box_halfwidth : def.box_halfwidth;
  std::vector<double> w0 = cfg.w0.empty() ? std::vector<double>{0.0} : cfg.w0;
  if (w0.size() != 1)
    fail("regular_normal: w0 must have exactly 1 entry, got " +
         std::to_string(w0.size()));
  if (std::abs(w0[0]) > b) fail("regular_normal: w0 outside domain box");

  ModelBundle out;
  ModelSpec& m = out.model;
  m.name = "regular_normal";
  m.d = 1;
  m.sample_dim = 1;
  m.box_lo = {-b};
  m.box_hi = {b};
  m.prior_scale = scale;
  m.log_prior_fn = make_truncated_gauss_prior(m.box_lo, m.box_hi, scale);
  m.log_density_fn = [](std::span<const double> x, std::span<const double> w) {
    const double r = x[0] - w[0];
    return -0.5 * kLog2Pi - 0.5 * r * r;
  };

  const double mu = w0[0];
  TruthSpec& t = out.truth;
  t.name = m.name;
  t.sample_dim = 1;
  t.sampler = [mu](std::mt19937_64& rng, std::span<double> s) {
    std::normal_distribution<double> nd(0.0, 1.0);
    s[0] = mu + nd(rng);
  };
  t.log_p0 = [mu](std::span<const double> x) {
    const double r = x[0] - mu;
    return -0.5 * kLog2Pi - 0.5 * r * r;
  };
  t.entropy = 0.5 * (kLog2Pi + 1.0);
  t.l0 = t.entropy;
  t.realizable = true;
  t.lambda = 0.5;
  t.w0 = w0;
  return out;
}

ModelBundle make_product_regression(const ModelConfig& cfg) {
  const FamilyDefaults def{1.0, 2.0};
  const double scale = cfg.prior_scale > 0 ? cfg.prior_scale : def.prior_scale;
  const double b = cfg.box_halfwidth > 0 ? cfg.box_halfwidth : def.box_halfwidth;
  std::vector<double> w0 = cfg.w0.empty() ? std::vector<double>{0.0, 0.0} : cfg.w0;
  if (w0.size() != 2)
    fail("product_regression: w0 must have exactly 2 entries, got " +
         std::to_string(w0.size()));
  for (double v : w0)
    if (std::abs(v) > b) fail("product_regression: w0 outside domain box");

  ModelBundle out;
  ModelSpec& m = out.model;
  m.name = "product_regression";
  m.d = 2;
  m.sample_dim = 2;
  m.box_lo = {-b, -b};
  m.box_hi = {b, b};
  m.prior_scale = scale;
  m.log_prior_fn = make_truncated_gauss_prior(m.box_lo, m.box_hi, scale);
  m.log_density_fn = [](std::span<const double> s, std::span<const double> w) {
    const double x = s[0], y = s[1];
    const double r = y - w[0] * w[1] * x;
    return -kLog2Pi - 0.5 * x * x - 0.5 * r * r;
  };
  RegressionView rv;
  rv.x_dim = 1;
  rv.out_dim = 1;
  rv.noise_sigma = 1.0;
  rv.predict = [](std::span<const double> x, std::span<const double> w,
                  std::span<double> out) { out[0] = w[0] * w[1] * x[0]; };
  m.regression = std::move(rv);

  const double u0 = w0[0] * w0[1];
  TruthSpec& t = out.truth;
  t.name = m.name;
  t.sample_dim = 2;
  t.sampler = [u0](std::mt19937_64& rng, std::span<double> s) {
    std::normal_distribution<double> nd(0.0, 1.0);
    s[0] = nd(rng);
    s[1] = u0 * s[0] + nd(rng);
  };
  t.log_p0 = [u0](std::span<const double> s) {
    const double x = s[0], y = s[1];
    const double r = y - u0 * x;
    return -kLog2Pi - 0.5 * x * x - 0.5 * r * r;
  };
  t.entropy = kLog2Pi + 1.0;
  t.l0 = t.entropy;
  t.realizable = true;
  t.lambda = (u0 == 0.0) ? 0.5 : 1.0;
  t.w0 = w0;
  t.regression_true = [u0](std::span<const double> x, std::span<double> out) {
    out[0] = u0 * x[0];
  };
  return out;
}

ModelBundle make_tanh_network(const ModelConfig& cfg) {
  const FamilyDefaults def{10.0, 40.0};
  const double scale = cfg.prior_scale > 0 ? cfg.prior_scale : def.prior_scale;
  const double b = cfg.box_halfwidth > 0 ? cfg.box_halfwidth : def.box_halfwidth;
  const int h = cfg.h, h0 = cfg.h0;
  const double sigma = cfg.sigma;
  if (h < 1) fail("tanh_network: h must be >= 1");
  if (h0 < 1 || h0 > h) fail("tanh_network: h0 must satisfy 1 <= h0 <= h");
  if (!(sigma > 0)) fail("tanh_network: sigma must be positive");

  std::vector<double> w0 = cfg.w0;
  if (w0.empty()) {
    if (h0 != 1)
      fail("tanh_network: no default truth for h0 = " + std::to_string(h0) +
           "; supply w0 with " + std::to_string(6 * h0) + " entries");
    w0 = {1.0, -0.6, 0.3, 0.5, -0.25, 0.4};
  }
  if (static_cast<int>(w0.size()) != 6 * h0)
    fail("tanh_network: w0 must have 6*h0 = " + std::to_string(6 * h0) +
         " entries, got " + std::to_string(w0.size()));
  for (double v : w0)
    if (std::abs(v) > b) fail("tanh_network: w0 outside domain box");

  ModelBundle out;
  ModelSpec& m = out.model;
  m.name = "tanh_network";
  m.d = 6 * h;
  m.sample_dim = 6;
  m.box_lo.assign(m.d, -b);
  m.box_hi.assign(m.d, b);
  m.prior_scale = scale;
  m.log_prior_fn = make_truncated_gauss_prior(m.box_lo, m.box_hi, scale);

  // log s(x) + log N(y; R(x,w), sigma^2 I), with s = N(0, 4 I).
  const double cx = -1.5 * (kLog2Pi + std::log(4.0));
  const double cy = -1.5 * (kLog2Pi + 2.0 * std::log(sigma));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  m.log_density_fn = [h, cx, cy, inv2s2](std::span<const double> s,
                                         std::span<const double> w) {
    double r[3];
    tanh_regress(w, h, s.first(3), r);
    const double xq = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    const double d0 = s[3] - r[0], d1 = s[4] - r[1], d2 = s[5] - r[2];
    return cx - xq / 8.0 + cy - (d0 * d0 + d1 * d1 + d2 * d2) * inv2s2;
  };
  RegressionView rv;
  rv.x_dim = 3;
  rv.out_dim = 3;
  rv.noise_sigma = sigma;
  rv.predict = [h](std::span<const double> x, std::span<const double> w,
                   std::span<double> out) { tanh_regress(w, h, x, out); };
  m.regression = std::move(rv);

  TruthSpec& t = out.truth;
  t.name = m.name;
  t.sample_dim = 6;
  t.sampler = [w0, h0, sigma](std::mt19937_64& rng, std::span<double> s) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int j = 0; j < 3; ++j) s[j] = 2.0 * nd(rng);
    double r[3];
    tanh_regress(w0, h0, s.first(3), r);
    for (int j = 0; j < 3; ++j) s[3 + j] = r[j] + sigma * nd(rng);
  };
  t.log_p0 = [w0, h0, cx, cy, inv2s2](std::span<const double> s) {
    double r[3];
    tanh_regress(w0, h0, s.first(3), r);
    const double xq = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    const double d0 = s[3] - r[0], d1 = s[4] - r[1], d2 = s[5] - r[2];
    return cx - xq / 8.0 + cy - (d0 * d0 + d1 * d1 + d2 * d2) * inv2s2;
  };
  t.entropy = 1.5 * (kLog2Pi + 1.0 + std::log(4.0)) +
              1.5 * (kLog2Pi + 1.0 + 2.0 * std::log(sigma));
  t.l0 = t.entropy;
  t.realizable = true;
  // Zero-padding the truth units embeds the optimal parameter exactly.
  std::vector<double> w0_model(static_cast<std::size_t>(m.d), 0.0);
  std::copy(w0.begin(), w0.end(), w0_model.begin());
  t.w0 = std::move(w0_model);
  t.regression_true = [w0, h0](std::span<const double> x,
                               std::span<double> out) {
    tanh_regress(w0, h0, x, out);
  };
  return out;
}

int out_of_box_coord(const ModelSpec& m, std::span<const double> w) {
  for (int j = 0; j < m.d; ++j)
    if (!(w[j] >= m.box_lo[j] && w[j] <= m.box_hi[j])) return j;
  return -1;
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {
      "regular_normal", "product_regression", "tanh_network"};
  return names;
}

ModelBundle make_model(const ModelConfig& cfg) {
  if (cfg.name == "regular_normal") return make_regular_normal(cfg);
  if (cfg.name == "product_regression") return make_product_regression(cfg);
  if (cfg.name == "tanh_network") return make_tanh_network(cfg);
  std::string known;
  for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
  fail("unknown model '" + cfg.name + "' (known models: " + known + ")");
}

double log_density(const ModelSpec& model, std::span<const double> x,
                   std::span<const double> w) {
  if (static_cast<int>(x.size()) != model.sample_dim)
    throw ValidationError("log_density: sample has " +
                          std::to_string(x.size()) + " entries, expected " +
                          std::to_string(model.sample_dim));
  if (static_cast<int>(w.size()) != model.d)
    throw ValidationError("log_density: parameter has " +
                          std::to_string(w.size()) + " entries, expected " +
                          std::to_string(model.d));
  if (int j = out_of_box_coord(model, w); j >= 0)
    throw ValidationError("log_density: coordinate " + std::to_string(j) +
                          " of w is outside the domain box [" +
                          format_double(model.box_lo[j]) + ", " +
                          format_double(model.box_hi[j]) + "]: " +
                          format_double(w[j]));
  return model.log_density_fn(x, w);
}

double log_prior(const ModelSpec& model, std::span<const double> w) {
  if (static_cast<int>(w.size()) != model.d)
    throw ValidationError("log_prior: parameter has " +
                          std::to_string(w.size()) + " entries, expected " +
                          std::to_string(model.d));
  if (int j = out_of_box_coord(model, w); j >= 0)
    throw ValidationError("log_prior: coordinate " + std::to_string(j) +
                          " of w is outside the domain box");
  return model.log_prior_fn(w);
}

void sample_prior(const ModelSpec& model, std::mt19937_64& rng,
                  std::span<double> w) {
  if (static_cast<int>(w.size()) != model.d)
    throw ValidationError("sample_prior: output span has wrong size");
  std::normal_distribution<double> nd(0.0, model.prior_scale);
  for (int j = 0; j < model.d; ++j) {
    double v;
    do {
      v = nd(rng);
    } while (!(v >= model.box_lo[j] && v <= model.box_hi[j]));
    w[j] = v;
  }
}

Dataset sample_truth(const TruthSpec& truth, int n, std::uint64_t seed) {
  if (n < 0) throw ValidationError("sample_truth: n must be >= 0");
  Dataset ds;
  ds.n = n;
  ds.sample_dim = truth.sample_dim;
  ds.seed = seed;
  ds.samples.resize(static_cast<std::size_t>(n) * truth.sample_dim);
  auto rng = make_rng(derive_seed(seed, 0xda7a));
  for (int i = 0; i < n; ++i) {
    std::span<double> s(ds.samples.data() +
                            static_cast<std::size_t>(i) * truth.sample_dim,
                        static_cast<std::size_t>(truth.sample_dim));
    truth.sampler(rng, s);
  }
  ds.ln = empirical_truth_loss(truth, ds);
  return ds;
}

double empirical_truth_loss(const TruthSpec& truth, const Dataset& data) {
  if (data.n == 0) return 0.0;
  std::vector<double> lp(static_cast<std::size_t>(data.n));
  for (int i = 0; i < data.n; ++i) lp[i] = truth.log_p0(data.sample(i));
  return -pairwise_mean(lp);
}

Dataset leave_one_out(const Dataset& data, int i, const TruthSpec* truth) {
  if (i < 0 || i >= data.n)
    throw ValidationError("leave_one_out: sample index out of range");
  Dataset out;
  out.n = data.n - 1;
  out.sample_dim = data.sample_dim;
  out.seed = data.seed;
  out.samples.reserve(static_cast<std::size_t>(out.n) * out.sample_dim);
  for (int k = 0; k < data.n; ++k) {
    if (k == i) continue;
    const auto s = data.sample(k);
    out.samples.insert(out.samples.end(), s.begin(), s.end());
  }
  if (truth != nullptr && out.n > 0) out.ln = empirical_truth_loss(*truth, out);
  return out;
}

KlEstimate kl_to_truth(const ModelSpec& model, const TruthSpec& truth,
                       std::span<const double> w, int test_size,
                       std::uint64_t seed) {
  if (test_size < 2)
    throw ValidationError("kl_to_truth: test_size must be >= 2");
  if (static_cast<int>(w.size()) != model.d)
    throw ValidationError("kl_to_truth: parameter has wrong size");
  if (int j = out_of_box_coord(model, w); j >= 0)
    throw ValidationError("kl_to_truth: coordinate " + std::to_string(j) +
                          " of w is outside the domain box");
  auto rng = make_rng(derive_seed(seed, 0x4b1d));
  std::vector<double> diff(static_cast<std::size_t>(test_size));
  std::vector<double> x(static_cast<std::size_t>(model.sample_dim));
  for (int i = 0; i < test_size; ++i) {
    truth.sampler(rng, x);
    diff[i] = truth.log_p0(x) - model.log_density_fn(x, w);
  }
  KlEstimate est;
  est.value = pairwise_mean(diff);
  est.stderr_ = sample_sd(diff) / std::sqrt(static_cast<double>(test_size));
  return est;
}

}  // namespace slt
