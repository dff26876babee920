#include "slt/kernels.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "slt/detail/parallel.hpp"

namespace slt::kernels {
namespace {

using detail::parallel_for;

constexpr int kMaxRegressionDim = 8;

// Per-item workers. Both the OpenMP drivers and the serial reference run
// exactly these, one slot per item, so results cannot depend on scheduling.

void fill_row(const ModelSpec& model, const Dataset& data,
              std::span<const double> draws, int m, int i, double* out) {
  const auto x = data.sample(i);
  const int d = model.d;
  for (int mm = 0; mm < m; ++mm) {
    const std::span<const double> w(draws.data() +
                                        static_cast<std::size_t>(mm) * d,
                                    static_cast<std::size_t>(d));
    out[mm] = model.log_density_fn(x, w);
  }
}

double alpha_lse_row(const LoglikMatrix& ll, std::span<const double> lwn,
                     double alpha, int i) {
  const double r = logsumexp_shifted(lwn, ll.row(i), alpha);
  if (!std::isfinite(r))
    throw NumericalError("per_sample_alpha_lse: non-finite value at sample " +
                         std::to_string(i) + ", alpha = " +
                         format_double(alpha));
  return r;
}

void moments_row(const LoglikMatrix& ll, std::span<const double> w, int i,
                 double& c, double& s2, double& s3, double& s4) {
  const auto row = ll.row(i);
  const int m = ll.m;
  double acc = 0.0;
  for (int mm = 0; mm < m; ++mm) acc += w[mm] * row[mm];
  c = acc;
  double a2 = 0.0, a3 = 0.0, a4 = 0.0;
  for (int mm = 0; mm < m; ++mm) {
    const double d1 = row[mm] - acc;
    const double wd = w[mm] * d1;
    const double d2 = d1 * d1;
    a2 += wd * d1;
    a3 += wd * d2;
    a4 += wd * d2 * d1;
  }
  s2 = a2;
  s3 = a3;
  s4 = a4;
}

void loo_row(const LoglikMatrix& ll, std::span<const double> lwn, double beta,
             int i, double& log_ratio, double& n_eff) {
  const auto row = ll.row(i);
  const int m = ll.m;
  const double keep = 1.0 - beta;
  double mx_num = -std::numeric_limits<double>::infinity();
  double mx_den = mx_num;
  for (int mm = 0; mm < m; ++mm) {
    const double lw = lwn[mm], v = row[mm];
    mx_num = std::max(mx_num, lw + keep * v);
    mx_den = std::max(mx_den, lw - beta * v);
  }
  double s_num = 0.0, s_den = 0.0, s_den2 = 0.0;
  for (int mm = 0; mm < m; ++mm) {
    const double lw = lwn[mm], v = row[mm];
    s_num += std::exp(lw + keep * v - mx_num);
    const double e = std::exp(lw - beta * v - mx_den);
    s_den += e;
    s_den2 += e * e;
  }
  log_ratio = (mx_num + std::log(s_num)) - (mx_den + std::log(s_den));
  if (!std::isfinite(log_ratio))
    throw NumericalError("loo_terms: non-finite value at sample " +
                         std::to_string(i));
  n_eff = (s_den * s_den) / s_den2;
}

void predictive_point(const ModelSpec& model, std::span<const double> draws,
                      int m, const NormalizedWeights& nw,
                      std::span<const double> sample, const TruthSpec* truth,
                      int t_index, double* scratch, double& log_pred,
                      double* sq_err) {
  const int d = model.d;
  double mx = -std::numeric_limits<double>::infinity();
  for (int mm = 0; mm < m; ++mm) {
    const std::span<const double> w(draws.data() +
                                        static_cast<std::size_t>(mm) * d,
                                    static_cast<std::size_t>(d));
    const double v = nw.log_w[mm] + model.log_density_fn(sample, w);
    scratch[mm] = v;
    mx = std::max(mx, v);
  }
  double s = 0.0;
  for (int mm = 0; mm < m; ++mm) s += std::exp(scratch[mm] - mx);
  log_pred = mx + std::log(s);
  if (!std::isfinite(log_pred))
    throw NumericalError("predictive_batch: non-finite log predictive at "
                         "test point " + std::to_string(t_index));

  if (sq_err != nullptr) {
    const auto& rv = *model.regression;
    const auto x = sample.first(rv.x_dim);
    double rbar[kMaxRegressionDim] = {0};
    double rw[kMaxRegressionDim];
    for (int mm = 0; mm < m; ++mm) {
      const std::span<const double> w(draws.data() +
                                          static_cast<std::size_t>(mm) * d,
                                      static_cast<std::size_t>(d));
      rv.predict(x, w, std::span<double>(rw, rv.out_dim));
      for (int k = 0; k < rv.out_dim; ++k) rbar[k] += nw.w[mm] * rw[k];
    }
    double r0[kMaxRegressionDim];
    truth->regression_true(x, std::span<double>(r0, rv.out_dim));
    double q = 0.0;
    for (int k = 0; k < rv.out_dim; ++k) {
      const double dk = r0[k] - rbar[k];
      q += dk * dk;
    }
    *sq_err = q;
  }
}

bool wants_regression(const ModelSpec& model, const TruthSpec* truth) {
  if (truth == nullptr || !model.regression.has_value() ||
      !static_cast<bool>(truth->regression_true))
    return false;
  if (model.regression->out_dim > kMaxRegressionDim)
    throw ValidationError("predictive_batch: regression output dimension " +
                          std::to_string(model.regression->out_dim) +
                          " exceeds the supported maximum of " +
                          std::to_string(kMaxRegressionDim));
  return true;
}

LoglikMatrix make_matrix(const Dataset& data, int m) {
  LoglikMatrix ll;
  ll.m = m;
  ll.n = data.n;
  ll.data.resize(static_cast<std::size_t>(m) * data.n);
  return ll;
}

void check_fill_args(const ModelSpec& model, std::span<const double> draws,
                     int m) {
  if (m <= 0) throw ValidationError("fill_loglik: need at least one draw");
  if (draws.size() != static_cast<std::size_t>(m) * model.d)
    throw ValidationError("fill_loglik: draws buffer has wrong size");
}

}  // namespace

// ---------------------------------------------------------------------------
// OpenMP drivers
// ---------------------------------------------------------------------------

LoglikMatrix fill_loglik(const ModelSpec& model, const Dataset& data,
                         std::span<const double> draws, int m) {
  check_fill_args(model, draws, m);
  LoglikMatrix ll = make_matrix(data, m);
  parallel_for(ll.n, [&](int i) {
    fill_row(model, data, draws, m, i,
             ll.data.data() + static_cast<std::size_t>(i) * m);
  });
  return ll;
}

NormalizedWeights normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty())
    throw ValidationError("normalize_log_weights: empty weight vector");
  NormalizedWeights nw;
  nw.log_norm = logsumexp(log_weights);
  if (!std::isfinite(nw.log_norm))
    throw NumericalError("normalize_log_weights: weights carry no finite mass");
  nw.log_w.resize(log_weights.size());
  nw.w.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    nw.log_w[i] = log_weights[i] - nw.log_norm;
    nw.w[i] = std::exp(nw.log_w[i]);
  }
  return nw;
}

std::vector<double> per_draw_total(const LoglikMatrix& ll) {
  std::vector<double> total(static_cast<std::size_t>(ll.m), 0.0);
  for (int i = 0; i < ll.n; ++i) {
    const auto row = ll.row(i);
    for (int mm = 0; mm < ll.m; ++mm) total[mm] += row[mm];
  }
  return total;
}

std::vector<double> per_sample_alpha_lse(const LoglikMatrix& ll,
                                         std::span<const double> lwn,
                                         double alpha) {
  std::vector<double> out(static_cast<std::size_t>(ll.n));
  parallel_for(ll.n, [&](int i) { out[i] = alpha_lse_row(ll, lwn, alpha, i); });
  return out;
}

SampleMoments per_sample_moments(const LoglikMatrix& ll,
                                 std::span<const double> w) {
  SampleMoments sm;
  sm.c.resize(ll.n);
  sm.s2.resize(ll.n);
  sm.s3.resize(ll.n);
  sm.s4.resize(ll.n);
  parallel_for(ll.n, [&](int i) {
    moments_row(ll, w, i, sm.c[i], sm.s2[i], sm.s3[i], sm.s4[i]);
  });
  return sm;
}

LooTerms loo_terms(const LoglikMatrix& ll, std::span<const double> lwn,
                   double beta) {
  LooTerms lt;
  lt.log_ratio.resize(ll.n);
  lt.n_eff.resize(ll.n);
  parallel_for(ll.n, [&](int i) {
    loo_row(ll, lwn, beta, i, lt.log_ratio[i], lt.n_eff[i]);
  });
  return lt;
}

std::vector<double> weighted_param_mean(std::span<const double> draws, int m,
                                        int d, std::span<const double> w) {
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  for (int mm = 0; mm < m; ++mm)
    for (int j = 0; j < d; ++j)
      mean[j] += w[mm] * draws[static_cast<std::size_t>(mm) * d + j];
  return mean;
}

PredictiveBatch predictive_batch(const ModelSpec& model,
                                 std::span<const double> draws, int m,
                                 const NormalizedWeights& nw,
                                 const Dataset& test_points,
                                 const TruthSpec* truth) {
  PredictiveBatch pb;
  pb.log_pred.resize(test_points.n);
  const bool reg = wants_regression(model, truth);
  if (reg) pb.reg_sq_err.resize(test_points.n);
  std::atomic<bool> failed{false};
  std::exception_ptr err;
#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(m));
#pragma omp for schedule(static)
    for (int t = 0; t < test_points.n; ++t) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        predictive_point(model, draws, m, nw, test_points.sample(t), truth, t,
                         scratch.data(), pb.log_pred[t],
                         reg ? &pb.reg_sq_err[t] : nullptr);
      } catch (...) {
#pragma omp critical(slt_kernels_err)
        {
          if (!failed.load(std::memory_order_relaxed)) {
            err = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
          }
        }
      }
    }
  }
  if (err) std::rethrow_exception(err);
  return pb;
}

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------

namespace ref {

LoglikMatrix fill_loglik(const ModelSpec& model, const Dataset& data,
                         std::span<const double> draws, int m) {
  check_fill_args(model, draws, m);
  LoglikMatrix ll = make_matrix(data, m);
  for (int i = 0; i < ll.n; ++i)
    fill_row(model, data, draws, m, i,
             ll.data.data() + static_cast<std::size_t>(i) * m);
  return ll;
}

std::vector<double> per_sample_alpha_lse(const LoglikMatrix& ll,
                                         std::span<const double> lwn,
                                         double alpha) {
  std::vector<double> out(static_cast<std::size_t>(ll.n));
  for (int i = 0; i < ll.n; ++i) out[i] = alpha_lse_row(ll, lwn, alpha, i);
  return out;
}

SampleMoments per_sample_moments(const LoglikMatrix& ll,
                                 std::span<const double> w) {
  SampleMoments sm;
  sm.c.resize(ll.n);
  sm.s2.resize(ll.n);
  sm.s3.resize(ll.n);
  sm.s4.resize(ll.n);
  for (int i = 0; i < ll.n; ++i)
    moments_row(ll, w, i, sm.c[i], sm.s2[i], sm.s3[i], sm.s4[i]);
  return sm;
}

LooTerms loo_terms(const LoglikMatrix& ll, std::span<const double> lwn,
                   double beta) {
  LooTerms lt;
  lt.log_ratio.resize(ll.n);
  lt.n_eff.resize(ll.n);
  for (int i = 0; i < ll.n; ++i)
    loo_row(ll, lwn, beta, i, lt.log_ratio[i], lt.n_eff[i]);
  return lt;
}

PredictiveBatch predictive_batch(const ModelSpec& model,
                                 std::span<const double> draws, int m,
                                 const NormalizedWeights& nw,
                                 const Dataset& test_points,
                                 const TruthSpec* truth) {
  PredictiveBatch pb;
  pb.log_pred.resize(test_points.n);
  const bool reg = wants_regression(model, truth);
  if (reg) pb.reg_sq_err.resize(test_points.n);
  std::vector<double> scratch(static_cast<std::size_t>(m));
  for (int t = 0; t < test_points.n; ++t)
    predictive_point(model, draws, m, nw, test_points.sample(t), truth, t,
                     scratch.data(), pb.log_pred[t],
                     reg ? &pb.reg_sq_err[t] : nullptr);
  return pb;
}

}  // namespace ref
}  // namespace slt::kernels
