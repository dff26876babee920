// Timing comparison of the OpenMP kernels against the serial reference
// build, on a synthetic ensemble sized like a real run. Also asserts the two
// builds agree bit for bit, since that guarantee is the whole point of
// keeping the reference around.
//
//   slt_bench [draws] [samples] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "slt/common.hpp"
#include "slt/kernels.hpp"
#include "slt/models.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int m = argc > 1 ? std::atoi(argv[1]) : 2000;
  const int n = argc > 2 ? std::atoi(argv[2]) : 400;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 5;
  const double beta = 1.0;

  slt::kernels::LoglikMatrix ll;
  ll.m = m;
  ll.n = n;
  ll.data.resize(static_cast<std::size_t>(m) * n);
  std::vector<double> lw(static_cast<std::size_t>(m));
  auto rng = slt::make_rng(slt::derive_seed(42, 0xbe4c));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : ll.data) v = -1.4 + 0.8 * gauss(rng);
  for (auto& v : lw) v = 0.5 * gauss(rng);
  const auto nw = slt::kernels::normalize_log_weights(lw);

  std::printf("kernel benchmark: m=%d draws, n=%d samples, best of %d\n", m, n,
              repeats);

  slt::kernels::SampleMoments mo_par, mo_ser;
  const double t_mo_par =
      best_of(repeats, [&] { mo_par = slt::kernels::per_sample_moments(ll, nw.w); });
  const double t_mo_ser = best_of(
      repeats, [&] { mo_ser = slt::kernels::ref::per_sample_moments(ll, nw.w); });
  const bool mo_ok = same_bits(mo_par.c, mo_ser.c) &&
                     same_bits(mo_par.s2, mo_ser.s2) &&
                     same_bits(mo_par.s3, mo_ser.s3) &&
                     same_bits(mo_par.s4, mo_ser.s4);
  std::printf("  moments     parallel %8.2f ms   serial %8.2f ms   x%.2f  %s\n",
              1e3 * t_mo_par, 1e3 * t_mo_ser, t_mo_ser / t_mo_par,
              mo_ok ? "bit-equal" : "MISMATCH");

  std::vector<double> lse_par, lse_ser;
  const double t_lse_par = best_of(repeats, [&] {
    lse_par = slt::kernels::per_sample_alpha_lse(ll, nw.log_w, 1.0);
  });
  const double t_lse_ser = best_of(repeats, [&] {
    lse_ser = slt::kernels::ref::per_sample_alpha_lse(ll, nw.log_w, 1.0);
  });
  std::printf("  alpha-lse   parallel %8.2f ms   serial %8.2f ms   x%.2f  %s\n",
              1e3 * t_lse_par, 1e3 * t_lse_ser, t_lse_ser / t_lse_par,
              same_bits(lse_par, lse_ser) ? "bit-equal" : "MISMATCH");

  slt::kernels::LooTerms loo_par, loo_ser;
  const double t_loo_par = best_of(
      repeats, [&] { loo_par = slt::kernels::loo_terms(ll, nw.log_w, beta); });
  const double t_loo_ser = best_of(repeats, [&] {
    loo_ser = slt::kernels::ref::loo_terms(ll, nw.log_w, beta);
  });
  const bool loo_ok = same_bits(loo_par.log_ratio, loo_ser.log_ratio) &&
                      same_bits(loo_par.n_eff, loo_ser.n_eff);
  std::printf("  loo-terms   parallel %8.2f ms   serial %8.2f ms   x%.2f  %s\n",
              1e3 * t_loo_par, 1e3 * t_loo_ser, t_loo_ser / t_loo_par,
              loo_ok ? "bit-equal" : "MISMATCH");

  // Predictive pass exercises the model density, not just reductions.
  slt::ModelConfig mc;
  mc.name = "product_regression";
  const slt::ModelBundle bundle = slt::make_model(mc);
  const slt::Dataset test = slt::sample_truth(bundle.truth, n, 7);
  std::vector<double> draws(static_cast<std::size_t>(m) * 2);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (auto& v : draws) v = unif(rng);

  slt::kernels::PredictiveBatch pb_par, pb_ser;
  const double t_pb_par = best_of(repeats, [&] {
    pb_par = slt::kernels::predictive_batch(bundle.model, draws, m, nw, test,
                                            &bundle.truth);
  });
  const double t_pb_ser = best_of(repeats, [&] {
    pb_ser = slt::kernels::ref::predictive_batch(bundle.model, draws, m, nw,
                                                 test, &bundle.truth);
  });
  const bool pb_ok = same_bits(pb_par.log_pred, pb_ser.log_pred) &&
                     same_bits(pb_par.reg_sq_err, pb_ser.reg_sq_err);
  std::printf("  predictive  parallel %8.2f ms   serial %8.2f ms   x%.2f  %s\n",
              1e3 * t_pb_par, 1e3 * t_pb_ser, t_pb_ser / t_pb_par,
              pb_ok ? "bit-equal" : "MISMATCH");

  if (!(mo_ok && loo_ok && pb_ok && same_bits(lse_par, lse_ser))) {
    std::fprintf(stderr, "bit mismatch between parallel and serial kernels\n");
    return 1;
  }
  return 0;
}
