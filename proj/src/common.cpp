#include "slt/common.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace slt {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty()
                             ? std::string("invalid configuration")
                             : "invalid configuration:\n  - " + [&] {
                                 std::string joined = problems.front();
                                 for (std::size_t i = 1; i < problems.size(); ++i)
                                   joined += "\n  - " + problems[i];
                                 return joined;
                               }()),
      problems_(std::move(problems)) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = splitmix64(base ^ 0xa0761d6478bd642full);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (std::isinf(mx) && mx < 0) return mx;  // all -inf
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  double r = mx + std::log(s);
  if (std::isnan(r)) throw NumericalError("logsumexp: result is NaN");
  return r;
}

double logsumexp_shifted(std::span<const double> a, std::span<const double> b,
                         double alpha) {
  if (a.size() != b.size())
    throw ValidationError("logsumexp_shifted: length mismatch");
  if (a.empty()) return -std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, a[i] + alpha * b[i]);
  if (std::isinf(mx) && mx < 0) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(a[i] + alpha * b[i] - mx);
  double r = mx + std::log(s);
  if (std::isnan(r)) throw NumericalError("logsumexp_shifted: result is NaN");
  return r;
}

namespace {
double pairwise_sum_rec(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_rec(v, half) + pairwise_sum_rec(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> v) {
  return pairwise_sum_rec(v.data(), v.size());
}

double sample_mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("sample_mean: empty input");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.empty()) throw ValidationError("sample_sd: empty input");
  if (v.size() == 1) return 0.0;
  const double m = sample_mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("pearson_corr: need two equal-length series");
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("pearson_corr: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  }
  return std::string(buf, ptr);
}

void set_max_threads(int k) {
  if (k <= 0) k = omp_get_num_procs();
  omp_set_num_threads(k);
}

}  // namespace slt
