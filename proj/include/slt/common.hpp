// Shared numerics and plumbing: error types, seed derivation, stable
// log-space reductions, deterministic summation, value formatting.
//
// Everything downstream assumes these helpers are deterministic: identical
// inputs produce identical bits, independent of thread count.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slt {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Invalid user input (config files, CLI flags). Carries every problem found
// in one pass so the user can fix them all at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Precondition violation in a library call (bad dimension, value out of
// domain, malformed ensemble, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value or an otherwise unusable result
// (overflow despite stabilization, degenerate sampler state, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

// splitmix64 step; the standard 64-bit finalizer-style mixer.
std::uint64_t splitmix64(std::uint64_t x);

// Derives a stream seed from a base seed and up to three path indices.
// Used everywhere a sub-component needs its own RNG stream (per replicate,
// per chain, per test-set) so that streams never collide or overlap.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// ---------------------------------------------------------------------------
// Stable reductions
// ---------------------------------------------------------------------------

// log(sum_i exp(v_i)) with max subtraction; -inf for an empty span.
// Throws NumericalError if the result is NaN.
double logsumexp(std::span<const double> v);

// log(sum_i exp(a_i + alpha * b_i)) without materializing the shifted vector.
double logsumexp_shifted(std::span<const double> a, std::span<const double> b,
                         double alpha);

// Pairwise (cascade) summation: O(log n) error growth and a fixed
// association tree, so the result is independent of chunking decisions
// made by callers.
double pairwise_sum(std::span<const double> v);

inline double pairwise_mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("pairwise_mean: empty input");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double sample_mean(std::span<const double> v);
// Unbiased (n-1) standard deviation; 0 for a single element.
double sample_sd(std::span<const double> v);
// Pearson correlation; throws ValidationError if either side has zero
// variance (callers that need a soft failure check variance first).
double pearson_corr(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

// Shortest round-trip-exact decimal form ("%.17g" semantics via
// std::to_chars). Used by every CSV/JSON writer so that identical doubles
// always serialize to identical bytes.
std::string format_double(double x);

// ---------------------------------------------------------------------------
// Threads
// ---------------------------------------------------------------------------

// Caps the number of OpenMP threads used by the parallel kernels.
// k <= 0 restores the library default.
void set_max_threads(int k);

}  // namespace slt
