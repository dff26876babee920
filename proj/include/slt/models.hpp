// Model families: parametric densities p(x|w) on a box-truncated Gaussian
// prior, paired with the data-generating truth they are evaluated against.
//
// Bundled families:
//   regular_normal      unit-variance location family N(x; w, 1), d = 1
//   product_regression  (x, y) with y | x ~ N(a*b*x, 1), d = 2; the truth
//                       a*b = 0 makes the parameter non-identifiable along
//                       the coordinate cross
//   tanh_network        three-input/three-output tanh regression network
//                       with H hidden units, Gaussian noise, d = 6H
//
// A TruthSpec knows how to draw datasets, the true density, its entropy, and
// (when analytically available) the generalization invariants of the pair.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "slt/common.hpp"

namespace slt {

struct ModelConfig {
  std::string name;
  // <= 0 means "family default".
  double prior_scale = 0.0;
  double box_halfwidth = 0.0;
  // Truth parameter; empty means "family default".
  std::vector<double> w0;
  // tanh_network only.
  int h = 3;
  int h0 = 1;
  double sigma = 0.1;
};

// Regression view of a model whose samples split as (input, output) and
// whose density is input-marginal times Gaussian output noise. Used by the
// predictive square-error criterion.
struct RegressionView {
  int x_dim = 0;
  int out_dim = 0;
  double noise_sigma = 1.0;
  // out must have out_dim entries; x is the input block of a sample.
  std::function<void(std::span<const double> x, std::span<const double> w,
                     std::span<double> out)>
      predict;
};

struct ModelSpec {
  std::string name;
  int d = 0;           // parameter dimension
  int sample_dim = 0;  // flattened sample dimension
  std::vector<double> box_lo, box_hi;
  double prior_scale = 1.0;
  // Unchecked density/prior evaluators; the public wrappers below validate.
  std::function<double(std::span<const double> x, std::span<const double> w)>
      log_density_fn;
  std::function<double(std::span<const double> w)> log_prior_fn;
  std::optional<RegressionView> regression;
};

struct TruthSpec {
  std::string name;
  int sample_dim = 0;
  // Writes one sample (sample_dim entries); consumes the rng sequentially.
  std::function<void(std::mt19937_64&, std::span<double>)> sampler;
  std::function<double(std::span<const double>)> log_p0;
  double entropy = 0.0;  // differential entropy S of the truth
  double l0 = 0.0;       // minimum expected loss; equals S when realizable
  bool realizable = false;
  std::optional<double> lambda;         // known learning-rate invariant
  std::optional<std::vector<double>> w0;  // optimal parameter, model coords
  // True regression function; set iff the model has a regression view.
  std::function<void(std::span<const double> x, std::span<double> out)>
      regression_true;
};

struct ModelBundle {
  ModelSpec model;
  TruthSpec truth;
};

struct Dataset {
  int n = 0;
  int sample_dim = 0;
  std::vector<double> samples;  // n x sample_dim, row-major
  double ln = 0.0;              // -(1/n) sum_i log p0(X_i); 0 when n == 0
  std::uint64_t seed = 0;

  std::span<const double> sample(int i) const {
    return std::span<const double>(samples.data() +
                                       static_cast<std::size_t>(i) * sample_dim,
                                   static_cast<std::size_t>(sample_dim));
  }
};

struct KlEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Known family names, for registry lookups and config suggestions.
const std::vector<std::string>& model_names();

// Builds a model/truth pair; throws ValidationError on bad parameters.
ModelBundle make_model(const ModelConfig& cfg);

// Validating wrappers. Both check vector sizes; log_density and log_prior
// reject w outside the domain box, reporting the offending coordinate.
double log_density(const ModelSpec& model, std::span<const double> x,
                   std::span<const double> w);
double log_prior(const ModelSpec& model, std::span<const double> w);

// Draws one prior sample (box-truncated Gaussian) into w.
void sample_prior(const ModelSpec& model, std::mt19937_64& rng,
                  std::span<double> w);

// Draws n samples from the truth; n = 0 yields an empty dataset with ln = 0.
Dataset sample_truth(const TruthSpec& truth, int n, std::uint64_t seed);

// Recomputes -(1/n) mean log p0 over the dataset; bit-identical to the ln
// stored by sample_truth.
double empirical_truth_loss(const TruthSpec& truth, const Dataset& data);

// Dataset without sample i. ln is recomputed when truth is given and left 0
// otherwise (refit cross-validation never reads it).
Dataset leave_one_out(const Dataset& data, int i, const TruthSpec* truth = nullptr);

// Monte Carlo estimate of K(w) = E_X[log p0(X) - log p(X|w)] >= 0.
KlEstimate kl_to_truth(const ModelSpec& model, const TruthSpec& truth,
                       std::span<const double> w, int test_size,
                       std::uint64_t seed);

}  // namespace slt
