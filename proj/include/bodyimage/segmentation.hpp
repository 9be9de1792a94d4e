#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodyimage/dataset.hpp"
#include "bodyimage/image.hpp"
#include "bodyimage/network.hpp"

namespace bodyimage::seg {

/// Two-component 1-D Gaussian mixture, components sorted by mean.
struct GmmFit {
  double weights[2] = {0.5, 0.5};
  double means[2] = {0.0, 0.0};
  double variances[2] = {1.0, 1.0};
  double threshold = 0.0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_history;  // one entry per EM iteration
  int iterations = 0;
};

struct EmConfig {
  int max_iters = 200;
  double tol = 1e-7;
  double variance_floor = 1e-10;
};

/// Concatenated predicted-error components over all motors; length count * N_s.
template <class T>
std::vector<double> collect_error_samples(const model::NetworkParams<T>& params,
                                          const std::vector<data::MotorState>& motors);

/// EM from 10th/90th-percentile means, equal weights and the sample variance.
/// Stops when the log-likelihood gain drops below tol. Threshold is filled in.
GmmFit fit_gmm2(const std::vector<double>& samples, const EmConfig& config = {});

/// Total log-likelihood of `samples` under the mixture.
double mixture_log_likelihood(const GmmFit& fit, const std::vector<double>& samples);

/// Point in (mu1, mu2) where the weighted component densities cross; the
/// midpoint when they do not cross inside the interval.
double compute_threshold(const GmmFit& fit);

/// w * N(x; mu, var) for component k.
double weighted_density(const GmmFit& fit, int k, double x);

/// Per component: true iff error <= threshold. Channels are independent.
template <class T>
Mask extract_mask(const Tensor<T>& errors, double threshold);
Mask extract_mask(const Image& errors, double threshold);

/// RGBA: RGB copied where the channel mask holds (0 elsewhere), alpha 255 when
/// any of the pixel's three channel masks holds.
RgbaImage apply_mask(const Image& prediction, const Mask& mask);

/// `w1 w2 mu1 mu2 var1 var2 T loglik`
std::string format_fit(const GmmFit& fit);
GmmFit parse_fit(const std::string& text);

}  // namespace bodyimage::seg
