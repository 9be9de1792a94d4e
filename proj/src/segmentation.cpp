#include "bodyimage/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace bodyimage::seg {

namespace {

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double percentile(std::vector<double> v, double q) {
  const std::size_t k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

void sort_components(GmmFit& f) {
  if (f.means[0] > f.means[1]) {
    std::swap(f.weights[0], f.weights[1]);
    std::swap(f.means[0], f.means[1]);
    std::swap(f.variances[0], f.variances[1]);
  }
}

}  // namespace

template <class T>
std::vector<double> collect_error_samples(const model::NetworkParams<T>& params,
                                          const std::vector<data::MotorState>& motors) {
  require(!motors.empty(), ErrorCode::kInvalidArgument, "collect_error_samples: no motor states");
  const std::size_t per = params.arch.image.components();
  std::vector<double> samples(motors.size() * per);
  const auto n = static_cast<std::ptrdiff_t>(motors.size());
  for (const auto& m : motors) {
    require(static_cast<int>(m.values.size()) == params.arch.motor_dim, ErrorCode::kShape,
            "collect_error_samples: motor dimension mismatch");
  }
  #pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto pred = model::predict(params, motors[static_cast<std::size_t>(k)]);
    for (std::size_t i = 0; i < per; ++i) samples[static_cast<std::size_t>(k) * per + i] = pred.error[i];
  }
  return samples;
}

double weighted_density(const GmmFit& fit, int k, double x) {
  return fit.weights[k] * std::exp(log_normal(x, fit.means[k], fit.variances[k]));
}

double mixture_log_likelihood(const GmmFit& fit, const std::vector<double>& samples) {
  const double lw0 = std::log(fit.weights[0]), lw1 = std::log(fit.weights[1]);
  double ll = 0.0;
  for (double x : samples) {
    const double a = lw0 + log_normal(x, fit.means[0], fit.variances[0]);
    const double b = lw1 + log_normal(x, fit.means[1], fit.variances[1]);
    const double m = std::max(a, b);
    ll += m + std::log(std::exp(a - m) + std::exp(b - m));
  }
  return ll;
}

GmmFit fit_gmm2(const std::vector<double>& samples, const EmConfig& config) {
  require(samples.size() >= 2, ErrorCode::kDegenerateData, "fit_gmm2: need at least two samples");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  require(*lo_it < *hi_it, ErrorCode::kDegenerateData, "fit_gmm2: all samples are identical");
  require(config.max_iters > 0 && config.tol >= 0.0 && config.variance_floor > 0.0, ErrorCode::kConfig,
          "fit_gmm2: invalid EM settings");

  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var = std::max(var / n, config.variance_floor);

  GmmFit f;
  f.means[0] = percentile(samples, 0.10);
  f.means[1] = percentile(samples, 0.90);
  if (f.means[0] == f.means[1]) {
    // Heavily tied data: spread the starting means over the full range.
    f.means[0] = *lo_it;
    f.means[1] = *hi_it;
  }
  f.variances[0] = f.variances[1] = var;

  std::vector<double> resp(samples.size());  // responsibility of component 1
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_iters; ++it) {
    // E-step; the log-likelihood of the current parameters comes for free.
    const double lw0 = std::log(f.weights[0]), lw1 = std::log(f.weights[1]);
    double ll = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double a = lw0 + log_normal(samples[i], f.means[0], f.variances[0]);
      const double b = lw1 + log_normal(samples[i], f.means[1], f.variances[1]);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      ll += lse;
      resp[i] = std::exp(b - lse);
    }
    f.log_likelihood_history.push_back(ll);
    f.log_likelihood = ll;
    f.iterations = it + 1;
    if (ll - prev_ll < config.tol) break;
    prev_ll = ll;

    // M-step.
    double n1 = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      n1 += resp[i];
      s0 += (1.0 - resp[i]) * samples[i];
      s1 += resp[i] * samples[i];
    }
    const double n0 = n - n1;
    if (n0 <= 0.0 || n1 <= 0.0) break;  // a component lost all mass
    const double m0 = s0 / n0, m1 = s1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d0 = samples[i] - m0, d1 = samples[i] - m1;
      v0 += (1.0 - resp[i]) * d0 * d0;
      v1 += resp[i] * d1 * d1;
    }
    f.weights[0] = n0 / n;
    f.weights[1] = n1 / n;
    f.means[0] = m0;
    f.means[1] = m1;
    f.variances[0] = std::max(v0 / n0, config.variance_floor);
    f.variances[1] = std::max(v1 / n1, config.variance_floor);
  }
  // The recorded likelihood belongs to the parameters it was computed with
  // unless the loop ran out of iterations right after an M-step.
  if (f.iterations == config.max_iters && f.log_likelihood_history.size() == static_cast<std::size_t>(config.max_iters)) {
    f.log_likelihood = mixture_log_likelihood(f, samples);
  }
  sort_components(f);
  require(f.means[0] < f.means[1], ErrorCode::kDegenerateData, "fit_gmm2: components collapsed onto one mean");
  f.threshold = compute_threshold(f);
  return f;
}

double compute_threshold(const GmmFit& fit) {
  const double m1 = fit.means[0], m2 = fit.means[1];
  require(m1 < m2, ErrorCode::kDegenerateData, "compute_threshold: component means must differ (mu1 < mu2)");
  const double v1 = fit.variances[0], v2 = fit.variances[1];
  // log(w1 N1) - log(w2 N2) = a x^2 + b x + c
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = m1 / v1 - m2 / v2;
  const double c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 + std::log(fit.weights[0] / fit.weights[1]) -
                   0.5 * std::log(v1 / v2);
  const double mid = 0.5 * (m1 + m2);
  std::vector<double> roots;
  const double scale = std::max({std::abs(a) * (m2 - m1), std::abs(b), 1e-300});
  if (std::abs(a) * (m2 - m1) <= 1e-12 * scale) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      // Cancellation-free pair of roots.
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      roots.push_back(q / a);
      if (q != 0.0) roots.push_back(c / q);
    }
  }
  double best = mid;
  bool found = false;
  for (double r : roots) {
    if (!(r >= m1 && r <= m2)) continue;
    if (!found || std::abs(r - mid) < std::abs(best - mid)) best = r;
    found = true;
  }
  return best;
}

template <class T>
Mask extract_mask(const Tensor<T>& errors, double threshold) {
  require(errors.rank() == 3 && errors.dim(2) == kChannels, ErrorCode::kShape,
          "extract_mask: expected [H, W, 3], got " + shape_string(errors.shape()));
  require(threshold >= 0.0, ErrorCode::kInvalidArgument, "extract_mask: threshold must be >= 0");
  Mask m({errors.dim(0), errors.dim(1)});
  for (std::size_t i = 0; i < errors.size(); ++i) m.data[i] = static_cast<double>(errors[i]) <= threshold;
  return m;
}

Mask extract_mask(const Image& errors, double threshold) {
  require(threshold >= 0.0, ErrorCode::kInvalidArgument, "extract_mask: threshold must be >= 0");
  Mask m(errors.extent);
  for (std::size_t i = 0; i < errors.data.size(); ++i) m.data[i] = static_cast<double>(errors.data[i]) <= threshold;
  return m;
}

RgbaImage apply_mask(const Image& prediction, const Mask& mask) {
  require(prediction.extent == mask.extent, ErrorCode::kShape, "apply_mask: dims differ");
  RgbaImage out{prediction.extent, std::vector<std::uint8_t>(prediction.extent.pixels() * 4, 0)};
  for (std::size_t p = 0; p < prediction.extent.pixels(); ++p) {
    bool any = false;
    for (int ch = 0; ch < kChannels; ++ch) {
      if (mask.data[p * kChannels + ch]) {
        out.data[p * 4 + ch] = to_byte(prediction.data[p * kChannels + ch]);
        any = true;
      }
    }
    out.data[p * 4 + 3] = any ? 255 : 0;
  }
  return out;
}

std::string format_fit(const GmmFit& fit) {
  char buf[400];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", fit.weights[0], fit.weights[1],
                fit.means[0], fit.means[1], fit.variances[0], fit.variances[1], fit.threshold, fit.log_likelihood);
  return buf;
}

GmmFit parse_fit(const std::string& text) {
  std::istringstream in(text);
  GmmFit f;
  in >> f.weights[0] >> f.weights[1] >> f.means[0] >> f.means[1] >> f.variances[0] >> f.variances[1] >> f.threshold >>
      f.log_likelihood;
  require(static_cast<bool>(in), ErrorCode::kMalformedHeader, "gmm record: expected 8 numbers");
  return f;
}

template std::vector<double> collect_error_samples<float>(const model::NetworkParams<float>&,
                                                          const std::vector<data::MotorState>&);
template std::vector<double> collect_error_samples<double>(const model::NetworkParams<double>&,
                                                           const std::vector<data::MotorState>&);
template Mask extract_mask<float>(const Tensor<float>&, double);
template Mask extract_mask<double>(const Tensor<double>&, double);

}  // namespace bodyimage::seg
