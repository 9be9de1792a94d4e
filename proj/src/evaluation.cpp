#include "bodyimage/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>

#include "bodyimage/error.hpp"
#include "bodyimage/rng.hpp"

namespace bodyimage::eval {

double mask_match(const Mask& estimated, const Mask& ground_truth) {
  require(estimated.extent == ground_truth.extent && estimated.data.size() == ground_truth.data.size(),
          ErrorCode::kShape, "mask_match: dims differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < estimated.data.size(); ++i) {
    const bool a = estimated.data[i] != 0, b = ground_truth.data[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> appearance_match(const Image& prediction, const Image& target, const Mask& estimated,
                                       const Mask& ground_truth) {
  require(prediction.extent == target.extent && estimated.extent == target.extent &&
              ground_truth.extent == target.extent,
          ErrorCode::kShape, "appearance_match: dims differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < target.data.size(); ++i) {
    if (!estimated.data[i] || !ground_truth.data[i]) continue;
    const double p = std::clamp(static_cast<double>(prediction.data[i]), 0.0, 1.0);
    sum += std::abs(p - static_cast<double>(target.data[i]));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 1.0 - sum / static_cast<double>(n);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

EvalReport evaluate_predictions(const std::vector<data::DatasetRecord>& test, double threshold,
                                const Predictor& predictor) {
  require(!test.empty(), ErrorCode::kInvalidArgument, "evaluate: test set is empty");
  EvalReport report;
  report.records.resize(test.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(test.size());

  #pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& rec = test[static_cast<std::size_t>(i)];
      const auto [image, error] = predictor(static_cast<std::size_t>(i));
      const Mask est = seg::extract_mask(error, threshold);
      report.records[static_cast<std::size_t>(i)] = {mask_match(est, rec.gt_mask),
                                                      appearance_match(image, rec.sensory, est, rec.gt_mask)};
    } catch (...) {
      #pragma omp critical(bodyimage_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> masks, looks;
  for (const auto& r : report.records) {
    masks.push_back(r.mask_match);
    if (r.appearance_match) {
      looks.push_back(*r.appearance_match);
    } else {
      ++report.undefined_appearance;
    }
  }
  report.mask = summarize(masks);
  report.appearance = summarize(looks);
  return report;
}

template <class T>
EvalReport evaluate_dataset(const model::NetworkParams<T>& params, const seg::GmmFit& fit,
                            const std::vector<data::DatasetRecord>& test) {
  return evaluate_predictions(test, fit.threshold, [&](std::size_t i) {
    const auto pred = model::predict(params, test[i].motor);
    return std::pair{model::to_image(pred.image), model::to_image(pred.error)};
  });
}

std::string report_csv(const EvalReport& report) {
  std::string out = "record,mask_match,appearance_match\n";
  char line[96];
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    if (r.appearance_match) {
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", i, r.mask_match, *r.appearance_match);
    } else {
      std::snprintf(line, sizeof line, "%zu,%.9g,\n", i, r.mask_match);
    }
    out += line;
  }
  return out;
}

std::string report_summary(const EvalReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "records: %zu\n"
                "mask_match: %.4f +- %.4f\n"
                "appearance_match: %.4f +- %.4f (over %zu records)\n"
                "empty_intersections: %zu\n",
                report.records.size(), report.mask.mean, report.mask.stddev, report.appearance.mean,
                report.appearance.stddev, report.appearance.count, report.undefined_appearance);
  return buf;
}

double VarianceProbeResult::max_body_variance() const {
  double m = 0.0;
  for (double v : body_variance) m = std::max(m, v);
  return m;
}

double VarianceProbeResult::mean_environment_variance() const {
  if (environment_variance.empty()) return 0.0;
  double s = 0.0;
  for (double v : environment_variance) s += v;
  return s / static_cast<double>(environment_variance.size());
}

VarianceProbeResult conditional_variance_probe(const data::MotorState& motor, int backgrounds,
                                               const data::SceneConfig& config, std::uint64_t seed) {
  require(backgrounds >= 2, ErrorCode::kInvalidArgument, "variance probe: need at least two backgrounds");
  config.validate();
  const auto joints = data::denormalize_motor(motor, config.ranges);
  const std::size_t comps = config.output_extent().components();

  std::vector<data::DatasetRecord> renders(static_cast<std::size_t>(backgrounds));
  #pragma omp parallel for schedule(dynamic, 4)
  for (int k = 0; k < backgrounds; ++k) {
    auto r = data::render_record_scene(joints, derive_seed(seed, kStreamProbe, static_cast<std::uint64_t>(k)), config);
    renders[static_cast<std::size_t>(k)] = {motor, std::move(r.image), std::move(r.body_mask)};
  }

  // Welford: identical samples leave the running M2 at exactly zero.
  std::vector<double> mean(comps, 0.0), m2(comps, 0.0);
  for (int k = 0; k < backgrounds; ++k) {
    const auto& img = renders[static_cast<std::size_t>(k)].sensory.data;
    for (std::size_t i = 0; i < comps; ++i) {
      const double x = img[i];
      const double delta = x - mean[i];
      mean[i] += delta / (k + 1);
      m2[i] += delta * (x - mean[i]);
    }
  }

  VarianceProbeResult out;
  out.body = renders.front().gt_mask;
  out.variance.resize(comps);
  for (std::size_t i = 0; i < comps; ++i) {
    out.variance[i] = m2[i] / (backgrounds - 1);
    (out.body.data[i] ? out.body_variance : out.environment_variance).push_back(out.variance[i]);
  }
  return out;
}

std::vector<HistogramBin> error_histogram(const std::vector<double>& samples, int bins, double lo, double hi) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "histogram: bins must be >= 1");
  require(lo < hi, ErrorCode::kInvalidArgument, "histogram: range must satisfy lo < hi");
  require(!samples.empty(), ErrorCode::kInvalidArgument, "histogram: no samples");
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double x : samples) {
    long b = static_cast<long>(std::floor((x - lo) / width));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  const double n = static_cast<double>(samples.size());
  for (int b = 0; b < bins; ++b) {
    out[b] = {lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, counts[b] / n};
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin_lo,bin_hi,mass\n";
  char line[96];
  for (const auto& b : bins) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", b.lo, b.hi, b.mass);
    out += line;
  }
  return out;
}

std::vector<double> sweep_values(int steps) {
  require(steps >= 2, ErrorCode::kInvalidArgument, "sweep: steps must be >= 2");
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int j = 0; j < steps; ++j) v[j] = -1.0 + 2.0 * j / (steps - 1);
  // Exact zero at the centre of odd sweeps keeps the reference pose shared.
  if (steps % 2 == 1) v[static_cast<std::size_t>(steps / 2)] = 0.0;
  return v;
}

template <class T>
SweepGrid motor_sweep(const model::NetworkParams<T>& params, int steps, double threshold) {
  const auto values = sweep_values(steps);
  SweepGrid grid;
  grid.rows = params.arch.motor_dim;
  grid.steps = steps;
  grid.cells.resize(static_cast<std::size_t>(grid.rows) * steps);
  const int total = grid.rows * steps;

  #pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < total; ++c) {
    const int row = c / steps, step = c % steps;
    data::MotorState m{std::vector<double>(static_cast<std::size_t>(grid.rows), 0.0)};
    m.values[static_cast<std::size_t>(row)] = values[static_cast<std::size_t>(step)];
    const auto pred = model::predict(params, m);
    auto& cell = grid.cells[static_cast<std::size_t>(c)];
    cell.motor = m;
    cell.image = model::to_image(pred.image);
    cell.error = model::to_image(pred.error);
    cell.mask = seg::extract_mask(cell.error, threshold);
  }
  return grid;
}

Image tile_sweep(const SweepGrid& grid, int field) {
  require(field >= 0 && field <= 2, ErrorCode::kInvalidArgument, "tile_sweep: field must be 0, 1 or 2");
  require(!grid.cells.empty(), ErrorCode::kInvalidArgument, "tile_sweep: empty grid");
  const Extent cell = grid.cells.front().image.extent;
  const Extent out_extent{grid.rows * (cell.height + 1) - 1, grid.steps * (cell.width + 1) - 1};
  Image out(out_extent);
  for (int row = 0; row < grid.rows; ++row) {
    for (int step = 0; step < grid.steps; ++step) {
      const auto& c = grid.at(row, step);
      for (int r = 0; r < cell.height; ++r) {
        for (int x = 0; x < cell.width; ++x) {
          for (int ch = 0; ch < kChannels; ++ch) {
            float v = 0.0f;
            if (field == 0) v = c.image.at(r, x, ch);
            if (field == 1) v = c.error.at(r, x, ch);
            if (field == 2) v = c.mask.at(r, x, ch) ? 1.0f : 0.0f;
            out.at(row * (cell.height + 1) + r, step * (cell.width + 1) + x, ch) = v;
          }
        }
      }
    }
  }
  return out;
}

template EvalReport evaluate_dataset<float>(const model::NetworkParams<float>&, const seg::GmmFit&,
                                            const std::vector<data::DatasetRecord>&);
template EvalReport evaluate_dataset<double>(const model::NetworkParams<double>&, const seg::GmmFit&,
                                             const std::vector<data::DatasetRecord>&);
template SweepGrid motor_sweep<float>(const model::NetworkParams<float>&, int, double);
template SweepGrid motor_sweep<double>(const model::NetworkParams<double>&, int, double);

}  // namespace bodyimage::eval
