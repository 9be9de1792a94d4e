#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bodyimage/dataset.hpp"
#include "bodyimage/image.hpp"
#include "bodyimage/network.hpp"
#include "bodyimage/segmentation.hpp"

namespace bodyimage::eval {

/// IoU over components; 1.0 when both masks are empty.
double mask_match(const Mask& estimated, const Mask& ground_truth);

/// 1 - mean |clamp(s_hat) - s| over est AND gt; nullopt when that set is empty.
std::optional<double> appearance_match(const Image& prediction, const Image& target, const Mask& estimated,
                                       const Mask& ground_truth);

struct RecordScore {
  double mask_match = 0.0;
  std::optional<double> appearance_match;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

struct EvalReport {
  std::vector<RecordScore> records;
  Summary mask;
  Summary appearance;           // over defined values only
  std::size_t undefined_appearance = 0;  // records with an empty est AND gt
};

Summary summarize(const std::vector<double>& values);

/// Prediction source for record `index`: (s_hat, e_hat).
using Predictor = std::function<std::pair<Image, Image>(std::size_t index)>;

/// Thresholds each record's e_hat at `threshold` and scores it against the
/// record's ground truth. Records are scored in parallel, aggregated in order.
EvalReport evaluate_predictions(const std::vector<data::DatasetRecord>& test, double threshold,
                                const Predictor& predictor);

template <class T>
EvalReport evaluate_dataset(const model::NetworkParams<T>& params, const seg::GmmFit& fit,
                            const std::vector<data::DatasetRecord>& test);

/// `record,mask_match,appearance_match` (empty field when undefined).
std::string report_csv(const EvalReport& report);
std::string report_summary(const EvalReport& report);

struct VarianceProbeResult {
  Mask body;                          // ground-truth mask of the probed pose
  std::vector<double> variance;       // per component, sample variance over K backgrounds
  std::vector<double> body_variance;  // population split by the mask
  std::vector<double> environment_variance;

  double max_body_variance() const;
  double mean_environment_variance() const;
};

/// Renders one pose over K independent backgrounds through the dataset
/// pipeline and measures per-component variance.
VarianceProbeResult conditional_variance_probe(const data::MotorState& motor, int backgrounds,
                                               const data::SceneConfig& config, std::uint64_t seed);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
};

/// Normalized counts; out-of-range samples are clamped into the edge bins.
std::vector<HistogramBin> error_histogram(const std::vector<double>& samples, int bins, double lo, double hi);
/// `bin_lo,bin_hi,mass`
std::string histogram_csv(const std::vector<HistogramBin>& bins);

struct SweepCell {
  data::MotorState motor;
  Image image;
  Image error;
  Mask mask;
};

struct SweepGrid {
  int rows = 0;  // one per motor dimension
  int steps = 0;
  std::vector<SweepCell> cells;  // row-major

  const SweepCell& at(int row, int step) const { return cells[static_cast<std::size_t>(row) * steps + step]; }
};

/// Values of one sweep axis: `steps` points evenly spaced over [-1, 1].
std::vector<double> sweep_values(int steps);

/// From the all-zero reference motor, varies one dimension at a time.
template <class T>
SweepGrid motor_sweep(const model::NetworkParams<T>& params, int steps, double threshold);

/// Tiles one field of the grid (0 image, 1 error, 2 mask) into one picture,
/// with a 1-pixel black gutter between cells.
Image tile_sweep(const SweepGrid& grid, int field);

}  // namespace bodyimage::eval
