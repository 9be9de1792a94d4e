#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bodyimage/dataset.hpp"
#include "bodyimage/network.hpp"

namespace bodyimage::model {

struct TrainConfig {
  long iterations = 5000;
  int batch_size = 100;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  long alpha_ramp_end = 0;  // 0 selects iterations / 2
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 7;
  bool detach_error_target = true;

  long ramp_end() const { return alpha_ramp_end > 0 ? alpha_ramp_end : iterations / 2; }
  void validate() const;
};

/// Error-loss weight: 0 at iteration 0, linear up to 1 at ramp_end(), then 1.
double alpha_at(const TrainConfig& config, long iteration);
/// Learning rate, linear from lr_start at 0 to lr_end at `iterations`.
double lr_at(const TrainConfig& config, long iteration);

template <class T>
struct AdamState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  long step = 0;
};

template <class T>
AdamState<T> make_adam_state(const NetworkParams<T>& params);

/// One bias-corrected ADAM update applied in place.
template <class T>
void adam_step(NetworkParams<T>& params, const std::vector<Tensor<T>>& gradients, AdamState<T>& state, double lr,
               const TrainConfig& config);

template <class T>
struct Example {
  Tensor<T> motor;   // [N_m]
  Tensor<T> target;  // [H, W, 3]
};

template <class T>
std::vector<Example<T>> make_examples(const std::vector<data::DatasetRecord>& records);

template <class T>
struct BatchResult {
  double loss_rec = 0.0;
  double loss_err = 0.0;
  double loss_total = 0.0;
  std::vector<Tensor<T>> gradients;  // d loss_total / d params, layout order
};

/// Loss and gradient over a mini-batch. Examples run in parallel, one tape
/// each; per-example gradients are summed in batch order so the result does
/// not depend on the thread count.
template <class T>
BatchResult<T> batch_gradients(const NetworkParams<T>& params, const std::vector<const Example<T>*>& batch,
                               double alpha, bool detach_error_target);

struct HistoryRow {
  long iteration = 0;
  double loss_rec = 0.0;
  double loss_err = 0.0;
  double alpha = 0.0;
  double lr = 0.0;
};

template <class T>
struct TrainResult {
  NetworkParams<T> params;
  std::vector<HistoryRow> history;
};

using Progress = std::function<void(const HistoryRow&)>;

/// Mini-batches drawn uniformly with replacement from the seeded stream.
template <class T>
TrainResult<T> train(NetworkParams<T> initial, const std::vector<data::DatasetRecord>& records,
                     const TrainConfig& config, const Progress& progress = {});

/// Builds the default architecture for the records' dims from config.seed.
template <class T>
TrainResult<T> train(const std::vector<data::DatasetRecord>& records, const TrainConfig& config,
                     const Progress& progress = {});

/// CSV with header `iter,loss_rec,loss_err,alpha,lr`.
std::string history_csv(const std::vector<HistoryRow>& history);

}  // namespace bodyimage::model
