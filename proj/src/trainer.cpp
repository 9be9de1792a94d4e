#include "bodyimage/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>

#include "bodyimage/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace bodyimage::model {

namespace {

// Each example builds and frees a few MB of tape storage. glibc would hand
// that back to the kernel every time and fault it in again on the next
// example, so keep freed memory mapped.
void retain_heap() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)once;
#endif
}

}  // namespace

void TrainConfig::validate() const {
  require(iterations >= 0, ErrorCode::kConfig, "train.iterations must be >= 0");
  require(batch_size > 0, ErrorCode::kConfig, "train.batch_size must be positive");
  require(lr_end > 0.0 && lr_end <= lr_start, ErrorCode::kConfig, "train.lr_end must satisfy 0 < lr_end <= lr_start");
  require(alpha_ramp_end >= 0, ErrorCode::kConfig, "train.alpha_ramp_end must be >= 0");
  if (iterations > 0) {
    require(ramp_end() > 0 && ramp_end() <= iterations, ErrorCode::kConfig,
            "train.alpha_ramp_end must lie in (0, iterations]");
  }
  require(beta1 >= 0.0 && beta1 < 1.0, ErrorCode::kConfig, "train.beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kConfig, "train.beta2 must lie in [0, 1)");
  require(epsilon > 0.0, ErrorCode::kConfig, "train.epsilon must be positive");
}

double alpha_at(const TrainConfig& config, long iteration) {
  const long end = config.ramp_end();
  if (end <= 0 || iteration >= end) return 1.0;
  return static_cast<double>(iteration) / static_cast<double>(end);
}

double lr_at(const TrainConfig& config, long iteration) {
  if (config.iterations <= 0) return config.lr_start;
  if (iteration >= config.iterations) return config.lr_end;
  const double frac = static_cast<double>(std::min(iteration, config.iterations)) / static_cast<double>(config.iterations);
  return config.lr_start + (config.lr_end - config.lr_start) * frac;
}

template <class T>
AdamState<T> make_adam_state(const NetworkParams<T>& params) {
  AdamState<T> s;
  for (const auto& t : params.tensors) {
    s.first_moment.emplace_back(t.shape());
    s.second_moment.emplace_back(t.shape());
  }
  return s;
}

template <class T>
void adam_step(NetworkParams<T>& params, const std::vector<Tensor<T>>& gradients, AdamState<T>& state, double lr,
               const TrainConfig& config) {
  require(gradients.size() == params.tensors.size() && state.first_moment.size() == params.tensors.size(),
          ErrorCode::kShape, "adam_step: parameter/gradient count mismatch");
  for (std::size_t j = 0; j < gradients.size(); ++j) {
    require(gradients[j].shape() == params.tensors[j].shape(), ErrorCode::kShape,
            "adam_step: gradient shape mismatch for tensor " + std::to_string(j));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T inv_c1 = static_cast<T>(1.0 / c1), inv_c2 = static_cast<T>(1.0 / c2);
  const T step = static_cast<T>(lr), eps = static_cast<T>(config.epsilon);
  for (std::size_t j = 0; j < gradients.size(); ++j) {
    auto& p = params.tensors[j];
    auto& m = state.first_moment[j];
    auto& v = state.second_moment[j];
    const auto& g = gradients[j];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const T m_hat = m[i] * inv_c1;
      const T v_hat = v[i] * inv_c2;
      p[i] -= step * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <class T>
std::vector<Example<T>> make_examples(const std::vector<data::DatasetRecord>& records) {
  std::vector<Example<T>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({to_tensor<T>(r.motor), to_tensor<T>(r.sensory)});
  return out;
}

template <class T>
BatchResult<T> batch_gradients(const NetworkParams<T>& params, const std::vector<const Example<T>*>& batch,
                               double alpha, bool detach_error_target) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "batch_gradients: empty batch");
  retain_heap();
  validate_params(params);
  const Shape motor_shape{params.arch.motor_dim};
  const Shape image_shape{params.arch.image.height, params.arch.image.width, kChannels};
  for (const auto* e : batch) {
    require(e->motor.shape() == motor_shape && e->target.shape() == image_shape, ErrorCode::kShape,
            "batch_gradients: example shape does not match the network");
  }

  const int n = static_cast<int>(batch.size());
  std::vector<std::vector<Tensor<T>>> grads(batch.size());
  std::vector<double> rec(batch.size()), err(batch.size());
  std::exception_ptr failure;

  #pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < n; ++k) {
    try {
      ad::Tape<T> tape;
      const auto vars = bind_parameters(tape, params, true);
      const auto out = forward(tape, params.arch, vars, tape.reference(batch[k]->motor));
      const auto loss = example_loss(tape, out, tape.reference(batch[k]->target), static_cast<T>(alpha), n,
                                     detach_error_target);
      tape.backward(loss.total);
      rec[k] = static_cast<double>(tape.value(loss.rec).item());
      err[k] = static_cast<double>(tape.value(loss.err).item());
      grads[k].reserve(vars.size());
      for (auto v : vars) grads[k].push_back(tape.gradient(v));
    } catch (...) {
      #pragma omp critical(bodyimage_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  BatchResult<T> result;
  result.gradients = std::move(grads[0]);
  for (int k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < result.gradients.size(); ++j) {
      auto& acc = result.gradients[j];
      const auto& g = grads[k][j];
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  }
  for (int k = 0; k < n; ++k) {
    result.loss_rec += rec[k];
    result.loss_err += err[k];
  }
  result.loss_rec /= n;
  result.loss_err /= n;
  result.loss_total = loss_total(result.loss_rec, result.loss_err, alpha);
  return result;
}

template <class T>
TrainResult<T> train(NetworkParams<T> initial, const std::vector<data::DatasetRecord>& records,
                     const TrainConfig& config, const Progress& progress) {
  config.validate();
  require(!records.empty(), ErrorCode::kInvalidArgument, "train: dataset is empty");
  validate_params(initial);

  const auto examples = make_examples<T>(records);
  TrainResult<T> result{std::move(initial), {}};
  result.history.reserve(static_cast<std::size_t>(config.iterations));
  auto state = make_adam_state(result.params);
  Rng batch_rng(derive_seed(config.seed, kStreamBatch, 0));
  std::vector<const Example<T>*> batch(static_cast<std::size_t>(config.batch_size));

  for (long t = 0; t < config.iterations; ++t) {
    for (auto& e : batch) e = &examples[batch_rng.below(examples.size())];
    const double alpha = alpha_at(config, t);
    const double lr = lr_at(config, t);
    const auto step = batch_gradients(result.params, batch, alpha, config.detach_error_target);
    adam_step(result.params, step.gradients, state, lr, config);
    const HistoryRow row{t, step.loss_rec, step.loss_err, alpha, lr};
    result.history.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

template <class T>
TrainResult<T> train(const std::vector<data::DatasetRecord>& records, const TrainConfig& config,
                     const Progress& progress) {
  require(!records.empty(), ErrorCode::kInvalidArgument, "train: dataset is empty");
  const auto& first = records.front();
  auto initial = build_network<T>(first.sensory.extent, static_cast<int>(first.motor.values.size()), config.seed);
  return train<T>(std::move(initial), records, config, progress);
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::string out = "iter,loss_rec,loss_err,alpha,lr\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%ld,%.9g,%.9g,%.9g,%.9g\n", r.iteration, r.loss_rec, r.loss_err, r.alpha, r.lr);
    out += line;
  }
  return out;
}

#define BODYIMAGE_INSTANTIATE(T)                                                                                  \
  template AdamState<T> make_adam_state<T>(const NetworkParams<T>&);                                              \
  template void adam_step<T>(NetworkParams<T>&, const std::vector<Tensor<T>>&, AdamState<T>&, double,             \
                             const TrainConfig&);                                                                 \
  template std::vector<Example<T>> make_examples<T>(const std::vector<data::DatasetRecord>&);                     \
  template BatchResult<T> batch_gradients<T>(const NetworkParams<T>&, const std::vector<const Example<T>*>&,      \
                                             double, bool);                                                       \
  template TrainResult<T> train<T>(NetworkParams<T>, const std::vector<data::DatasetRecord>&, const TrainConfig&, \
                                   const Progress&);                                                              \
  template TrainResult<T> train<T>(const std::vector<data::DatasetRecord>&, const TrainConfig&, const Progress&);

BODYIMAGE_INSTANTIATE(float)
BODYIMAGE_INSTANTIATE(double)
#undef BODYIMAGE_INSTANTIATE

}  // namespace bodyimage::model
