#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodyimage/autodiff.hpp"
#include "bodyimage/dataset.hpp"
#include "bodyimage/image.hpp"
#include "bodyimage/tensor.hpp"

namespace bodyimage::model {

/// Layer sizes of the two-branch forward model. Defaults reproduce the
/// production network: FC(N_m->128) -> FC(128->h0*w0*32) -> reshape, then per
/// branch three (x2 upsample + conv 32->32) stages and convs 32->16->8->3.
struct Architecture {
  Extent image{24, 32};
  int motor_dim = 4;
  int trunk_width = 128;
  int deconv_layers = 3;
  int deconv_channels = 32;
  std::vector<int> conv_channels{16, 8};  // a final conv to 3 channels always follows

  int upscale() const { return 1 << deconv_layers; }
  int base_height() const { return image.height / upscale(); }
  int base_width() const { return image.width / upscale(); }
  /// Throws kConfig unless the image dims are divisible by 2^deconv_layers.
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

enum class Branch { kImage = 0, kError = 1 };

struct TensorSlot {
  std::string name;
  Shape shape;
};

/// Ordered parameter tensors: trunk (fc1.w, fc1.b, fc2.w, fc2.b), then the
/// image branch, then the error branch; each branch lists its deconv stages
/// and its convs as (weight, bias) pairs.
std::vector<TensorSlot> parameter_layout(const Architecture& arch);
/// Index range [first, last) of one branch's tensors within the layout.
std::pair<std::size_t, std::size_t> branch_range(const Architecture& arch, Branch branch);

template <class T>
struct NetworkParams {
  Architecture arch;
  std::vector<Tensor<T>> tensors;

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
  bool operator==(const NetworkParams&) const = default;
};

/// Weights ~ N(0, 1/fan_in), biases 0. Draws are made in double so f32 and
/// f64 networks built from one seed agree up to rounding.
template <class T>
NetworkParams<T> build_network(const Architecture& arch, std::uint64_t seed);
template <class T>
NetworkParams<T> build_network(Extent image, int motor_dim, std::uint64_t seed);

template <class To, class From>
NetworkParams<To> convert(const NetworkParams<From>& params) {
  NetworkParams<To> out{params.arch, {}};
  for (const auto& t : params.tensors) out.tensors.push_back(tensor_cast<To>(t));
  return out;
}

/// Checks that tensor shapes agree with the layout of `params.arch`.
template <class T>
void validate_params(const NetworkParams<T>& params);

struct Outputs {
  ad::Var image;  // predicted sensory state, [H, W, 3], >= 0
  ad::Var error;  // predicted prediction error, [H, W, 3], >= 0
};

/// Records every parameter tensor on the tape (tracked or not).
template <class T>
std::vector<ad::Var> bind_parameters(ad::Tape<T>& tape, const NetworkParams<T>& params, bool track);

/// Records the forward pass of one motor state [N_m].
template <class T>
Outputs forward(ad::Tape<T>& tape, const Architecture& arch, const std::vector<ad::Var>& params, ad::Var motor);

template <class T>
struct Prediction {
  Tensor<T> image;
  Tensor<T> error;
};

template <class T>
Prediction<T> predict(const NetworkParams<T>& params, const data::MotorState& motor);

template <class T>
Tensor<T> to_tensor(const Image& image);
template <class T>
Tensor<T> to_tensor(const data::MotorState& motor);
/// [H, W, 3] tensor to an Image, values copied verbatim (no clamping).
template <class T>
Image to_image(const Tensor<T>& tensor);

// Batch losses. All three tensors lists have the same length N and shapes.

/// (1/(N*N_s)) sum_k sum_i |s_hat - s|
template <class T>
double loss_rec(const std::vector<Tensor<T>>& predictions, const std::vector<Tensor<T>>& targets);
/// (1/(N*N_s)) sum_k sum_i | e_hat - |s_hat - s| |
template <class T>
double loss_err(const std::vector<Tensor<T>>& error_predictions, const std::vector<Tensor<T>>& predictions,
                const std::vector<Tensor<T>>& targets);
double loss_total(double rec, double err, double alpha);

struct ExampleLoss {
  ad::Var rec;    // per-example mean |s_hat - s|
  ad::Var err;    // per-example mean |e_hat - |s_hat - s||
  ad::Var total;  // (rec + alpha * err) / batch_size
};

/// Records one example's contribution to the batch loss. With
/// `detach_error_target` the |s_hat - s| regression target of the error
/// branch is a constant, so L_err never reaches the image branch.
template <class T>
ExampleLoss example_loss(ad::Tape<T>& tape, const Outputs& outputs, ad::Var target, T alpha, int batch_size,
                         bool detach_error_target);

}  // namespace bodyimage::model
