#include "bodyimage/network.hpp"

#include <cmath>

#include "bodyimage/rng.hpp"

namespace bodyimage::model {

void Architecture::validate() const {
  require(motor_dim > 0, ErrorCode::kConfig, "network: motor_dim must be positive");
  require(trunk_width > 0 && deconv_channels > 0, ErrorCode::kConfig, "network: layer widths must be positive");
  require(deconv_layers >= 1 && deconv_layers <= 6, ErrorCode::kConfig, "network: deconv_layers out of range");
  for (int c : conv_channels) require(c > 0, ErrorCode::kConfig, "network: conv channels must be positive");
  require(image.height > 0 && image.width > 0 && image.height % upscale() == 0 && image.width % upscale() == 0,
          ErrorCode::kConfig,
          "network: image dims " + std::to_string(image.height) + "x" + std::to_string(image.width) +
              " must be divisible by " + std::to_string(upscale()));
}

std::vector<TensorSlot> parameter_layout(const Architecture& arch) {
  arch.validate();
  std::vector<TensorSlot> slots;
  const int base = arch.base_height() * arch.base_width() * arch.deconv_channels;
  slots.push_back({"trunk.fc1.weight", {arch.trunk_width, arch.motor_dim}});
  slots.push_back({"trunk.fc1.bias", {arch.trunk_width}});
  slots.push_back({"trunk.fc2.weight", {base, arch.trunk_width}});
  slots.push_back({"trunk.fc2.bias", {base}});
  for (const char* branch : {"image", "error"}) {
    const std::string prefix = std::string(branch) + ".";
    for (int l = 0; l < arch.deconv_layers; ++l) {
      const std::string name = prefix + "deconv" + std::to_string(l + 1);
      slots.push_back({name + ".weight", {3, 3, arch.deconv_channels, arch.deconv_channels}});
      slots.push_back({name + ".bias", {arch.deconv_channels}});
    }
    int in = arch.deconv_channels;
    std::vector<int> outs = arch.conv_channels;
    outs.push_back(kChannels);
    for (std::size_t l = 0; l < outs.size(); ++l) {
      const std::string name = prefix + "conv" + std::to_string(l + 1);
      slots.push_back({name + ".weight", {3, 3, in, outs[l]}});
      slots.push_back({name + ".bias", {outs[l]}});
      in = outs[l];
    }
  }
  return slots;
}

std::pair<std::size_t, std::size_t> branch_range(const Architecture& arch, Branch branch) {
  const std::size_t per_branch = 2 * (static_cast<std::size_t>(arch.deconv_layers) + arch.conv_channels.size() + 1);
  const std::size_t first = 4 + (branch == Branch::kImage ? 0 : per_branch);
  return {first, first + per_branch};
}

template <class T>
NetworkParams<T> build_network(const Architecture& arch, std::uint64_t seed) {
  NetworkParams<T> params{arch, {}};
  Rng rng(derive_seed(seed, kStreamInit, 0));
  for (const auto& slot : parameter_layout(arch)) {
    Tensor<T> t(slot.shape);
    if (slot.shape.size() > 1) {
      // fan_in: input length for dense, 3*3*Cin for conv.
      const int fan_in = slot.shape.size() == 2 ? slot.shape[1] : 9 * slot.shape[2];
      const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : t.storage()) v = static_cast<T>(stddev * rng.normal());
    }
    params.tensors.push_back(std::move(t));
  }
  return params;
}

template <class T>
NetworkParams<T> build_network(Extent image, int motor_dim, std::uint64_t seed) {
  Architecture arch;
  arch.image = image;
  arch.motor_dim = motor_dim;
  return build_network<T>(arch, seed);
}

template <class T>
void validate_params(const NetworkParams<T>& params) {
  const auto layout = parameter_layout(params.arch);
  require(layout.size() == params.tensors.size(), ErrorCode::kShape,
          "network: expected " + std::to_string(layout.size()) + " tensors, got " +
              std::to_string(params.tensors.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    require(params.tensors[i].shape() == layout[i].shape, ErrorCode::kShape,
            "network: " + layout[i].name + " has shape " + shape_string(params.tensors[i].shape()) + ", expected " +
                shape_string(layout[i].shape));
  }
}

template <class T>
std::vector<ad::Var> bind_parameters(ad::Tape<T>& tape, const NetworkParams<T>& params, bool track) {
  std::vector<ad::Var> vars;
  vars.reserve(params.tensors.size());
  for (const auto& t : params.tensors) vars.push_back(track ? tape.parameter(t) : tape.reference(t));
  return vars;
}

template <class T>
Outputs forward(ad::Tape<T>& tape, const Architecture& arch, const std::vector<ad::Var>& params, ad::Var motor) {
  require(tape.value(motor).shape() == Shape{arch.motor_dim}, ErrorCode::kShape,
          "forward: motor must have shape [" + std::to_string(arch.motor_dim) + "], got " +
              shape_string(tape.value(motor).shape()));
  using namespace ad;
  Var h = selu(tape, fully_connected(tape, motor, params[0], params[1]));
  h = selu(tape, fully_connected(tape, h, params[2], params[3]));
  const Var base = reshape(tape, h, Shape{arch.base_height(), arch.base_width(), arch.deconv_channels});

  auto run_branch = [&](Branch b) {
    std::size_t p = branch_range(arch, b).first;
    Var x = base;
    for (int l = 0; l < arch.deconv_layers; ++l, p += 2) {
      x = selu(tape, upsample_conv2d(tape, x, params[p], params[p + 1]));
    }
    const std::size_t convs = arch.conv_channels.size() + 1;
    for (std::size_t l = 0; l < convs; ++l, p += 2) {
      const Var z = conv2d(tape, x, params[p], params[p + 1]);
      x = l + 1 < convs ? selu(tape, z) : relu(tape, z);
    }
    return x;
  };
  return {run_branch(Branch::kImage), run_branch(Branch::kError)};
}

template <class T>
Prediction<T> predict(const NetworkParams<T>& params, const data::MotorState& motor) {
  ad::Tape<T> tape;
  const auto vars = bind_parameters(tape, params, false);
  const auto out = forward(tape, params.arch, vars, tape.constant(to_tensor<T>(motor)));
  return {tape.value(out.image), tape.value(out.error)};
}

template <class T>
Tensor<T> to_tensor(const Image& image) {
  std::vector<T> v(image.data.begin(), image.data.end());
  return Tensor<T>(Shape{image.extent.height, image.extent.width, kChannels}, std::move(v));
}

template <class T>
Tensor<T> to_tensor(const data::MotorState& motor) {
  Shape shape{static_cast<int>(motor.values.size())};
  return Tensor<T>(std::move(shape), std::vector<T>(motor.values.begin(), motor.values.end()));
}

template <class T>
Image to_image(const Tensor<T>& tensor) {
  require(tensor.rank() == 3 && tensor.dim(2) == kChannels, ErrorCode::kShape,
          "to_image: expected [H, W, 3], got " + shape_string(tensor.shape()));
  Image img({tensor.dim(0), tensor.dim(1)});
  for (std::size_t i = 0; i < tensor.size(); ++i) img.data[i] = static_cast<float>(tensor[i]);
  return img;
}

namespace {

template <class T>
void check_batch(const std::vector<Tensor<T>>& a, const std::vector<Tensor<T>>& b, const char* op) {
  require(!a.empty() && a.size() == b.size(), ErrorCode::kShape, std::string(op) + ": batch sizes differ or are empty");
  for (std::size_t k = 0; k < a.size(); ++k) {
    require(a[k].shape() == b[k].shape(), ErrorCode::kShape, std::string(op) + ": shape mismatch in batch");
  }
}

}  // namespace

template <class T>
double loss_rec(const std::vector<Tensor<T>>& predictions, const std::vector<Tensor<T>>& targets) {
  check_batch(predictions, targets, "loss_rec");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    for (std::size_t i = 0; i < predictions[k].size(); ++i) {
      sum += std::abs(static_cast<double>(predictions[k][i]) - static_cast<double>(targets[k][i]));
    }
    n += predictions[k].size();
  }
  return sum / static_cast<double>(n);
}

template <class T>
double loss_err(const std::vector<Tensor<T>>& error_predictions, const std::vector<Tensor<T>>& predictions,
                const std::vector<Tensor<T>>& targets) {
  check_batch(error_predictions, predictions, "loss_err");
  check_batch(predictions, targets, "loss_err");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    for (std::size_t i = 0; i < predictions[k].size(); ++i) {
      const double actual = std::abs(static_cast<double>(predictions[k][i]) - static_cast<double>(targets[k][i]));
      sum += std::abs(static_cast<double>(error_predictions[k][i]) - actual);
    }
    n += predictions[k].size();
  }
  return sum / static_cast<double>(n);
}

double loss_total(double rec, double err, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kInvalidArgument, "loss_total: alpha must lie in [0, 1]");
  return rec + alpha * err;
}

template <class T>
ExampleLoss example_loss(ad::Tape<T>& tape, const Outputs& outputs, ad::Var target, T alpha, int batch_size,
                         bool detach_error_target) {
  using namespace ad;
  const Var rec = l1_mean(tape, outputs.image, target);
  const Var predicted = detach_error_target ? stop_gradient(tape, outputs.image) : outputs.image;
  const Var actual_error = abs_diff(tape, predicted, target);
  const Var err = l1_mean(tape, outputs.error, actual_error);
  const Var total = scale(tape, add(tape, rec, scale(tape, err, alpha)), T{1} / static_cast<T>(batch_size));
  return {rec, err, total};
}

#define BODYIMAGE_INSTANTIATE(T)                                                                                \
  template NetworkParams<T> build_network<T>(const Architecture&, std::uint64_t);                               \
  template NetworkParams<T> build_network<T>(Extent, int, std::uint64_t);                                       \
  template void validate_params<T>(const NetworkParams<T>&);                                                    \
  template std::vector<ad::Var> bind_parameters<T>(ad::Tape<T>&, const NetworkParams<T>&, bool);                \
  template Outputs forward<T>(ad::Tape<T>&, const Architecture&, const std::vector<ad::Var>&, ad::Var);         \
  template Prediction<T> predict<T>(const NetworkParams<T>&, const data::MotorState&);                          \
  template Tensor<T> to_tensor<T>(const Image&);                                                                \
  template Tensor<T> to_tensor<T>(const data::MotorState&);                                                     \
  template Image to_image<T>(const Tensor<T>&);                                                                 \
  template double loss_rec<T>(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&);                    \
  template double loss_err<T>(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&,                     \
                              const std::vector<Tensor<T>>&);                                                   \
  template ExampleLoss example_loss<T>(ad::Tape<T>&, const Outputs&, ad::Var, T, int, bool);

BODYIMAGE_INSTANTIATE(float)
BODYIMAGE_INSTANTIATE(double)
#undef BODYIMAGE_INSTANTIATE

}  // namespace bodyimage::model
