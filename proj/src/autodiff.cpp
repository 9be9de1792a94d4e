#include "bodyimage/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>

#include "bodyimage/kernels.hpp"

namespace bodyimage::ad {

namespace {

template <class T>
void expect_shape(const Tensor<T>& t, const Shape& shape, const char* op) {
  require(t.shape() == shape, ErrorCode::kShape,
          std::string(op) + ": expected " + shape_string(shape) + ", got " + shape_string(t.shape()));
}

template <class T>
void expect_rank(const Tensor<T>& t, int rank, const char* op) {
  require(t.rank() == rank, ErrorCode::kShape,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
}

// Gradient destination for `v`: the tape buffer when tracked, else `scratch`
// sized to match. Kernels accumulate, so either target works.
template <class T>
std::span<T> grad_target(Tape<T>& t, Var v, Tensor<T>& scratch) {
  if (t.requires_grad(v)) return t.grad_buffer(v).values();
  scratch = Tensor<T>(t.value(v).shape());
  return scratch.values();
}

// Raw pointer to the tracked gradient of `v`, or null.
template <class T>
T* grad_ptr(Tape<T>& t, Var v) {
  return t.requires_grad(v) ? t.grad_buffer(v).data() : nullptr;
}

template <class T>
kernels::ConvShape conv_shape(const Tensor<T>& x, const Tensor<T>& k, const Tensor<T>& b, const char* op) {
  expect_rank(x, 3, op);
  expect_rank(k, 4, op);
  require(k.dim(0) == 3 && k.dim(1) == 3, ErrorCode::kShape, std::string(op) + ": kernels must be 3x3");
  require(k.dim(2) == x.dim(2), ErrorCode::kShape,
          std::string(op) + ": kernel input channels " + std::to_string(k.dim(2)) + " != input channels " +
              std::to_string(x.dim(2)));
  expect_shape(b, Shape{k.dim(3)}, op);
  return {x.dim(0), x.dim(1), x.dim(2), k.dim(3)};
}

}  // namespace

template <class T>
Var fully_connected(Tape<T>& tape, Var x, Var weights, Var bias) {
  const auto& xv = tape.value(x);
  const auto& wv = tape.value(weights);
  const auto& bv = tape.value(bias);
  expect_rank(xv, 1, "fully_connected");
  expect_rank(wv, 2, "fully_connected");
  require(wv.dim(1) == xv.dim(0), ErrorCode::kShape, "fully_connected: weight columns != input length");
  expect_shape(bv, Shape{wv.dim(0)}, "fully_connected");

  Tensor<T> y(Shape{wv.dim(0)});
  kernels::fast::dense_forward<T>(xv.values(), wv.values(), bv.values(), y.values());
  const bool rg = tape.requires_grad(x) || tape.requires_grad(weights) || tape.requires_grad(bias);
  return tape.record(std::move(y), rg, [x, weights, bias](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> dw_tmp, db_tmp;
    const auto dw = grad_target(t, weights, dw_tmp);
    const auto db = grad_target(t, bias, db_tmp);
    const std::span<T> dx = t.requires_grad(x) ? t.grad_buffer(x).values() : std::span<T>{};
    kernels::fast::dense_backward<T>(t.value(x).values(), t.value(weights).values(), g.values(), dx, dw, db);
  });
}

namespace {

template <class T, class Forward, class BackwardFn>
Var conv_like(Tape<T>& tape, Var x, Var kernels, Var bias, kernels::ConvShape s, Shape out_shape,
              Forward forward, BackwardFn backward) {
  Tensor<T> y(std::move(out_shape));
  forward(tape.value(x).values(), tape.value(kernels).values(), tape.value(bias).values(), y.values(), s);
  const bool rg = tape.requires_grad(x) || tape.requires_grad(kernels) || tape.requires_grad(bias);
  return tape.record(std::move(y), rg, [x, kernels, bias, s, backward](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> dk_tmp, db_tmp;
    const auto dk = grad_target(t, kernels, dk_tmp);
    const auto db = grad_target(t, bias, db_tmp);
    const std::span<T> dx = t.requires_grad(x) ? t.grad_buffer(x).values() : std::span<T>{};
    backward(t.value(x).values(), t.value(kernels).values(), g.values(), dx, dk, db, s);
  });
}

}  // namespace

template <class T>
Var conv2d(Tape<T>& tape, Var x, Var kernels, Var bias) {
  const auto s = conv_shape(tape.value(x), tape.value(kernels), tape.value(bias), "conv2d");
  return conv_like(tape, x, kernels, bias, s, Shape{s.height, s.width, s.out_channels},
                   kernels::fast::conv3x3_forward<T>, kernels::fast::conv3x3_backward<T>);
}

template <class T>
Var upsample_conv2d(Tape<T>& tape, Var x, Var kernels, Var bias) {
  const auto s = conv_shape(tape.value(x), tape.value(kernels), tape.value(bias), "upsample_conv2d");
  return conv_like(tape, x, kernels, bias, s, Shape{2 * s.height, 2 * s.width, s.out_channels},
                   kernels::fast::upsample_conv3x3_forward<T>, kernels::fast::upsample_conv3x3_backward<T>);
}

template <class T>
Var upsample2x(Tape<T>& tape, Var x) {
  const auto& xv = tape.value(x);
  expect_rank(xv, 3, "upsample2x");
  const int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor<T> y(Shape{2 * h, 2 * w, c});
  kernels::reference::upsample2x_forward<T>(xv.values(), y.values(), h, w, c);
  return tape.record(std::move(y), tape.requires_grad(x), [x, h, w, c](Tape<T>& t, const Tensor<T>& g) {
    kernels::reference::upsample2x_backward<T>(g.values(), t.grad_buffer(x).values(), h, w, c);
  });
}

namespace {

template <class T>
void selu_backward(const T* __restrict x, const T* __restrict y, const T* __restrict g, T* __restrict dx,
                   std::size_t n, T lambda, T la) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += g[i] * (x[i] > T{0} ? lambda : y[i] + la);
}

}  // namespace

template <class T>
Var selu(Tape<T>& tape, Var x) {
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
  const auto& xv = tape.value(x);
  const T lambda = static_cast<T>(kSeluLambda);
  const T la = static_cast<T>(kSeluLambda * kSeluAlpha);
  Tensor<T> y(xv.shape());
  const auto n = static_cast<Eigen::Index>(xv.size());
  Eigen::Map<const Array> in(xv.data(), n);
  Eigen::Map<Array>(y.data(), n) = lambda * in.max(T{0}) + la * (in.min(T{0}).exp() - T{1});
  // For x <= 0 the derivative la * exp(x) equals y + la, so the backward pass
  // reads this node's output instead of re-evaluating exp.
  const Var self{static_cast<int>(tape.size())};
  return tape.record(std::move(y), tape.requires_grad(x), [x, self, lambda, la](Tape<T>& t, const Tensor<T>& g) {
    selu_backward(t.value(x).data(), t.value(self).data(), g.data(), t.grad_buffer(x).data(), g.size(), lambda, la);
  });
}

template <class T>
Var relu(Tape<T>& tape, Var x) {
  const auto& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  {
    const T* in = xv.data();
    T* out = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
  }
  return tape.record(std::move(y), tape.requires_grad(x), [x](Tape<T>& t, const Tensor<T>& g) {
    const T* xv = t.value(x).data();
    const T* gv = g.data();
    T* buf = t.grad_buffer(x).data();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) buf[i] += xv[i] > T{0} ? gv[i] : T{0};
  });
}

template <class T>
Var reshape(Tape<T>& tape, Var x, Shape shape) {
  Tensor<T> y = tape.value(x).reshaped(std::move(shape));
  return tape.record(std::move(y), tape.requires_grad(x), [x](Tape<T>& t, const Tensor<T>& g) {
    const T* gv = g.data();
    T* buf = t.grad_buffer(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += gv[i];
  });
}

template <class T>
Var abs_diff(Tape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  expect_shape(bv, av.shape(), "abs_diff");
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(av[i] - bv[i]);
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(y), rg, [a, b](Tape<T>& t, const Tensor<T>& g) {
    const T* av = t.value(a).data();
    const T* bv = t.value(b).data();
    const T* gv = g.data();
    T* da = grad_ptr(t, a);
    T* dbuf = grad_ptr(t, b);
    auto sign = [](T d) { return d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0}); };
    if (da) {
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += sign(av[i] - bv[i]) * gv[i];
    }
    if (dbuf) {
      for (std::size_t i = 0; i < g.size(); ++i) dbuf[i] -= sign(av[i] - bv[i]) * gv[i];
    }
  });
}

template <class T>
Var l1_mean(Tape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  expect_shape(bv, av.shape(), "l1_mean");
  // Accumulate in double so the f32 loss does not drift with image size.
  double sum = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) sum += std::abs(static_cast<double>(av[i]) - static_cast<double>(bv[i]));
  const double n = static_cast<double>(av.size());
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(Tensor<T>::scalar(static_cast<T>(sum / n)), rg, [a, b, n](Tape<T>& t, const Tensor<T>& g) {
    const T* av = t.value(a).data();
    const T* bv = t.value(b).data();
    const std::size_t count = t.value(a).size();
    const T scale = static_cast<T>(static_cast<double>(g[0]) / n);
    T* da = grad_ptr(t, a);
    T* dbuf = grad_ptr(t, b);
    auto step = [scale](T d) { return d > T{0} ? scale : (d < T{0} ? -scale : T{0}); };
    if (da) {
      for (std::size_t i = 0; i < count; ++i) da[i] += step(av[i] - bv[i]);
    }
    if (dbuf) {
      for (std::size_t i = 0; i < count; ++i) dbuf[i] -= step(av[i] - bv[i]);
    }
  });
}

template <class T>
Var stop_gradient(Tape<T>& tape, Var x) {
  return tape.constant(tape.value(x));
}

template <class T>
Var add(Tape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  expect_shape(bv, av.shape(), "add");
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(y), rg, [a, b](Tape<T>& t, const Tensor<T>& g) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto& buf = t.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
    }
  });
}

template <class T>
Var scale(Tape<T>& tape, Var x, T factor) {
  const auto& xv = tape.value(x);
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * factor;
  return tape.record(std::move(y), tape.requires_grad(x), [x, factor](Tape<T>& t, const Tensor<T>& g) {
    auto& buf = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * factor;
  });
}

template <class T>
Var multiply(Tape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  expect_shape(bv, av.shape(), "multiply");
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(std::move(y), rg, [a, b](Tape<T>& t, const Tensor<T>& g) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (t.requires_grad(a)) {
      auto& buf = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      auto& buf = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * av[i];
    }
  });
}

#define BODYIMAGE_INSTANTIATE(T)                                  \
  template Var fully_connected<T>(Tape<T>&, Var, Var, Var);       \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var);                \
  template Var upsample2x<T>(Tape<T>&, Var);                      \
  template Var upsample_conv2d<T>(Tape<T>&, Var, Var, Var);       \
  template Var selu<T>(Tape<T>&, Var);                            \
  template Var relu<T>(Tape<T>&, Var);                            \
  template Var reshape<T>(Tape<T>&, Var, Shape);                  \
  template Var abs_diff<T>(Tape<T>&, Var, Var);                   \
  template Var l1_mean<T>(Tape<T>&, Var, Var);                    \
  template Var stop_gradient<T>(Tape<T>&, Var);                   \
  template Var add<T>(Tape<T>&, Var, Var);                        \
  template Var scale<T>(Tape<T>&, Var, T);                        \
  template Var multiply<T>(Tape<T>&, Var, Var);

BODYIMAGE_INSTANTIATE(float)
BODYIMAGE_INSTANTIATE(double)
#undef BODYIMAGE_INSTANTIATE

}  // namespace bodyimage::ad
