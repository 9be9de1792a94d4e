#pragma once

#include <span>

namespace bodyimage::kernels {

// Layouts: activations H x W x C row-major, conv weights 3 x 3 x Cin x Cout,
// dense weights out x in. Convolutions are stride 1 with one ring of zero
// padding (cross-correlation). Backward routines accumulate into every
// gradient they write (input, weights, bias); an empty input-gradient span
// skips that product.

struct ConvShape {
  int height = 0;  // input spatial dims
  int width = 0;
  int in_channels = 0;
  int out_channels = 0;
};

/// Direct loop implementations. Serial, slow, obviously correct.
namespace reference {

template <class T>
void dense_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y);
template <class T>
void dense_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                    std::span<T> dw, std::span<T> db);

template <class T>
void conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
                     ConvShape s);
template <class T>
void conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                      std::span<T> dw, std::span<T> db, ConvShape s);

/// Nearest-neighbour x2: out[i][j] = in[i/2][j/2].
template <class T>
void upsample2x_forward(std::span<const T> x, std::span<T> y, int height, int width, int channels);
/// Sums each 2x2 output-gradient block into its source component.
template <class T>
void upsample2x_backward(std::span<const T> dy, std::span<T> dx, int height, int width, int channels);

/// conv3x3(upsample2x(x)); `s` describes the low-resolution input.
template <class T>
void upsample_conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b,
                              std::span<T> y, ConvShape s);
template <class T>
void upsample_conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy,
                               std::span<T> dx, std::span<T> dw, std::span<T> db, ConvShape s);

}  // namespace reference

/// im2col + blocked GEMM. The fused upsample-conv runs each of the four
/// output phases as a 2x2 convolution on the low-resolution input, which is
/// algebraically identical to nearest upsampling followed by a 3x3 kernel.
namespace fast {

template <class T>
void dense_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y);
template <class T>
void dense_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                    std::span<T> dw, std::span<T> db);

template <class T>
void conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
                     ConvShape s);
template <class T>
void conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                      std::span<T> dw, std::span<T> db, ConvShape s);

template <class T>
void upsample_conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b,
                              std::span<T> y, ConvShape s);
template <class T>
void upsample_conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy,
                               std::span<T> dx, std::span<T> dw, std::span<T> db, ConvShape s);

}  // namespace fast

}  // namespace bodyimage::kernels
