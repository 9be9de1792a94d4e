#include <algorithm>
#include <vector>

#include "bodyimage/kernels.hpp"

namespace bodyimage::kernels::reference {

template <class T>
void dense_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) {
    T acc = b[o];
    for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * x[i];
    y[o] = acc;
  }
}

template <class T>
void dense_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                    std::span<T> dw, std::span<T> db) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < dy.size(); ++o) {
    db[o] += dy[o];
    for (std::size_t i = 0; i < in; ++i) {
      dw[o * in + i] += dy[o] * x[i];
      if (!dx.empty()) dx[i] += w[o * in + i] * dy[o];
    }
  }
}

template <class T>
void conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
                     ConvShape s) {
  const int H = s.height, W = s.width, Ci = s.in_channels, Co = s.out_channels;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      for (int co = 0; co < Co; ++co) {
        T acc = b[co];
        for (int ky = 0; ky < 3; ++ky) {
          const int rr = r + ky - 1;
          if (rr < 0 || rr >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int cc = c + kx - 1;
            if (cc < 0 || cc >= W) continue;
            for (int ci = 0; ci < Ci; ++ci) {
              acc += x[(rr * W + cc) * Ci + ci] * w[((ky * 3 + kx) * Ci + ci) * Co + co];
            }
          }
        }
        y[(r * W + c) * Co + co] = acc;
      }
    }
  }
}

template <class T>
void conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                      std::span<T> dw, std::span<T> db, ConvShape s) {
  const int H = s.height, W = s.width, Ci = s.in_channels, Co = s.out_channels;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      for (int co = 0; co < Co; ++co) {
        const T g = dy[(r * W + c) * Co + co];
        db[co] += g;
        for (int ky = 0; ky < 3; ++ky) {
          const int rr = r + ky - 1;
          if (rr < 0 || rr >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int cc = c + kx - 1;
            if (cc < 0 || cc >= W) continue;
            for (int ci = 0; ci < Ci; ++ci) {
              const std::size_t wi = ((ky * 3 + kx) * Ci + ci) * Co + co;
              const std::size_t xi = (rr * W + cc) * Ci + ci;
              dw[wi] += g * x[xi];
              if (!dx.empty()) dx[xi] += g * w[wi];
            }
          }
        }
      }
    }
  }
}

template <class T>
void upsample2x_forward(std::span<const T> x, std::span<T> y, int height, int width, int channels) {
  const int W2 = 2 * width;
  for (int r = 0; r < 2 * height; ++r) {
    for (int c = 0; c < W2; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        y[(r * W2 + c) * channels + ch] = x[((r / 2) * width + c / 2) * channels + ch];
      }
    }
  }
}

template <class T>
void upsample2x_backward(std::span<const T> dy, std::span<T> dx, int height, int width, int channels) {
  const int W2 = 2 * width;
  for (int r = 0; r < 2 * height; ++r) {
    for (int c = 0; c < W2; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        dx[((r / 2) * width + c / 2) * channels + ch] += dy[(r * W2 + c) * channels + ch];
      }
    }
  }
}

template <class T>
void upsample_conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b,
                              std::span<T> y, ConvShape s) {
  const ConvShape up{2 * s.height, 2 * s.width, s.in_channels, s.out_channels};
  std::vector<T> u(static_cast<std::size_t>(up.height) * up.width * up.in_channels);
  upsample2x_forward<T>(x, u, s.height, s.width, s.in_channels);
  conv3x3_forward<T>(u, w, b, y, up);
}

template <class T>
void upsample_conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy,
                               std::span<T> dx, std::span<T> dw, std::span<T> db, ConvShape s) {
  const ConvShape up{2 * s.height, 2 * s.width, s.in_channels, s.out_channels};
  std::vector<T> u(static_cast<std::size_t>(up.height) * up.width * up.in_channels);
  upsample2x_forward<T>(x, u, s.height, s.width, s.in_channels);
  std::vector<T> du(dx.empty() ? 0 : u.size());
  conv3x3_backward<T>(u, w, dy, du, dw, db, up);
  if (!dx.empty()) upsample2x_backward<T>(du, dx, s.height, s.width, s.in_channels);
}

#define BODYIMAGE_INSTANTIATE(T)                                                                              \
  template void dense_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>);   \
  template void dense_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>,   \
                                  std::span<T>, std::span<T>);                                                \
  template void conv3x3_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>, \
                                   ConvShape);                                                                \
  template void conv3x3_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,              \
                                    std::span<T>, std::span<T>, std::span<T>, ConvShape);                     \
  template void upsample2x_forward<T>(std::span<const T>, std::span<T>, int, int, int);                       \
  template void upsample2x_backward<T>(std::span<const T>, std::span<T>, int, int, int);                      \
  template void upsample_conv3x3_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>,      \
                                            std::span<T>, ConvShape);                                         \
  template void upsample_conv3x3_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,     \
                                             std::span<T>, std::span<T>, std::span<T>, ConvShape);

BODYIMAGE_INSTANTIATE(float)
BODYIMAGE_INSTANTIATE(double)
#undef BODYIMAGE_INSTANTIATE

}  // namespace bodyimage::kernels::reference
