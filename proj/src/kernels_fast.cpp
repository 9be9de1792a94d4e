#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <vector>

#include "bodyimage/kernels.hpp"
#include "bodyimage/tensor.hpp"

namespace bodyimage::kernels::fast {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <class T>
using ConstRowVec = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <class T>
using RowVec = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// Per-thread scratch; sized on demand and reused across calls.
template <class T>
AlignedVector<T>& scratch(int slot, std::size_t n) {
  thread_local std::array<AlignedVector<T>, 4> buffers;
  auto& b = buffers[static_cast<std::size_t>(slot)];
  if (b.size() < n) b.resize(n);
  return b;
}

// Fixed-width copies let the compiler unroll the common channel counts.
template <class T>
inline void copy_channels(T* dst, const T* src, int C) {
  switch (C) {
    case 3: std::copy_n(src, 3, dst); break;
    case 8: std::copy_n(src, 8, dst); break;
    case 16: std::copy_n(src, 16, dst); break;
    case 32: std::copy_n(src, 32, dst); break;
    default: std::copy_n(src, C, dst);
  }
}

template <class T>
void im2col3x3(const T* x, T* col, int H, int W, int C) {
  const std::size_t row_len = 9 * static_cast<std::size_t>(C);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      T* row = col + (static_cast<std::size_t>(r) * W + c) * row_len;
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          T* dst = row + (ky * 3 + kx) * C;
          if (rr < 0 || rr >= H || cc < 0 || cc >= W) {
            std::fill(dst, dst + C, T{0});
          } else {
            copy_channels(dst, x + (static_cast<std::size_t>(rr) * W + cc) * C, C);
          }
        }
      }
    }
  }
}

// w[ky][kx][ci][co] -> wt[2-ky][2-kx][co][ci]: the kernel that maps output
// gradients back onto the input grid.
template <class T>
void flip_kernel(const T* w, T* wt, int Ci, int Co) {
  for (int t = 0; t < 9; ++t) {
    const T* src = w + static_cast<std::size_t>(t) * Ci * Co;
    T* dst = wt + static_cast<std::size_t>(8 - t) * Ci * Co;
    for (int ci = 0; ci < Ci; ++ci) {
      for (int co = 0; co < Co; ++co) dst[co * Ci + ci] = src[ci * Co + co];
    }
  }
}

// Taps of the 3x3 kernel that collapse onto low-resolution tap `t` (0 or 1)
// for output phase `p` (0 or 1) after nearest upsampling.
constexpr int kTapBegin[2][2] = {{0, 1}, {0, 2}};
constexpr int kTapEnd[2][2] = {{1, 3}, {2, 3}};

template <class T>
void phase_kernel(const T* w, T* keff, int a, int b, int Ci, int Co) {
  const std::size_t block = static_cast<std::size_t>(Ci) * Co;
  std::fill(keff, keff + 4 * block, T{0});
  for (int r = 0; r < 2; ++r) {
    for (int s = 0; s < 2; ++s) {
      T* dst = keff + (r * 2 + s) * block;
      for (int ky = kTapBegin[a][r]; ky < kTapEnd[a][r]; ++ky) {
        for (int kx = kTapBegin[b][s]; kx < kTapEnd[b][s]; ++kx) {
          const T* src = w + (ky * 3 + kx) * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
    }
  }
}

template <class T>
void phase_kernel_grad(const T* dkeff, T* dw, int a, int b, int Ci, int Co) {
  const std::size_t block = static_cast<std::size_t>(Ci) * Co;
  for (int r = 0; r < 2; ++r) {
    for (int s = 0; s < 2; ++s) {
      const T* src = dkeff + (r * 2 + s) * block;
      for (int ky = kTapBegin[a][r]; ky < kTapEnd[a][r]; ++ky) {
        for (int kx = kTapBegin[b][s]; kx < kTapEnd[b][s]; ++kx) {
          T* dst = dw + (ky * 3 + kx) * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
    }
  }
}

// Low-resolution 2x2 patches feeding phase (a, b): offsets a-1+r, b-1+s.
template <class T>
void im2col_phase(const T* x, T* col, int h, int w, int C, int a, int b) {
  const std::size_t row_len = 4 * static_cast<std::size_t>(C);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      T* row = col + (static_cast<std::size_t>(i) * w + j) * row_len;
      for (int r = 0; r < 2; ++r) {
        const int ii = i + a - 1 + r;
        for (int s = 0; s < 2; ++s) {
          const int jj = j + b - 1 + s;
          T* dst = row + (r * 2 + s) * C;
          if (ii < 0 || ii >= h || jj < 0 || jj >= w) {
            std::fill(dst, dst + C, T{0});
          } else {
            copy_channels(dst, x + (static_cast<std::size_t>(ii) * w + jj) * C, C);
          }
        }
      }
    }
  }
}

// For each low-resolution input component (p, q), gathers the upsampled-grid
// output gradients it feeds: phase (a, b), tap (r, s) reads
// dy[2(p-a+1-r)+a][2(q-b+1-s)+b]. Columns ordered (a, b, r, s, co).
template <class T>
void gather_phase_grad(const T* dy, T* col, int h, int w, int Co) {
  const std::size_t row_len = 16 * static_cast<std::size_t>(Co);
  const int W2 = 2 * w;
  for (int p = 0; p < h; ++p) {
    for (int q = 0; q < w; ++q) {
      T* row = col + (static_cast<std::size_t>(p) * w + q) * row_len;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          for (int r = 0; r < 2; ++r) {
            const int i = p - a + 1 - r;
            for (int s = 0; s < 2; ++s) {
              const int j = q - b + 1 - s;
              T* dst = row + (((a * 2 + b) * 2 + r) * 2 + s) * Co;
              if (i < 0 || i >= h || j < 0 || j >= w) {
                std::fill(dst, dst + Co, T{0});
              } else {
                copy_channels(dst, dy + (static_cast<std::size_t>(2 * i + a) * W2 + 2 * j + b) * Co, Co);
              }
            }
          }
        }
      }
    }
  }
}

// Stacks the transposed phase kernels: rows (a, b, r, s, co), columns ci.
template <class T>
void stacked_phase_kernels(const T* w, T* kt, T* keff, int Ci, int Co) {
  const std::size_t block = static_cast<std::size_t>(Ci) * Co;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      phase_kernel(w, keff, a, b, Ci, Co);
      for (int t = 0; t < 4; ++t) {
        const T* src = keff + t * block;
        T* dst = kt + ((a * 2 + b) * 4 + t) * block;
        for (int ci = 0; ci < Ci; ++ci) {
          for (int co = 0; co < Co; ++co) dst[co * Ci + ci] = src[ci * Co + co];
        }
      }
    }
  }
}

// Direct 3x3 convolution for narrow layers, where a GEMM with a handful of
// output columns leaves most of each register tile idle. CO is the output
// width padded to a vector-friendly size; `wpad` is laid out [tap][ci][CO].
template <class T>
void pad_input(const T* x, T* xpad, int H, int W, int C) {
  const std::size_t row = static_cast<std::size_t>(W + 2) * C;
  std::fill(xpad, xpad + row * (H + 2), T{0});
  for (int r = 0; r < H; ++r) {
    std::copy_n(x + static_cast<std::size_t>(r) * W * C, static_cast<std::size_t>(W) * C,
                xpad + (r + 1) * row + C);
  }
}

// Output pixels are processed in runs of kRun so each weight load feeds
// several independent accumulators. `xpad` carries a one-pixel zero border.
template <class T, int CO>
void direct_conv3x3(const T* xpad, const T* wpad, const T* bias, T* y, int H, int W, int Ci, int Co,
                    bool accumulate) {
  using Vec = Eigen::Matrix<T, CO, 1>;
  constexpr int kRun = 4;
  const std::size_t prow = static_cast<std::size_t>(W + 2) * Ci;
  auto store = [&](const Vec& acc, int r, int c) {
    T* yp = y + (static_cast<std::size_t>(r) * W + c) * Co;
    if (accumulate) {
      for (int co = 0; co < Co; ++co) yp[co] += acc[co];
    } else {
      for (int co = 0; co < Co; ++co) yp[co] = acc[co] + bias[co];
    }
  };
  for (int r = 0; r < H; ++r) {
    int c = 0;
    for (; c + kRun <= W; c += kRun) {
      Vec acc[kRun];
      for (auto& v : acc) v.setZero();
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const T* xp = xpad + (r + ky) * prow + static_cast<std::size_t>(c + kx) * Ci;
          const T* wp = wpad + static_cast<std::size_t>(ky * 3 + kx) * Ci * CO;
          for (int ci = 0; ci < Ci; ++ci) {
            const Vec wv = Eigen::Map<const Vec>(wp + ci * CO);
            for (int p = 0; p < kRun; ++p) acc[p].noalias() += xp[p * Ci + ci] * wv;
          }
        }
      }
      for (int p = 0; p < kRun; ++p) store(acc[p], r, c + p);
    }
    for (; c < W; ++c) {
      Vec acc = Vec::Zero();
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const T* xp = xpad + (r + ky) * prow + static_cast<std::size_t>(c + kx) * Ci;
          const T* wp = wpad + static_cast<std::size_t>(ky * 3 + kx) * Ci * CO;
          for (int ci = 0; ci < Ci; ++ci) acc.noalias() += xp[ci] * Eigen::Map<const Vec>(wp + ci * CO);
        }
      }
      store(acc, r, c);
    }
  }
}

// dw[tap][ci][co] += sum over pixels of x[neighbour][ci] * g[pixel][co].
template <class T, int CO>
void direct_weight_grad(const T* x, const T* g, T* dw, T* acc, int H, int W, int Ci, int Co) {
  using Vec = Eigen::Matrix<T, CO, 1>;
  const std::size_t n = static_cast<std::size_t>(9) * Ci * CO;
  std::fill(acc, acc + n, T{0});
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      Vec gv = Vec::Zero();
      const T* gp = g + (static_cast<std::size_t>(r) * W + c) * Co;
      for (int co = 0; co < Co; ++co) gv[co] = gp[co];
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= H) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          if (cc < 0 || cc >= W) continue;
          const T* xp = x + (static_cast<std::size_t>(rr) * W + cc) * Ci;
          T* ap = acc + static_cast<std::size_t>(ky * 3 + kx) * Ci * CO;
          for (int ci = 0; ci < Ci; ++ci) Eigen::Map<Vec>(ap + ci * CO) += xp[ci] * gv;
        }
      }
    }
  }
  for (std::size_t tc = 0; tc < static_cast<std::size_t>(9) * Ci; ++tc) {
    for (int co = 0; co < Co; ++co) dw[tc * Co + co] += acc[tc * CO + co];
  }
}

// Narrow layers skip im2col + GEMM: the forward pass whenever the output is at
// most 16 wide, the gradient products only when the fan-in is small too.
constexpr bool direct_forward(int out_channels) { return out_channels <= 16; }
constexpr bool direct_gradient(int in_channels, int out_channels) {
  return out_channels <= 16 && in_channels * out_channels <= 128;
}

constexpr int padded_width(int channels) { return channels <= 4 ? 4 : (channels <= 8 ? 8 : (channels <= 16 ? 16 : 32)); }

// [tap][ci][co] kernel with co padded from Co to CO.
template <class T>
void pad_kernel(const T* w, T* wpad, int Ci, int Co, int CO) {
  for (int tc = 0; tc < 9 * Ci; ++tc) {
    for (int co = 0; co < CO; ++co) wpad[tc * CO + co] = co < Co ? w[tc * Co + co] : T{0};
  }
}

template <class T>
void run_direct_conv(const T* x, const T* w, const T* bias, T* y, int H, int W, int Ci, int Co, bool accumulate,
                     AlignedVector<T>& wpad, AlignedVector<T>& xpad) {
  const int CO = padded_width(Co);
  wpad.resize(static_cast<std::size_t>(9) * Ci * CO);
  pad_kernel(w, wpad.data(), Ci, Co, CO);
  xpad.resize(static_cast<std::size_t>(H + 2) * (W + 2) * Ci);
  pad_input(x, xpad.data(), H, W, Ci);
  switch (CO) {
    case 4: direct_conv3x3<T, 4>(xpad.data(), wpad.data(), bias, y, H, W, Ci, Co, accumulate); break;
    case 8: direct_conv3x3<T, 8>(xpad.data(), wpad.data(), bias, y, H, W, Ci, Co, accumulate); break;
    case 16: direct_conv3x3<T, 16>(xpad.data(), wpad.data(), bias, y, H, W, Ci, Co, accumulate); break;
    default: direct_conv3x3<T, 32>(xpad.data(), wpad.data(), bias, y, H, W, Ci, Co, accumulate); break;
  }
}

template <class T>
void run_direct_weight_grad(const T* x, const T* g, T* dw, int H, int W, int Ci, int Co, AlignedVector<T>& acc) {
  const int CO = padded_width(Co);
  acc.resize(static_cast<std::size_t>(9) * Ci * CO);
  switch (CO) {
    case 4: direct_weight_grad<T, 4>(x, g, dw, acc.data(), H, W, Ci, Co); break;
    case 8: direct_weight_grad<T, 8>(x, g, dw, acc.data(), H, W, Ci, Co); break;
    case 16: direct_weight_grad<T, 16>(x, g, dw, acc.data(), H, W, Ci, Co); break;
    default: direct_weight_grad<T, 32>(x, g, dw, acc.data(), H, W, Ci, Co); break;
  }
}

}  // namespace

template <class T>
void dense_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y) {
  const auto out = static_cast<Eigen::Index>(y.size());
  const auto in = static_cast<Eigen::Index>(x.size());
  ConstMatMap<T> wm(w.data(), out, in);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.data(), in);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(b.data(), out);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> yv(y.data(), out);
  yv.noalias() = wm * xv;
  yv += bv;
}

template <class T>
void dense_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                    std::span<T> dw, std::span<T> db) {
  const auto out = static_cast<Eigen::Index>(dy.size());
  const auto in = static_cast<Eigen::Index>(x.size());
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  Eigen::Map<const Vec> xv(x.data(), in);
  Eigen::Map<const Vec> gv(dy.data(), out);
  MatMap<T> dwm(dw.data(), out, in);
  dwm.noalias() += gv * xv.transpose();
  Eigen::Map<Vec>(db.data(), out) += gv;
  if (!dx.empty()) {
    ConstMatMap<T> wm(w.data(), out, in);
    Eigen::Map<Vec>(dx.data(), in).noalias() += wm.transpose() * gv;
  }
}

template <class T>
void conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b, std::span<T> y,
                     ConvShape s) {
  if (direct_forward(s.out_channels)) {
    run_direct_conv(x.data(), w.data(), b.data(), y.data(), s.height, s.width, s.in_channels, s.out_channels, false,
                    scratch<T>(1, 0), scratch<T>(0, 0));
    return;
  }
  const Eigen::Index pixels = static_cast<Eigen::Index>(s.height) * s.width;
  const Eigen::Index k = 9 * s.in_channels;
  auto& col = scratch<T>(0, static_cast<std::size_t>(pixels * k));
  im2col3x3(x.data(), col.data(), s.height, s.width, s.in_channels);
  MatMap<T> ym(y.data(), pixels, s.out_channels);
  ym.noalias() = ConstMatMap<T>(col.data(), pixels, k) * ConstMatMap<T>(w.data(), k, s.out_channels);
  ym.rowwise() += ConstRowVec<T>(b.data(), s.out_channels);
}

template <class T>
void conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy, std::span<T> dx,
                      std::span<T> dw, std::span<T> db, ConvShape s) {
  const Eigen::Index pixels = static_cast<Eigen::Index>(s.height) * s.width;
  const Eigen::Index k = 9 * s.in_channels;
  ConstMatMap<T> gm(dy.data(), pixels, s.out_channels);
  RowVec<T>(db.data(), s.out_channels) += gm.colwise().sum();
  if (direct_gradient(s.in_channels, s.out_channels)) {
    run_direct_weight_grad(x.data(), dy.data(), dw.data(), s.height, s.width, s.in_channels, s.out_channels,
                           scratch<T>(3, 0));
  } else {
    auto& col = scratch<T>(0, static_cast<std::size_t>(pixels * k));
    im2col3x3(x.data(), col.data(), s.height, s.width, s.in_channels);
    MatMap<T>(dw.data(), k, s.out_channels).noalias() += ConstMatMap<T>(col.data(), pixels, k).transpose() * gm;
  }
  if (dx.empty()) return;
  // The input gradient is a 3x3 convolution of dy with the flipped kernel.
  const Eigen::Index kt = 9 * s.out_channels;
  auto& wt = scratch<T>(1, static_cast<std::size_t>(kt * s.in_channels));
  flip_kernel(w.data(), wt.data(), s.in_channels, s.out_channels);
  if (direct_gradient(s.out_channels, s.in_channels)) {
    run_direct_conv(dy.data(), wt.data(), static_cast<const T*>(nullptr), dx.data(), s.height, s.width,
                    s.out_channels, s.in_channels, true, scratch<T>(2, 0), scratch<T>(0, 0));
    return;
  }
  auto& gcol = scratch<T>(2, static_cast<std::size_t>(pixels * kt));
  im2col3x3(dy.data(), gcol.data(), s.height, s.width, s.out_channels);
  MatMap<T>(dx.data(), pixels, s.in_channels).noalias() +=
      ConstMatMap<T>(gcol.data(), pixels, kt) * ConstMatMap<T>(wt.data(), kt, s.in_channels);
}

template <class T>
void upsample_conv3x3_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b,
                              std::span<T> y, ConvShape s) {
  const int h = s.height, wd = s.width, Ci = s.in_channels, Co = s.out_channels;
  const Eigen::Index pixels = static_cast<Eigen::Index>(h) * wd;
  const Eigen::Index k = 4 * Ci;
  auto& col = scratch<T>(0, static_cast<std::size_t>(pixels * k));
  auto& keff = scratch<T>(1, static_cast<std::size_t>(k * Co));
  auto& out = scratch<T>(2, static_cast<std::size_t>(pixels * Co));
  const ConstRowVec<T> bias(b.data(), Co);
  const int W2 = 2 * wd;
  for (int a = 0; a < 2; ++a) {
    for (int bb = 0; bb < 2; ++bb) {
      phase_kernel(w.data(), keff.data(), a, bb, Ci, Co);
      im2col_phase(x.data(), col.data(), h, wd, Ci, a, bb);
      MatMap<T> om(out.data(), pixels, Co);
      om.noalias() = ConstMatMap<T>(col.data(), pixels, k) * ConstMatMap<T>(keff.data(), k, Co);
      om.rowwise() += bias;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
          const T* src = out.data() + (static_cast<std::size_t>(i) * wd + j) * Co;
          T* dst = y.data() + (static_cast<std::size_t>(2 * i + a) * W2 + 2 * j + bb) * Co;
          copy_channels(dst, src, Co);
        }
      }
    }
  }
}

template <class T>
void upsample_conv3x3_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy,
                               std::span<T> dx, std::span<T> dw, std::span<T> db, ConvShape s) {
  const int h = s.height, wd = s.width, Ci = s.in_channels, Co = s.out_channels;
  const Eigen::Index pixels = static_cast<Eigen::Index>(h) * wd;
  const Eigen::Index k = 4 * Ci;
  auto& col = scratch<T>(0, static_cast<std::size_t>(pixels * k));
  auto& g = scratch<T>(1, static_cast<std::size_t>(pixels * Co));
  auto& dkeff = scratch<T>(2, static_cast<std::size_t>(k * Co));
  const int W2 = 2 * wd;
  for (int a = 0; a < 2; ++a) {
    for (int bb = 0; bb < 2; ++bb) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
          const T* src = dy.data() + (static_cast<std::size_t>(2 * i + a) * W2 + 2 * j + bb) * Co;
          copy_channels(g.data() + (static_cast<std::size_t>(i) * wd + j) * Co, src, Co);
        }
      }
      ConstMatMap<T> gm(g.data(), pixels, Co);
      im2col_phase(x.data(), col.data(), h, wd, Ci, a, bb);
      MatMap<T>(dkeff.data(), k, Co).noalias() = ConstMatMap<T>(col.data(), pixels, k).transpose() * gm;
      phase_kernel_grad(dkeff.data(), dw.data(), a, bb, Ci, Co);
      RowVec<T>(db.data(), Co) += gm.colwise().sum();
    }
  }
  if (!dx.empty()) {
    const Eigen::Index kt = 16 * Co;
    auto& kt_mat = scratch<T>(3, static_cast<std::size_t>(kt * Ci));
    auto& keff = scratch<T>(2, static_cast<std::size_t>(k * Co));
    stacked_phase_kernels(w.data(), kt_mat.data(), keff.data(), Ci, Co);
    auto& gcol = scratch<T>(0, static_cast<std::size_t>(pixels * kt));
    gather_phase_grad(dy.data(), gcol.data(), h, wd, Co);
    MatMap<T>(dx.data(), pixels, Ci).noalias() +=
        ConstMatMap<T>(gcol.data(), pixels, kt) * ConstMatMap<T>(kt_mat.data(), kt, Ci);
  }
}

#define BODYIMAGE_INSTANTIATE(T)                                                                              \
  template void dense_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>);   \
  template void dense_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>,   \
                                  std::span<T>, std::span<T>);                                                \
  template void conv3x3_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>, \
                                   ConvShape);                                                                \
  template void conv3x3_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,              \
                                    std::span<T>, std::span<T>, std::span<T>, ConvShape);                     \
  template void upsample_conv3x3_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>,      \
                                            std::span<T>, ConvShape);                                         \
  template void upsample_conv3x3_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,     \
                                             std::span<T>, std::span<T>, std::span<T>, ConvShape);

BODYIMAGE_INSTANTIATE(float)
BODYIMAGE_INSTANTIATE(double)
#undef BODYIMAGE_INSTANTIATE

}  // namespace bodyimage::kernels::fast
