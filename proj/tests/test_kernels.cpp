#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bodyimage/kernels.hpp"
#include "bodyimage/rng.hpp"

using namespace bodyimage;
using namespace bodyimage::kernels;

namespace {

template <class T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

template <class T>
double max_rel_diff(const std::vector<T>& a, const std::vector<T>& b) {
  EXPECT_EQ(a.size(), b.size());
  double scale = 1e-30, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(double(b[i])));
    diff = std::max(diff, std::abs(double(a[i]) - double(b[i])));
  }
  return diff / scale;
}

template <class T>
double tolerance() {
  return std::is_same_v<T, double> ? 1e-12 : 2e-5;
}

template <class T>
double dot(const std::vector<T>& a, const std::vector<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

const ConvShape kShapes[] = {
    {1, 1, 2, 2},   {2, 3, 3, 5},    {5, 7, 4, 3},    {3, 4, 32, 32},  {6, 8, 32, 32},   {12, 16, 32, 32},
    {24, 32, 32, 16}, {24, 32, 16, 8}, {24, 32, 8, 3}, {7, 5, 17, 9},  {4, 4, 8, 16},    {9, 11, 2, 7},
    {8, 10, 32, 3}, {3, 3, 5, 1},
};

template <class T>
class KernelsTyped : public ::testing::Test {};
using Types = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelsTyped, Types);

}  // namespace

TYPED_TEST(KernelsTyped, DenseFastMatchesReference) {
  using T = TypeParam;
  Rng rng(1);
  for (auto [in, out] : {std::pair{4, 128}, std::pair{128, 96}, std::pair{3, 1}, std::pair{17, 33}}) {
    const auto x = random_vec<T>(in, rng), w = random_vec<T>(in * out, rng), b = random_vec<T>(out, rng);
    const auto dy = random_vec<T>(out, rng);
    std::vector<T> y0(out), y1(out);
    reference::dense_forward<T>(x, w, b, y0);
    fast::dense_forward<T>(x, w, b, y1);
    EXPECT_LT(max_rel_diff(y1, y0), tolerance<T>());

    // Pre-filled buffers check the accumulate contract at the same time.
    auto dx0 = random_vec<T>(in, rng), dw0 = random_vec<T>(in * out, rng), db0 = random_vec<T>(out, rng);
    auto dx1 = dx0, dw1 = dw0, db1 = db0;
    reference::dense_backward<T>(x, w, dy, dx0, dw0, db0);
    fast::dense_backward<T>(x, w, dy, dx1, dw1, db1);
    EXPECT_LT(max_rel_diff(dx1, dx0), tolerance<T>());
    EXPECT_LT(max_rel_diff(dw1, dw0), tolerance<T>());
    EXPECT_LT(max_rel_diff(db1, db0), tolerance<T>());
  }
}

TYPED_TEST(KernelsTyped, ConvFastMatchesReference) {
  using T = TypeParam;
  Rng rng(2);
  for (const auto& s : kShapes) {
    SCOPED_TRACE(::testing::Message() << s.height << "x" << s.width << " " << s.in_channels << "->" << s.out_channels);
    const std::size_t nx = std::size_t(s.height) * s.width * s.in_channels;
    const std::size_t ny = std::size_t(s.height) * s.width * s.out_channels;
    const std::size_t nw = 9u * s.in_channels * s.out_channels;
    const auto x = random_vec<T>(nx, rng), w = random_vec<T>(nw, rng), b = random_vec<T>(s.out_channels, rng);
    const auto dy = random_vec<T>(ny, rng);
    std::vector<T> y0(ny), y1(ny);
    reference::conv3x3_forward<T>(x, w, b, y0, s);
    fast::conv3x3_forward<T>(x, w, b, y1, s);
    EXPECT_LT(max_rel_diff(y1, y0), tolerance<T>());

    auto dx0 = random_vec<T>(nx, rng), dw0 = random_vec<T>(nw, rng), db0 = random_vec<T>(s.out_channels, rng);
    auto dx1 = dx0, dw1 = dw0, db1 = db0;
    reference::conv3x3_backward<T>(x, w, dy, dx0, dw0, db0, s);
    fast::conv3x3_backward<T>(x, w, dy, dx1, dw1, db1, s);
    EXPECT_LT(max_rel_diff(dx1, dx0), tolerance<T>());
    EXPECT_LT(max_rel_diff(dw1, dw0), tolerance<T>());
    EXPECT_LT(max_rel_diff(db1, db0), tolerance<T>());

    // Empty input-gradient span: weights still accumulate identically.
    std::vector<T> dw2(nw, T{0}), db2(s.out_channels, T{0}), dw3 = dw2, db3 = db2;
    reference::conv3x3_backward<T>(x, w, dy, {}, dw2, db2, s);
    fast::conv3x3_backward<T>(x, w, dy, {}, dw3, db3, s);
    EXPECT_LT(max_rel_diff(dw3, dw2), tolerance<T>());
  }
}

TYPED_TEST(KernelsTyped, UpsampleConvFastMatchesReference) {
  using T = TypeParam;
  Rng rng(3);
  for (const auto& s : kShapes) {
    SCOPED_TRACE(::testing::Message() << s.height << "x" << s.width << " " << s.in_channels << "->" << s.out_channels);
    const std::size_t nx = std::size_t(s.height) * s.width * s.in_channels;
    const std::size_t ny = 4u * s.height * s.width * s.out_channels;
    const std::size_t nw = 9u * s.in_channels * s.out_channels;
    const auto x = random_vec<T>(nx, rng), w = random_vec<T>(nw, rng), b = random_vec<T>(s.out_channels, rng);
    const auto dy = random_vec<T>(ny, rng);
    std::vector<T> y0(ny), y1(ny);
    reference::upsample_conv3x3_forward<T>(x, w, b, y0, s);
    fast::upsample_conv3x3_forward<T>(x, w, b, y1, s);
    EXPECT_LT(max_rel_diff(y1, y0), tolerance<T>());

    auto dx0 = random_vec<T>(nx, rng), dw0 = random_vec<T>(nw, rng), db0 = random_vec<T>(s.out_channels, rng);
    auto dx1 = dx0, dw1 = dw0, db1 = db0;
    reference::upsample_conv3x3_backward<T>(x, w, dy, dx0, dw0, db0, s);
    fast::upsample_conv3x3_backward<T>(x, w, dy, dx1, dw1, db1, s);
    EXPECT_LT(max_rel_diff(dx1, dx0), tolerance<T>());
    EXPECT_LT(max_rel_diff(dw1, dw0), tolerance<T>());
    EXPECT_LT(max_rel_diff(db1, db0), tolerance<T>());
  }
}

TEST(ReferenceKernels, UpsampleConvEqualsComposition) {
  Rng rng(4);
  const ConvShape low{3, 5, 4, 6};
  const ConvShape high{6, 10, 4, 6};
  const auto x = random_vec<double>(3 * 5 * 4, rng), w = random_vec<double>(9 * 4 * 6, rng);
  const auto b = random_vec<double>(6, rng);
  std::vector<double> up(6 * 10 * 4), y_composed(6 * 10 * 6), y_fused(6 * 10 * 6);
  reference::upsample2x_forward<double>(x, up, 3, 5, 4);
  reference::conv3x3_forward<double>(up, w, b, y_composed, high);
  reference::upsample_conv3x3_forward<double>(x, w, b, y_fused, low);
  EXPECT_LT(max_rel_diff(y_fused, y_composed), 1e-13);

  const auto dy = random_vec<double>(6 * 10 * 6, rng);
  std::vector<double> dup(up.size(), 0.0), dx_composed(x.size(), 0.0), dw_composed(w.size(), 0.0), db_composed(6, 0.0);
  reference::conv3x3_backward<double>(up, w, dy, dup, dw_composed, db_composed, high);
  reference::upsample2x_backward<double>(dup, dx_composed, 3, 5, 4);
  std::vector<double> dx_fused(x.size(), 0.0), dw_fused(w.size(), 0.0), db_fused(6, 0.0);
  reference::upsample_conv3x3_backward<double>(x, w, dy, dx_fused, dw_fused, db_fused, low);
  EXPECT_LT(max_rel_diff(dx_fused, dx_composed), 1e-13);
  EXPECT_LT(max_rel_diff(dw_fused, dw_composed), 1e-13);
  EXPECT_LT(max_rel_diff(db_fused, db_composed), 1e-13);
}

TEST(ReferenceKernels, UpsampleRepeatsEachPixel) {
  const std::vector<double> x{1, 2, 3, 4};  // 2x2, one channel
  std::vector<double> y(16);
  reference::upsample2x_forward<double>(x, y, 2, 2, 1);
  EXPECT_EQ(y, (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  std::vector<double> dx(4, 0.0);
  reference::upsample2x_backward<double>(std::vector<double>(16, 1.0), dx, 2, 2, 1);
  EXPECT_EQ(dx, (std::vector<double>(4, 4.0)));
}

TEST(ReferenceKernels, ConvBackwardIsAdjointOfForward) {
  // <conv(x; w), dy> is bilinear, so <dy, y(x)> = <dx, x> and <dy, y(w)> = <dw, w> with zero bias.
  Rng rng(5);
  for (const auto& s : {ConvShape{4, 5, 3, 2}, ConvShape{6, 3, 2, 4}}) {
    const std::size_t nx = std::size_t(s.height) * s.width * s.in_channels;
    const std::size_t ny = std::size_t(s.height) * s.width * s.out_channels;
    const auto x = random_vec<double>(nx, rng), w = random_vec<double>(9 * s.in_channels * s.out_channels, rng);
    const std::vector<double> b(s.out_channels, 0.0);
    const auto dy = random_vec<double>(ny, rng);
    std::vector<double> y(ny), dx(nx, 0.0), dw(w.size(), 0.0), db(s.out_channels, 0.0);
    reference::conv3x3_forward<double>(x, w, b, y, s);
    reference::conv3x3_backward<double>(x, w, dy, dx, dw, db, s);
    EXPECT_NEAR(dot(y, dy), dot(dx, x), 1e-10);
    EXPECT_NEAR(dot(y, dy), dot(dw, w), 1e-10);
    double sum = 0.0;
    for (std::size_t i = 0; i < ny; i += s.out_channels) sum += dy[i];
    EXPECT_NEAR(db[0], sum, 1e-12);
  }
}

TEST(ReferenceKernels, ConvHandComputedCenterTap) {
  // Identity kernel (center tap only) copies the input; a ones kernel sums the 3x3 neighbourhood.
  const ConvShape s{3, 3, 1, 1};
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9}, w(9, 0.0), b{0.5}, y(9);
  w[4] = 1.0;
  reference::conv3x3_forward<double>(x, w, b, y, s);
  for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(y[i], x[i] + 0.5);
  std::fill(w.begin(), w.end(), 1.0);
  reference::conv3x3_forward<double>(x, w, {std::vector<double>{0.0}}, y, s);
  EXPECT_DOUBLE_EQ(y[4], 45.0);
  EXPECT_DOUBLE_EQ(y[0], 1 + 2 + 4 + 5);
}
