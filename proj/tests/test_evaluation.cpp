#include <gtest/gtest.h>

#include <cmath>

#include "bodyimage/dataset.hpp"
#include "bodyimage/error.hpp"
#include "bodyimage/evaluation.hpp"
#include "bodyimage/rng.hpp"

using namespace bodyimage;
using namespace bodyimage::eval;

namespace {

Mask random_mask(Extent e, double p, Rng& rng) {
  Mask m(e);
  for (auto& v : m.data) v = rng.uniform() < p ? 1 : 0;
  return m;
}

Image random_image(Extent e, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Image img(e);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

// Set-arithmetic IoU written independently of the library.
double iou_oracle(const Mask& a, const Mask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] && b.data[i];
    uni += a.data[i] || b.data[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

model::Architecture tiny_arch() {
  model::Architecture a;
  a.image = {8, 8};
  a.motor_dim = 3;
  a.trunk_width = 8;
  a.deconv_layers = 1;
  a.deconv_channels = 4;
  a.conv_channels = {4};
  return a;
}

}  // namespace

TEST(MaskMatch, HalfOfGroundTruth) {
  // gt covers all four components of a 2x2 single-channel-equivalent layout, est covers two of them
  Mask gt({2, 2}), est({2, 2});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) gt.set(r, c, 0, true);
  est.set(0, 0, 0, true);
  est.set(1, 1, 0, true);
  EXPECT_DOUBLE_EQ(mask_match(est, gt), 0.5);
}

TEST(MaskMatch, Conventions) {
  const Mask empty({3, 3});
  EXPECT_EQ(mask_match(empty, empty), 1.0);
  Mask one({3, 3});
  one.set(1, 1, 2, true);
  EXPECT_EQ(mask_match(one, one), 1.0);
  EXPECT_EQ(mask_match(one, empty), 0.0);
  EXPECT_THROW(mask_match(one, Mask({3, 4})), Error);
}

TEST(MaskMatch, PropertiesOverRandomMasks) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Extent e{1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(6))};
    const double p = rng.uniform(0.0, 0.6);
    const Mask a = random_mask(e, p, rng), b = random_mask(e, p, rng);
    const double ab = mask_match(a, b);
    ASSERT_EQ(ab, mask_match(b, a));
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
    ASSERT_NEAR(ab, iou_oracle(a, b), 1e-15);
    ASSERT_EQ(ab == 1.0, a == b);
  }
}

TEST(AppearanceMatch, ConstructedCases) {
  Mask m({2, 2});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.set(r, c, 1, true);
  Image target({2, 2}, 0.5f), pred({2, 2}, 0.5f);
  const float errs[] = {0.0f, 0.1f, 0.2f, 0.1f};
  for (int k = 0; k < 4; ++k) pred.at(k / 2, k % 2, 1) = 0.5f + errs[k];
  EXPECT_NEAR(*appearance_match(pred, target, m, m), 0.9, 1e-7);
  EXPECT_EQ(*appearance_match(target, target, m, m), 1.0);

  Image zeros({2, 2}, 0.0f), ones({2, 2}, 1.0f);
  EXPECT_EQ(*appearance_match(ones, zeros, m, m), 0.0);
  EXPECT_EQ(*appearance_match(Image({2, 2}, 7.0f), zeros, m, m), 0.0);  // clamped into [0, 1]
  EXPECT_FALSE(appearance_match(ones, zeros, m, Mask({2, 2})).has_value());
}

TEST(AppearanceMatch, BoundedAndPerfectOnRandomData) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Extent e{4, 5};
    const Image s = random_image(e, rng), s_hat = random_image(e, rng, -0.5, 2.0);
    const Mask a = random_mask(e, 0.5, rng), b = random_mask(e, 0.5, rng);
    const auto v = appearance_match(s_hat, s, a, b);
    if (v) {
      ASSERT_GE(*v, 0.0);
      ASSERT_LE(*v, 1.0);
    }
    const auto perfect = appearance_match(s, s, a, a);
    if (a.any()) {
      ASSERT_EQ(*perfect, 1.0);
    }
  }
}

TEST(Summarize, PopulationStatistics) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(1.25));
  EXPECT_EQ(s.count, 4u);
  EXPECT_EQ(summarize({}).count, 0u);
}

TEST(Evaluate, OracleAchievesPerfectScores) {
  const auto test = data::generate_dataset(40, data::default_scene_config(), 3);
  const auto report = evaluate_predictions(test, 0.5, [&](std::size_t i) {
    Image e(test[i].sensory.extent, 1.0f);
    for (std::size_t k = 0; k < e.data.size(); ++k)
      if (test[i].gt_mask.data[k]) e.data[k] = 0.0f;
    return std::pair{test[i].sensory, e};
  });
  ASSERT_EQ(report.records.size(), 40u);
  EXPECT_EQ(report.mask.mean, 1.0);
  EXPECT_EQ(report.mask.stddev, 0.0);
  EXPECT_EQ(report.appearance.mean, 1.0);
  std::size_t empty = 0;
  for (const auto& r : test) empty += r.gt_mask.any() ? 0 : 1;
  EXPECT_EQ(report.undefined_appearance, empty);
  EXPECT_EQ(report.appearance.count + empty, 40u);
}

TEST(Evaluate, ReportFormats) {
  EvalReport r;
  r.records = {{0.5, 0.75}, {1.0, std::nullopt}};
  r.mask = summarize({0.5, 1.0});
  r.appearance = summarize({0.75});
  r.undefined_appearance = 1;
  const auto csv = report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "record,mask_match,appearance_match");
  EXPECT_NE(csv.find("\n1,1"), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(csv.substr(csv.rfind(',', csv.size() - 1)), ",\n");
  EXPECT_NE(report_summary(r).find("mask_match: 0.7500 +- 0.2500"), std::string::npos);
}

TEST(Evaluate, EmptyTestSetIsError) {
  EXPECT_THROW(evaluate_predictions({}, 0.1, [](std::size_t) { return std::pair{Image(), Image()}; }), Error);
  EXPECT_THROW(evaluate_dataset(model::build_network<float>(tiny_arch(), 1), seg::GmmFit{}, {}), Error);
}

TEST(Evaluate, DatasetMatchesManualPipeline) {
  const auto arch = tiny_arch();
  const auto net = model::build_network<double>(arch, 4);
  Rng rng(5);
  std::vector<data::DatasetRecord> test(6);
  for (auto& r : test) {
    r.motor.values = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.sensory = random_image(arch.image, rng);
    r.gt_mask = random_mask(arch.image, 0.3, rng);
  }
  seg::GmmFit fit;
  fit.threshold = 0.05;
  const auto report = evaluate_dataset(net, fit, test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto p = model::predict(net, test[i].motor);
    const auto est = seg::extract_mask(p.error, fit.threshold);
    EXPECT_EQ(report.records[i].mask_match, mask_match(est, test[i].gt_mask));
  }
}

TEST(VarianceProbe, BodyIsExactlyDeterministic) {
  const auto c = data::default_scene_config();
  const data::MotorState m{{0.2, -0.3, 0.5, 0.1}};
  const auto r = conditional_variance_probe(m, 200, c, 17);
  ASSERT_TRUE(r.body.any());
  EXPECT_EQ(r.max_body_variance(), 0.0);
  EXPECT_GT(r.mean_environment_variance(), 0.005);
  EXPECT_EQ(r.body_variance.size() + r.environment_variance.size(), r.variance.size());
  EXPECT_EQ(r.body_variance.size(), r.body.count());
}

TEST(VarianceProbe, PreconditionsAndIdenticalSeeds) {
  const auto c = data::default_scene_config();
  const data::MotorState m{{0.0, 0.0, 0.0, 0.0}};
  EXPECT_THROW(conditional_variance_probe(m, 1, c, 1), Error);
  // Two renders of one background seed: compare directly.
  const auto joints = data::denormalize_motor(m, c.ranges);
  const auto a = data::render_record_scene(joints, 99, c), b = data::render_record_scene(joints, 99, c);
  EXPECT_EQ(a.image, b.image);
}

TEST(Histogram, MassAndBinning) {
  const auto single = error_histogram(std::vector<double>(10, 0.123), 10, 0.0, 1.0);
  double total = 0.0;
  int nonzero = 0;
  for (const auto& b : single) {
    total += b.mass;
    nonzero += b.mass > 0;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(single[1].mass, 1.0);

  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  for (const auto& b : error_histogram(grid, 8, 0.0, 1.0)) EXPECT_NEAR(b.mass, 1.0 / 8.0, 1.0 / 1000.0);

  const auto clamped = error_histogram({-5.0, 5.0}, 4, 0.0, 1.0);
  EXPECT_EQ(clamped.front().mass, 0.5);
  EXPECT_EQ(clamped.back().mass, 0.5);
  EXPECT_DOUBLE_EQ(clamped[1].lo, 0.25);

  Rng rng(6);
  std::vector<double> xs(777);
  for (auto& x : xs) x = rng.uniform(-0.2, 0.7);
  total = 0.0;
  for (const auto& b : error_histogram(xs, 100, 0.0, 0.5)) total += b.mass;
  EXPECT_NEAR(total, 1.0, 1e-12);

  EXPECT_THROW(error_histogram(xs, 0, 0.0, 1.0), Error);
  EXPECT_THROW(error_histogram(xs, 4, 1.0, 1.0), Error);
  EXPECT_THROW(error_histogram({}, 4, 0.0, 1.0), Error);
  const auto csv = histogram_csv(single);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lo,bin_hi,mass");
}

TEST(Sweep, ValuesAndGrid) {
  EXPECT_EQ(sweep_values(2), (std::vector<double>{-1.0, 1.0}));
  const auto v = sweep_values(5);
  EXPECT_EQ(v.front(), -1.0);
  EXPECT_EQ(v[2], 0.0);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_THROW(sweep_values(1), Error);

  const auto arch = tiny_arch();
  const auto net = model::build_network<double>(arch, 2);
  const auto g = motor_sweep(net, 5, 0.1);
  ASSERT_EQ(g.rows, 3);
  ASSERT_EQ(g.cells.size(), 15u);
  for (int row = 0; row < 3; ++row) {
    for (int s = 0; s < 5; ++s) {
      for (int d = 0; d < 3; ++d) EXPECT_EQ(g.at(row, s).motor.values[d], d == row ? v[s] : 0.0);
    }
    EXPECT_EQ(g.at(row, 2).image, g.at(0, 2).image);
    EXPECT_EQ(g.at(row, 2).mask, g.at(0, 2).mask);
  }
  const auto tiled = tile_sweep(g, 2);
  EXPECT_EQ(tiled.extent, (Extent{3 * 9 - 1, 5 * 9 - 1}));
  EXPECT_EQ(tiled.at(8, 0, 0), 0.0f);  // gutter
  EXPECT_EQ(tiled.at(9, 9, 1), g.at(1, 1).mask.at(0, 0, 1) ? 1.0f : 0.0f);
  EXPECT_THROW(tile_sweep(g, 3), Error);
}
