#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "bodyimage/dataset.hpp"
#include "bodyimage/error.hpp"

using namespace bodyimage;
using namespace bodyimage::data;

namespace {

ErrorCode decode_error(const std::string& bytes) {
  try {
    decode_dataset(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kConfig;
}

}  // namespace

TEST(Babble, DegenerateRangeGivesZeros) {
  const auto poses = sample_motor_babble(20, {{0, 0}, {0, 0}}, 3);
  for (const auto& p : poses) {
    EXPECT_EQ(p.angles, (std::vector<double>{0.0, 0.0}));
  }
}

TEST(Babble, SymmetricRangeMeanNearZero) {
  const auto poses = sample_motor_babble(10000, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}, 8);
  for (int j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (const auto& p : poses) {
      ASSERT_GE(p.angles[j], -1.0);
      ASSERT_LE(p.angles[j], 1.0);
      mean += p.angles[j];
    }
    EXPECT_NEAR(mean / poses.size(), 0.0, 0.05);
  }
}

TEST(Babble, SeedDeterminesSequence) {
  const std::vector<JointRange> r{{-1, 1}, {0, 2}};
  const auto a = sample_motor_babble(50, r, 11);
  const auto b = sample_motor_babble(50, r, 11);
  const auto c = sample_motor_babble(50, r, 12);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].angles, b[i].angles);
  EXPECT_NE(a[0].angles, c[0].angles);
}

TEST(MotorNormalization, EndpointsAndMidpoint) {
  const std::vector<JointRange> r{{-2.0, 4.0}};
  EXPECT_DOUBLE_EQ(normalize_motor({{-2.0}}, r).values[0], -1.0);
  EXPECT_DOUBLE_EQ(normalize_motor({{4.0}}, r).values[0], 1.0);
  EXPECT_DOUBLE_EQ(normalize_motor({{1.0}}, r).values[0], 0.0);
}

TEST(MotorNormalization, HalfOpenShoulderRange) {
  // 2(x - lo)/(hi - lo) - 1 with x = -0.25 over [-1, 0]: 2 * 0.75 - 1.
  EXPECT_NEAR(normalize_motor({{-0.25}}, {{-1.0, 0.0}}).values[0], 0.5, 1e-15);
}

TEST(MotorNormalization, RoundTrip) {
  const auto c = default_scene_config();
  for (const auto& p : sample_motor_babble(500, c.ranges, 4)) {
    const auto back = denormalize_motor(normalize_motor(p, c.ranges), c.ranges);
    for (std::size_t n = 0; n < p.angles.size(); ++n) EXPECT_NEAR(back.angles[n], p.angles[n], 1e-12);
  }
}

TEST(MotorNormalization, ZeroWidthRangeIsError) {
  EXPECT_THROW(normalize_motor({{0.0}}, {{0.0, 0.0}}), Error);
  EXPECT_THROW(denormalize_motor({{0.0}}, {{1.0, 1.0}}), Error);
}

TEST(Downsample, IdentityAndConstant) {
  Image img({4, 6});
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 7) / 7.0f;
  EXPECT_EQ(downsample(img, 1), img);
  const Image flat({4, 6}, 0.3f);
  for (float v : downsample(flat, 2).data) EXPECT_FLOAT_EQ(v, 0.3f);
}

TEST(Downsample, BlockMean) {
  Image img({2, 2});
  img.at(1, 0, 0) = 1.0f;
  img.at(1, 1, 0) = 1.0f;
  const auto out = downsample(img, 2);
  EXPECT_EQ(out.extent, (Extent{1, 1}));
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 1), 0.0f);
}

TEST(Downsample, NonDivisibleIsError) {
  EXPECT_THROW(downsample(Image({5, 4}), 2), Error);
  EXPECT_THROW(downsample_mask(Mask({4, 5}), 2, MaskDownsample::kAll), Error);
}

TEST(Downsample, MaskRules) {
  Mask m({2, 2});
  m.set(0, 0, 1, true);
  EXPECT_TRUE(downsample_mask(m, 2, MaskDownsample::kAny).at(0, 0, 1));
  EXPECT_FALSE(downsample_mask(m, 2, MaskDownsample::kAll).at(0, 0, 1));
  EXPECT_FALSE(downsample_mask(m, 2, MaskDownsample::kAny).at(0, 0, 0));
}

TEST(Generate, EmptyAndDeterministic) {
  const auto c = default_scene_config();
  EXPECT_TRUE(generate_dataset(0, c, 1).empty());
  EXPECT_EQ(generate_dataset(30, c, 5), generate_dataset(30, c, 5));
  EXPECT_NE(generate_dataset(30, c, 5), generate_dataset(30, c, 6));
}

TEST(Generate, ValuesInRange) {
  const auto c = default_scene_config();
  for (const auto& r : generate_dataset(200, c, 2)) {
    ASSERT_EQ(r.sensory.extent, (Extent{24, 32}));
    ASSERT_EQ(r.gt_mask.extent, r.sensory.extent);
    for (double v : r.motor.values) {
      ASSERT_GE(v, -1.0);
      ASSERT_LE(v, 1.0);
    }
    for (float v : r.sensory.data) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Generate, EmptyMaskFractionWithinBounds) {
  // Measured 95/2000 (4.75%) for the default geometry; the bound is 1%..15%.
  const auto records = generate_dataset(2000, default_scene_config(), 11);
  std::size_t empty = 0;
  for (const auto& r : records) empty += r.gt_mask.any() ? 0 : 1;
  const double fraction = static_cast<double>(empty) / records.size();
  EXPECT_GE(fraction, 0.01);
  EXPECT_LE(fraction, 0.15);
}

TEST(Generate, BodyIsConditionallyDeterministic) {
  // Same motor over different backgrounds: every body component must agree.
  const auto c = default_scene_config();
  const auto records = generate_dataset(300, c, 21);
  const auto& ref = records[7];
  const auto joints = denormalize_motor(ref.motor, c.ranges);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto other = render_record_scene(joints, 1000 + s, c);
    ASSERT_EQ(other.body_mask, ref.gt_mask);
    for (std::size_t i = 0; i < ref.sensory.data.size(); ++i) {
      if (ref.gt_mask.data[i]) {
        ASSERT_EQ(other.image.data[i], ref.sensory.data[i]);
      }
    }
  }
}

TEST(Generate, GroundTruthMaskChannelsAgree) {
  for (const auto& r : generate_dataset(50, default_scene_config(), 9)) {
    for (std::size_t p = 0; p < r.gt_mask.extent.pixels(); ++p) {
      ASSERT_EQ(r.gt_mask.data[3 * p], r.gt_mask.data[3 * p + 1]);
      ASSERT_EQ(r.gt_mask.data[3 * p], r.gt_mask.data[3 * p + 2]);
    }
  }
}

TEST(Serialization, RoundTripIsBitExact) {
  const auto records = generate_dataset(25, default_scene_config(), 4);
  EXPECT_EQ(decode_dataset(encode_dataset(records)), records);
  const auto path = std::filesystem::temp_directory_path() / "bodyimage_dataset_roundtrip.smbi";
  save_dataset(records, path);
  EXPECT_EQ(load_dataset(path), records);
  std::filesystem::remove(path);
}

TEST(Serialization, EmptyRoundTrip) {
  EXPECT_TRUE(decode_dataset(encode_dataset({})).empty());
}

TEST(Serialization, HeaderLayout) {
  const auto records = generate_dataset(2, default_scene_config(), 4);
  const auto bytes = encode_dataset(records);
  EXPECT_EQ(bytes.substr(0, 4), "SMBI");
  const std::size_t comps = 24 * 32 * 3;
  EXPECT_EQ(bytes.size(), 24 + 2 * (4 * (4 + comps) + comps / 8));
}

TEST(Serialization, NegativeCases) {
  auto bytes = encode_dataset(generate_dataset(3, default_scene_config(), 4));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(decode_error(bad_magic), ErrorCode::kMalformedHeader);
  EXPECT_EQ(decode_error(bytes.substr(0, 10)), ErrorCode::kMalformedHeader);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_EQ(decode_error(bad_version), ErrorCode::kVersionMismatch);

  EXPECT_EQ(decode_error(bytes.substr(0, bytes.size() - 1)), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(decode_error(bytes + "extra"), ErrorCode::kPayloadMismatch);

  auto wrong_dims = bytes;
  wrong_dims[12] = 23;  // H 24 -> 23 shrinks the declared records
  EXPECT_EQ(decode_error(wrong_dims), ErrorCode::kPayloadMismatch);
}

TEST(Serialization, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/dir/file.smbi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}
