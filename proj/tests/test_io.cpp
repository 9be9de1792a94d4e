#include <gtest/gtest.h>

#include <filesystem>

#include "bodyimage/error.hpp"
#include "bodyimage/pnm.hpp"
#include "bodyimage/tensor_io.hpp"

using namespace bodyimage;

namespace {

std::string bytes_of(std::initializer_list<int> values) {
  std::string s;
  for (int v : values) s.push_back(static_cast<char>(v));
  return s;
}

template <class F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kConfig;
}

}  // namespace

TEST(Pnm, PpmGolden) {
  Image img({1, 2});
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 0, 1) = 0.5f;
  img.at(0, 0, 2) = 0.0f;
  img.at(0, 1, 0) = 2.0f;   // clamped
  img.at(0, 1, 1) = -1.0f;  // clamped
  img.at(0, 1, 2) = 0.2f;
  EXPECT_EQ(pnm::encode_ppm(img), "P6\n2 1\n255\n" + bytes_of({255, 128, 0, 255, 0, 51}));
}

TEST(Pnm, MaskPgmGolden) {
  Mask m({2, 2});
  m.set(0, 1, 2, true);
  m.set(1, 0, 2, true);
  m.set(1, 0, 0, true);
  EXPECT_EQ(pnm::encode_mask_pgm(m, 2), "P5\n2 2\n255\n" + bytes_of({0, 255, 255, 0}));
  EXPECT_EQ(pnm::encode_mask_pgm(m, 0), "P5\n2 2\n255\n" + bytes_of({0, 0, 255, 0}));
}

TEST(Pnm, PamGolden) {
  RgbaImage img{{1, 1}, {10, 20, 30, 255}};
  EXPECT_EQ(pnm::encode_pam(img),
            "P7\nWIDTH 1\nHEIGHT 1\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n" + bytes_of({10, 20, 30, 255}));
}

TEST(Pnm, DecodeRoundTrip) {
  Image img({3, 4});
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i) / 35.0f;
  const auto r = pnm::decode(pnm::encode_ppm(img));
  EXPECT_EQ(r.channels, 3);
  EXPECT_EQ(r.extent, img.extent);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_EQ(r.data[i], to_byte(img.data[i]));

  const auto path = std::filesystem::temp_directory_path() / "bodyimage_pnm_roundtrip.pgm";
  pnm::write_file(path, pnm::encode_pgm({2, 3}, {1, 2, 3, 4, 5, 6}));
  const auto g = pnm::read_file(path);
  EXPECT_EQ(g.channels, 1);
  EXPECT_EQ(g.data, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}));
  std::filesystem::remove(path);
}

TEST(Pnm, DecodeSkipsComments) {
  const auto r = pnm::decode("P5\n# made by hand\n2 1\n255\n" + bytes_of({7, 9}));
  EXPECT_EQ(r.data, (std::vector<std::uint8_t>{7, 9}));
}

TEST(Pnm, DecodeNegatives) {
  EXPECT_EQ(error_of([] { pnm::decode("P3\n1 1\n255\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(error_of([] { pnm::decode("P6\n1 x\n255\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(error_of([] { pnm::decode("P6\n1 1\n65535\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(error_of([] { pnm::decode("P6\n2 2\n255\n" + bytes_of({1, 2, 3})); }), ErrorCode::kTruncatedPayload);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::vector<Tensor<float>> ts;
  ts.emplace_back(Shape{3, 3, 2, 4}, 0.25f);
  ts.emplace_back(Shape{4}, std::vector<float>{1.0f, -2.5f, 3e-8f, -0.0f});
  ts.push_back(Tensor<float>::scalar(7.0f));
  const auto back = decode_tensors(encode_tensors(ts));
  EXPECT_EQ(back, ts);

  const auto path = std::filesystem::temp_directory_path() / "bodyimage_ckpt_roundtrip.smnn";
  save_tensors(ts, path);
  EXPECT_EQ(load_tensors(path), ts);
  std::filesystem::remove(path);
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = encode_tensors({Tensor<float>(Shape{2, 3}, 1.0f)});
  EXPECT_EQ(bytes.substr(0, 4), "SMNN");
  // magic, version, count, rank, 2 dims, 6 floats
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 8 + 24);
}

TEST(Checkpoint, Negatives) {
  const auto good = encode_tensors({Tensor<float>(Shape{2, 3}, 1.0f), Tensor<float>(Shape{5}, 2.0f)});
  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_EQ(error_of([&] { decode_tensors(bad_magic); }), ErrorCode::kMalformedHeader);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(error_of([&] { decode_tensors(bad_version); }), ErrorCode::kVersionMismatch);
  EXPECT_EQ(error_of([&] { decode_tensors(good.substr(0, good.size() - 3)); }), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(error_of([&] { decode_tensors(good + "junk"); }), ErrorCode::kPayloadMismatch);
}
