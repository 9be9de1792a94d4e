#include "bodyimage/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bodyimage/error.hpp"
#include "bodyimage/rng.hpp"

namespace bodyimage::data {

static_assert(std::endian::native == std::endian::little, "SMBI I/O assumes a little-endian host");

void SceneConfig::validate() const {
  geometry.validate();
  require(ranges.size() == geometry.joint_count(), ErrorCode::kConfig,
          "scene: joint range count must equal link count");
  for (std::size_t n = 0; n < ranges.size(); ++n) {
    require(ranges[n].lo <= ranges[n].hi, ErrorCode::kConfig,
            "scene: joint range " + std::to_string(n) + " has lo > hi");
  }
  require(render_extent.height > 0 && render_extent.width > 0, ErrorCode::kConfig,
          "scene: render dims must be positive");
  require(downsample_factor > 0, ErrorCode::kConfig, "scene: downsample factor must be positive");
  require(render_extent.height % downsample_factor == 0 && render_extent.width % downsample_factor == 0,
          ErrorCode::kConfig, "scene: downsample factor must divide the render dims");
}

SceneConfig default_scene_config() {
  SceneConfig c;
  c.geometry.link_lengths = {28.0, 26.0, 20.0, 12.0};
  c.geometry.link_widths = {24.0, 20.0, 16.0, 12.0};
  c.geometry.base_anchor = {72.0, 58.0};  // off the lower-right corner: ~5% of poses leave the frame
  c.geometry.base_orientation = -2.25;
  c.geometry.body_color = {
      {0.92f, 0.92f, 0.95f},
      {0.80f, 0.82f, 0.90f},
      {0.65f, 0.68f, 0.80f},
      {0.25f, 0.25f, 0.30f},
  };
  // Same spans as the 4 shoulder/elbow joints babbled on the physical robot.
  c.ranges = {{-1.0, 1.0}, {-1.0, 0.0}, {0.0, 1.0}, {-1.0, 1.0}};
  return c;
}

std::vector<JointVector> sample_motor_babble(std::size_t count, const std::vector<JointRange>& ranges,
                                             std::uint64_t seed) {
  for (const auto& r : ranges) require(r.lo <= r.hi, ErrorCode::kConfig, "babble: range with lo > hi");
  Rng rng(seed);
  std::vector<JointVector> out(count);
  for (auto& j : out) {
    j.angles.resize(ranges.size());
    for (std::size_t n = 0; n < ranges.size(); ++n) j.angles[n] = rng.uniform(ranges[n].lo, ranges[n].hi);
  }
  return out;
}

MotorState normalize_motor(const JointVector& joints, const std::vector<JointRange>& ranges) {
  require(joints.angles.size() == ranges.size(), ErrorCode::kShape, "normalize_motor: count mismatch");
  MotorState m;
  m.values.resize(ranges.size());
  for (std::size_t n = 0; n < ranges.size(); ++n) {
    const double width = ranges[n].hi - ranges[n].lo;
    require(width > 0.0, ErrorCode::kConfig, "normalize_motor: zero-width range for joint " + std::to_string(n));
    m.values[n] = 2.0 * (joints.angles[n] - ranges[n].lo) / width - 1.0;
  }
  return m;
}

JointVector denormalize_motor(const MotorState& motor, const std::vector<JointRange>& ranges) {
  require(motor.values.size() == ranges.size(), ErrorCode::kShape, "denormalize_motor: count mismatch");
  JointVector j;
  j.angles.resize(ranges.size());
  for (std::size_t n = 0; n < ranges.size(); ++n) {
    const double width = ranges[n].hi - ranges[n].lo;
    require(width > 0.0, ErrorCode::kConfig, "denormalize_motor: zero-width range for joint " + std::to_string(n));
    const double a = ranges[n].lo + 0.5 * (motor.values[n] + 1.0) * width;
    j.angles[n] = std::clamp(a, ranges[n].lo, ranges[n].hi);
  }
  return j;
}

Image downsample(const Image& image, int factor) {
  require(factor > 0, ErrorCode::kInvalidArgument, "downsample: factor must be positive");
  const Extent in = image.extent;
  require(in.height % factor == 0 && in.width % factor == 0, ErrorCode::kShape,
          "downsample: factor does not divide image dims");
  if (factor == 1) return image;
  Image out({in.height / factor, in.width / factor});
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int r = 0; r < out.extent.height; ++r) {
    for (int c = 0; c < out.extent.width; ++c) {
      for (int ch = 0; ch < kChannels; ++ch) {
        float sum = 0.0f;
        for (int dr = 0; dr < factor; ++dr) {
          for (int dc = 0; dc < factor; ++dc) sum += image.at(r * factor + dr, c * factor + dc, ch);
        }
        out.at(r, c, ch) = sum * inv;
      }
    }
  }
  return out;
}

Mask downsample_mask(const Mask& mask, int factor, MaskDownsample rule) {
  require(factor > 0, ErrorCode::kInvalidArgument, "downsample_mask: factor must be positive");
  const Extent in = mask.extent;
  require(in.height % factor == 0 && in.width % factor == 0, ErrorCode::kShape,
          "downsample_mask: factor does not divide mask dims");
  Mask out({in.height / factor, in.width / factor});
  for (int r = 0; r < out.extent.height; ++r) {
    for (int c = 0; c < out.extent.width; ++c) {
      for (int ch = 0; ch < kChannels; ++ch) {
        int covered = 0;
        for (int dr = 0; dr < factor; ++dr) {
          for (int dc = 0; dc < factor; ++dc) covered += mask.at(r * factor + dr, c * factor + dc, ch);
        }
        const bool v = rule == MaskDownsample::kAny ? covered > 0 : covered == factor * factor;
        out.set(r, c, ch, v);
      }
    }
  }
  return out;
}

scene::RenderedScene render_record_scene(const JointVector& joints, std::uint64_t background_seed,
                                         const SceneConfig& config) {
  const auto segments = scene::forward_kinematics(joints, config.geometry);
  const auto arm = scene::rasterize_arm(segments, config.geometry, config.render_extent);
  const auto background = scene::render_background(background_seed, config.render_extent, config.background);
  auto full = scene::compose_scene(arm, background, joints);
  full.image = downsample(full.image, config.downsample_factor);
  full.body_mask = downsample_mask(full.body_mask, config.downsample_factor, config.mask_rule);
  return full;
}

std::vector<DatasetRecord> generate_dataset(std::size_t n, const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  const auto poses = sample_motor_babble(n, config.ranges, derive_seed(seed, kStreamPose, 0));
  std::vector<DatasetRecord> records(n);

  #pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    // The stored motor is f32; render from the rounded value so the image is
    // a function of exactly what the network sees.
    MotorState motor = normalize_motor(poses[i], config.ranges);
    for (double& v : motor.values) v = static_cast<double>(static_cast<float>(v));
    const JointVector joints = denormalize_motor(motor, config.ranges);
    auto rendered = render_record_scene(joints, derive_seed(seed, kStreamBackground, i), config);
    records[i] = {std::move(motor), std::move(rendered.image), std::move(rendered.body_mask)};
  }
  return records;
}

namespace {

constexpr char kMagic[4] = {'S', 'M', 'B', 'I'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 4;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

float get_f32(const std::string& in, std::size_t& pos) {
  float v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

std::string encode_dataset(const std::vector<DatasetRecord>& records) {
  Extent extent{};
  std::uint32_t motor_dim = 0;
  if (!records.empty()) {
    extent = records.front().sensory.extent;
    motor_dim = static_cast<std::uint32_t>(records.front().motor.values.size());
  }
  for (const auto& r : records) {
    require(r.sensory.extent == extent && r.gt_mask.extent == extent && r.motor.values.size() == motor_dim,
            ErrorCode::kShape, "save_dataset: records have inconsistent dims");
  }
  std::string out(kMagic, 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  put_u32(out, static_cast<std::uint32_t>(extent.height));
  put_u32(out, static_cast<std::uint32_t>(extent.width));
  put_u32(out, motor_dim);

  const std::size_t comps = extent.components();
  for (const auto& r : records) {
    for (double v : r.motor.values) put_f32(out, static_cast<float>(v));
    for (float v : r.sensory.data) put_f32(out, v);
    std::string bits((comps + 7) / 8, '\0');
    for (std::size_t i = 0; i < comps; ++i) {
      if (r.gt_mask.data[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1u << (i % 8)));
    }
    out += bits;
  }
  return out;
}

std::vector<DatasetRecord> decode_dataset(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kMalformedHeader, "dataset: malformed header");
  }
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kDatasetVersion) {
    fail(ErrorCode::kVersionMismatch, "dataset: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n = get_u32(bytes, pos);
  const std::uint32_t h = get_u32(bytes, pos);
  const std::uint32_t w = get_u32(bytes, pos);
  const std::uint32_t motor_dim = get_u32(bytes, pos);
  if (n > 0 && (h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15 || motor_dim > 1024)) {
    fail(ErrorCode::kMalformedHeader, "dataset: implausible header dims");
  }
  const Extent extent{static_cast<int>(h), static_cast<int>(w)};
  const std::size_t comps = extent.components();
  const std::size_t record_bytes = 4 * (motor_dim + comps) + (comps + 7) / 8;
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload < record_bytes * n) {
    fail(ErrorCode::kTruncatedPayload, "dataset: payload truncated");
  }
  if (payload != record_bytes * n) {
    fail(ErrorCode::kPayloadMismatch, "dataset: declared dims disagree with payload length");
  }

  std::vector<DatasetRecord> records(n);
  for (auto& r : records) {
    r.motor.values.resize(motor_dim);
    for (double& v : r.motor.values) v = get_f32(bytes, pos);
    r.sensory = Image(extent);
    for (float& v : r.sensory.data) v = get_f32(bytes, pos);
    r.gt_mask = Mask(extent);
    for (std::size_t i = 0; i < comps; ++i) {
      r.gt_mask.data[i] = (static_cast<unsigned char>(bytes[pos + i / 8]) >> (i % 8)) & 1u;
    }
    pos += (comps + 7) / 8;
  }
  return records;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(records);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_binary(path));
}

}  // namespace bodyimage::data
