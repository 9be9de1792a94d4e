#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bodyimage/image.hpp"
#include "bodyimage/scene.hpp"

namespace bodyimage::data {

using scene::JointRange;
using scene::JointVector;

/// Normalized joint configuration, every component in [-1, 1].
struct MotorState {
  std::vector<double> values;
  bool operator==(const MotorState&) const = default;
};

struct DatasetRecord {
  MotorState motor;
  Image sensory;  // training target s_t
  Mask gt_mask;   // evaluation only, never used for training

  bool operator==(const DatasetRecord&) const = default;
};

/// How a block of covered render pixels maps to one output component.
enum class MaskDownsample {
  kAll,  // covered only if every input component in the block is covered
  kAny,  // covered if any input component in the block is covered
};

struct SceneConfig {
  scene::ArmGeometry geometry;
  std::vector<JointRange> ranges;
  Extent render_extent{48, 64};
  int downsample_factor = 2;
  scene::BackgroundStyle background;
  MaskDownsample mask_rule = MaskDownsample::kAll;

  Extent output_extent() const {
    return {render_extent.height / downsample_factor, render_extent.width / downsample_factor};
  }
  void validate() const;
};

/// Desk-scale defaults: 4-joint arm rendered at 48x64, stored at 24x32.
SceneConfig default_scene_config();

/// i.i.d. uniform joint angles, deterministic in `seed`.
std::vector<JointVector> sample_motor_babble(std::size_t count, const std::vector<JointRange>& ranges,
                                             std::uint64_t seed);

/// Affine map lo -> -1, hi -> +1 per joint.
MotorState normalize_motor(const JointVector& joints, const std::vector<JointRange>& ranges);
/// Inverse of normalize_motor; results are clamped into the joint ranges.
JointVector denormalize_motor(const MotorState& motor, const std::vector<JointRange>& ranges);

/// Box filter: each output component is the mean of its f x f input block.
Image downsample(const Image& image, int factor);
Mask downsample_mask(const Mask& mask, int factor, MaskDownsample rule);

/// Renders one pose over one background and downsamples both image and mask.
scene::RenderedScene render_record_scene(const JointVector& joints, std::uint64_t background_seed,
                                         const SceneConfig& config);

/// Motor babbling + compositing pipeline. Records are generated in parallel;
/// each one depends only on (seed, index).
std::vector<DatasetRecord> generate_dataset(std::size_t n, const SceneConfig& config, std::uint64_t seed);

// "SMBI" container, little-endian:
//   magic[4] version:u32 n:u32 H:u32 W:u32 N_m:u32
//   per record: motor f32[N_m], image f32[H*W*3], mask bits (LSB first, padded to a byte)
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string encode_dataset(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> decode_dataset(const std::string& bytes);
void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

std::string read_binary(const std::filesystem::path& path);

}  // namespace bodyimage::data
