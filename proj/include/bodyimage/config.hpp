#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "bodyimage/dataset.hpp"
#include "bodyimage/network.hpp"
#include "bodyimage/segmentation.hpp"
#include "bodyimage/trainer.hpp"

namespace bodyimage::config {

// Minimal TOML subset: [section] headers, `key = value` lines, '#' comments.
// Values are integers, reals, booleans, "strings" or (nested) [arrays].
struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<std::int64_t, double, bool, std::string, Array> data;
};

using Table = std::map<std::string, std::map<std::string, Value>>;

/// Throws Error(kConfig) with "line N: ..." on syntax errors or duplicate keys.
Table parse_toml(const std::string& text);

enum class Precision { kF32, kF64 };

struct DatasetSection {
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::uint64_t seed = 1;
};

struct SegmentSection {
  std::size_t probe_size = 100;
  std::uint64_t seed = 3;
  seg::EmConfig em;
  int histogram_bins = 100;
  double histogram_lo = 0.0;
  double histogram_hi = 0.5;
  int sample_masks = 8;
};

struct SweepSection {
  int steps = 9;
};

struct PipelineConfig {
  data::SceneConfig scene = data::default_scene_config();
  DatasetSection dataset;
  model::TrainConfig train;
  Precision precision = Precision::kF32;
  SegmentSection segment;
  SweepSection sweep;
  std::string workspace;  // empty: not set in the file

  model::Architecture architecture() const;
  /// Cross-section checks; throws Error(kConfig) naming the field.
  void validate() const;
};

/// Fields absent from the table keep their defaults; unknown sections or keys
/// are rejected. The result is validated.
PipelineConfig from_table(const Table& table);
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical text of one section (fixed key order, round-trip number format).
/// Sections: scene, dataset, train, segment, sweep.
std::string canonical_section(const PipelineConfig& config, const std::string& section);
/// Full canonical document; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const PipelineConfig& config);

// Stage hashes chain upstream sections, so editing e.g. [sweep] leaves the
// dataset and checkpoint valid.
std::string data_hash(const PipelineConfig& config);
std::string train_hash(const PipelineConfig& config);
std::string segment_hash(const PipelineConfig& config);
std::string sweep_hash(const PipelineConfig& config);

const char* to_string(Precision p);

}  // namespace bodyimage::config
