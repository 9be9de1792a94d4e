#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bodyimage/config.hpp"

namespace bodyimage::pipeline {

inline constexpr const char* kWorkspaceEnv = "BODYIMAGE_WORKSPACE";

struct Options {
  bool force = false;                    // overwrite / ignore hash mismatches
  std::optional<std::uint64_t> seed;     // replaces the seed of the command's own stage
  std::optional<std::string> workspace;  // --workspace flag, beats everything
  bool oracle = false;                   // eval only: perfect stub predictor
  std::ostream* log = nullptr;
};

/// Flag, then [paths] workspace, then $BODYIMAGE_WORKSPACE, then ./workspace.
std::filesystem::path resolve_workspace(const config::PipelineConfig& config, const Options& options);

/// Workspace layout.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path train_set() const { return data_dir() / "train.smbi"; }
  std::filesystem::path test_set() const { return data_dir() / "test.smbi"; }
  std::filesystem::path model_dir() const { return root / "model"; }
  std::filesystem::path checkpoint() const { return model_dir() / "checkpoint.smnn"; }
  std::filesystem::path loss_csv() const { return model_dir() / "loss.csv"; }
  std::filesystem::path segment_dir() const { return root / "segment"; }
  std::filesystem::path gmm() const { return segment_dir() / "gmm.txt"; }
  std::filesystem::path histogram() const { return segment_dir() / "histogram.csv"; }
  std::filesystem::path eval_dir() const { return root / "eval"; }
  std::filesystem::path sweep_dir() const { return root / "sweep"; }
};

/// `key = value` lines, sorted by key. Files are listed as `file:<name>` with
/// their FNV-1a digest so tampered or stale artifacts are detected.
struct Manifest {
  std::map<std::string, std::string> entries;

  std::string encode() const;
  static Manifest decode(const std::string& text);
  void add_file(const std::filesystem::path& path, const std::string& bytes);
};

struct CommandResult {
  std::vector<std::filesystem::path> artifacts;
  std::string summary;
};

// Each command re-validates the config after applying options.seed.

CommandResult cmd_gen_data(config::PipelineConfig config, const Options& options);
/// Refuses to replace an existing checkpoint unless forced.
CommandResult cmd_train(config::PipelineConfig config, const Options& options);
CommandResult cmd_segment(config::PipelineConfig config, const Options& options);
CommandResult cmd_eval(config::PipelineConfig config, const Options& options);
CommandResult cmd_sweep(config::PipelineConfig config, const Options& options);

}  // namespace bodyimage::pipeline
