#include "bodyimage/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "bodyimage/error.hpp"
#include "bodyimage/evaluation.hpp"
#include "bodyimage/hash.hpp"
#include "bodyimage/pnm.hpp"
#include "bodyimage/rng.hpp"
#include "bodyimage/segmentation.hpp"
#include "bodyimage/tensor_io.hpp"
#include "bodyimage/trainer.hpp"

namespace bodyimage::pipeline {
namespace fs = std::filesystem;
using config::PipelineConfig;
using config::Precision;

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr int kPreviewCount = 4;

void note(const Options& o, const std::string& line) {
  if (o.log) *o.log << line << '\n';
}

void write_artifact(const fs::path& path, const std::string& bytes, Manifest& manifest, CommandResult& result) {
  pnm::write_file(path, bytes);
  manifest.add_file(path, bytes);
  result.artifacts.push_back(path);
}

void write_manifest(const fs::path& dir, const Manifest& manifest, CommandResult& result) {
  const fs::path path = dir / kManifestName;
  pnm::write_file(path, manifest.encode());
  result.artifacts.push_back(path);
}

// Loads the manifest of an upstream stage and checks its hash and file
// digests. Mismatches are fatal unless forced.
Manifest require_stage(const fs::path& dir, const std::string& stage, const std::string& expected_hash,
                       const std::string& producer, const Options& options) {
  const fs::path path = dir / kManifestName;
  require(fs::exists(path), ErrorCode::kIo, stage + " artifacts missing (" + path.string() + "); run `" + producer +
                                                "` first");
  Manifest m = Manifest::decode(data::read_binary(path));
  auto complain = [&](const std::string& what) {
    if (!options.force) fail(ErrorCode::kHashMismatch, what + " (use --force to ignore)");
    note(options, "warning: " + what + " (forced)");
  };
  const auto hash = m.entries.find("config_hash");
  if (hash == m.entries.end() || hash->second != expected_hash) {
    complain(stage + " artifacts were produced under config hash " +
             (hash == m.entries.end() ? std::string("<none>") : hash->second) + ", current config hashes to " +
             expected_hash);
  }
  for (const auto& [key, digest] : m.entries) {
    if (key.rfind("file:", 0) != 0) continue;
    const fs::path file = dir / key.substr(5);
    require(fs::exists(file), ErrorCode::kIo, stage + " artifact missing: " + file.string());
    if (hex64(fnv1a(data::read_binary(file))) != digest) complain(stage + " artifact modified: " + file.string());
  }
  return m;
}

template <class T>
model::NetworkParams<T> load_params(const PipelineConfig& config, const Layout& layout) {
  require(fs::exists(layout.checkpoint()), ErrorCode::kIo,
          "checkpoint missing (" + layout.checkpoint().string() + "); run `train` first");
  model::NetworkParams<float> stored{config.architecture(), load_tensors(layout.checkpoint())};
  model::validate_params(stored);
  return model::convert<T>(stored);
}

seg::GmmFit load_fit(const Layout& layout) { return seg::parse_fit(data::read_binary(layout.gmm())); }

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <class T>
CommandResult train_impl(const PipelineConfig& config, const Layout& layout, const Options& options,
                         Manifest& manifest) {
  CommandResult result;
  const auto records = data::load_dataset(layout.train_set());
  require(!records.empty(), ErrorCode::kInvalidArgument, "train: training set is empty");
  const long every = std::max(1L, config.train.iterations / 20);
  model::Progress progress;
  if (options.log) {
    progress = [&](const model::HistoryRow& row) {
      if (row.iteration % every == 0 || row.iteration + 1 == config.train.iterations) {
        note(options, "iter " + std::to_string(row.iteration) + "  L_rec " + fixed(row.loss_rec) + "  L_err " +
                          fixed(row.loss_err) + "  alpha " + fixed(row.alpha, 3) + "  lr " + fixed(row.lr, 6));
      }
    };
  }
  auto initial = model::build_network<T>(config.architecture(), config.train.seed);
  const auto trained = model::train<T>(std::move(initial), records, config.train, progress);
  const auto stored = model::convert<float>(trained.params);

  fs::create_directories(layout.model_dir());
  write_artifact(layout.checkpoint(), encode_tensors(stored.tensors), manifest, result);
  write_artifact(layout.loss_csv(), model::history_csv(trained.history), manifest, result);
  if (!trained.history.empty()) {
    const auto& last = trained.history.back();
    result.summary = "final L_rec " + fixed(last.loss_rec) + ", L_err " + fixed(last.loss_err) + " after " +
                     std::to_string(trained.history.size()) + " iterations";
  } else {
    result.summary = "no iterations run";
  }
  return result;
}

template <class T>
CommandResult segment_impl(const PipelineConfig& config, const Layout& layout, Manifest& manifest) {
  CommandResult result;
  const auto params = load_params<T>(config, layout);
  const auto records = data::load_dataset(layout.train_set());
  require(!records.empty(), ErrorCode::kInvalidArgument, "segment: training set is empty");

  // Probe inputs: records drawn uniformly (with replacement) from the training set.
  Rng rng(derive_seed(config.segment.seed, kStreamProbe, 0));
  std::vector<data::MotorState> motors(config.segment.probe_size);
  for (auto& m : motors) m = records[rng.below(records.size())].motor;

  const auto samples = seg::collect_error_samples(params, motors);
  const auto fit = seg::fit_gmm2(samples, config.segment.em);
  const auto bins = eval::error_histogram(samples, config.segment.histogram_bins, config.segment.histogram_lo,
                                          config.segment.histogram_hi);

  fs::create_directories(layout.segment_dir());
  write_artifact(layout.gmm(), seg::format_fit(fit), manifest, result);
  write_artifact(layout.histogram(), eval::histogram_csv(bins), manifest, result);
  manifest.entries["sample_count"] = std::to_string(samples.size());

  const int shown = std::min<int>(config.segment.sample_masks, static_cast<int>(motors.size()));
  for (int k = 0; k < shown; ++k) {
    const auto pred = model::predict(params, motors[static_cast<std::size_t>(k)]);
    const Mask mask = seg::extract_mask(pred.error, fit.threshold);
    const Image image = model::to_image(pred.image);
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%03d", k);
    const fs::path base = layout.segment_dir() / stem;
    write_artifact(fs::path(base.string() + "_prediction.ppm"), pnm::encode_ppm(image), manifest, result);
    write_artifact(fs::path(base.string() + "_mask.ppm"), pnm::encode_mask_ppm(mask), manifest, result);
    write_artifact(fs::path(base.string() + "_body.pam"), pnm::encode_pam(seg::apply_mask(image, mask)), manifest,
                   result);
  }
  result.summary = "GMM mu1 " + fixed(fit.means[0]) + ", mu2 " + fixed(fit.means[1]) + ", T " +
                   fixed(fit.threshold) + " over " + std::to_string(samples.size()) + " samples";
  return result;
}

template <class T>
eval::SweepGrid sweep_impl(const PipelineConfig& config, const Layout& layout) {
  const auto params = load_params<T>(config, layout);
  return eval::motor_sweep(params, config.sweep.steps, load_fit(layout).threshold);
}

void apply_seed(std::uint64_t& target, const Options& options) {
  if (options.seed) target = *options.seed;
}

}  // namespace

fs::path resolve_workspace(const PipelineConfig& config, const Options& options) {
  if (options.workspace && !options.workspace->empty()) return *options.workspace;
  if (!config.workspace.empty()) return config.workspace;
  if (const char* env = std::getenv(kWorkspaceEnv); env && *env) return env;
  return "workspace";
}

std::string Manifest::encode() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

Manifest Manifest::decode(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    require(eq != std::string::npos, ErrorCode::kMalformedHeader, "manifest: malformed line '" + line + "'");
    m.entries[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

void Manifest::add_file(const fs::path& path, const std::string& bytes) {
  entries["file:" + path.filename().string()] = hex64(fnv1a(bytes));
}

CommandResult cmd_gen_data(PipelineConfig config, const Options& options) {
  apply_seed(config.dataset.seed, options);
  config.validate();
  const Layout layout{resolve_workspace(config, options)};
  CommandResult result;
  Manifest manifest;
  manifest.entries["stage"] = "data";
  manifest.entries["config_hash"] = config::data_hash(config);

  const auto train = data::generate_dataset(config.dataset.n_train, config.scene,
                                            derive_seed(config.dataset.seed, kStreamSplit, 0));
  const auto test = data::generate_dataset(config.dataset.n_test, config.scene,
                                           derive_seed(config.dataset.seed, kStreamSplit, 1));
  fs::create_directories(layout.data_dir());
  write_artifact(layout.train_set(), data::encode_dataset(train), manifest, result);
  write_artifact(layout.test_set(), data::encode_dataset(test), manifest, result);
  for (int k = 0; k < kPreviewCount && k < static_cast<int>(train.size()); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "preview_%03d", k);
    const auto& r = train[static_cast<std::size_t>(k)];
    write_artifact(layout.data_dir() / (std::string(stem) + "_image.ppm"), pnm::encode_ppm(r.sensory), manifest,
                   result);
    write_artifact(layout.data_dir() / (std::string(stem) + "_mask.ppm"), pnm::encode_mask_ppm(r.gt_mask), manifest,
                   result);
  }
  std::size_t empty = 0;
  for (const auto& r : train) empty += r.gt_mask.any() ? 0 : 1;
  manifest.entries["n_train"] = std::to_string(train.size());
  manifest.entries["n_test"] = std::to_string(test.size());
  write_manifest(layout.data_dir(), manifest, result);
  result.summary = std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test records, " +
                   std::to_string(empty) + " training records without visible body";
  return result;
}

CommandResult cmd_train(PipelineConfig config, const Options& options) {
  apply_seed(config.train.seed, options);
  config.validate();
  const Layout layout{resolve_workspace(config, options)};
  require_stage(layout.data_dir(), "dataset", config::data_hash(config), "gen-data", options);
  require(options.force || !fs::exists(layout.checkpoint()), ErrorCode::kInvalidArgument,
          "checkpoint " + layout.checkpoint().string() + " already exists (use --force to overwrite)");

  Manifest manifest;
  manifest.entries["stage"] = "train";
  manifest.entries["config_hash"] = config::train_hash(config);
  manifest.entries["upstream_hash"] = config::data_hash(config);
  manifest.entries["precision"] = config::to_string(config.precision);
  CommandResult result = config.precision == Precision::kF64
                             ? train_impl<double>(config, layout, options, manifest)
                             : train_impl<float>(config, layout, options, manifest);
  write_manifest(layout.model_dir(), manifest, result);
  return result;
}

CommandResult cmd_segment(PipelineConfig config, const Options& options) {
  apply_seed(config.segment.seed, options);
  config.validate();
  const Layout layout{resolve_workspace(config, options)};
  require_stage(layout.data_dir(), "dataset", config::data_hash(config), "gen-data", options);
  require_stage(layout.model_dir(), "model", config::train_hash(config), "train", options);

  Manifest manifest;
  manifest.entries["stage"] = "segment";
  manifest.entries["config_hash"] = config::segment_hash(config);
  manifest.entries["upstream_hash"] = config::train_hash(config);
  CommandResult result = config.precision == Precision::kF64 ? segment_impl<double>(config, layout, manifest)
                                                             : segment_impl<float>(config, layout, manifest);
  write_manifest(layout.segment_dir(), manifest, result);
  return result;
}

CommandResult cmd_eval(PipelineConfig config, const Options& options) {
  config.validate();
  const Layout layout{resolve_workspace(config, options)};
  require_stage(layout.data_dir(), "dataset", config::data_hash(config), "gen-data", options);
  const auto test = data::load_dataset(layout.test_set());
  require(!test.empty(), ErrorCode::kInvalidArgument, "eval: test set is empty");

  Manifest manifest;
  manifest.entries["stage"] = "eval";
  eval::EvalReport report;
  if (options.oracle) {
    // ê = 0 on the body and 1 elsewhere, thresholded at 0.5.
    manifest.entries["config_hash"] = config::data_hash(config);
    manifest.entries["predictor"] = "oracle";
    report = eval::evaluate_predictions(test, 0.5, [&test](std::size_t i) {
      const auto& r = test[i];
      Image error(r.sensory.extent, 1.0f);
      for (std::size_t c = 0; c < error.data.size(); ++c) {
        if (r.gt_mask.data[c]) error.data[c] = 0.0f;
      }
      return std::make_pair(r.sensory, error);
    });
  } else {
    require_stage(layout.model_dir(), "model", config::train_hash(config), "train", options);
    require_stage(layout.segment_dir(), "segmentation", config::segment_hash(config), "segment", options);
    manifest.entries["config_hash"] = config::segment_hash(config);
    manifest.entries["predictor"] = "network";
    const auto fit = load_fit(layout);
    report = config.precision == Precision::kF64 ? eval::evaluate_dataset(load_params<double>(config, layout), fit, test)
                                                 : eval::evaluate_dataset(load_params<float>(config, layout), fit, test);
  }

  CommandResult result;
  fs::create_directories(layout.eval_dir());
  const std::string summary = eval::report_summary(report);
  write_artifact(layout.eval_dir() / "report.csv", eval::report_csv(report), manifest, result);
  write_artifact(layout.eval_dir() / "summary.txt", summary, manifest, result);
  write_manifest(layout.eval_dir(), manifest, result);
  result.summary = summary;
  return result;
}

CommandResult cmd_sweep(PipelineConfig config, const Options& options) {
  config.validate();
  const Layout layout{resolve_workspace(config, options)};
  require_stage(layout.model_dir(), "model", config::train_hash(config), "train", options);
  require_stage(layout.segment_dir(), "segmentation", config::segment_hash(config), "segment", options);

  const auto grid = config.precision == Precision::kF64 ? sweep_impl<double>(config, layout)
                                                        : sweep_impl<float>(config, layout);
  Manifest manifest;
  manifest.entries["stage"] = "sweep";
  manifest.entries["config_hash"] = config::sweep_hash(config);
  manifest.entries["upstream_hash"] = config::segment_hash(config);
  manifest.entries["grid"] = std::to_string(grid.rows) + "x" + std::to_string(grid.steps);

  CommandResult result;
  fs::create_directories(layout.sweep_dir());
  const char* names[3] = {"image.ppm", "error.ppm", "mask.ppm"};
  for (int field = 0; field < 3; ++field) {
    write_artifact(layout.sweep_dir() / names[field], pnm::encode_ppm(eval::tile_sweep(grid, field)), manifest,
                   result);
  }
  write_manifest(layout.sweep_dir(), manifest, result);
  result.summary = "sweep grid " + manifest.entries["grid"] + " (rows: motor dimensions, columns: values in [-1, 1])";
  return result;
}

}  // namespace bodyimage::pipeline
