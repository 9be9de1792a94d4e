#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "bodyimage/config.hpp"
#include "bodyimage/error.hpp"
#include "bodyimage/pipeline.hpp"

namespace {

using namespace bodyimage;

struct Invocation {
  std::string config_path;
  std::string workspace;
  bool force = false;
  bool quiet = false;
  bool oracle = false;
  std::optional<std::uint64_t> seed;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Invocation& inv,
                      bool takes_seed) {
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("config", inv.config_path, "pipeline config file (TOML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-w,--workspace", inv.workspace, "workspace directory (overrides the config and $" +
                                                       std::string(pipeline::kWorkspaceEnv) + ")");
  cmd->add_flag("-f,--force", inv.force, "overwrite artifacts and ignore config-hash mismatches");
  cmd->add_flag("-q,--quiet", inv.quiet, "suppress progress output");
  if (takes_seed) cmd->add_option("--seed", inv.seed, "replace this stage's seed");
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised body image acquisition from sensorimotor prediction errors"};
  app.require_subcommand(1);
  Invocation inv;
  auto* gen = add_command(app, "gen-data", "render the training and test datasets", inv, true);
  auto* train = add_command(app, "train", "fit the forward model", inv, true);
  auto* segment = add_command(app, "segment", "fit the error GMM and write sample body masks", inv, true);
  auto* eval = add_command(app, "eval", "score masks and appearance on the test set", inv, false);
  eval->add_flag("--oracle", inv.oracle, "score a perfect stub predictor instead of the network");
  auto* sweep = add_command(app, "sweep", "render the motor-space sweep grid", inv, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto config = config::load_config(inv.config_path);
    pipeline::Options options;
    options.force = inv.force;
    options.seed = inv.seed;
    options.oracle = inv.oracle;
    if (!inv.workspace.empty()) options.workspace = inv.workspace;
    if (!inv.quiet) options.log = &std::cerr;

    pipeline::CommandResult result;
    if (gen->parsed()) result = pipeline::cmd_gen_data(config, options);
    else if (train->parsed()) result = pipeline::cmd_train(config, options);
    else if (segment->parsed()) result = pipeline::cmd_segment(config, options);
    else if (eval->parsed()) result = pipeline::cmd_eval(config, options);
    else if (sweep->parsed()) result = pipeline::cmd_sweep(config, options);

    if (!inv.quiet) {
      for (const auto& path : result.artifacts) std::cerr << "wrote " << path.string() << '\n';
    }
    std::cout << result.summary << (result.summary.empty() || result.summary.back() == '\n' ? "" : "\n");
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
