// End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 once every criterion has been evaluated, whatever the
// verdicts; --strict makes any FAIL a non-zero exit.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bodyimage/config.hpp"
#include "bodyimage/dataset.hpp"
#include "bodyimage/error.hpp"
#include "bodyimage/evaluation.hpp"
#include "bodyimage/pipeline.hpp"
#include "bodyimage/rng.hpp"
#include "bodyimage/segmentation.hpp"
#include "bodyimage/tensor_io.hpp"
#include "bodyimage/trainer.hpp"
#include "support/gradcheck.hpp"

using namespace bodyimage;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Verdict& v) {
  std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- gradient correctness ---------------------------------------------------

model::Architecture random_arch(Rng& rng) {
  model::Architecture a;
  const int sizes[] = {4, 8};
  a.image = {sizes[rng.below(2)], sizes[rng.below(2)]};
  a.deconv_layers = 1 + static_cast<int>(rng.below(2));
  a.motor_dim = rng.between(2, 4);
  a.trunk_width = rng.between(4, 8);
  a.deconv_channels = rng.between(2, 4);
  a.conv_channels.assign(static_cast<std::size_t>(rng.between(1, 2)), 0);
  for (auto& c : a.conv_channels) c = rng.between(2, 4);
  return a;
}

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(20240501);
  double worst = 0.0;
  std::size_t checked = 0, on_kink = 0, scalars = 0;
  std::string worst_where;
  const int networks = 20;
  for (int n = 0; n < networks; ++n) {
    const auto arch = random_arch(rng);
    auto net = model::build_network<double>(arch, rng.next());
    for (auto& t : net.tensors)
      if (t.rank() == 1)
        for (auto& v : t.storage()) v = rng.uniform(-0.3, 0.3);
    Tensor<double> motor(Shape{arch.motor_dim});
    for (auto& v : motor.storage()) v = rng.uniform(-1.0, 1.0);
    Tensor<double> target(Shape{arch.image.height, arch.image.width, 3});
    for (auto& v : target.storage()) v = rng.uniform();
    const double alpha = rng.uniform(0.1, 1.0);
    const auto loss = fdcheck::network_loss(arch, net.tensors, motor, target, alpha, true);
    const auto r = fdcheck::check_gradients(fdcheck::pointers(net.tensors), loss.analytic, loss.numeric);
    checked += r.checked;
    on_kink += r.on_kink;
    scalars += net.scalar_count();
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_where = fmt("net %d %dx%d, %s", n, arch.image.height, arch.image.width, r.worst.c_str());
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = worst < 1e-4 && checked + on_kink == scalars && secs < 60.0;
  v.detail = fmt("%d networks, %zu parameters, %zu compared, %zu straddle a ReLU/|.| kink at h=1e-8; "
                 "max rel error %.3g (< 1e-4); %.1f s (< 60 s)",
                 networks, scalars, checked, on_kink, worst, secs);
  if (!worst_where.empty()) v.detail += "; worst " + worst_where;
  return v;
}

// --- GMM oracle -------------------------------------------------------------

Verdict gmm_oracle() {
  const auto t0 = Clock::now();
  Rng rng(8);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.uniform() < 0.5 ? 0.02 + 0.005 * rng.normal() : 0.30 + 0.05 * rng.normal();
  const auto f = seg::fit_gmm2(xs);
  bool monotone = true;
  for (std::size_t i = 1; i < f.log_likelihood_history.size(); ++i) {
    monotone &= f.log_likelihood_history[i] >= f.log_likelihood_history[i - 1] - 1e-9 * std::abs(f.log_likelihood_history[i]);
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = std::abs(f.means[0] - 0.02) <= 0.01 && std::abs(f.means[1] - 0.30) <= 0.01 && f.threshold > f.means[0] &&
           f.threshold < f.means[1] && monotone && secs < 5.0;
  v.detail = fmt("mu1 %.5f mu2 %.5f (+-0.01 of 0.02/0.30), T %.5f, %d EM iterations, log-likelihood %s; %.2f s (< 5 s)",
                 f.means[0], f.means[1], f.threshold, f.iterations, monotone ? "monotone" : "NOT monotone", secs);
  return v;
}

// --- variance probe ----------------------------------------------------------

Verdict variance_probe(const config::PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const auto poses = data::sample_motor_babble(10, cfg.scene.ranges, 404);
  double max_body = 0.0, min_env = 1e9;
  std::size_t body_components = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto m = data::normalize_motor(poses[i], cfg.scene.ranges);
    const auto r = eval::conditional_variance_probe(m, 200, cfg.scene, 1000 + i);
    max_body = std::max(max_body, r.max_body_variance());
    min_env = std::min(min_env, r.mean_environment_variance());
    body_components += r.body_variance.size();
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = max_body == 0.0 && min_env > 0.005 && secs < 30.0;
  v.detail = fmt("10 poses x K=200: max body variance %.3g (== 0) over %zu components, "
                 "min mean environment variance %.4f (> 0.005); %.1f s (< 30 s)",
                 max_body, body_components, min_env, secs);
  return v;
}

// --- loss identities ---------------------------------------------------------

Verdict loss_identities() {
  Rng rng(99);
  bool alpha0 = true, perfect = true, stop = true;
  double worst_alpha0 = 0.0;
  for (int n = 0; n < 5; ++n) {
    auto arch = random_arch(rng);
    const auto net = model::build_network<double>(arch, rng.next());
    std::vector<model::Example<double>> examples(4);
    for (auto& e : examples) {
      e.motor = Tensor<double>(Shape{arch.motor_dim});
      for (auto& x : e.motor.storage()) x = rng.uniform(-1.0, 1.0);
      e.target = Tensor<double>(Shape{arch.image.height, arch.image.width, 3});
      for (auto& x : e.target.storage()) x = rng.uniform();
    }
    std::vector<const model::Example<double>*> batch;
    for (const auto& e : examples) batch.push_back(&e);

    const auto r0 = model::batch_gradients(net, batch, 0.0, true);
    worst_alpha0 = std::max(worst_alpha0, std::abs(r0.loss_total - r0.loss_rec));
    alpha0 &= r0.loss_total == r0.loss_rec;

    const auto r1 = model::batch_gradients(net, batch, 1.0, true);
    const auto [i0, i1] = model::branch_range(arch, model::Branch::kImage);
    for (std::size_t j = i0; j < i1; ++j)
      for (std::size_t i = 0; i < r1.gradients[j].size(); ++i) stop &= r1.gradients[j][i] == r0.gradients[j][i];

    // s_hat = s and e_hat = 0 exactly
    std::vector<Tensor<double>> s, e;
    for (const auto& ex : examples) {
      s.push_back(ex.target);
      e.emplace_back(ex.target.shape());
    }
    perfect &= model::loss_rec(s, s) == 0.0 && model::loss_err(e, s, s) == 0.0;
  }
  Verdict v;
  v.pass = alpha0 && perfect && stop;
  v.detail = fmt("L(alpha=0) == L_rec %s (max diff %.3g); perfect batch L_rec = L_err = 0 %s; "
                 "image-branch gradient of alpha*L_err %s on 5 random networks",
                 alpha0 ? "exactly" : "NOT exactly", worst_alpha0, perfect ? "yes" : "no", stop ? "== 0" : "!= 0");
  return v;
}

// --- metric properties -------------------------------------------------------

Verdict metric_properties() {
  Rng rng(7);
  int violations = 0, trials = 500;
  for (int t = 0; t < trials; ++t) {
    const Extent e{1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(8))};
    Mask a(e), b(e);
    const double p = rng.uniform(0.0, 0.7);
    for (auto& x : a.data) x = rng.uniform() < p;
    for (auto& x : b.data) x = rng.uniform() < p;
    const double ab = eval::mask_match(a, b), ba = eval::mask_match(b, a);
    violations += ab != ba || ab < 0.0 || ab > 1.0 || (ab == 1.0) != (a == b);
    violations += eval::mask_match(Mask(e), Mask(e)) != 1.0;

    Image s(e), s_hat(e), err(e);
    for (auto& x : s.data) x = static_cast<float>(rng.uniform());
    for (auto& x : s_hat.data) x = static_cast<float>(rng.uniform(-1.0, 2.0));
    for (auto& x : err.data) x = static_cast<float>(rng.uniform());
    if (const auto m = eval::appearance_match(s_hat, s, a, b)) violations += *m < 0.0 || *m > 1.0;
    if (a.any()) violations += *eval::appearance_match(s, s, a, a) != 1.0;

    const double t1 = rng.uniform(), t2 = rng.uniform();
    const auto m1 = seg::extract_mask(err, std::min(t1, t2)), m2 = seg::extract_mask(err, std::max(t1, t2));
    for (std::size_t i = 0; i < m1.data.size(); ++i) violations += m1.data[i] && !m2.data[i];
  }
  Verdict v;
  v.pass = violations == 0;
  v.detail = fmt("%d randomized trials: IoU symmetry/bounds/identity, both-empty = 1, appearance bounds and "
                 "perfect = 1, mask monotone in T; %d violations",
                 trials, violations);
  return v;
}

// --- determinism -------------------------------------------------------------

Verdict determinism(config::PipelineConfig cfg, const fs::path& scratch) {
  cfg.dataset.n_train = 300;
  cfg.dataset.n_test = 50;
  cfg.train.iterations = 30;
  cfg.precision = config::Precision::kF64;
  std::vector<std::string> bytes[2];
  for (int run = 0; run < 2; ++run) {
    pipeline::Options o;
    o.workspace = (scratch / ("determinism_" + std::to_string(run))).string();
    fs::remove_all(*o.workspace);
    pipeline::cmd_gen_data(cfg, o);
    pipeline::cmd_train(cfg, o);
    const pipeline::Layout l{*o.workspace};
    for (const auto& p : {l.train_set(), l.test_set(), l.checkpoint(), l.loss_csv()})
      bytes[run].push_back(data::read_binary(p));
  }
  Verdict v;
  v.pass = bytes[0] == bytes[1];
  v.detail = fmt("two gen-data + 64-bit train runs (300/50 records, 30 iterations): train.smbi, test.smbi, "
                 "checkpoint.smnn, loss.csv %s",
                 v.pass ? "byte-identical" : "DIFFER");
  return v;
}

// --- desk-scale training: bimodality and segmentation quality ---------------

struct DeskRun {
  Verdict bimodality;
  Verdict quality;
};

DeskRun desk_run(config::PipelineConfig cfg, const fs::path& workspace) {
  pipeline::Options o;
  o.workspace = workspace.string();
  o.force = true;
  o.log = &std::cerr;
  const pipeline::Layout l{workspace};

  const auto t0 = Clock::now();
  pipeline::cmd_gen_data(cfg, o);
  pipeline::cmd_train(cfg, o);
  pipeline::cmd_segment(cfg, o);
  const double secs = seconds_since(t0);

  std::ostringstream gmm_text;
  gmm_text << data::read_binary(l.gmm());
  const auto fit = seg::parse_fit(gmm_text.str());
  const double ratio = fit.means[0] > 0.0 ? fit.means[1] / fit.means[0] : INFINITY;

  DeskRun r;
  r.bimodality.pass = ratio >= 3.0 && secs < 600.0;
  r.bimodality.detail =
      fmt("%zu records %dx%d, %ld iterations, batch %d: mu1 %.5f mu2 %.5f, mu2/mu1 %.2f (>= 3), T %.5f; "
          "gen-data+train+segment %.0f s (< 600 s)",
          cfg.dataset.n_train, cfg.architecture().image.height, cfg.architecture().image.width,
          cfg.train.iterations, cfg.train.batch_size, fit.means[0], fit.means[1], ratio, fit.threshold, secs);

  const model::NetworkParams<float> params{cfg.architecture(), load_tensors(l.checkpoint())};
  const auto test = data::load_dataset(l.test_set());
  const auto rep = eval::evaluate_dataset(params, fit, test);
  r.quality.pass = rep.mask.mean >= 0.60 && rep.appearance.mean >= 0.90;
  r.quality.detail = fmt("%zu test records: mask match %.4f +- %.4f (>= 0.60), appearance match %.4f +- %.4f (>= 0.90) "
                         "over %zu records with a non-empty intersection",
                         test.size(), rep.mask.mean, rep.mask.stddev, rep.appearance.mean, rep.appearance.stddev,
                         rep.appearance.count);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bodyimage acceptance run"};
  std::string config_path = BODYIMAGE_CONFIG_DIR "/desk.toml";
  std::string scratch = (fs::temp_directory_path() / "bodyimage_acceptance").string();
  bool strict = false, skip_desk = false;
  app.add_option("--config", config_path, "desk-scale config")->check(CLI::ExistingFile);
  app.add_option("--scratch", scratch, "scratch directory for workspaces");
  app.add_flag("--strict", strict, "non-zero exit when any criterion fails");
  app.add_flag("--skip-desk", skip_desk, "skip the desk-scale training run");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = config::load_config(config_path);
    fs::create_directories(scratch);

    report("gradient-correctness", gradient_correctness());
    report("gmm-oracle", gmm_oracle());
    report("variance-probe", variance_probe(cfg));
    report("loss-identities", loss_identities());
    report("metric-properties", metric_properties());
    report("determinism", determinism(cfg, scratch));
    if (skip_desk) {
      report("bimodality", {false, "skipped (--skip-desk)"});
      report("segmentation-quality", {false, "skipped (--skip-desk)"});
    } else {
      const auto d = desk_run(cfg, fs::path(scratch) / "desk");
      report("bimodality", d.bimodality);
      report("segmentation-quality", d.quality);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", g_failures);
  return strict && g_failures > 0 ? 1 : 0;
}
