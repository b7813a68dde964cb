#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <iostream>

#include "augmetrics/augmetrics.hpp"
#include "commands.hpp"

using namespace augmetrics;
using namespace augmetrics::cli;

namespace {

void add_ssim_options(CLI::App* cmd, SsimParams& p) {
  cmd->add_option("--window", p.window, "SSIM sliding window extent")->capture_default_str();
  cmd->add_option("--stride", p.stride, "SSIM window stride")->capture_default_str();
  cmd->add_option("--k1", p.k1, "SSIM luminance constant")->capture_default_str();
  cmd->add_option("--k2", p.k2, "SSIM contrast constant")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"augmetrics: similarity metrics, augmentation and evaluation for image datasets"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "line-based key = value config file (flags take precedence)");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "RNG seed")->capture_default_str(); };
  auto add_jobs = [&](CLI::App* cmd) {
    cmd->add_option("--jobs", jobs, "worker threads (outputs do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  PreprocessConfig pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "crop to the lung-mask bounding box and resize");
  pre_cmd->add_option("--manifest", pre.manifest, "input manifest CSV")->required();
  pre_cmd->add_option("--masks", pre.masks, "directory of <id>.png masks")->required();
  pre_cmd->add_option("--target", pre.target, "output side length")->capture_default_str();
  pre_cmd->add_option("--out", pre.out, "output directory")->required();
  add_jobs(pre_cmd);

  SimilarityConfig sim;
  auto* sim_cmd = app.add_subcommand("similarity", "intra-/inter-similarity distributions");
  sim_cmd->add_option("--manifest", sim.manifest, "input manifest CSV")->required();
  sim_cmd->add_option("--class-a", sim.class_a, "reference class")->required();
  sim_cmd->add_option("--class-b", sim.class_b, "compared class (default: class-a)");
  sim_cmd->add_option("--origin-a", sim.origin_a, "origin filter for sample A")
      ->check(CLI::IsMember({"any", "real", "dup", "aug"}))
      ->capture_default_str();
  sim_cmd->add_option("--origin-b", sim.origin_b, "origin filter for sample B")
      ->check(CLI::IsMember({"any", "real", "dup", "aug"}))
      ->capture_default_str();
  sim_cmd->add_option("--split", sim.split, "split filter")
      ->check(CLI::IsMember({"any", "train", "val", "test", "excluded"}))
      ->capture_default_str();
  sim_cmd->add_option("--metric", sim.metric, "metric")
      ->check(CLI::IsMember({"rmse", "sre", "ssim"}))
      ->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "images per sample")->capture_default_str();
  sim_cmd->add_option("--bins", sim.bins, "histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output directory")->required();
  add_ssim_options(sim_cmd, sim.ssim);
  add_seed(sim_cmd);
  add_jobs(sim_cmd);

  FidConfig fid_cfg;
  auto* fid_cmd = app.add_subcommand("fid", "Frechet distance between two FVEC1 feature files");
  fid_cmd->add_option("--features-a", fid_cfg.features_a, "first feature file")->required();
  fid_cmd->add_option("--features-b", fid_cfg.features_b, "second feature file")->required();
  fid_cmd->add_option("--out", fid_cfg.out, "optional output directory for fid.txt and run.meta");

  BalanceConfig bal;
  double rot = 5, shift_pct = 5, stretch_pct = 5, zoom_pct = 15, bright_pct = 40;
  auto* bal_cmd = app.add_subcommand("balance", "equalise training class sizes");
  bal_cmd->add_option("--manifest", bal.manifest, "input manifest CSV")->required();
  bal_cmd->add_option("--mode", bal.mode, "dup or aug")->check(CLI::IsMember({"dup", "aug"}))->capture_default_str();
  bal_cmd->add_option("--rot", rot, "rotation maximum, degrees")->capture_default_str();
  bal_cmd->add_option("--shift", shift_pct, "shift maximum, percent of size")->capture_default_str();
  bal_cmd->add_option("--stretch", stretch_pct, "stretch maximum, percent of size")->capture_default_str();
  bal_cmd->add_option("--zoom", zoom_pct, "zoom maximum, percent of size")->capture_default_str();
  bal_cmd->add_option("--bright", bright_pct, "brightness change maximum, percent")->capture_default_str();
  bal_cmd->add_option("--out", bal.out, "output directory")->required();
  add_seed(bal_cmd);
  add_jobs(bal_cmd);

  EvalConfig ev;
  auto* ev_cmd = app.add_subcommand("eval", "classification metrics and Stuart-Maxwell tests");
  ev_cmd->add_option("--truth", ev.truth, "one true label per line")->required();
  ev_cmd->add_option("--pred", ev.predictions, "prediction file(s), aligned with --truth")->required();
  ev_cmd->add_option("--name", ev.names, "scenario name per prediction file");
  ev_cmd->add_option("--out", ev.out, "optional output directory");

  AdaSimConfig ada;
  auto* ada_cmd = app.add_subcommand("ada-sim", "simulate the adaptive augmentation probability controller");
  ada_cmd->add_option("--signs", ada.signs, "one mini-batch sign mean per line")->required();
  ada_cmd->add_option("--target", ada.target, "r_t target")->capture_default_str();
  ada_cmd->add_option("--step", ada.step, "p adjustment step")->capture_default_str();
  ada_cmd->add_option("--window", ada.window, "mini-batches averaged into r_t")->capture_default_str();
  ada_cmd->add_option("--out", ada.out, "optional output directory for trajectory.csv");

  GridSearchConfig grid;
  auto* grid_cmd = app.add_subcommand("grid-search", "exhaustive augmentation parameter search");
  grid_cmd->add_option("--manifest", grid.manifest, "manifest for the proxy scorer");
  grid_cmd->add_option("--class", grid.label, "class scored by the proxy scorer");
  grid_cmd->add_option("--grid", grid.grid, "grid spec geo=..;zoom=..;bright=..")->capture_default_str();
  grid_cmd->add_option("--scorer", grid.scorer, "'proxy' or 'cmd:<command>'")->capture_default_str();
  grid_cmd->add_option("--n", grid.n, "images scored by the proxy scorer")->capture_default_str();
  grid_cmd->add_option("--out", grid.out, "output directory")->required();
  add_ssim_options(grid_cmd, grid.ssim);
  add_seed(grid_cmd);
  add_jobs(grid_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*pre_cmd) {
      pre.jobs = jobs;
      return cmd_preprocess(pre);
    }
    if (*sim_cmd) {
      sim.seed = seed;
      sim.jobs = jobs;
      return cmd_similarity(sim);
    }
    if (*fid_cmd) return cmd_fid(fid_cfg);
    if (*bal_cmd) {
      bal.params = AugmentParams::from_percent(rot, shift_pct, stretch_pct, zoom_pct, bright_pct);
      bal.seed = seed;
      bal.jobs = jobs;
      return cmd_balance(bal);
    }
    if (*ev_cmd) return cmd_eval(ev);
    if (*ada_cmd) return cmd_ada_sim(ada);
    if (*grid_cmd) {
      if (grid.scorer == "proxy" && (grid.manifest.empty() || grid.label.empty())) {
        std::cerr << "grid-search: the proxy scorer needs --manifest and --class\n";
        return kExitUsage;
      }
      grid.seed = seed;
      grid.jobs = jobs;
      return cmd_grid_search(grid);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_io_error(e.code()) ? kExitIo : kExitContract;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitUsage;
}
